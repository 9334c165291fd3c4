import os
import pytest
from ..core import Settings, load_settings
from ..utils import load_args


def test_load_settings_defaults(mocker):
    mocker.patch.dict(os.environ, {}, clear=True)
    settings = load_settings()
    assert settings.seed == 42
    assert settings.root_tol == 1e-10
    assert settings.policy.dense_step == 1e-3


def test_load_settings_from_env(mocker):
    env = {"TSCALE_SEED": "7", "TSCALE_DENSE_STEP": "0.01", "TSCALE_LOG_LEVEL": "debug"}
    mocker.patch.dict(os.environ, env, clear=True)
    settings = load_settings()
    assert settings.seed == 7
    assert settings.policy.dense_step == 0.01
    assert settings.log_level == "DEBUG"


@pytest.mark.parametrize(
    "name,value",
    [
        ("TSCALE_ROOT_TOL", "0"),
        ("TSCALE_S_FLOOR", "1"),
        ("TSCALE_WORKERS", "0"),
        ("TSCALE_LOG_LEVEL", "chatty"),
    ],
)
def test_bad_settings(mocker, name, value):
    mocker.patch.dict(os.environ, {name: value}, clear=True)
    with pytest.raises(ValueError):
        load_settings()


def test_load_args_missing_required(mocker):
    class NeedsPath:
        def __init__(self, TSCALE_FAKE_PATH, other=None):
            pass

    mocker.patch.dict(os.environ, {}, clear=True)
    with pytest.raises(EnvironmentError):
        load_args(NeedsPath)
    os.environ["TSCALE_FAKE_PATH"] = "/tmp"
    assert load_args(NeedsPath) == {"TSCALE_FAKE_PATH": "/tmp"}


def test_settings_as_dict():
    assert Settings(TSCALE_WORKERS="2").as_dict()["workers"] == 2
