import json
import math
import os
import pytest
from ..base import Form, RhsForm
from ..config import (
    RunConfig,
    SweepConfig,
    param_values,
    problem_from_doc,
    scale_from_doc,
    set_pointer,
)
from ..exceptions import ConfigError
from ..timescale import integers, sigma
from ..utils import load_docs

CONFIGS = os.path.join(os.path.dirname(__file__), "configs")


def config_path(name):
    return os.path.join(CONFIGS, name)


def damped(t, x, delayed):
    return 0.2 * x / (1 + x * x) + 0.1 * math.tanh(delayed[0])


def problem_doc(**overrides):
    doc = {"shift": {"family": "translation"}, "delays": [1], "form": "sum",
           "p": 0.5, "q": [0.2, 0.1]}
    doc.update(overrides)
    return doc


def test_scale_from_doc():
    ts = scale_from_doc(load_docs(config_path("integers.json")))
    assert ts.label == "Z"
    assert ts.contains(3)
    assert not ts.contains(2.5)
    assert sigma(ts, 3) == 4
    geometric = scale_from_doc({"segments": [{"kind": "geom", "q": 2}]})
    assert geometric.t_star_lower == 0.0
    assert scale_from_doc(load_docs(config_path("reals.json"))).contains(-1e6)


@pytest.mark.parametrize(
    "doc,pointer",
    [
        ({"label": "empty"}, "/segments"),
        ({"segments": []}, "/segments"),
        ({"segments": [{"kind": "spiral"}]}, "/segments/0/kind"),
        ({"segments": [{"kind": "arith", "start": "x", "step": 1}]}, "/segments/0/start"),
        ({"segments": [{"kind": "dense", "a": 0, "b": 2}, {"kind": "dense", "a": 1}]},
         "/segments"),
    ],
)
def test_scale_errors_carry_pointer(doc, pointer):
    with pytest.raises(ConfigError) as e:
        scale_from_doc(doc)
    assert e.value.pointer == pointer
    assert str(e.value).startswith(pointer + ": ")


def test_problem_from_doc():
    problem, rhs = problem_from_doc(load_docs(config_path("ex1.json")), integers())
    assert problem.form is Form.SumPower
    assert problem.Kconst == 2.0
    assert [q(0) for q in problem.q] == [0.2, 0.1]
    assert rhs.form is RhsForm.SumPowerEq


def test_delayed_coefficients_only():
    doc = load_docs(config_path("delay_equation.json"))
    problem, _ = problem_from_doc(doc, integers())
    assert [q(0) for q in problem.q] == [0.0, 1.0]


@pytest.mark.parametrize(
    "overrides,pointer",
    [
        ({"q": [0.1, 0.2, 0.3]}, "/q"),
        ({"form": "spiral"}, "/form"),
        ({"shift": {"family": "rotation"}}, "/shift/family"),
        ({"form": "product"}, "/alpha"),
        ({"p": "const:abc"}, "/p"),
        ({"rhs": {"form": "custom", "forcing": "nomodule", "dominated_by": "sum"}},
         "/rhs/forcing"),
        ({"rhs": {"form": "custom", "forcing": "math:tanh", "dominated_by": "max"}},
         "/rhs/dominated_by"),
    ],
)
def test_problem_errors_carry_pointer(overrides, pointer):
    with pytest.raises(ConfigError) as e:
        problem_from_doc(problem_doc(**overrides), integers())
    assert e.value.pointer == pointer


def test_custom_rhs_from_doc():
    rhs_doc = {"form": "custom", "forcing": "tscale.tests.test_config:damped",
               "dominated_by": "sum", "state_range": [-1, 1]}
    problem, rhs = problem_from_doc(problem_doc(rhs=rhs_doc), integers())
    assert rhs.form is RhsForm.Custom
    assert rhs.forcing is damped
    assert rhs.dominated_by is Form.SumPower
    assert rhs.state_range == (-1, 1)


def test_table_coefficient(tmp_path):
    (tmp_path / "p.csv").write_text("t,p\n-5,0.5\n5,0.4\n")
    problem, _ = problem_from_doc(problem_doc(p="table:p.csv"), integers(), str(tmp_path))
    assert problem.p(1) == 0.5
    assert problem.p(6) == 0.4


def test_late_table_is_rejected(tmp_path):
    (tmp_path / "p.csv").write_text("t,p\n0,0.5\n5,0.4\n")
    scale_doc = load_docs(config_path("integers.json"))
    config = RunConfig(scale_doc, problem_doc(p="table:p.csv"), base_dir=str(tmp_path))
    with pytest.raises(ConfigError) as e:
        config.build()
    assert e.value.pointer == "/p"


def test_set_pointer():
    doc = problem_doc()
    set_pointer(doc, "/q/1", 0.3)
    set_pointer(doc, "/p", 0.7)
    assert doc["q"] == [0.2, 0.3]
    assert doc["p"] == 0.7
    with pytest.raises(ConfigError):
        set_pointer(doc, "/missing/x", 1)
    with pytest.raises(ConfigError):
        set_pointer(doc, "/p/x", 1)
    with pytest.raises(ConfigError):
        set_pointer(doc, "/q/5", 1)


def test_param_values():
    values = param_values({"start": 0.3, "stop": 0.9, "step": 0.05}, "/params/p")
    assert len(values) == 13
    assert values[0] == 0.3
    assert values[-1] == 0.9
    assert param_values([1, 2], "/params/p") == [1.0, 2.0]
    with pytest.raises(ConfigError):
        param_values({"start": 1, "stop": 0, "step": 0.1}, "/params/p")


def test_run_config():
    config = RunConfig.load(config_path("integers.json"), config_path("ex1.json"))
    ts, problem, rhs, history = config.build()
    assert problem.window_start == -1.0
    assert history(-1) == 1.0
    again = RunConfig.load(config_path("integers.json"), config_path("ex1.json"))
    assert config.digest == again.digest
    other = RunConfig.load(config_path("integers.json"), config_path("ex1.json"), "const:2")
    assert other.digest != config.digest


def test_run_config_needs_problem():
    with pytest.raises(ConfigError):
        RunConfig.load(config_path("integers.json")).build()


def test_sweep_config():
    config = SweepConfig.load(config_path("sweep.json"))
    assert config.grid == {"/p": [0.5, 0.2], "/q/1": [0.05, 0.1]}
    assert config.horizon == 20.0
    assert (config.x, config.y) == ("/p", "/q/1")
    problem, _ = config.template(**{"/p": 0.2, "/q/1": 0.05})
    assert problem.p(0) == 0.2
    assert problem.q[1](0) == 0.05
    assert config.history()(0) == 1.0


def test_sweep_config_needs_params(tmp_path):
    doc = {"scale": os.path.join(CONFIGS, "integers.json"),
           "problem": os.path.join(CONFIGS, "ex1.json"), "horizon": 10, "params": {}}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ConfigError) as e:
        SweepConfig.load(str(path))
    assert e.value.pointer == "/params"


def test_load_docs_merges_a_directory(tmp_path):
    (tmp_path / "a.json").write_text('{"label": "Z"}')
    (tmp_path / "b.yml").write_text("segments:\n  - kind: arith\n    start: 0\n    step: 1\n")
    doc = load_docs(dirname=str(tmp_path))
    assert doc["label"] == "Z"
    assert scale_from_doc(doc).contains(5)
