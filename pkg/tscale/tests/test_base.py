import math
import pytest
from ..base import (
    Certificate,
    Check,
    GridPolicy,
    PointKind,
    Report,
    RootField,
    Trajectory,
    Verdict,
    finite_or_none,
)
from ..exceptions import FieldGap, HistoryGap


def test_check_keeps_first_witness():
    check = Check("positive")
    for value in (3.0, -1.0, -2.0, 0.5):
        check.record(value > 0, margin=value, witness=value, detail=f"{value} <= 0")
    assert not check.passed
    assert check.samples == 4
    assert check.worst_margin == -2.0
    assert check.witness == -1.0
    assert check.detail == "-1.0 <= 0"


def test_report_collects_checks():
    report = Report("demo")
    report.check("a").record(True)
    report.check("b").record(False)
    report.check("a").record(True)
    assert [c.name for c in report.checks] == ["a", "b"]
    assert report.check("a").samples == 2
    assert not report.passed
    assert [c.name for c in report.failures()] == ["b"]
    assert report.to_dict()["title"] == "demo"


def test_grid_policy_validation():
    with pytest.raises(ValueError):
        GridPolicy(dense_step=0)
    with pytest.raises(ValueError):
        GridPolicy(membership_rtol=-1e-12)


def test_root_field_rates():
    field = RootField([0.0, 1.0, 3.0], [-0.5, -0.2, -0.3], [0.0] * 3, [-1.0] * 3)
    assert field.rate_at(-1.0) == -0.5
    assert field.rate_at(0.999) == -0.5
    assert field.rate_at(1.0) == -0.2
    assert field.rate_at(10.0) == -0.3
    assert not field.is_constant()
    envelope = field.envelope()
    assert envelope.lambdas == [-0.2]
    assert envelope.grid == [0.0]
    assert RootField.constant(-0.1, 0.0).is_constant()
    with pytest.raises(FieldGap):
        RootField().rate_at(0.0)


def test_trajectory_lookup():
    traj = Trajectory([], [], [], [], 0.0)
    for t, x in [(0.0, 1.0), (1.0, 3.0), (2.0, 2.0)]:
        traj.append(t, x, 0.0, PointKind.Dense)
    assert len(traj) == 3
    assert traj.window == (0.0, 2.0)
    assert traj.value_at(1.0) == 3.0
    assert traj.value_at(0.5) == 2.0
    assert traj.slice(0.5, 2.0) == [(1.0, 3.0), (2.0, 2.0)]
    assert list(traj.rows())[0] == (0.0, 1.0, 0.0, "dense")
    with pytest.raises(HistoryGap):
        traj.value_at(-0.5)
    with pytest.raises(HistoryGap):
        traj.value_at(2.5)


def test_certificate_to_dict():
    cert = Certificate(
        Verdict.Violated,
        1.01,
        RootField.constant(-0.2, 0.0),
        -0.5,
        (0.0, 10.0),
        violated_at=3.0,
    )
    data = cert.to_dict()
    assert data["verdict"] == "Violated"
    assert data["rate"] == -0.2
    assert data["horizon"] == [0.0, 10.0]
    assert data["violated_at"] == 3.0
    assert not cert.verdict.is_success()
    assert math.isfinite(data["K0"])


def test_certificate_to_dict_drops_non_finite():
    cert = Certificate(Verdict.HypothesisFailed, math.nan, RootField(), math.nan, (0.0, 10.0),
                       decay_estimate=math.inf)
    data = cert.to_dict()
    assert data["K0"] is None
    assert data["margin"] is None
    assert data["decay_estimate"] is None
    assert data["rate"] is None
    assert finite_or_none(-0.25) == -0.25
