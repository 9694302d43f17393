import json

import numpy as np
import pytest

from fracphase.experiments import (
    DEFAULT_EPS,
    EXPERIMENTS,
    ExperimentConfig,
    SweepRecord,
    boundary_sweep,
    emit,
    gap_trend_ok,
    interior_sweep,
    render,
    run,
    sharpness_experiment,
    wall_effect_check,
)
from fracphase.extension import poisson_energy, poisson_extend
from fracphase.nonlocal_energy import TraceFn
from fracphase.params import make_params, quartic_well, scalings, sigma_constant
from fracphase.profile import kappa_s_report
from fracphase.special import D_s_constant


def gaps(records):
    return [r.relative_gap for r in records]


def test_config_validation():
    with pytest.raises(ValueError, match="interior, boundary, sharpness, boundary-effect, wall"):
        ExperimentConfig("nope")
    with pytest.raises(ValueError, match="empty"):
        ExperimentConfig("wall", eps_list=())
    with pytest.raises(ValueError, match="decreasing"):
        ExperimentConfig("wall", eps_list=(0.1, 0.1))
    with pytest.raises(ValueError, match="positive"):
        ExperimentConfig("wall", eps_list=(0.1, -0.1))
    with pytest.raises(ValueError):
        ExperimentConfig("wall", a=0.2)
    with pytest.raises(ValueError):
        ExperimentConfig("interior", jumps=3)
    assert ExperimentConfig("boundary").eps_list == DEFAULT_EPS["boundary"]


def test_default_eps_lists_decrease():
    for tag in EXPERIMENTS:
        eps = DEFAULT_EPS[tag]
        assert 4 <= len(eps) <= 6
        assert all(b < a for a, b in zip(eps, eps[1:]))


def test_sweep_record_gap():
    rec = SweepRecord(0.1, 1.1, 0.6, 0.5, 1.0)
    assert rec.relative_gap == pytest.approx(0.1)
    assert rec.row()["nonlocal"] == 0.6
    assert SweepRecord(0.1, 0.25, 0.25, 0.0, 0.0).relative_gap == 0.25


def test_gap_trend():
    assert gap_trend_ok([0.3, 0.2, 0.1])
    assert not gap_trend_ok([0.1, 0.2, 0.05])
    assert gap_trend_ok([0.1, 1e-12, 3e-13, 5e-13])


def test_interior_one_jump():
    recs = interior_sweep(ExperimentConfig("interior"))
    assert recs[-1].predicted_limit == pytest.approx(sigma_constant(quartic_well()))
    assert abs(recs[-1].relative_gap) < 0.03
    assert gap_trend_ok(gaps(recs))
    for r in recs:
        assert r.energy_total >= r.predicted_limit * (1 - 0.02)
        assert r.extras["lipschitz_C"] == pytest.approx(0.5, rel=0.01)


def test_interior_zero_and_two_jumps():
    assert all(r.energy_total == 0.0 for r in interior_sweep(ExperimentConfig("interior", jumps=0)))
    two = interior_sweep(ExperimentConfig("interior", jumps=2))
    assert two[-1].predicted_limit == pytest.approx(8 / 3)
    assert abs(two[-1].relative_gap) < 0.05


@pytest.fixture(scope="module")
def boundary_records():
    return boundary_sweep(ExperimentConfig("boundary"))


def test_boundary_sweep(boundary_records):
    recs = boundary_records
    energies = [r.energy_total for r in recs]
    assert all(b > a for a, b in zip(energies, energies[1:]))
    assert abs(recs[-1].relative_gap) < 0.05
    assert gap_trend_ok(gaps(recs))
    for r in recs:
        # the rescaled optimal profile is admissible, so the minimum lies below it
        assert r.energy_total <= r.extras["witness"] + 1e-9
        assert r.extras["witness"] <= r.extras["kappa_T"] + 1e-9


def test_boundary_sweep_without_jump():
    recs = boundary_sweep(ExperimentConfig("boundary", jumps=0, eps_list=(0.3, 0.1)))
    assert all(r.energy_total == 0.0 for r in recs)


def test_sharpness():
    recs = sharpness_experiment(ExperimentConfig("sharpness"))
    ratios = [r.extras["ratio"] for r in recs]
    assert abs(ratios[-1] - 1) < 0.05
    for r in recs:
        assert r.extras["R_eps"] == pytest.approx(r.extras["lhs"] - r.extras["rhs"])
    lhs = [r.extras["lhs"] for r in recs]
    rhs = [r.extras["rhs"] for r in recs]
    assert lhs[-1] / lhs[-2] == pytest.approx(1, abs=0.05)
    assert rhs[-1] / rhs[-2] == pytest.approx(1, abs=0.05)
    fine = sharpness_experiment(ExperimentConfig("sharpness", grid=32, eps_list=(0.05,)))
    assert fine[0].extras["ratio"] == pytest.approx(ratios[-1], rel=0.01)


def test_sharpness_rejects_too_large_eps():
    with pytest.raises(ValueError):
        sharpness_experiment(ExperimentConfig("sharpness", eps_list=(1.5,)))


def test_boundary_effect_scaling_and_trace():
    # H_eps[w_eps, D, E] computed at scale eps equals H_1 on the dilated domain
    p = make_params(-0.5)
    V = quartic_well()
    D = D_s_constant(p.s).D_s
    phi = kappa_s_report(p, V, D, Ts=(8.0,), nodes_per_unit=8).solutions[0].profile
    eps = 0.5
    sc = scalings(p, eps)
    phi_eps = TraceFn(phi.grid * sc.lambda_big, phi.values)
    at_eps = eps ** (1 - p.a) * poisson_energy(phi_eps, p.s, (-1, 1), 1.0) + sc.lambda_small * np.trapezoid(
        V(phi_eps.values), phi_eps.grid
    )
    at_one = poisson_energy(phi, p.s, (-1 / sc.lambda_big, 1 / sc.lambda_big), 1 / sc.lambda_big) + np.trapezoid(
        V(phi.values), phi.grid
    )
    assert at_eps == pytest.approx(at_one, rel=1e-6)
    ext = poisson_extend(phi_eps, np.array([0.0, 0.01]), p.s, with_energy=False)
    np.testing.assert_array_equal(ext.field.values[0], phi(phi_eps.grid / sc.lambda_big))


def test_wall():
    recs = wall_effect_check(ExperimentConfig("wall"))
    assert recs[-1].predicted_limit == pytest.approx(2 / 3, rel=1e-12)
    assert abs(recs[-1].relative_gap) < 0.03
    C = [r.extras["lipschitz_C"] for r in recs]
    assert all(b <= a for a, b in zip(C, C[1:]))
    tails = [r.extras["lipschitz_eps"] for r in recs]
    assert max(tails) / min(tails) < 1.05


def test_wall_gamma_at_upper_well():
    recs = wall_effect_check(ExperimentConfig("wall", gamma=1.0))
    assert all(r.energy_total == 0.0 and r.predicted_limit == 0.0 for r in recs)
    with pytest.raises(ValueError):
        wall_effect_check(ExperimentConfig("wall", gamma=-1.0))


def test_report_determinism(tmp_path):
    cfg = ExperimentConfig("wall", eps_list=(0.2, 0.1), seed=7)
    a = emit(run(cfg), tmp_path / "a.json", "json")
    b = emit(run(cfg), tmp_path / "b.json", "json")
    assert a == b
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    doc = json.loads(a)
    assert doc["version"] and doc["config"]["seed"] == 7
    assert len(doc["records"]) == 2


def test_csv_layout():
    text = render(run(ExperimentConfig("interior", eps_list=(0.2,))), "csv")
    lines = text.splitlines()
    assert lines[0].startswith("#")
    assert lines[1] == "eps,energy_total,nonlocal,potential,predicted_limit,relative_gap"
    assert len(lines) == 3
    with pytest.raises(ValueError):
        render(run(ExperimentConfig("interior", eps_list=(0.2,))), "xml")


def test_payload_csv_values_are_plain_numbers():
    from fracphase.experiments import Report

    rep = Report("constants", {}, [], {"x": np.float64(0.5), "n": np.int64(3), "v": np.arange(2.0)}, True)
    rows = dict(line.split(",") for line in render(rep, "csv").splitlines()[2:])
    assert rows == {"x": "0.5", "n": "3", "v.0": "0.0", "v.1": "1.0"}
    assert json.loads(render(rep, "json"))["payload"] == {"x": 0.5, "n": 3, "v": [0.0, 1.0]}


def test_emit_unwritable(tmp_path):
    rep = run(ExperimentConfig("interior", eps_list=(0.2,)))
    with pytest.raises(OSError):
        emit(rep, tmp_path / "missing" / "out.csv")
