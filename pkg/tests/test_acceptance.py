"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the lines are
also shown without ``-s``).
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from fracphase.experiments import ExperimentConfig, gap_trend_ok, run
from fracphase.extension import (
    graded_y_grid,
    poisson_extend,
    spectral_extend,
    trace_inequality_gap,
)
from fracphase.nonlocal_energy import TraceFn, gagliardo, kappa_lower_bound, monotone_rearrange, truncate
from fracphase.params import make_params, quartic_well
from fracphase.profile import kappa_s_report
from fracphase.special import (
    D_s_constant,
    bessel_IK,
    d_s_constant,
    e_s_constant,
    gamma_fn,
    jbar_M,
)

ORDERS = (0.55, 0.6, 0.75, 0.9)


@pytest.fixture
def report_line(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")

    return emit


def test_01_bessel_conformance(report_line):
    start = time.perf_counter()
    worst_ratio, worst_wr = 0.0, 0.0
    for s in ORDERS:
        small, big = bessel_IK(s, 1e-4), bessel_IK(s, 50.0)
        ratios = [
            small.k_s * (2 / gamma_fn(s)) * (1e-4 / 2) ** s,
            small.i_s * gamma_fn(s + 1) * (2 / 1e-4) ** s,
            big.k_s / (math.sqrt(math.pi / 100) * math.exp(-50)),
            big.i_s / (math.exp(50) / math.sqrt(100 * math.pi)),
        ]
        worst_ratio = max(worst_ratio, max(abs(r - 1) for r in ratios))
        for y in (1e-4, 0.1, 1.0, 2.0, 5.0, 20.0, 50.0):
            b = bessel_IK(s, y)
            worst_wr = max(worst_wr, abs(b.wronskian * y + 1))
    elapsed = time.perf_counter() - start
    ok = worst_ratio < 0.01 and worst_wr < 1e-8 and elapsed < 1.0
    report_line(1, "Bessel conformance", ok, f"max |ratio-1|={worst_ratio:.2e}, max |yW+1|={worst_wr:.1e}, {elapsed:.2f}s")
    assert ok


def test_02_constants_stability(report_line):
    start = time.perf_counter()
    s = 0.75
    d1, d2 = d_s_constant(s), d_s_constant(s, periods=800)
    e1, e2 = e_s_constant(s), e_s_constant(s, levels=96, order=30)
    D1, D2 = d1 / e1, d2 / e2
    rel = max(abs(d2 - d1) / d1, abs(e2 - e1) / e1, abs(D2 - D1) / D1)
    oracle = -4 * math.gamma(-2 * s) * math.cos(math.pi * s)
    dev = abs(d1 - oracle) / oracle
    elapsed = time.perf_counter() - start
    ok = rel < 1e-6 and dev < 1e-6 and elapsed < 10
    report_line(2, "constants stability", ok, f"doubling change {rel:.1e}, d_s vs Gamma identity {dev:.1e}, {elapsed:.2f}s")
    assert ok


def _smooth_traces(count, n=1024):
    rng = np.random.default_rng(12345)
    x = np.linspace(-0.5, 0.5, n)
    out = []
    for _ in range(count):
        centers = rng.uniform(-0.25, 0.25, 2)
        widths = rng.uniform(0.04, 0.07, 2)
        amps = rng.uniform(0.3, 1.0, 2) * rng.choice([-1, 1], 2)
        vals = sum(a * np.exp(-(((x - c) / w) ** 2)) for a, c, w in zip(amps, centers, widths))
        out.append(TraceFn(x, vals))
    return out


def test_03_trace_inequality_saturation(report_line):
    start = time.perf_counter()
    s = 0.75
    a = 1 - 2 * s
    D = D_s_constant(s).D_s
    y = graded_y_grid(1.0, 256, a)
    pois, spec = [], []
    for v in _smooth_traces(20):
        ext = poisson_extend(v, y, s)
        pois.append(trace_inequality_gap(v, ext.field, s, D, ext.energy) / (D * ext.energy))
        per = TraceFn(v.grid[:-1], v.values[:-1])
        sx = spectral_extend(per, y, s)
        spec.append(trace_inequality_gap(per, sx.field, s, D, sx.energy) / (D * sx.energy))
    elapsed = time.perf_counter() - start
    lower_ok = min(pois + spec) >= -0.02
    agree_ok = max(abs(g) for g in pois) <= 0.05
    ok = lower_ok and agree_ok and elapsed < 120
    report_line(
        3,
        "trace inequality",
        ok,
        f"Poisson gap/energy in [{min(pois):+.3%}, {max(pois):+.3%}], spectral min {min(spec):+.2%}, {elapsed:.1f}s",
    )
    assert ok


def test_04_strip_comparison(report_line):
    start = time.perf_counter()
    worst10, worst30 = 1.0, 1.0
    ok = True
    for s in ORDERS:
        e = e_s_constant(s)
        r10, r30 = jbar_M(s, 10.0) / e, jbar_M(s, 30.0) / e
        ok &= 0.99 <= r10 <= 1.0 and 1 - 1e-6 <= r30 <= 1.0
        worst10, worst30 = min(worst10, r10), min(worst30, r30)
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 5
    report_line(4, "strip comparison", ok, f"min ratio M=10: {worst10:.6f}, M=30: {worst30:.12f}, {elapsed:.2f}s")
    assert ok


def test_05_rearrangement_truncation(report_line):
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    bad_r = bad_t = 0
    for _ in range(1000):
        n = int(rng.integers(2, 200))
        s = float(rng.uniform(0.51, 0.99))
        v = TraceFn(np.linspace(0, rng.uniform(0.1, 10), n), rng.normal(scale=rng.uniform(0.1, 3), size=n))
        before = gagliardo(v, s)
        slack = 1e-12 * max(1.0, before)
        bad_r += gagliardo(monotone_rearrange(v), s) > before + slack
        bad_t += gagliardo(truncate(v, float(rng.uniform(0.01, 0.99)), (-1.0, 1.0)), s) > before + slack
    elapsed = time.perf_counter() - start
    ok = bad_r == 0 and bad_t == 0 and elapsed < 60
    report_line(5, "rearrangement/truncation", ok, f"violations {bad_r} + {bad_t} over 2x1000 traces, {elapsed:.1f}s")
    assert ok


def test_06_kappa_pipeline(report_line):
    start = time.perf_counter()
    p = make_params(-0.5)
    V = quartic_well()
    D = D_s_constant(p.s).D_s
    rep = kappa_s_report(p, V, D, nodes_per_unit=16)
    fine = kappa_s_report(p, V, D, nodes_per_unit=32)
    vals = rep.values_T
    monotone = all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    bound = kappa_lower_bound(p.s, V, 0.1)
    bound_corr = kappa_lower_bound(p.s, V, 0.1, D_s=D)
    drift = abs(fine.value - rep.value) / rep.value
    last = rep.solutions[-1]
    dil = last.potential_part / ((2 * p.s - 1) * last.nonlocal_part) - 1
    elapsed = time.perf_counter() - start
    ok = (
        monotone
        and rep.value > 0
        and rep.value > max(bound, bound_corr)
        and drift < 0.005
        and abs(dil) < 0.02
        and rep.converged
        and fine.converged
        and elapsed < 300
    )
    report_line(
        6,
        "kappa_s pipeline",
        ok,
        f"kappa^T=[{', '.join(f'{x:.5f}' for x in vals)}], kappa_s={rep.value:.5f} (bound {bound:.4f}/{bound_corr:.4f}), "
        f"refinement {drift:.1e}, dilation {dil:+.2%}, {elapsed:.1f}s",
    )
    assert ok


def test_07_interior_witness(report_line):
    start = time.perf_counter()
    one = run(ExperimentConfig("interior")).records
    two = run(ExperimentConfig("interior", jumps=2)).records
    elapsed = time.perf_counter() - start
    g1, g2 = one[-1].relative_gap, two[-1].relative_gap
    ok = abs(g1) < 0.03 and abs(g2) < 0.05 and elapsed < 60
    report_line(7, "interior Gamma-limit", ok, f"one jump gap {g1:+.2e}, two jumps gap {g2:+.2e}, {elapsed:.1f}s")
    assert ok


def test_08_boundary_witness(report_line):
    start = time.perf_counter()
    sweep = run(ExperimentConfig("boundary")).records
    effect = run(ExperimentConfig("boundary-effect")).records
    elapsed = time.perf_counter() - start
    g_sweep = sweep[-1].relative_gap
    g_effect = [r.relative_gap for r in effect]
    decreasing = all(abs(b) < abs(a) for a, b in zip(g_effect, g_effect[1:]))
    ok = abs(g_sweep) < 0.05 and abs(g_effect[-1]) < 0.07 and decreasing and gap_trend_ok(g_effect) and elapsed < 300
    report_line(
        8,
        "boundary Gamma-limit",
        ok,
        f"pinned minimum gap {g_sweep:+.2%}, extension gaps {', '.join(f'{g:+.2%}' for g in g_effect)}, {elapsed:.1f}s",
    )
    assert ok


def test_09_sharpness(report_line):
    start = time.perf_counter()
    recs = run(ExperimentConfig("sharpness")).records
    elapsed = time.perf_counter() - start
    ratio = recs[-1].extras["ratio"]
    lhs = [r.extras["lhs"] for r in recs]
    rhs = [r.extras["rhs"] for r in recs]
    stable = abs(lhs[-1] / lhs[-2] - 1) < 0.05 and abs(rhs[-1] / rhs[-2] - 1) < 0.05
    ok = abs(ratio - 1) < 0.05 and stable and elapsed < 120
    report_line(
        9,
        "sharpness",
        ok,
        f"lhs/rhs={ratio:.4f}, sides {lhs[-1]:.4f}/{rhs[-1]:.4f} (prev {lhs[-2]:.4f}/{rhs[-2]:.4f}), {elapsed:.1f}s",
    )
    assert ok


def test_10_wall_effect(report_line):
    start = time.perf_counter()
    recs = run(ExperimentConfig("wall", gamma=0.0)).records
    elapsed = time.perf_counter() - start
    gap = recs[-1].relative_gap
    ok = abs(gap) < 0.03 and elapsed < 30
    report_line(10, "wall effect", ok, f"energy {recs[-1].energy_total:.5f} vs {recs[-1].predicted_limit:.5f} ({gap:+.2%}), {elapsed:.1f}s")
    assert ok


CLI_RUNS = [
    ["constants", "--a", "-0.5"],
    ["constants", "--a", "-0.25", "--format", "json"],
    ["kappa", "--a", "-0.5", "--T", "4,8,16", "--grid", "8", "--format", "json"],
    ["sweep", "--experiment", "interior", "--a", "-0.5"],
    ["sweep", "--experiment", "boundary", "--a", "-0.5", "--eps", "0.3,0.2", "--T", "8,16,32", "--format", "json"],
    ["sweep", "--experiment", "sharpness", "--a", "-0.5", "--eps", "0.4,0.2"],
    ["sweep", "--experiment", "boundary-effect", "--a", "-0.5", "--eps", "0.4,0.3", "--T", "8,16,32"],
    ["sweep", "--experiment", "wall", "--a", "-0.5", "--seed", "11", "--format", "json"],
]


def test_11_determinism(report_line, tmp_path):
    mismatched = []
    for k, argv in enumerate(CLI_RUNS):
        outputs = []
        for rep in range(2):
            out = tmp_path / f"run{k}_{rep}"
            proc = subprocess.run(
                [sys.executable, "-m", "fracphase", *argv, "--out", str(out)], capture_output=True, text=True
            )
            assert proc.returncode == 0, proc.stderr
            outputs.append(out.read_bytes())
        if outputs[0] != outputs[1]:
            mismatched.append(" ".join(argv))
    ok = not mismatched
    report_line(11, "determinism", ok, f"{len(CLI_RUNS) - len(mismatched)}/{len(CLI_RUNS)} CLI runs byte-identical")
    assert ok
