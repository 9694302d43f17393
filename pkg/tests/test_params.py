import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from fracphase.params import (
    FracParams,
    load_well,
    make_params,
    primitive_W,
    quartic_well,
    scalings,
    sigma_constant,
    tabulated_well,
)

exponents = st.floats(min_value=-0.99, max_value=-0.01)


def test_make_params_order():
    assert make_params(-0.5).s == 0.75
    assert make_params(-0.25).s == 0.625


@pytest.mark.parametrize("a", [0.0, -1.0, 0.3, -1.5, float("nan")])
def test_make_params_rejects(a):
    with pytest.raises(ValueError, match=r"\(-1, 0\)"):
        make_params(a)


@given(exponents)
def test_order_roundtrip(a):
    p = make_params(a)
    assert p.s == (1 - a) / 2
    assert 0.5 < p.s < 1
    assert FracParams.from_s(p.s).s == p.s


def test_scalings_examples():
    sc = scalings(make_params(-0.5), 0.1)
    assert sc.lambda_big == pytest.approx(1e-3, rel=1e-12)
    assert sc.lambda_small == pytest.approx(1e3, rel=1e-12)
    assert scalings(make_params(-0.25), 0.1).lambda_big == pytest.approx(1e-5, rel=1e-12)
    one = scalings(make_params(-0.7), 1.0)
    assert one.lambda_big == one.lambda_small == 1.0


@pytest.mark.parametrize("eps", [0.0, -0.1])
def test_scalings_rejects_nonpositive_eps(eps):
    with pytest.raises(ValueError):
        scalings(make_params(-0.5), eps)


@given(st.floats(min_value=-0.99, max_value=-0.05), st.floats(min_value=1e-2, max_value=10.0))
def test_scalings_reciprocal(a, eps):
    sc = scalings(make_params(a), eps)
    assert sc.lambda_big * sc.lambda_small == pytest.approx(1.0, rel=1e-14)


@given(st.floats(min_value=-0.99, max_value=-0.05), st.floats(min_value=1e-3, max_value=0.5))
def test_layer_width_shrinks(a, eps):
    p = make_params(a)
    assert scalings(p, eps / 2).lambda_big < scalings(p, eps).lambda_big < 1


def test_quartic_well_shape():
    w = quartic_well()
    assert w(np.array([-1.0, 1.0])).tolist() == [0.0, 0.0]
    assert w(0.0) == 0.25
    t = np.linspace(-2, 2, 41)
    step = 1e-6
    fd = (w(t + step) - w(t - step)) / (2 * step)
    np.testing.assert_allclose(w.deriv(t), fd, atol=1e-8)


def test_well_validation():
    with pytest.raises(ValueError):
        quartic_well(1.0, -1.0)
    # positive at the wells
    with pytest.raises(ValueError):
        tabulated_well([-1, 0, 1], [0.1, 1.0, 0.0], -1, 1)
    # vanishes in between
    with pytest.raises(ValueError):
        tabulated_well([-1, 0, 1], [0.0, 0.0, 0.0], -1, 1)


def test_primitive_quartic_closed_form():
    w = quartic_well()
    t = np.linspace(-1, 1, 101)
    np.testing.assert_allclose(primitive_W(w, t), t - t**3 / 3 + 2 / 3, atol=1e-12)
    assert primitive_W(w, -1.0) == 0.0
    assert primitive_W(w, 0.0) == pytest.approx(2 / 3, abs=1e-13)
    assert primitive_W(w, 1.0) == pytest.approx(4 / 3, abs=1e-13)
    with pytest.raises(ValueError):
        primitive_W(w, 1.5)


@given(st.lists(st.floats(min_value=-1, max_value=1), min_size=2, max_size=20))
def test_primitive_monotone(ts):
    ts = np.sort(np.array(ts))
    vals = primitive_W(quartic_well(), ts)
    assert np.all(np.diff(vals) >= 0)


def test_sigma_quartic():
    w = quartic_well()
    oracle, _ = quad(lambda t: 2 * math.sqrt(w(t)), -1, 1, epsabs=1e-14)
    assert sigma_constant(w) == pytest.approx(oracle, rel=1e-12)
    assert sigma_constant(w) == pytest.approx(4 / 3, rel=1e-12)


def test_sigma_scaling_and_shifted_wells():
    # W scaled by c^2 scales sigma by c
    assert sigma_constant(quartic_well(c=0.25 * 9)) == pytest.approx(3 * 4 / 3, rel=1e-12)
    # 4 t^2 (1-t)^2 on [0, 1]: 2 * int 2 t (1 - t) = 2/3
    assert sigma_constant(quartic_well(0.0, 1.0, 4.0)) == pytest.approx(2 / 3, rel=1e-12)


@given(st.floats(min_value=-5, max_value=5))
def test_sigma_translation_invariant(shift):
    w = quartic_well()
    assert sigma_constant(quartic_well(-1 + shift, 1 + shift)) == pytest.approx(sigma_constant(w), rel=1e-10)


def test_relabel_keeps_shape():
    v = quartic_well().relabel(0.0, 2.0)
    assert v.lo == 0.0 and v.hi == 2.0
    assert v(1.0) == pytest.approx(0.25)
    assert v(np.array([0.0, 2.0])).tolist() == [0.0, 0.0]


def test_tabulated_well_roundtrip(tmp_path):
    t = np.linspace(-1, 1, 401)
    path = tmp_path / "w.txt"
    np.savetxt(path, np.column_stack([t, (1 - t**2) ** 2 / 4]), header="t W")
    w = load_well(path, -1.0, 1.0)
    assert w.kind == "user-tabulated"
    assert sigma_constant(w) == pytest.approx(4 / 3, rel=1e-4)
    with pytest.raises(ValueError):
        w(1.5)


def test_scalings_underflow_is_reported():
    with pytest.raises(ValueError, match="floating point"):
        scalings(make_params(-0.001), 1e-3)
