import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsl_lab.quadrature import ConvergenceError, adaptive_midpoint_log, gauss_legendre_panels
from lsl_lab.series import Verdict, slope_verdict

H = [16, 32, 64, 128, 256]


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1e-3, 1e3))
def test_decaying_increments_converge(k, scale):
    inc = [scale * h ** -k for h in H]
    v = slope_verdict(H, inc)
    assert v.verdict is Verdict.CONVERGENT
    assert v.slope == pytest.approx(-k, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(1e-3, 1e3))
def test_growing_increments_diverge(k, scale):
    assert slope_verdict(H, [scale * h ** k for h in H]).verdict is Verdict.DIVERGENT


def test_flat_increments_are_boundary():
    assert slope_verdict(H, [1.0] * 5).verdict is Verdict.BOUNDARY


def test_negligible_increments_converge():
    v = slope_verdict(H, [1.0, 1e-20, 0.0, 0.0, 0.0])
    assert v.verdict is Verdict.CONVERGENT


def test_partial_sums_recorded():
    v = slope_verdict(H, [1, 2, 3, 4, 5])
    assert v.partial_sums == (1, 3, 6, 10, 15)


def test_needs_two_horizons():
    with pytest.raises(ValueError):
        slope_verdict([4], [1.0])


def test_midpoint_quadrature_exact_exponential():
    # int_0^3 e^t dt
    val = adaptive_midpoint_log(lambda t: t, 0.0, 3.0, rel_tol=1e-10)
    assert val == pytest.approx(math.log(math.expm1(3.0)), abs=1e-9)


def test_midpoint_quadrature_reports_failure():
    with pytest.raises(ConvergenceError):
        adaptive_midpoint_log(lambda t: 1e3 * np.sin(50 * t) ** 2, 0.0, 10.0, rel_tol=1e-14, n_max=256)


def test_gauss_legendre_panels_integrate_polynomials():
    edges = np.array([0.0, 0.5, 2.0, 3.0])
    x, w, p = gauss_legendre_panels(edges, order=8)
    assert float((w * x ** 5).sum()) == pytest.approx(3.0 ** 6 / 6, rel=1e-13)
    assert set(p) == {0, 1, 2}
