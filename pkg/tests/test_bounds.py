import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from lsl_lab.bounds import (BoundParams, discover_d0, exact_tprime_tail, kolmogorov_evaluator,
                            kolmogorov_lower, kolmogorov_upper, mean_drift_bound, min_N, phase_threshold,
                            power_evaluator, pzwei_reduction, summability_diagnostic,
                            tdoubleprime_bound, tdoubleprime_case1, tprime_tail_sandwich,
                            truncated_second_moment)
from lsl_lab.distributions import Gaussian, Rademacher, StudentT, Uniform
from lsl_lab.field import window_rect, windowed_statistic
from lsl_lab.normalizers import LogFraction, WindowLaw, rate_bundle
from lsl_lab.series import Verdict
from lsl_lab.subsequences import SqrtExp

CASE_I = WindowLaw(LogFraction(), LogFraction())


def test_limits_collapse_to_exp_minus_d():
    p = BoundParams(eps=1.0, delta=0.0, gamma_slack=0.0)
    d = np.array([0.5, 3.0, 40.0])
    assert np.allclose(kolmogorov_upper(p, d), np.exp(-d), rtol=1e-15)
    assert np.allclose(kolmogorov_lower(p, d), np.exp(-d), rtol=1e-15)


def test_upper_exact_exponent():
    assert float(kolmogorov_upper(BoundParams(1.0, 0.0), math.log(4))) == pytest.approx(0.25, rel=1e-15)
    assert float(kolmogorov_upper(BoundParams(1.0, 0.1), 10.0)) == pytest.approx(math.exp(-7.29), rel=1e-12)
    assert float(kolmogorov_upper(BoundParams(1.0, 0.1), 10.0)) == pytest.approx(6.8e-4, rel=0.01)


@settings(max_examples=10_000, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.0, 0.99), st.floats(0.0, 2.0), st.floats(0.1, 5), st.floats(0.0, 1e3))
def test_lower_below_upper(eps, delta, gam, sigma, d):
    p = BoundParams(eps, delta, gam, sigma)
    lo, up = float(kolmogorov_lower(p, d)), float(kolmogorov_upper(p, d))
    # the exponents coincide at delta = gamma = 0, so allow rounding there
    assert lo <= up or math.isclose(lo, up, rel_tol=1e-12)


def test_params_coupling():
    p = BoundParams(1.0, 0.1, eta=0.35)
    assert p.N == 4 and p.N * p.delta >= p.eta
    assert min_N(0.2, 0.1) == 2
    with pytest.raises(ValueError):
        BoundParams(1.0, 0.1, N=2, eta=0.5)
    with pytest.raises(ValueError):
        BoundParams(0.0, 0.1)
    with pytest.raises(ValueError):
        BoundParams(1.0, 1.0)


def test_normal_tail_below_exp_minus_d():
    d = np.linspace(1, 200, 500)
    assert np.all(special.ndtr(-np.sqrt(2 * d)) <= np.exp(-d))


def test_lower_bound_against_normal_tail():
    p = BoundParams(1.0, 0.1, 0.1)
    d = np.linspace(5, 50, 200)
    assert np.all(kolmogorov_lower(p, d) <= special.ndtr(-np.sqrt(2 * d)))


def test_exact_tail_uses_integer_cells():
    nb = rate_bundle(CASE_I, 200, 200)
    cells = window_rect(CASE_I, 200, 200).cells
    z = 0.25 * math.sqrt(2 * nb.f) / math.sqrt(cells)
    assert exact_tprime_tail(CASE_I, 200, 200, 0.25, 1.0) == pytest.approx(stats.norm.sf(z), rel=1e-12)


def test_discover_d0_case_i():
    d0, rows = discover_d0(CASE_I, BoundParams(1.0, 0.1))
    assert d0 is not None and d0 <= 5
    assert all(ex <= up for _, d, ex, up in rows if d >= d0)


def test_sandwich_status_and_truncation():
    rep = tprime_tail_sandwich(CASE_I, 200, 200, BoundParams(0.25, 0.1), Gaussian())
    assert rep.status == "ok"
    assert rep.lower <= rep.upper
    assert rep.exact <= rep.upper
    assert rep.truncated_mass < 1e-4
    with pytest.raises(TypeError):
        tprime_tail_sandwich(CASE_I, 200, 200, BoundParams(0.25, 0.1), Rademacher())


def test_sandwich_mc_small():
    rep = tprime_tail_sandwich(CASE_I, 200, 200, BoundParams(0.25, 0.1), Gaussian(), mc_replicates=20_000, seed=3)
    assert rep.mc_ok


def test_tdoubleprime_n1_collapse():
    area = rate_bundle(CASE_I, 500, 600).area
    assert tdoubleprime_bound(CASE_I, 500, 600, 1, 2.0, 8.0) == pytest.approx(area * 0.25, rel=1e-12)


def test_tdoubleprime_nonincreasing_in_N():
    vals = [float(tdoubleprime_case1(20.0, 30.0, N)) for N in range(1, 8)]
    assert vals[0] < 1
    assert all(b <= a for a, b in zip(vals, vals[1:]))


def test_pzwei_reduction_bounded():
    i = np.geomspace(10, 1e4, 40)
    I, J = np.meshgrid(i, i)
    for c in (0.04, 1.0):
        lhs, rhs = pzwei_reduction(c, I, J, 1)
        ratio = lhs / rhs
        assert np.all(np.isfinite(ratio))
        assert ratio.max() / ratio.min() < 50


def test_power_evaluator_verdicts():
    assert summability_diagnostic(power_evaluator(2.0)).verdict is Verdict.CONVERGENT
    assert summability_diagnostic(power_evaluator(1.0)).verdict is Verdict.DIVERGENT


def test_phase_threshold_value():
    assert phase_threshold(1.0, 0.05) == pytest.approx(0.95 ** -1.5)


def test_truncated_second_moment_gaussian():
    b = 2.0
    ref = 2 * (b * stats.norm.pdf(b) + stats.norm.sf(b))
    assert truncated_second_moment(Gaussian(), b) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("dist", [Gaussian(), Uniform(1.0), StudentT(5.0)])
def test_mean_drift_bound_decreases(dist):
    ms = [200, 1000, 5000, 20000]
    vals = [mean_drift_bound(CASE_I, m, m, dist, 1.0, 0.1) for m in ms]
    # strictly decreasing while positive; a bounded law reaches 0 once b passes its support
    assert all(b < a or a == b == 0.0 for a, b in zip(vals, vals[1:]))


def test_mean_drift_empirical_within_bound():
    law = CASE_I
    dist = StudentT(5.0)
    for m in (100, 400):
        nb = rate_bundle(law, m, m)
        tp = np.array([windowed_statistic(law, m, m, dist, 21, 1.0, 0.1, replicate=r).Tp for r in range(200)])
        se = tp.std(ddof=1) / math.sqrt(tp.size)
        bound = mean_drift_bound(law, m, m, dist, 1.0, 0.1)
        assert abs(tp.mean()) / math.sqrt(nb.f) <= bound + 4 * se / math.sqrt(nb.f)


def test_kolmogorov_evaluator_phase():
    dl = 0.05
    thr = phase_threshold(1.0, dl)
    fam = SqrtExp(1.0)
    lo = summability_diagnostic(kolmogorov_evaluator(CASE_I, fam, BoundParams(0.8 * thr, dl)))
    hi = summability_diagnostic(kolmogorov_evaluator(CASE_I, fam, BoundParams(1.2 * thr, dl)))
    assert lo.verdict is Verdict.DIVERGENT
    assert hi.verdict is Verdict.CONVERGENT
