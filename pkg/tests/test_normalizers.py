import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsl_lab.normalizers import (GeneralSV, LogFraction, LogLogFraction, Power, Regime, WindowLaw,
                                 axis_length, lsl_constant, normalizer_f_1d, rate_bundle,
                                 truncation_level)

mp.mp.dps = 40

CASE_I = WindowLaw(LogFraction(), LogFraction())
CASE_II = WindowLaw(LogLogFraction(), LogLogFraction())
CASE_III = WindowLaw(LogFraction(), LogLogFraction())
MIXED = WindowLaw(Power(0.5), LogFraction())
LAWS = [CASE_I, CASE_II, CASE_III, MIXED]


def test_axis_length_examples():
    assert axis_length(LogFraction(), 100) == pytest.approx(100 / math.log(100), rel=1e-12)
    assert axis_length(LogFraction(), 100) == pytest.approx(21.715, abs=1e-3)
    assert axis_length(Power(0.5), 10000) == pytest.approx(100.0, rel=1e-12)
    n = round(math.exp(math.e ** 2))
    assert axis_length(LogLogFraction(), n) == pytest.approx(n / 2, rel=1e-3)


def test_axis_length_rejects_small_index():
    with pytest.raises(ValueError):
        axis_length(LogFraction(), 2)


def test_rate_case_i_diagonal():
    for m in (3, 20, 10 ** 3, 10 ** 9):
        tm = max(math.log(m), 1.0)
        assert rate_bundle(CASE_I, m, m).rate == pytest.approx(4 * max(math.log(tm), 1.0), rel=1e-12)


def test_f_case_ii_against_high_precision_oracle():
    x = mp.mpf(10) ** 6
    ll = mp.log(mp.log(x))
    oracle = (x / ll) ** 2 * 2 * ll
    got = rate_bundle(CASE_II, 10 ** 6, 10 ** 6).f
    assert got == pytest.approx(float(oracle), rel=1e-12)
    assert got == pytest.approx(7.617e11, rel=1e-3)


def test_f_mixed_diagonal_logs_cancel():
    x = mp.mpf(10) ** 4
    oracle = x ** mp.mpf(0.5) * (x / mp.log(x)) * (mp.mpf(0.5) * 2 * mp.log(x))
    got = rate_bundle(MIXED, 10 ** 4, 10 ** 4).f
    assert got == pytest.approx(float(oracle), rel=1e-12)
    assert got == pytest.approx(1e6, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(LAWS), st.integers(3, 10 ** 12), st.integers(3, 10 ** 12))
def test_f_is_area_times_rate(law, m, n):
    nb = rate_bundle(law, m, n)
    assert nb.f == pytest.approx(nb.area * nb.rate, rel=1e-12)
    assert nb.rate == pytest.approx(nb.r_m + nb.r_n, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 10 ** 12), st.integers(3, 10 ** 12))
def test_case_iii_matches_general_form(m, n):
    gen = WindowLaw(GeneralSV(1.0, 0.0), GeneralSV(0.0, 1.0))
    ref = 2 * (max(math.log(max(math.log(m), 1)), 1) + max(math.log(max(math.log(n), 1)), 1))
    assert rate_bundle(CASE_III, m, n).rate == pytest.approx(ref, rel=1e-12)
    if min(m, n) > math.exp(math.e):
        # r = log(L1 log) = 2 llog once the clamps are inactive
        assert rate_bundle(gen, m, n).rate == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("rule", [LogFraction(), LogLogFraction(), Power(0.3), GeneralSV(2.0, 1.0)])
def test_axis_length_eventually_nondecreasing(rule):
    ns = np.unique(np.round(np.geomspace(100, 1e7, 400)).astype(int))
    a = np.array([axis_length(rule, int(n)) for n in ns])
    assert np.all(np.diff(a) >= 0)


def test_normalizer_f_1d_log_fraction_closed_form():
    for n in (16, 100, 10 ** 4, 10 ** 8, 10 ** 12):
        ref = 2 * n / math.log(n) * math.log(math.log(n))
        assert normalizer_f_1d(LogFraction(), n) == pytest.approx(ref, rel=1e-12)


def test_normalizer_f_1d_loglog_clamps_to_n():
    n = 10 ** 9
    t = mp.log(n)
    ad = (n / mp.log(t)) * (mp.log(mp.log(t)) + mp.log(t))
    assert ad > n
    assert normalizer_f_1d(LogLogFraction(), n) == n


def test_normalizer_f_1d_at_three():
    v = normalizer_f_1d(LogFraction(), 3)
    assert 0 < v < 3
    t = math.log(3)
    # a_n d_n branch: d = log log 3 + llog+ 3 with the clamp active
    assert v == pytest.approx(3 / t * (math.log(t) + 1.0), rel=1e-12)


def test_normalizer_f_1d_rejects_power():
    with pytest.raises(ValueError):
        normalizer_f_1d(Power(0.5), 100)


def test_truncation_level_unit_factors():
    # with sigma = eps = 1 the level is delta sqrt(area / rate); delta = 1 itself is excluded
    m = 3
    nb = rate_bundle(CASE_I, m, m)
    b = truncation_level(CASE_I, m, m, eps=1.0, delta=0.5)
    assert b == pytest.approx(0.5 * math.sqrt(nb.area / nb.rate), rel=1e-12)


def test_truncation_level_homogeneous_in_eps():
    b1 = truncation_level(CASE_I, 500, 700, 0.3, 0.2)
    b2 = truncation_level(CASE_I, 500, 700, 0.6, 0.2)
    assert b2 == pytest.approx(b1 / 2, rel=1e-12)


def test_truncation_level_case_i_oracle():
    x = mp.mpf(1000)
    oracle = mp.mpf("0.1") * mp.sqrt((x ** 2 / mp.log(x) ** 2) / (4 * mp.log(mp.log(x))))
    assert truncation_level(CASE_I, 1000, 1000, 1.0, 0.1) == pytest.approx(float(oracle), rel=1e-12)


@settings(max_examples=1000, deadline=None)
@given(st.sampled_from(LAWS), st.integers(3, 10 ** 9), st.integers(3, 10 ** 9),
       st.floats(0.01, 10), st.floats(0.01, 0.99), st.floats(0.1, 5))
def test_truncation_identity(law, m, n, eps, delta, sigma):
    law = WindowLaw(law.axis1, law.axis2, sigma)
    nb = rate_bundle(law, m, n)
    b = truncation_level(law, m, n, eps, delta)
    # eps b sqrt(rate) = sigma delta sqrt(area)
    assert eps * b * math.sqrt(nb.rate) == pytest.approx(sigma * delta * math.sqrt(nb.area), rel=1e-12)


@pytest.mark.parametrize("eps,delta", [(0.0, 0.1), (1.0, 0.0), (1.0, 1.0)])
def test_truncation_level_rejects_bad_params(eps, delta):
    with pytest.raises(ValueError):
        truncation_level(CASE_I, 100, 100, eps, delta)


def test_lsl_constant_examples():
    assert lsl_constant(WindowLaw(LogLogFraction(), LogLogFraction(), 2.0)) == 2.0
    assert lsl_constant(WindowLaw(Power(0.36), Power(0.36), 1.0)) == pytest.approx(0.8, rel=1e-12)
    for a in (0.1, 0.5, 0.9):
        assert lsl_constant(WindowLaw(Power(a), LogFraction(), 1.0)) == 1.0


def test_regimes():
    assert CASE_I.regime is Regime.LOG
    assert CASE_II.regime is Regime.LOGLOG
    assert CASE_III.regime is Regime.LOG_LOGLOG
    assert MIXED.regime is Regime.POWER_LOG
    assert WindowLaw(Power(0.2), Power(0.4)).regime is Regime.POWER_POWER
    with pytest.raises(ValueError):
        WindowLaw(LogFraction(), Power(0.5))


def test_power_power_rates_not_evaluated():
    with pytest.raises(ValueError):
        rate_bundle(WindowLaw(Power(0.2), Power(0.4)), 100, 100)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
def test_power_alpha_open_interval(alpha):
    with pytest.raises(ValueError):
        Power(alpha)
