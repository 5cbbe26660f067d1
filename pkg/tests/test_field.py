import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lsl_lab.distributions import Gaussian, Rademacher, StudentT
from lsl_lab.field import (BudgetError, WindowRect, rect_sum, sample_block, split_array, summed_area_table,
                           surrogate_statistic, track_running_max, truncate_split, window_rect,
                           window_sum_naive, window_sum_prefix, windowed_statistic)
from lsl_lab.normalizers import LogFraction, WindowLaw, rate_bundle
from lsl_lab.rng import stream

CASE_I = WindowLaw(LogFraction(), LogFraction())


def test_window_sum_small_examples():
    assert window_sum_prefix(np.ones((4, 3))) == 12.0
    assert window_sum_naive(np.ones((4, 3))) == 12.0
    assert window_sum_prefix(np.zeros((5, 7))) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 64), st.integers(1, 64), st.integers(0, 2 ** 32))
def test_prefix_equals_naive_rademacher_exact(r, c, seed):
    block = Rademacher().sample(stream(seed), (r, c))
    assert window_sum_prefix(block) == window_sum_naive(block)


def test_rect_sum_subrectangles():
    block = Gaussian().sample(stream(7), (20, 30))
    sat = summed_area_table(block)
    for r0, c0, r1, c1 in [(0, 0, 19, 29), (3, 4, 10, 12), (5, 5, 5, 5)]:
        assert rect_sum(sat, r0, c0, r1, c1) == pytest.approx(block[r0:r1 + 1, c0:c1 + 1].sum(), rel=1e-12, abs=1e-12)


def test_window_rect_inclusive_floored():
    nb = rate_bundle(CASE_I, 1000, 2000)
    rect = window_rect(CASE_I, 1000, 2000)
    assert (rect.a1, rect.a2) == (math.floor(nb.a1), math.floor(nb.a2))
    assert rect.cells == (rect.a1 + 1) * (rect.a2 + 1)


def test_window_rect_validation():
    with pytest.raises(ValueError):
        WindowRect(2, 5, 1, 1)
    with pytest.raises(ValueError):
        WindowRect(5, 5, -1, 1)


def test_sample_block_deterministic():
    rect = WindowRect(10, 20, 5, 6)
    a = sample_block(Gaussian(), 99, rect, 3)
    assert a.shape == (6, 7)
    assert np.array_equal(a, sample_block(Gaussian(), 99, rect, 3))


def test_budget_refusal(monkeypatch):
    monkeypatch.setenv("LSL_LAB_BUDGET_MB", "0.001")
    with pytest.raises(BudgetError):
        sample_block(Gaussian(), 0, WindowRect(10, 10, 100, 100))


@pytest.mark.parametrize("x,expected", [(5, (0, 5, 0)), (1.5, (1.5, 0, 0)), (10, (0, 0, 10)),
                                        (-10, (0, 0, -10)), (2, (2, 0, 0)), (-3, (0, -3, 0))])
def test_truncate_split_examples(x, expected):
    assert tuple(truncate_split(x, 2, 10)) == expected


def test_truncate_split_rejects_bad_levels():
    with pytest.raises(ValueError):
        truncate_split(1.0, 3.0, 2.0)
    with pytest.raises(ValueError):
        truncate_split(1.0, 0.0, 2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e6, 1e6), st.floats(1e-3, 10), st.floats(1.001, 100))
def test_split_array_agrees_with_scalar(x, b, ratio):
    top = b * ratio
    arr = split_array(np.array([x]), b, top)
    assert tuple(float(v[0]) for v in arr) == tuple(truncate_split(x, b, top))


@pytest.mark.parametrize("dist", [Gaussian(), Rademacher(), StudentT(2.5)])
def test_windowed_statistic_additivity(dist):
    for r in range(5):
        s = windowed_statistic(CASE_I, 300, 500, dist, 4, 1.0, 0.1, replicate=r)
        assert s.T == s.Tp + s.Tpp + s.Tppp
        assert s.normalized == pytest.approx(s.T / math.sqrt(2 * rate_bundle(CASE_I, 300, 500).f), rel=1e-15)


def test_windowed_statistic_matches_block_sum():
    rect = window_rect(CASE_I, 200, 300)
    s = windowed_statistic(CASE_I, 200, 300, Gaussian(), 8, 1.0, 0.1, replicate=2)
    block = sample_block(Gaussian(), 8, rect, 2)
    assert s.T == pytest.approx(window_sum_naive(block), rel=1e-9)


def test_windowed_statistic_degenerate():
    s = windowed_statistic(CASE_I, 100, 100, Gaussian(0.0), 1, 1.0, 0.1)
    assert s == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_windowed_statistic_gaussian_far_levels():
    # cells <= 1e4 and b = 6: P(any |X| > 6) < 1e4 * 2e-9 per window
    m = 300
    assert window_rect(CASE_I, m, m).cells <= 10 ** 4
    for seed in range(100):
        s = windowed_statistic(CASE_I, m, m, Gaussian(), seed, 1.0, 0.1, b=6.0, top=50.0)
        assert s.Tpp == 0.0 and s.Tppp == 0.0


def test_windowed_statistic_rademacher_middle_band():
    s = windowed_statistic(CASE_I, 100, 150, Rademacher(), 3, 1.0, 0.1, b=0.5, top=2.0)
    assert s.Tp == 0.0 and s.Tppp == 0.0 and s.Tpp == s.T


def test_surrogate_shrinks_with_rate():
    rng = stream(5)
    small = [np.quantile(np.abs(surrogate_statistic(CASE_I, np.full(20000, m), np.full(20000, m), rng)), 0.9)
             for m in (10, 10 ** 4, 10 ** 12, 10 ** 100)]
    assert all(a > b for a, b in zip(small, small[1:]))


def test_surrogate_variance():
    law = WindowLaw(LogFraction(), LogFraction(), 1.7)
    m, n = 5000, 70000
    rate = rate_bundle(law, m, n).rate
    z = surrogate_statistic(law, np.full(10 ** 5, m), np.full(10 ** 5, n), stream(12))
    assert z.var() == pytest.approx(1.7 ** 2 / (2 * rate), rel=0.03)


def test_surrogate_degenerate_and_scalar():
    law = WindowLaw(LogFraction(), LogFraction(), 0.0)
    assert surrogate_statistic(law, 100, 100, stream(1)) == 0.0
    assert isinstance(surrogate_statistic(CASE_I, 100, 100, stream(1)), float)


def test_track_running_max_examples():
    tr = track_running_max([(1, 1, 1.0), (1, 2, 3.0), (2, 1, 2.0)])
    assert list(tr.running_max) == [1.0, 3.0, 3.0]
    assert tr.final == 3.0 and tr.argmax == (1, 2)
    assert list(tr.changes()) == [0, 1]
    const = track_running_max([(i, i, 0.7) for i in range(5)])
    assert np.all(const.running_max == 0.7)
    single = track_running_max([(4, 5, -2.0)])
    assert single.final == -2.0 and len(single) == 1


def test_track_running_max_empty():
    with pytest.raises(ValueError):
        track_running_max([])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e9, 1e9), min_size=1, max_size=200))
def test_running_max_properties(vals):
    tr = track_running_max([(k, k, v) for k, v in enumerate(vals)])
    assert np.all(np.diff(tr.running_max) >= 0)
    assert tr.final == max(vals)
    assert np.all(tr.running_max >= tr.statistic)
