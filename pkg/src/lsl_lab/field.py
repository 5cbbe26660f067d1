"""Seeded i.i.d. field blocks, window sums and the truncation split."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .distributions import DistributionSpec
from .normalizers import WindowLaw, rate_bundle, rates_from_log, truncation_level
from .rng import stream

__all__ = [
    "BudgetError", "WindowRect", "TruncationTriple", "WindowStatistic",
    "LimsupTrace", "trace_from_arrays", "cell_budget", "window_rect", "sample_block",
    "window_sum_naive", "summed_area_table", "rect_sum", "window_sum_prefix",
    "truncate_split", "split_array", "windowed_statistic",
    "surrogate_statistic", "track_running_max",
]

HARD_CELL_CAP = 10_000_000


class BudgetError(MemoryError):
    pass


def cell_budget() -> int:
    """Largest admissible cell count: min(1e7, LSL_LAB_BUDGET_MB worth of float64)."""
    mb = float(os.environ.get("LSL_LAB_BUDGET_MB", "512"))
    return int(min(HARD_CELL_CAP, mb * 2 ** 20 / 8))


@dataclass(frozen=True)
class WindowRect:
    """Inclusive rectangle [m, m+a1] x [n, n+a2]."""

    m: int
    n: int
    a1: int
    a2: int

    def __post_init__(self):
        if self.m < 3 or self.n < 3:
            raise ValueError("window anchors must be >= 3")
        if self.a1 < 0 or self.a2 < 0:
            raise ValueError("window extents must be >= 0")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.a1 + 1, self.a2 + 1)

    @property
    def cells(self) -> int:
        return (self.a1 + 1) * (self.a2 + 1)


def window_rect(law: WindowLaw, m: int, n: int) -> WindowRect:
    """Window at (m, n) with edges floored from the real axis lengths."""
    nb = rate_bundle(law, m, n)
    return WindowRect(m, n, int(math.floor(nb.a1)), int(math.floor(nb.a2)))


def _check_budget(cells: int) -> None:
    cap = cell_budget()
    if cells > cap:
        raise BudgetError(
            f"window of {cells} cells exceeds the cell budget of {cap} "
            f"(LSL_LAB_BUDGET_MB={os.environ.get('LSL_LAB_BUDGET_MB', '512')}, hard cap {HARD_CELL_CAP})")


def sample_block(dist: DistributionSpec, seed: int, rect: WindowRect, replicate: int = 0) -> np.ndarray:
    """Field values on ``rect``; the stream is keyed by (seed, m, n, replicate)."""
    _check_budget(rect.cells)
    rng = stream(seed, rect.m, rect.n, replicate)
    return dist.sample(rng, rect.shape)


def window_sum_naive(block) -> float:
    """Reference sum by an explicit double loop."""
    total = 0.0
    for row in np.asarray(block, dtype=float).tolist():
        for v in row:
            total += v
    return total


def summed_area_table(block) -> np.ndarray:
    """Zero-padded table S with S[i, j] = sum of block[:i, :j]."""
    block = np.asarray(block, dtype=float)
    sat = np.zeros((block.shape[0] + 1, block.shape[1] + 1))
    np.cumsum(np.cumsum(block, axis=0), axis=1, out=sat[1:, 1:])
    return sat


def rect_sum(sat: np.ndarray, r0: int, c0: int, r1: int, c1: int) -> float:
    """Sum over rows r0..r1 and columns c0..c1 inclusive."""
    return float(sat[r1 + 1, c1 + 1] - sat[r0, c1 + 1] - sat[r1 + 1, c0] + sat[r0, c0])


def window_sum_prefix(block) -> float:
    block = np.asarray(block)
    sat = summed_area_table(block)
    return rect_sum(sat, 0, 0, block.shape[0] - 1, block.shape[1] - 1)


class TruncationTriple(NamedTuple):
    xp: float
    xpp: float
    xppp: float


def _check_levels(b, top):
    if not 0 < b < top:
        raise ValueError(f"truncation levels need 0 < b < top, got b={b}, top={top}")


def truncate_split(x: float, b: float, top: float) -> TruncationTriple:
    """Split x into |x| <= b, b < |x| < top and |x| >= top parts."""
    _check_levels(b, top)
    ax = abs(x)
    if ax <= b:
        return TruncationTriple(x, 0.0, 0.0)
    if ax < top:
        return TruncationTriple(0.0, x, 0.0)
    return TruncationTriple(0.0, 0.0, x)


def split_array(x: np.ndarray, b: float, top: float):
    """Vectorized truncate_split; returns three arrays summing to x."""
    _check_levels(b, top)
    ax = np.abs(x)
    inner = ax <= b
    outer = ax >= top
    zero = np.zeros_like(x)
    return (np.where(inner, x, zero), np.where(~inner & ~outer, x, zero), np.where(outer, x, zero))


class WindowStatistic(NamedTuple):
    T: float
    Tp: float
    Tpp: float
    Tppp: float
    normalized: float


def windowed_statistic(law: WindowLaw, m: int, n: int, dist: DistributionSpec, seed: int,
                       eps: float, delta: float, replicate: int = 0, *,
                       b: float | None = None, top: float | None = None) -> WindowStatistic:
    """Window sum at (m, n), its truncation parts and T / sqrt(2 f).

    ``b`` and ``top`` default to the truncation level and delta*sqrt(f).
    T is accumulated as the sum of its parts, so T = T' + T'' + T''' holds
    without rounding slack.
    """
    nb = rate_bundle(law, m, n)
    rect = window_rect(law, m, n)
    b = truncation_level(law, m, n, eps, delta) if b is None else b
    top = delta * math.sqrt(nb.f) if top is None else top
    block = sample_block(dist, seed, rect, replicate)
    parts = [float(p.sum()) for p in split_array(block, b, top)]
    T = parts[0] + parts[1] + parts[2]
    return WindowStatistic(T, parts[0], parts[1], parts[2], T / math.sqrt(2.0 * nb.f))


def surrogate_statistic(law: WindowLaw, m, n, rng: np.random.Generator) -> float:
    """sigma Z / sqrt(2 rate), the Gaussian limit of T / sqrt(2 f).

    ``m`` and ``n`` may be arrays of equal shape; the statistic is then
    vectorized and uses one normal draw per entry.
    """
    tm = np.log(np.asarray(m, dtype=float))
    tn = np.log(np.asarray(n, dtype=float))
    _, _, rate = rates_from_log(law, tm, tn)
    z = rng.standard_normal(np.shape(rate))
    out = law.sigma * z / np.sqrt(2.0 * rate)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class LimsupTrace:
    """Running maxima of a statistic along an enumeration of (i, j)."""

    mode: str
    i: np.ndarray
    j: np.ndarray
    m: np.ndarray
    n: np.ndarray
    statistic: np.ndarray
    running_max: np.ndarray

    @property
    def final(self) -> float:
        return float(self.running_max[-1])

    @property
    def argmax(self) -> tuple:
        k = int(np.argmax(self.statistic))
        return int(self.i[k]), int(self.j[k])

    def changes(self) -> np.ndarray:
        """Positions where the running maximum moves."""
        rm = self.running_max
        return np.flatnonzero(np.concatenate([[True], rm[1:] > rm[:-1]]))

    def __len__(self):
        return len(self.statistic)


def trace_from_arrays(i, j, m, n, statistic, mode: str) -> LimsupTrace:
    stat = np.asarray(statistic, dtype=float)
    return LimsupTrace(mode, np.asarray(i), np.asarray(j), np.asarray(m, dtype=float),
                       np.asarray(n, dtype=float), stat, np.maximum.accumulate(stat))


def track_running_max(stream_: Iterable, mode: str = "direct") -> LimsupTrace:
    """Accumulate entries (i, j, statistic) or (i, j, m, n, statistic)."""
    cols = ([], [], [], [], [])
    for entry in stream_:
        if len(entry) == 3:
            entry = (entry[0], entry[1], math.nan, math.nan, entry[2])
        for c, v in zip(cols, entry):
            c.append(v)
    if not cols[0]:
        raise ValueError("empty stream")
    return trace_from_arrays(*cols, mode=mode)
