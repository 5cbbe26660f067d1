"""Convergence verdicts for partial sums from tail-slope regression."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

__all__ = ["Verdict", "SlopeVerdict", "slope_verdict", "SLOPE_RESOLUTION"]

SLOPE_RESOLUTION = 0.02


class Verdict(enum.Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class SlopeVerdict:
    verdict: Verdict
    slope: float
    horizons: tuple
    partial_sums: tuple


def slope_verdict(horizons, increments, partial_sums=None, last: int = 4,
                  resolution: float = SLOPE_RESOLUTION, negligible: float = 1e-13) -> SlopeVerdict:
    """Classify a series from the increments of its partial sums.

    ``increments[k]`` is S(horizons[k]) - S(horizons[k-1]) for horizons
    that grow geometrically.  The increments over the last ``last``
    horizons are regressed on log(horizon): a slope below ``-resolution``
    means the sums settle, above ``+resolution`` means they keep growing,
    and anything in between is reported as a boundary case.  Increments
    that vanish relative to the running sum (super-polynomial decay) count
    as convergent.
    """
    h = np.asarray(horizons, dtype=float)[-last:]
    d = np.asarray(increments, dtype=float)[-last:]
    if h.size < 2:
        raise ValueError("need at least two horizons")
    S = np.cumsum(np.asarray(increments, dtype=float)) if partial_sums is None else np.asarray(partial_sums, float)
    ps = tuple(float(v) for v in S)
    total = S[-1]
    if np.all(d <= negligible * max(total, np.finfo(float).tiny)):
        return SlopeVerdict(Verdict.CONVERGENT, -np.inf, tuple(h), ps)
    if np.any(d <= 0):
        # increments collapsing to zero inside the window: settled
        return SlopeVerdict(Verdict.CONVERGENT, -np.inf, tuple(h), ps)
    slope = float(np.polyfit(np.log(h), np.log(d), 1)[0])
    if slope < -resolution:
        v = Verdict.CONVERGENT
    elif slope > resolution:
        v = Verdict.DIVERGENT
    else:
        v = Verdict.BOUNDARY
    return SlopeVerdict(v, slope, tuple(h), ps)
