"""Subsequence families, gap inequalities, disjointness and block variances.

Indices along these families overflow double precision quickly
(``exp(c i / log(i+1))`` at i = 1e6), so every check is carried out on
``log m_i`` and on ratios, never on ``m_i`` itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .normalizers import AxisRule, Regime, WindowLaw

__all__ = [
    "SubseqFamily", "SqrtExp", "OverLog", "PowerGrid", "coupled_c",
    "subseq_value", "gap_report", "GapReport", "disjointness_threshold",
    "DisjointnessError", "block_variance_bounds", "VarianceReport",
]


class SubseqFamily:
    c: float

    def log_value(self, i):
        raise NotImplementedError

    @property
    def domain_start(self) -> float:
        raise NotImplementedError

    @property
    def i0(self) -> int:
        return int(math.ceil(self.domain_start - 1e-12))

    def check_domain(self, i):
        if np.any(np.asarray(i) < self.domain_start - 1e-12):
            raise ValueError(f"index below the domain start {self.domain_start:g} of {self!r}")


@dataclass(frozen=True)
class SqrtExp(SubseqFamily):
    """m_i = exp(sqrt(c i))."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")

    def log_value(self, i):
        return np.sqrt(self.c * np.asarray(i, dtype=float))

    @property
    def domain_start(self):
        return max(1.0 / self.c, 1.0)


@dataclass(frozen=True)
class OverLog(SubseqFamily):
    """m_i = exp(c i / log(i + 1))."""

    c: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")

    def log_value(self, i):
        i = np.asarray(i, dtype=float)
        return self.c * i / np.log(i + 1.0)

    @property
    def domain_start(self):
        return max(math.log(1.0 / self.c) / self.c, 1.0)


@dataclass(frozen=True)
class PowerGrid(SubseqFamily):
    """m_i = c i^(1/(1-alpha))."""

    c: float
    alpha: float

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in the open interval (0, 1)")

    def log_value(self, i):
        return math.log(self.c) + np.log(np.asarray(i, dtype=float)) / (1.0 - self.alpha)

    @property
    def domain_start(self):
        return max(self.c ** (self.alpha - 1.0), 1.0)


def coupled_c(regime: Regime, eta: float, alpha: float | None = None) -> float:
    """The c tied to eta by the gap-filling argument of each regime."""
    if regime in (Regime.LOG, Regime.LOG_LOGLOG):
        return eta ** 2
    if regime is Regime.LOGLOG:
        return eta ** 2 / 2.0
    if regime is Regime.POWER_LOG:
        return ((1.0 - alpha) ** 2 * eta ** 2) ** (1.0 / (1.0 - alpha))
    raise ValueError(f"no coupling defined for regime {regime}")


def subseq_value(family: SubseqFamily, i):
    """m_i, real-valued (inf once beyond the float range)."""
    family.check_domain(i)
    with np.errstate(over="ignore"):
        v = np.exp(family.log_value(i))
    return float(v) if np.ndim(v) == 0 else v


def _axis_terms(family: SubseqFamily, rule: AxisRule, i):
    """(gap / a_{m_i}, a_{m_{i+1}} / a_{m_i}, a_{m_i} / m_i) from logs."""
    t0 = family.log_value(i)
    t1 = family.log_value(i + 1)
    la0 = rule.log_length(t0)
    la1 = rule.log_length(t1)
    gap = np.expm1(t1 - t0) * np.exp(t0 - la0)
    return gap, np.exp(la1 - la0), np.exp(la0 - t0)


def _first_good(ok: np.ndarray, idx: np.ndarray):
    """(threshold, later violations) for a boolean scan."""
    if ok.all():
        return int(idx[0]), 0
    bad = np.nonzero(~ok)[0]
    if bad[-1] == ok.size - 1:
        return None, 0
    return int(idx[bad[-1] + 1]), 0


@dataclass
class GapReport:
    system: str
    eta: float
    c: float
    i_range: tuple
    bounds: dict
    thresholds: dict = field(default_factory=dict)
    violations: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(t is not None for t in self.thresholds.values()) and not any(self.violations.values())

    @property
    def threshold(self):
        vals = list(self.thresholds.values())
        return None if any(v is None for v in vals) else max(vals)


def _integerized_terms(family, rule, i):
    t0 = family.log_value(i)
    if np.max(family.log_value(i + 1)) > 700:
        raise OverflowError("integerized mode needs m_i within the float range")
    m0 = np.floor(np.exp(t0))
    m1 = np.floor(np.exp(family.log_value(i + 1)))
    a0 = np.floor(np.exp(rule.log_length(np.log(np.maximum(m0, 1.0)))))
    a1 = np.floor(np.exp(rule.log_length(np.log(np.maximum(m1, 1.0)))))
    a0 = np.maximum(a0, 1.0)
    return (m1 - m0) / a0, a1 / a0, a0 / np.maximum(m0, 1.0)


def gap_report(family: SubseqFamily, rule: AxisRule, eta: float, i_range, rule2: AxisRule | None = None,
               integerized: bool = False) -> GapReport:
    """Scan the four gap inequalities over ``i_range = (lo, hi)``.

    Both coordinates run along ``family``; ``rule`` drives the first
    window edge and ``rule2`` (default ``rule``) the second.  For SqrtExp
    and OverLog families the bounds are gap <= eta^2 a and edge ratio
    <= 1 + 2 eta^2.  For a PowerGrid family the mixed-window system is
    used with c = family.c; its first line is checked against
    c^(1-alpha)/(1-alpha)^2 because the asymptotic leading term
    c^(1-alpha)/(1-alpha) is approached from above.
    """
    rule2 = rule if rule2 is None else rule2
    lo, hi = int(i_range[0]), int(i_range[1])
    if lo < family.domain_start - 1e-12:
        raise ValueError(f"range start {lo} is below the family domain start {family.domain_start:g}")
    idx = np.arange(lo, hi + 1, dtype=float)
    terms = _integerized_terms if integerized else _axis_terms
    g1, r1, _ = terms(family, rule, idx)
    g2, r2, _ = terms(family, rule2, idx)
    if isinstance(family, PowerGrid):
        al, c = family.alpha, family.c
        k = c ** (1 - al)
        bounds = {"gap1": k / (1 - al) ** 2, "gap2": k / (1 - al) ** 2,
                  "ratio1": 1 + al * k * k / (1 - al), "ratio2": 1 + k * k / (1 - al)}
        system = "mixed"
    else:
        bounds = {"gap1": eta ** 2, "gap2": eta ** 2, "ratio1": 1 + 2 * eta ** 2, "ratio2": 1 + 2 * eta ** 2}
        system = "slowly-varying"
    rep = GapReport(system, eta, family.c, (lo, hi), bounds)
    for name, vals in (("gap1", g1), ("gap2", g2), ("ratio1", r1), ("ratio2", r2)):
        ok = vals <= bounds[name] * (1 + 1e-12)
        thr, _ = _first_good(ok, idx)
        rep.thresholds[name] = thr
        rep.violations[name] = 0 if thr is None else int(np.count_nonzero(~ok[idx >= thr]))
    return rep


class DisjointnessError(RuntimeError):
    pass


def disjointness_threshold(family: SubseqFamily, rule: AxisRule, i_max: int, chunk: int = 1_000_000) -> int:
    """Smallest i0 with m_i + a_{m_i} < m_{i+1} for every i in [i0, i_max]."""
    start = family.i0
    last_bad = None
    for lo in range(start, i_max + 1, chunk):
        idx = np.arange(lo, min(lo + chunk, i_max + 1), dtype=float)
        t0 = family.log_value(idx)
        step = family.log_value(idx + 1) - t0
        ok = np.log1p(np.exp(rule.log_length(t0) - t0)) < step
        bad = np.nonzero(~ok)[0]
        if bad.size:
            last_bad = int(idx[bad[-1]])
    if last_bad is None:
        return start
    if last_bad >= i_max:
        raise DisjointnessError(
            f"windows along {family!r} with {rule!r} still overlap at i={i_max}; "
            "no disjointness threshold found in range")
    return last_bad + 1


@dataclass
class VarianceReport:
    ratios: dict
    bounds: dict

    @property
    def ok(self) -> bool:
        return all(self.ratios[k] <= self.bounds[k] * (1 + 1e-12) for k in self.ratios)

    def violations(self):
        return [k for k in self.ratios if self.ratios[k] > self.bounds[k] * (1 + 1e-12)]


def block_variance_bounds(law: WindowLaw, family: SubseqFamily, eta: float, i: int, j: int,
                          extents: tuple | None = None) -> VarianceReport:
    """Variances of the four gap rectangles over sigma^2 a_{m_i, n_j}, against their bounds.

    A rectangle with real edge extents (e1, e2) has variance sigma^2 e1 e2.
    ``extents`` overrides the normalized (gap1, gap2, ratio1, ratio2) tuple
    and exists for degenerate test cases.
    """
    if extents is None:
        g1, r1, _ = _axis_terms(family, law.axis1, np.float64(i))
        g2, r2, _ = _axis_terms(family, law.axis2, np.float64(j))
    else:
        g1, g2, r1, r2 = extents
    g1, g2, r1, r2 = float(g1), float(g2), float(r1), float(r2)
    reg = law.regime
    e2 = eta ** 2
    if reg is Regime.POWER_LOG:
        bounds = {"inner": e2 * e2, "stretch1": (1 + e2) * e2, "stretch2": e2 * (1 + 2 * e2),
                  "both": (1 + 2 * e2) ** 2}
    else:
        k = 2.0 if reg is Regime.LOGLOG else 3.0
        bounds = {"inner": e2 * e2, "stretch1": (1 + k * e2) * e2, "stretch2": (1 + k * e2) * e2,
                  "both": (1 + k * e2) ** 2}
    ratios = {"inner": g1 * g2, "stretch1": (g1 + r1) * g2, "stretch2": g1 * (g2 + r2),
              "both": (g1 + r1) * (g2 + r2)}
    return VarianceReport(ratios, bounds)
