"""Growth functions, sublevel measures and moment-condition diagnostics.

A growth function G(u, v) on [3, inf)^2 is handled through
``log_value(t, w)`` with t = log u and w = log v.  Its counting function
M(x) is the area of {G <= x}; the three summability routes compare the
lattice sum of P(X^2 > G), the matching double integral and E M(X^2).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .distributions import DistributionSpec, LogPerturbedPareto
from .normalizers import AxisRule, LogFraction
from .quadrature import adaptive_midpoint_log, gauss_legendre_panels
from .series import SlopeVerdict, Verdict, slope_verdict

__all__ = [
    "GrowthFunction", "G1", "G2", "G3", "G4", "G5", "CustomG", "NonMonotoneError",
    "sublevel_measure", "log_sublevel_measure", "closed_form_M", "general_M_upper",
    "Moment", "classify_moment", "moment_exponents", "equivalence_check",
    "EquivalenceReport", "LOG3",
]

LOG3 = math.log(3.0)


def _lp(t):
    return np.maximum(t, 1.0)


def _llp(t):
    return np.maximum(np.log(np.maximum(t, 1.0)), 1.0)


class NonMonotoneError(ValueError):
    pass


class GrowthFunction:
    """G(u, v) through its logarithm in log coordinates."""

    case: int | None = None

    def log_value(self, t, w):
        raise NotImplementedError

    def __call__(self, u, v):
        return np.exp(self.log_value(np.log(u), np.log(v)))


@dataclass(frozen=True)
class G1(GrowthFunction):
    """uv (llog u + llog v) / (log u log v)."""

    case = 1

    def log_value(self, t, w):
        return t + w + np.log(_llp(t) + _llp(w)) - np.log(_lp(t)) - np.log(_lp(w))


@dataclass(frozen=True)
class G2(GrowthFunction):
    """uv (llog u + llog v) / (llog u llog v)."""

    case = 2

    def log_value(self, t, w):
        return t + w + np.log(_llp(t) + _llp(w)) - np.log(_llp(t)) - np.log(_llp(w))


@dataclass(frozen=True)
class G3(GrowthFunction):
    """uv (llog u + llog v) / (log u llog v)."""

    case = 3

    def log_value(self, t, w):
        return t + w + np.log(_llp(t) + _llp(w)) - np.log(_lp(t)) - np.log(_llp(w))


@dataclass(frozen=True)
class G4(GrowthFunction):
    """u^alpha v log(uv) / log v."""

    alpha: float = 0.5
    case = 4

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in the open interval (0, 1)")

    def log_value(self, t, w):
        return self.alpha * t + w + np.log(_lp(t + w)) - np.log(_lp(w))


@dataclass(frozen=True)
class G5(GrowthFunction):
    """uv (r(u) + r(v)) / (L1(u) L2(v)) with r = log(L1 log)."""

    L1: AxisRule
    L2: AxisRule
    case = 5

    def r(self, t):
        return self.L1.log_L(t) + np.log(_lp(t))

    def log_value(self, t, w):
        return t + w + np.log(self.r(t) + self.r(w)) - self.L1.log_L(t) - self.L2.log_L(w)


@dataclass(frozen=True)
class CustomG(GrowthFunction):
    """Wraps a user-supplied vectorized log G(t, w)."""

    fn: object

    def log_value(self, t, w):
        return self.fn(t, w)


def _probe_monotone(G: GrowthFunction, t: np.ndarray, w_lo: float, w_hi: np.ndarray):
    frac = np.linspace(0.0, 1.0, 17)[:, None]
    w = w_lo + frac * (w_hi - w_lo)[None, :]
    vals = G.log_value(np.broadcast_to(t, w.shape), w)
    if np.any(np.diff(vals, axis=0) < -1e-9 * np.maximum(1.0, np.abs(vals[:-1]))):
        raise NonMonotoneError(f"{G!r} is not nondecreasing in v on a probed slice")


def _boundary(G: GrowthFunction, t: np.ndarray, lx: float, w_lo: float, iters: int = 80):
    """w*(t) = sup{w >= w_lo : log G(t, w) <= lx}; assumes G(t, w_lo) <= x."""
    lo = np.full_like(t, w_lo)
    hi = np.full_like(t, max(lx, w_lo, 1.0) + 2.0)
    for _ in range(200):
        over = G.log_value(t, hi) > lx
        if over.all():
            break
        hi = np.where(over, hi, 2.0 * hi)
    else:
        raise NonMonotoneError("sublevel slice does not close; G does not grow in v")
    step = max(1, t.size // 8)
    _probe_monotone(G, t[::step], w_lo, hi[::step])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = G.log_value(t, mid) <= lx
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _t_max(G: GrowthFunction, lx: float, w_lo: float) -> float:
    """Right end of the u-range: sup{t : G(t, lower) <= x}."""
    lo, hi = w_lo, max(lx, w_lo, 1.0) + 2.0
    while G.log_value(hi, w_lo) <= lx:
        lo, hi = hi, 2.0 * hi
        if hi > 1e6:
            raise NonMonotoneError("sublevel region is unbounded in u")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if G.log_value(mid, w_lo) <= lx:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * hi:
            break
    return lo


def log_sublevel_measure(G: GrowthFunction, log_x: float, rel_tol: float = 1e-3,
                         u_min: float | None = None, u_max: float | None = None,
                         lower: float = 3.0) -> float:
    """log M(x), with M the area of {(u, v) in [lower, inf)^2 : G(u, v) <= x}.

    Optional ``u_min``/``u_max`` restrict the u-range to a slab.
    """
    w_lo = math.log(lower)
    if G.log_value(w_lo, w_lo) > log_x:
        return -np.inf
    a = w_lo if u_min is None else max(w_lo, math.log(u_min))
    b = _t_max(G, log_x, w_lo)
    if u_max is not None:
        b = min(b, math.log(u_max))
    if not b > a:
        return -np.inf

    def log_f(t):
        w = _boundary(G, t, log_x, w_lo)
        with np.errstate(divide="ignore"):
            return t + w + np.log(-np.expm1(w_lo - w))

    return adaptive_midpoint_log(log_f, a, b, rel_tol)


def sublevel_measure(G: GrowthFunction, x: float, rel_tol: float = 1e-3,
                     u_min: float | None = None, u_max: float | None = None,
                     lower: float = 3.0) -> float:
    """Area of {(u, v) in [lower, inf)^2 : G(u, v) <= x}; 0 when x < G(lower, lower)."""
    if x <= 0:
        return 0.0
    return float(np.exp(log_sublevel_measure(G, math.log(x), rel_tol, u_min, u_max, lower)))


def general_M_upper(L1: AxisRule, L2: AxisRule, x: float) -> float:
    """x L2(x) / r(x) * int_3^{x L1(x)/r(x)} L1(u)/u du, with r = log(L1 log).

    The unpinned multiplicative constant is taken as 1.
    """
    if not x >= math.e ** 2:
        raise ValueError("general_M_upper needs x >= e^2")
    t = math.log(x)
    if L1.log_L(t) < L2.log_L(t) - 1e-12:
        raise ValueError("general_M_upper needs L1(x) >= L2(x)")
    r = float(L1.log_L(t) + math.log(_lp(t)))
    log_upper = t + float(L1.log_L(t)) - math.log(r)
    if log_upper <= LOG3:
        raise ValueError("integration range is empty at this x")
    # int L1(u)/u du in s = log u
    val, err = integrate.quad(lambda s: math.exp(float(L1.log_L(s))), LOG3, log_upper, limit=200)
    if not np.isfinite(val) or err > 1e-6 * abs(val):
        raise ArithmeticError("integral did not converge on the truncated range")
    return x * math.exp(float(L2.log_L(t))) / r * val


def closed_form_M(case: int, x: float, alpha: float = 0.5, L1: AxisRule | None = None,
                  L2: AxisRule | None = None) -> float:
    """Closed-form size of the counting function for cases 1-5."""
    if not x >= math.e ** 2:
        raise ValueError("closed_form_M needs x >= e^2")
    lx = math.log(x)
    llx = math.log(lx)
    if case == 1:
        return x * lx ** 3 / llx
    if case == 2:
        return x * lx * llx
    if case == 3:
        return x * lx ** 2
    if case == 4:
        return (x / lx) ** (1.0 / alpha)
    if case == 5:
        return general_M_upper(L1 or LogFraction(), L2 or LogFraction(), x)
    raise ValueError(f"unknown case {case}")


class Moment(enum.Enum):
    FINITE = "finite"
    INFINITE = "infinite"
    BOUNDARY = "boundary"


def moment_exponents(case: int, alpha: float | None = None):
    """(beta, p, q) of the moment E |X|^beta (log|X|)^p (llog|X|)^q for a case."""
    table = {1: (2.0, 3.0, -1.0), 2: (2.0, 1.0, 1.0), 3: (2.0, 2.0, 0.0)}
    if case in table:
        return table[case]
    if case == 4:
        if alpha is None or not 0 < alpha < 1:
            raise ValueError("case 4 needs alpha in (0, 1)")
        return 2.0 / alpha, -1.0 / alpha, 0.0
    raise ValueError(f"unknown case {case}")


def classify_moment(dist: LogPerturbedPareto, case: int, alpha: float | None = None) -> Moment:
    """Integral test for the case's moment against the tail x^-beta (log)^-gamma (llog)^-dlt.

    Finite iff gamma - p > 1, or gamma - p = 1 and dlt - q > 1.
    """
    beta, p, q = moment_exponents(case, alpha)
    if abs(dist.beta - beta) > 1e-12:
        raise ValueError(f"classify_moment needs beta = {beta:g} for case {case}, got {dist.beta:g}")
    e1 = dist.gamma - p
    if abs(e1 - 1.0) <= 1e-12:
        return Moment.FINITE if dist.dlt - q > 1.0 + 1e-12 else Moment.INFINITE
    return Moment.FINITE if e1 > 1.0 else Moment.INFINITE


@dataclass
class EquivalenceReport:
    lattice: SlopeVerdict
    integral: SlopeVerdict
    expectation: SlopeVerdict
    horizons: tuple

    @property
    def verdicts(self):
        return (self.lattice.verdict, self.integral.verdict, self.expectation.verdict)

    @property
    def agree(self) -> bool:
        return len(set(self.verdicts)) == 1

    @property
    def verdict(self) -> Verdict:
        return self.lattice.verdict if self.agree else Verdict.BOUNDARY


def _log_tail_sq(dist: DistributionSpec, lg):
    """log P(X^2 > e^lg)."""
    return dist.log_sf_abs(0.5 * lg)


def _cell_totals(edges, C, sig):
    """Partial totals over [edges[0], h]^2 from panel cells."""
    return np.array([C[:k, :k].sum() for k in (int(np.searchsorted(edges, h)) for h in sig)])


def _integral_totals(G, dist, sig):
    """Double integral of P(X^2 > G) over [3, e^h]^2 for each h in sig."""
    edges = np.unique(np.concatenate([[LOG3, math.e], sig]))
    s, ws, ps = gauss_legendre_panels(edges)
    S, T = np.meshgrid(s, s, indexing="ij")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        cell = np.exp(S + T + _log_tail_sq(dist, G.log_value(S, T))) * ws[:, None] * ws[None, :]
    npan = len(edges) - 1
    C = np.zeros((npan, npan))
    np.add.at(C, (ps[:, None], ps[None, :]), cell)
    return _cell_totals(edges, C, sig)


def _lattice_totals(G, dist, sig, n0):
    """Lattice sum over [3, e^h]^2: exact up to n0, then continued by the
    midpoint rule (sum over n > n0 ~ integral from n0 + 1/2)."""
    idx = np.arange(3, n0 + 1, dtype=float)
    li = np.log(idx)
    with np.errstate(divide="ignore", over="ignore"):
        exact = np.exp(_log_tail_sq(dist, G.log_value(li[:, None], li[None, :])))
    lc = math.log(n0 + 0.5)
    edges = np.concatenate([[lc], sig[sig > lc]])
    s, ws, ps = gauss_legendre_panels(edges)
    S, T = np.meshgrid(s, s, indexing="ij")
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        strip_a = np.exp(s[None, :] + _log_tail_sq(dist, G.log_value(li[:, None], s[None, :]))) * ws[None, :]
        strip_b = np.exp(s[:, None] + _log_tail_sq(dist, G.log_value(s[:, None], li[None, :]))) * ws[:, None]
        cont = np.exp(S + T + _log_tail_sq(dist, G.log_value(S, T))) * ws[:, None] * ws[None, :]
    npan = len(edges) - 1
    a_pan = np.bincount(ps, weights=strip_a.sum(axis=0), minlength=npan)
    b_pan = np.bincount(ps, weights=strip_b.sum(axis=1), minlength=npan)
    C = np.zeros((npan, npan))
    np.add.at(C, (ps[:, None], ps[None, :]), cont)
    base = exact.sum()
    totals = []
    for h in sig:
        if h <= lc:
            k = int(math.floor(math.exp(h)))
            totals.append(exact[: k - 2, : k - 2].sum())
        else:
            k = int(np.searchsorted(edges, h))
            totals.append(base + a_pan[:k].sum() + b_pan[:k].sum() + C[:k, :k].sum())
    return np.array(totals)


@lru_cache(maxsize=32)
def _log_M_spline(G: GrowthFunction, ell_max: float, rel_tol: float):
    ell_min = float(G.log_value(LOG3, LOG3))
    z = np.geomspace(1e-4, ell_max - ell_min + 1.0, 56)
    vals = np.array([log_sublevel_measure(G, ell_min + zz, rel_tol) for zz in z])
    return ell_min, CubicSpline(np.log(z), vals)


def _expectation_totals(G, dist, sig, rel_tol):
    """E[M(X^2); X^2 <= e^{2h}] for each h in sig."""
    ell_min, spl = _log_M_spline(G, float(2 * sig[-1]), rel_tol)
    s_lo = 0.5 * ell_min
    edges = np.unique(np.concatenate([[s_lo], [x for x in (1.0, math.e) if x > s_lo], sig[sig > s_lo]]))
    s, ws, ps = gauss_legendre_panels(edges, 32)
    with np.errstate(divide="ignore", over="ignore"):
        lm = spl(np.log(2 * s - ell_min))
        lf = lm + dist.log_pdf_abs(s) + s
    pan = np.bincount(ps, weights=np.exp(lf) * ws, minlength=len(edges) - 1)
    cum = np.concatenate([[0.0], np.cumsum(pan)])
    idx = [int(np.searchsorted(edges, h)) if h > s_lo else 0 for h in sig]
    return cum[idx]


def equivalence_check(dist: DistributionSpec, G: GrowthFunction, horizon: int = 8,
                      n0: int = 256, rel_tol: float = 1e-6) -> EquivalenceReport:
    """Three-way summability comparison up to log-horizons 2^2, ..., 2^horizon.

    (a) sum of P(X^2 > G(m, n)) over the lattice [3, H]^2,
    (b) the double integral of the same tail over [3, H]^2,
    (c) E[M(X^2); X^2 <= H^2],
    each classified by slope_verdict on increments between log-horizons.
    """
    sig = 2.0 ** np.arange(2, horizon + 1)
    totals = (_lattice_totals(G, dist, sig, n0), _integral_totals(G, dist, sig),
              _expectation_totals(G, dist, sig, rel_tol))
    v = [slope_verdict(sig, np.diff(tot, prepend=0.0), tot) for tot in totals]
    return EquivalenceReport(v[0], v[1], v[2], tuple(sig))
