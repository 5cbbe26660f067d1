"""Kolmogorov exponential bounds, the T'' combinatorial bound and summability."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from .distributions import DistributionSpec, Gaussian
from .field import split_array, window_rect
from .normalizers import WindowLaw, rate_bundle, rates_from_log, truncation_level
from .rng import stream
from .series import SlopeVerdict, slope_verdict
from .subsequences import SubseqFamily

__all__ = [
    "BoundParams", "min_N", "kolmogorov_upper", "kolmogorov_lower",
    "exact_tprime_tail", "discover_d0", "SandwichReport", "tprime_tail_sandwich",
    "tdoubleprime_bound", "tdoubleprime_case1", "pzwei_reduction",
    "summability_diagnostic", "power_evaluator", "kolmogorov_evaluator",
    "phase_threshold", "mean_drift_bound", "truncated_second_moment",
]


def min_N(eta: float, delta: float) -> int:
    """Smallest integer N with N delta >= eta."""
    return max(1, int(math.ceil(eta / delta - 1e-12)))


@dataclass(frozen=True)
class BoundParams:
    """eps, delta, slack gamma, sigma, N and eta with N delta >= eta.

    delta = 0 and gamma_slack = 0 are accepted as limiting cases.
    """

    eps: float
    delta: float
    gamma_slack: float = 0.1
    sigma: float = 1.0
    N: int | None = None
    eta: float | None = None

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")
        if not self.gamma_slack >= 0:
            raise ValueError("gamma_slack must be nonnegative")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        eta = self.eta
        N = self.N
        if N is None:
            N = min_N(eta, self.delta) if (eta is not None and self.delta > 0) else 1
        if eta is None:
            eta = N * self.delta
        if N < 1:
            raise ValueError("N must be >= 1")
        if N * self.delta < eta - 1e-12:
            raise ValueError(f"coupling N*delta >= eta violated: N={N}, delta={self.delta}, eta={eta}")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "eta", float(eta))


def kolmogorov_upper(p: BoundParams, d):
    """exp(-eps^2 (1 - delta)^3 d / sigma^2)."""
    return np.exp(-p.eps ** 2 * (1 - p.delta) ** 3 * np.asarray(d, float) / p.sigma ** 2)


def kolmogorov_lower(p: BoundParams, d):
    """exp(-eps^2 (1 + delta)^2 (1 + gamma) d / (sigma^2 (1 - delta)))."""
    k = p.eps ** 2 * (1 + p.delta) ** 2 * (1 + p.gamma_slack) / (p.sigma ** 2 * (1 - p.delta))
    return np.exp(-k * np.asarray(d, float))


def exact_tprime_tail(law: WindowLaw, m: int, n: int, eps: float, sigma: float) -> float:
    """P(T > eps sqrt(2 f)) for a Gaussian window with its integer cell count.

    Equals the T' tail up to the truncated mass, which is negligible when
    the truncation level sits many sigmas out.
    """
    nb = rate_bundle(law, m, n)
    cells = window_rect(law, m, n).cells
    z = eps * math.sqrt(2.0 * nb.f) / (sigma * math.sqrt(cells))
    return float(special.ndtr(-z))


def discover_d0(law: WindowLaw, p: BoundParams, m_grid=None):
    """Smallest scanned rate d beyond which the exact tail stays below the upper bound.

    The scan runs along the diagonal m = n.  Returns (d0, table) with d0
    None when the bound fails at the top of the grid.
    """
    if m_grid is None:
        m_grid = np.unique(np.round(np.geomspace(3, 1e6, 200)).astype(int))
    rows = []
    for m in m_grid:
        m = int(m)
        d = rate_bundle(law, m, m).rate
        ex = exact_tprime_tail(law, m, m, p.eps, p.sigma)
        rows.append((m, d, ex, float(kolmogorov_upper(p, d))))
    ok = [r[2] <= r[3] for r in rows]
    if not ok[-1]:
        return None, rows
    k = len(ok)
    while k > 0 and ok[k - 1]:
        k -= 1
    return rows[k][1], rows


@dataclass
class SandwichReport:
    m: int
    n: int
    d: float
    exact: float
    upper: float
    lower: float
    d0: float | None
    status: str
    truncated_mass: float
    mc_estimate: float | None = None
    mc_se: float | None = None
    mc_replicates: int = 0

    @property
    def mc_ok(self) -> bool | None:
        if self.mc_estimate is None:
            return None
        return abs(self.mc_estimate - self.exact) <= 3.0 * self.mc_se


def _mc_tprime(law, m, n, p, dist, replicates, seed, chunk):
    rect = window_rect(law, m, n)
    nb = rate_bundle(law, m, n)
    b = truncation_level(law, m, n, p.eps, p.delta)
    top = p.delta * math.sqrt(nb.f)
    level = p.eps * math.sqrt(2.0 * nb.f)
    hits = 0
    for c, lo in enumerate(range(0, replicates, chunk)):
        k = min(chunk, replicates - lo)
        x = dist.sample(stream(seed, 1, c), (k, rect.cells))
        if b < top:
            xp, _, _ = split_array(x, b, top)
        else:
            xp = np.where(np.abs(x) <= b, x, 0.0)
        hits += int(np.count_nonzero(xp.sum(axis=1) > level))
    return hits / replicates


def tprime_tail_sandwich(law: WindowLaw, m: int, n: int, p: BoundParams, dist: Gaussian,
                         mc_replicates: int = 0, seed: int = 0, chunk: int = 2000) -> SandwichReport:
    """Exact Gaussian T' tail against the Kolmogorov bounds, optionally with Monte Carlo."""
    if not isinstance(dist, Gaussian):
        raise TypeError("the exact sandwich needs a Gaussian summand")
    nb = rate_bundle(law, m, n)
    cells = window_rect(law, m, n).cells
    b = truncation_level(law, m, n, p.eps, p.delta)
    trunc = cells * float(np.exp(dist.log_sf_abs(math.log(b))))
    exact = exact_tprime_tail(law, m, n, p.eps, dist.sigma)
    d0, _ = discover_d0(law, p)
    up = float(kolmogorov_upper(p, nb.rate))
    lo = float(kolmogorov_lower(p, nb.rate))
    if d0 is None or nb.rate < d0:
        status = "bounds not yet binding"
    else:
        status = "ok" if exact <= up else "violated"
    rep = SandwichReport(m, n, nb.rate, exact, up, lo, d0, status, trunc)
    if mc_replicates:
        est = _mc_tprime(law, m, n, p, dist, mc_replicates, seed, chunk)
        rep.mc_estimate = est
        rep.mc_se = math.sqrt(max(exact * (1 - exact), 1e-300) / mc_replicates)
        rep.mc_replicates = mc_replicates
    return rep


def tdoubleprime_bound(law: WindowLaw, m: int, n: int, N: int, moment_value: float, H_at_b: float) -> float:
    """area^N (E H(|X|) / H(b))^N, the binomial relaxed to area^N and C = 1."""
    if N < 1:
        raise ValueError("N must be >= 1")
    area = rate_bundle(law, m, n).area
    return float(np.exp(N * (math.log(area) + math.log(moment_value) - math.log(H_at_b))))


def tdoubleprime_case1(log_m, log_n, N: int):
    """((llog m + llog n) llog(mn) / (log mn)^3)^N from log m and log n."""
    lm = np.asarray(log_m, float)
    ln_ = np.asarray(log_n, float)
    s = lm + ln_
    base = (np.log(lm) + np.log(ln_)) * np.log(s) / s ** 3
    return base ** N


def pzwei_reduction(c: float, i, j, N: int):
    """(case-1 form at (e^sqrt(ci), e^sqrt(cj)), index form) for the SqrtExp lattice."""
    i = np.asarray(i, float)
    j = np.asarray(j, float)
    lhs = tdoubleprime_case1(np.sqrt(c * i), np.sqrt(c * j), N)
    rhs = ((np.log(i) + np.log(j)) * np.log(i + j) / (i ** 1.5 + j ** 1.5)) ** N
    return lhs, rhs


def power_evaluator(kappa: float) -> Callable:
    return lambda i, j: (i * j) ** (-kappa)


def kolmogorov_evaluator(law: WindowLaw, family: SubseqFamily, p: BoundParams) -> Callable:
    """Upper Kolmogorov bound at the rate of (m_i, n_j) along ``family``."""
    def ev(i, j):
        _, _, d = rates_from_log(law, family.log_value(i), family.log_value(j))
        return kolmogorov_upper(p, d)
    return ev


def phase_threshold(sigma: float, delta: float) -> float:
    """eps above which the upper-bound series converges: sigma (1 - delta)^(-3/2)."""
    return sigma * (1 - delta) ** -1.5


def summability_diagnostic(evaluator: Callable, i0: int = 1, k_min: int = 4, k_max: int = 12,
                           block: int = 1 << 22) -> SlopeVerdict:
    """Double partial sums over [i0, 2^k]^2 classified by slope_verdict.

    Increments are summed over the L-shaped strips between successive
    horizons in a fixed index order.
    """
    horizons = [2 ** k for k in range(k_min, k_max + 1)]
    incs = []
    prev = i0 - 1
    for H in horizons:
        new = np.arange(prev + 1, H + 1, dtype=float)
        old_and_new = np.arange(i0, H + 1, dtype=float)
        total = 0.0
        rows_per = max(1, block // max(1, old_and_new.size))
        for lo in range(0, new.size, rows_per):
            r = new[lo: lo + rows_per]
            # rows r against every column, plus the mirrored strip without the corner
            total += float(evaluator(r[:, None], old_and_new[None, :]).sum())
        old = np.arange(i0, prev + 1, dtype=float)
        if old.size:
            rows_per = max(1, block // max(1, new.size))
            for lo in range(0, old.size, rows_per):
                r = old[lo: lo + rows_per]
                total += float(evaluator(r[:, None], new[None, :]).sum())
        incs.append(total)
        prev = H
    return slope_verdict(horizons, incs)


def truncated_second_moment(dist: DistributionSpec, b: float) -> float:
    """E[X^2; |X| > b] = b^2 P(|X| > b) + int_b^inf 2x P(|X| > x) dx."""
    tb = math.log(b)
    head = b * b * float(np.exp(dist.log_sf_abs(tb)))
    val, _ = integrate.quad(lambda t: 2.0 * math.exp(2.0 * t + float(dist.log_sf_abs(t))), tb, np.inf, limit=400)
    return head + val


def mean_drift_bound(law: WindowLaw, m: int, n: int, dist: DistributionSpec, eps: float, delta: float) -> float:
    """Deterministic bound on |E T'| / sqrt(f).

    |E T'| <= cells E[|X|; |X| > b] <= cells E[X^2; |X| > b] / b, and
    area / b = eps sqrt(f) / (sigma delta).
    """
    nb = rate_bundle(law, m, n)
    cells = window_rect(law, m, n).cells
    b = truncation_level(law, m, n, eps, delta)
    return eps / (law.sigma * delta) * truncated_second_moment(dist, b) * cells / nb.area
