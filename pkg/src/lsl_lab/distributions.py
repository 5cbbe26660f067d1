"""Symmetric summand distributions with analytically known tails.

Each member exposes the law of ``|X|`` through ``log_sf_abs(t)``, the log of
``P(|X| > e**t)``.  Working from ``t = log x`` keeps tail evaluations finite
far beyond the float range of ``x`` itself, which the moment quadrature
relies on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special, stats

__all__ = [
    "DistributionSpec", "Gaussian", "Rademacher", "Uniform", "StudentT",
    "LogPerturbedPareto", "InversionError", "inverse_tail_sample",
]


class InversionError(RuntimeError):
    pass


class DistributionSpec:
    """Base class; subclasses are frozen dataclasses."""

    integer_valued = False

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        raise NotImplementedError

    def log_sf_abs(self, t):
        """log P(|X| > e**t)."""
        raise NotImplementedError

    def log_pdf_abs(self, t):
        """log of the density of |X| at e**t (continuous members only)."""
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    def sf_abs(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            t = np.log(x)
        return np.where(x <= 0, 1.0, np.exp(self.log_sf_abs(t)))


@dataclass(frozen=True)
class Gaussian(DistributionSpec):
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")

    def sample(self, rng, shape):
        return self.sigma * rng.standard_normal(shape)

    def log_sf_abs(self, t):
        t = np.asarray(t, dtype=float)
        if self.sigma == 0:
            return np.where(np.isneginf(t), 0.0, -np.inf)
        with np.errstate(over="ignore"):
            z = np.exp(t) / self.sigma
        return math.log(2.0) + special.log_ndtr(-z)

    def log_pdf_abs(self, t):
        with np.errstate(over="ignore"):
            z = np.exp(np.asarray(t, dtype=float)) / self.sigma
        return 0.5 * math.log(2.0 / math.pi) - math.log(self.sigma) - 0.5 * z * z

    @property
    def variance(self):
        return self.sigma ** 2


@dataclass(frozen=True)
class Rademacher(DistributionSpec):
    """Fair +/-1 signs (variance 1)."""

    integer_valued = True

    def sample(self, rng, shape):
        return 2.0 * rng.integers(0, 2, size=shape).astype(float) - 1.0

    def log_sf_abs(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < 0, 0.0, -np.inf)

    @property
    def variance(self):
        return 1.0


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    """Uniform on [-sigma*sqrt(3), sigma*sqrt(3)], variance sigma**2."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def half_width(self):
        return self.sigma * math.sqrt(3.0)

    def sample(self, rng, shape):
        return rng.uniform(-self.half_width, self.half_width, size=shape)

    def log_sf_abs(self, t):
        x = np.exp(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore"):
            return np.log(np.clip(1.0 - x / self.half_width, 0.0, 1.0))

    def log_pdf_abs(self, t):
        x = np.exp(np.asarray(t, dtype=float))
        return np.where(x <= self.half_width, -math.log(self.half_width), -np.inf)

    @property
    def variance(self):
        return self.sigma ** 2


@dataclass(frozen=True)
class StudentT(DistributionSpec):
    """Student t with nu degrees of freedom; nu <= 2 is an infinite-variance control."""

    nu: float

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("nu must be positive")

    def sample(self, rng, shape):
        return rng.standard_t(self.nu, size=shape)

    def log_sf_abs(self, t):
        with np.errstate(over="ignore"):
            x = np.exp(np.asarray(t, dtype=float))
        return math.log(2.0) + stats.t.logsf(x, self.nu)

    def log_pdf_abs(self, t):
        with np.errstate(over="ignore"):
            x = np.exp(np.asarray(t, dtype=float))
        return math.log(2.0) + stats.t.logpdf(x, self.nu)

    @property
    def variance(self):
        return self.nu / (self.nu - 2.0) if self.nu > 2 else math.inf


def _lp(t):
    return np.maximum(t, 1.0)


def _llp(t):
    return np.maximum(np.log(np.maximum(t, 1.0)), 1.0)


@dataclass(frozen=True)
class LogPerturbedPareto(DistributionSpec):
    """Symmetric law with P(|X| > x) = min{1, x^-beta (log+ x)^-gamma (loglog+ x)^-dlt}.

    Below the cutoff ``x0`` the tail equals 1.  ``x0`` is the smallest point
    where the formula is at most 1 and nonincreasing from there on; for
    nonnegative ``gamma`` and ``dlt`` it is 1.
    """

    beta: float
    gamma: float = 0.0
    dlt: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        object.__setattr__(self, "_t0", self._find_t0())

    def _raw_log_tail(self, t):
        t = np.asarray(t, dtype=float)
        return -self.beta * t - self.gamma * np.log(_lp(t)) - self.dlt * np.log(_llp(t))

    def _find_t0(self) -> float:
        if self.gamma >= 0 and self.dlt >= 0:
            return 0.0
        grid = np.linspace(0.0, 50.0, 50001)
        g = self._raw_log_tail(grid)
        rising = np.diff(g) > 0
        last_rise = np.nonzero(rising)[0]
        start = 0 if last_rise.size == 0 else last_rise[-1] + 1
        above = np.nonzero(g[start:] > 0)[0]
        if above.size == 0:
            return float(grid[start])
        k = start + above[-1]
        lo, hi = grid[k], grid[k + 1]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self._raw_log_tail(mid) > 0:
                lo = mid
            else:
                hi = mid
        return float(hi)

    @property
    def x0(self) -> float:
        return math.exp(self._t0)

    def log_sf_abs(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self._t0, 0.0, np.minimum(self._raw_log_tail(t), 0.0))

    def log_pdf_abs(self, t):
        # -d/dx T(x) = T(x)/x * (beta + gamma/log x + dlt/(log x loglog x)) where unclamped
        t = np.asarray(t, dtype=float)
        k = np.full_like(t, self.beta)
        with np.errstate(divide="ignore", invalid="ignore"):
            k = k + np.where(t > 1.0, self.gamma / t, 0.0)
            k = k + np.where(t > math.e, self.dlt / (t * np.log(t)), 0.0)
        with np.errstate(divide="ignore"):
            return np.where(t < self._t0, -np.inf, self.log_sf_abs(t) - t + np.log(k))

    def sample(self, rng, shape):
        u = rng.random(shape)
        u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
        sign = np.where(rng.integers(0, 2, size=shape) == 1, 1.0, -1.0)
        return sign * inverse_tail_sample(self, u)

    @property
    def variance(self):
        if self.beta < 2 or (self.beta == 2 and (self.gamma < 1 or (self.gamma == 1 and self.dlt <= 1))):
            return math.inf
        # E X^2 = x0^2 + int_{x0}^inf 2 x T(x) dx, integrated in t = log x
        val, _ = integrate.quad(lambda t: 2.0 * np.exp(2.0 * t + self.log_sf_abs(t)),
                                self._t0, np.inf, limit=400)
        return self.x0 ** 2 + val


def inverse_tail_sample(dist: LogPerturbedPareto, u, tol: float = 1e-12, max_iter: int = 200):
    """Magnitude x with P(|X| > x) = u, for tail levels u in (0, 1].

    Vectorized bisection on t = log x, stopped at width ``tol`` (a relative
    accuracy of ``tol`` in x).
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u > 1)):
        raise ValueError("tail level must lie in (0, 1]")
    target = np.log(u)
    lo = np.full(u.shape, dist._t0)
    hi = lo + 1.0
    for _ in range(64):
        short = dist.log_sf_abs(hi) > target
        if not short.any():
            break
        hi = np.where(short, lo + 2.0 * (hi - lo), hi)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol):
            break
        mid = 0.5 * (lo + hi)
        above = dist.log_sf_abs(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    else:
        raise InversionError(f"bisection did not converge in {max_iter} iterations")
    out = np.exp(0.5 * (lo + hi))
    out = np.where(target >= 0.0, dist.x0, out)
    return out if out.ndim else float(out)
