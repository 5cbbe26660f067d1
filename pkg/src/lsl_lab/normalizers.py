"""Window lengths, rates, normalizers and truncation levels.

All logarithms follow the clamped convention ``log+ x = max(log x, 1)`` and
``loglog+ x = max(log log x, 1)``.  Functions taking ``n`` reject ``n < 3``;
the ``*_from_log`` variants work on ``log n`` directly so that indices far
beyond the float range (subsequences such as ``exp(c i / log(i+1))``) can be
handled without overflow.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "log_plus", "loglog_plus", "AxisRule", "Power", "LogFraction",
    "LogLogFraction", "GeneralSV", "WindowLaw", "Regime", "NormalizerBundle",
    "axis_length", "rate_bundle", "rates_from_log", "normalizer_f_1d",
    "truncation_level", "lsl_constant",
]


def log_plus(x):
    """max(log x, 1), elementwise."""
    return np.maximum(np.log(x), 1.0)


def loglog_plus(x):
    """max(log log x, 1), elementwise; equals 1 for x <= e**e."""
    return np.maximum(np.log(log_plus(x)), 1.0)


def _lp(t):
    # log+ given t = log x
    return np.maximum(t, 1.0)


def _llp(t):
    # loglog+ given t = log x
    return np.maximum(np.log(np.maximum(t, 1.0)), 1.0)


class AxisRule:
    """Expansion rule ``a_n = n / L(n)`` of one window edge."""

    def log_L(self, t):
        """log L(n) evaluated from t = log n."""
        raise NotImplementedError

    def log_length(self, t):
        return np.asarray(t, dtype=float) - self.log_L(t)

    @property
    def slowly_varying(self) -> bool:
        return True


@dataclass(frozen=True)
class Power(AxisRule):
    """a_n = n**alpha."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"Power.alpha must lie in the open interval (0, 1), got {self.alpha}")

    def log_L(self, t):
        return (1.0 - self.alpha) * np.asarray(t, dtype=float)

    @property
    def slowly_varying(self) -> bool:
        return False


@dataclass(frozen=True)
class LogFraction(AxisRule):
    """a_n = n / log n."""

    def log_L(self, t):
        return np.log(_lp(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class LogLogFraction(AxisRule):
    """a_n = n / log log n."""

    def log_L(self, t):
        return np.log(_llp(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class GeneralSV(AxisRule):
    """a_n = n / L(n) with L(x) = (log+ x)**p * (loglog+ x)**q.

    p, q >= 0 and p + q > 0 keep L nondecreasing and unbounded.
    """

    p: float = 1.0
    q: float = 0.0

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q <= 0:
            raise ValueError("GeneralSV needs p, q >= 0 with p + q > 0 (L nondecreasing to infinity)")

    def log_L(self, t):
        t = np.asarray(t, dtype=float)
        return self.p * np.log(_lp(t)) + self.q * np.log(_llp(t))


class Regime(enum.Enum):
    LOG = "log-log"                  # case (i)
    LOGLOG = "loglog-loglog"         # case (ii)
    LOG_LOGLOG = "log-loglog"        # case (iii)
    POWER_LOG = "power-log"          # m**alpha x n/log n
    GENERAL = "general"              # two slowly varying L1 >= L2
    POWER_POWER = "power-power"      # prior-work reference regime


def _sv_pair_crossover(r1: AxisRule, r2: AxisRule) -> float | None:
    """Smallest scanned log-point beyond which log L1 >= log L2, or None."""
    t = np.geomspace(math.log(3.0), 700.0, 4000)
    ok = r1.log_L(t) >= r2.log_L(t) - 1e-12
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return float(t[0] if bad.size == 0 else t[bad[-1] + 1])


@dataclass(frozen=True)
class WindowLaw:
    """Per-axis expansion rules plus the standard deviation sigma."""

    axis1: AxisRule
    axis2: AxisRule
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise ValueError("sigma must be nonnegative")
        if self.regime is Regime.GENERAL and self.crossover is None:
            raise ValueError("general law needs L1(x) >= L2(x) eventually; swap the axes")

    @property
    def regime(self) -> Regime:
        a, b = self.axis1, self.axis2
        if isinstance(a, Power) and isinstance(b, Power):
            return Regime.POWER_POWER
        if isinstance(a, Power) and type(b) is LogFraction:
            return Regime.POWER_LOG
        if isinstance(a, Power) or isinstance(b, Power):
            raise ValueError("unsupported rule combination: a Power axis pairs only with LogFraction on axis 2")
        if type(a) is LogFraction and type(b) is LogFraction:
            return Regime.LOG
        if type(a) is LogLogFraction and type(b) is LogLogFraction:
            return Regime.LOGLOG
        if type(a) is LogFraction and type(b) is LogLogFraction:
            return Regime.LOG_LOGLOG
        return Regime.GENERAL

    @property
    def crossover(self) -> float | None:
        """x beyond which L1 >= L2 (general regime only)."""
        if self.regime is not Regime.GENERAL:
            return None
        t = _sv_pair_crossover(self.axis1, self.axis2)
        return None if t is None else math.exp(t)


@dataclass(frozen=True)
class NormalizerBundle:
    m: int
    n: int
    a1: float
    a2: float
    area: float
    rate: float
    f: float
    r_m: float
    r_n: float


def _check_index(n, name="n"):
    if n < 3:
        raise ValueError(f"{name} must be >= 3 (got {n}); logs are not extended below 3")


def axis_length(rule: AxisRule, n) -> float:
    """Real-valued window edge a_n; floor it only when building a window."""
    _check_index(n)
    return float(np.exp(rule.log_length(math.log(n))))


def _rate_per_axis(law: WindowLaw, t):
    t = np.asarray(t, dtype=float)
    reg = law.regime
    if reg in (Regime.LOG, Regime.LOG_LOGLOG):
        return 2.0 * _llp(t)
    if reg is Regime.LOGLOG:
        return _llp(t)
    if reg is Regime.POWER_LOG:
        return (1.0 - law.axis1.alpha) * _lp(t)
    if reg is Regime.GENERAL:
        # r(n) = log(L1(n) log n), L1 the dominant deflator
        return law.axis1.log_L(t) + np.log(_lp(t))
    raise ValueError("normalizers for two Power axes are not evaluated; use lsl_constant")


def rates_from_log(law: WindowLaw, tm, tn):
    """(r_m, r_n, rate) from log m and log n; vectorized."""
    r_m = _rate_per_axis(law, tm)
    r_n = _rate_per_axis(law, tn)
    return r_m, r_n, r_m + r_n


def rate_bundle(law: WindowLaw, m: int, n: int) -> NormalizerBundle:
    _check_index(m, "m")
    _check_index(n, "n")
    tm, tn = math.log(m), math.log(n)
    r_m, r_n, rate = (float(v) for v in rates_from_log(law, tm, tn))
    a1 = float(np.exp(law.axis1.log_length(tm)))
    a2 = float(np.exp(law.axis2.log_length(tn)))
    area = a1 * a2
    return NormalizerBundle(m=m, n=n, a1=a1, a2=a2, area=area, rate=rate,
                            f=area * rate, r_m=r_m, r_n=r_n)


def normalizer_f_1d(rule: AxisRule, n: int) -> float:
    """f_n = min(a_n d_n, n) with d_n = log L(n) + log log n."""
    if isinstance(rule, Power):
        raise ValueError("normalizer_f_1d covers slowly varying deflators only")
    _check_index(n)
    t = math.log(n)
    a = float(np.exp(rule.log_length(t)))
    d = float(rule.log_L(t)) + float(_llp(t))
    return min(a * d, float(n))


def truncation_level(law: WindowLaw, m: int, n: int, eps: float, delta: float) -> float:
    """b_{m,n} = (sigma delta / eps) sqrt(area / rate)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    nb = rate_bundle(law, m, n)
    return law.sigma * delta / eps * math.sqrt(nb.area / nb.rate)


def lsl_constant(law: WindowLaw) -> float:
    if law.regime is Regime.POWER_POWER:
        a1 = min(law.axis1.alpha, law.axis2.alpha)
        return law.sigma * math.sqrt(1.0 - a1)
    return law.sigma
