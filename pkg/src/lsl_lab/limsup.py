"""Finite-horizon limsup proxies along a subsequence lattice.

The tail region {i, j > burn_in * K} of the K x K lattice is enumerated
diagonally (by i + j, then i).  Row i of the lattice draws from its own
stream keyed by (seed, i), so the trace does not depend on how rows are
scheduled.  In surrogate mode the statistic at (m_i, n_j) is
sigma Z / sqrt(2 rate), whose running maximum over the region has the
closed-form law prod Phi(x sqrt(2 rate) / sigma).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import special

from .distributions import DistributionSpec
from .field import LimsupTrace, trace_from_arrays, windowed_statistic
from .normalizers import WindowLaw, rates_from_log
from .rng import stream
from .subsequences import SubseqFamily

__all__ = ["region_indices", "surrogate_limsup", "direct_limsup", "sup_log_cdf", "sup_quantile"]


def region_indices(family: SubseqFamily, K: int, burn_in: float = 0.25) -> np.ndarray:
    """Lattice indices i in the tail region (burn_in K, K]."""
    lo = max(int(math.floor(burn_in * K)) + 1, family.i0)
    if lo > K:
        raise ValueError("empty region: K too small for the burn-in and family domain")
    return np.arange(lo, K + 1)


def _diagonal_order(idx):
    I, J = np.meshgrid(idx, idx, indexing="ij")
    I, J = I.ravel(), J.ravel()
    order = np.lexsort((I, I + J))
    return I[order], J[order], order


def surrogate_limsup(law: WindowLaw, family: SubseqFamily, K: int, seed: int,
                     burn_in: float = 0.25, threads: int = 1) -> LimsupTrace:
    idx = region_indices(family, K, burn_in)
    lj = family.log_value(idx.astype(float))

    def row(i):
        li = family.log_value(float(i))
        _, _, rate = rates_from_log(law, li, lj)
        z = stream(seed, int(i)).standard_normal(idx.size)
        return law.sigma * z / np.sqrt(2.0 * rate)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        grid = np.stack(list(ex.map(row, idx)))
    I, J, order = _diagonal_order(idx)
    with np.errstate(over="ignore"):
        m = np.exp(family.log_value(I.astype(float)))
        n = np.exp(family.log_value(J.astype(float)))
    return trace_from_arrays(I, J, m, n, grid.ravel()[order], mode="surrogate")


def direct_limsup(law: WindowLaw, family: SubseqFamily, dist: DistributionSpec, K: int, seed: int,
                  eps: float = 1.0, delta: float = 0.1, burn_in: float = 0.25,
                  threads: int = 1) -> LimsupTrace:
    """Simulated T / sqrt(2 f) at integerized (m_i, n_j); window sizes obey the cell budget."""
    idx = region_indices(family, K, burn_in)
    I, J, _ = _diagonal_order(idx)
    ms = np.maximum(3, np.floor(np.exp(family.log_value(I.astype(float))))).astype(np.int64)
    ns = np.maximum(3, np.floor(np.exp(family.log_value(J.astype(float))))).astype(np.int64)

    def unit(k):
        return windowed_statistic(law, int(ms[k]), int(ns[k]), dist, seed, eps, delta).normalized

    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        stat = list(ex.map(unit, range(I.size)))
    return trace_from_arrays(I, J, ms, ns, stat, mode="direct")


def _region_rates(law, family, K, burn_in):
    idx = region_indices(family, K, burn_in)
    lv = family.log_value(idx.astype(float))
    _, _, rate = rates_from_log(law, lv[:, None], lv[None, :])
    return rate.ravel()


def sup_log_cdf(law: WindowLaw, family: SubseqFamily, K: int, x, burn_in: float = 0.25):
    """log P(max of the surrogate statistic over the region <= x)."""
    scale = np.sqrt(2.0 * _region_rates(law, family, K, burn_in)) / law.sigma
    x = np.atleast_1d(np.asarray(x, float))
    out = np.array([special.log_ndtr(xx * scale).sum() for xx in x])
    return out if out.size > 1 else float(out[0])


def sup_quantile(law: WindowLaw, family: SubseqFamily, K: int, q: float, burn_in: float = 0.25) -> float:
    """q-quantile of the surrogate region maximum, by bisection on its exact CDF."""
    scale = np.sqrt(2.0 * _region_rates(law, family, K, burn_in)) / law.sigma
    target = math.log(q)
    lo, hi = 0.0, 10.0
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        if special.log_ndtr(mid * scale).sum() < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
