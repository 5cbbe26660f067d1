"""Small quadrature helpers working on log-integrands."""
from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

__all__ = ["ConvergenceError", "adaptive_midpoint_log", "gauss_legendre_panels"]


class ConvergenceError(RuntimeError):
    pass


def adaptive_midpoint_log(log_f, a: float, b: float, rel_tol: float = 1e-3,
                          n0: int = 64, n_max: int = 1 << 20) -> float:
    """log of the integral of exp(log_f) over [a, b].

    Composite midpoint rule, doubling the panel count until two successive
    estimates agree to ``rel_tol``.  ``log_f`` is vectorized and may
    return -inf.
    """
    if not b > a:
        return -np.inf
    n = n0
    prev = None
    while n <= n_max:
        h = (b - a) / n
        x = a + h * (np.arange(n) + 0.5)
        lf = log_f(x)
        est = logsumexp(lf) + np.log(h) if np.any(np.isfinite(lf)) else -np.inf
        if prev is not None:
            if est == -np.inf and prev == -np.inf:
                return est
            if abs(np.expm1(est - prev)) < rel_tol:
                return float(est)
        prev = est
        n *= 2
    raise ConvergenceError(f"midpoint rule did not reach rel_tol={rel_tol} with {n_max} panels")


def gauss_legendre_panels(edges, order: int = 24):
    """Nodes and weights of a composite Gauss-Legendre rule.

    Returns (nodes, weights, panel_index) with one block of ``order``
    nodes per panel [edges[k], edges[k+1]].
    """
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    panel = np.repeat(np.arange(len(edges) - 1), order)
    return nodes.ravel(), weights.ravel(), panel
