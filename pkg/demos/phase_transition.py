"""Summability of the upper exponential bound along SqrtExp(1) as eps crosses the threshold."""
import numpy as np

from lsl_lab.bounds import BoundParams, kolmogorov_evaluator, phase_threshold, summability_diagnostic
from lsl_lab.normalizers import LogFraction, WindowLaw
from lsl_lab.subsequences import SqrtExp

law = WindowLaw(LogFraction(), LogFraction())
delta = 0.05
thr = phase_threshold(law.sigma, delta)
print(f"threshold eps* = {thr:.4f}")
for factor in np.linspace(0.7, 1.3, 7):
    v = summability_diagnostic(kolmogorov_evaluator(law, SqrtExp(1.0), BoundParams(factor * thr, delta)))
    print(f"eps = {factor:.1f} eps*: {v.verdict.value:10s} slope {v.slope:+.3f}")
