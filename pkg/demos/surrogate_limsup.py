"""Running maximum of the Gaussian surrogate along SqrtExp(0.25) for growing budgets."""
import numpy as np

from lsl_lab.limsup import sup_quantile, surrogate_limsup
from lsl_lab.normalizers import LogFraction, WindowLaw
from lsl_lab.subsequences import SqrtExp

law = WindowLaw(LogFraction(), LogFraction())
fam = SqrtExp(0.25)
for K in (250, 500, 1000, 2000):
    finals = [surrogate_limsup(law, fam, K, seed).final for seed in range(5)]
    q = [sup_quantile(law, fam, K, p) for p in (0.05, 0.5, 0.95)]
    print(f"K={K:5d} finals {np.round(finals, 3)}  exact 5/50/95%: {q[0]:.3f} {q[1]:.3f} {q[2]:.3f}")
