"""Numeric sublevel measure against the closed-form counting function for cases 1-4."""
from lsl_lab.moments import G1, G2, G3, G4, closed_form_M, sublevel_measure

XS = [1e4, 1e6, 1e8, 1e10, 1e12]

for case, G in ((1, G1()), (2, G2()), (3, G3()), (4, G4(0.5))):
    for lower in (1.0, 3.0):
        ratios = [sublevel_measure(G, x, lower=lower) / closed_form_M(case, x) for x in XS]
        drift = max(abs(b / a - 1) for a, b in zip(ratios, ratios[1:]))
        cells = " ".join(f"{r:7.4f}" for r in ratios)
        print(f"case {case} lower={lower:g}: {cells}  band={max(ratios) / min(ratios):.2f} drift={drift:.3f}")
