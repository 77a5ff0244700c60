"""
Classical diagnostics side by side
==================================

With more samples than variables VIF and the condition number are
available, and the largest VIF never exceeds the squared condition number.
In the wide regime VIF is undefined, but ``sR_j``, Red and the effective
number of variables still are.
"""

import numpy as np

import ubva

rng = np.random.default_rng(3)

# data rich: AR1 with a strong lag-one correlation
sigma = ubva.realize_covariance(ubva.CovarianceSpec.ar1(20, 0.9))
m = ubva.measure(ubva.sample_mvn(sigma, 200, seed=3))
panel = ubva.baseline_panel(m.standardized, m.svd, m.severity.sR, ld_window=2)
print("data rich (n=200, p=20)")
print(f"  max VIF {panel.vif.max():8.2f}   condition number^2 {panel.condition_number ** 2:8.2f}")
print(f"  Red {panel.red:.3f}   sRs {m.summary.sRs:.3f}   p_eff {panel.p_eff:.2f} of 20")
print("  sR_j vs windowed LD sum (t=2), first four:")
for j in range(4):
    print(f"    {j}: sR {m.severity.sR[j]:.3f}  LDadj {panel.ld_adj[j]:.3f}  LDscore {panel.ld_score[j]:.3f}")

# wide: VIF refuses, the rest carries on
wide = ubva.measure(rng.standard_normal((50, 400)), with_rows=True)
try:
    ubva.vif(wide.standardized)
except ubva.RegimeError as exc:
    print(f"\nwide (n=50, p=400): {type(exc).__name__}: {exc}")
counts = ubva.effective_counts(wide.severity.sR, wide.severity.sL)
print(f"  p_eff {counts.p_eff:.1f} <= sum 1/sR {counts.max_p_eff:.1f} <= n-1 = 49")
print(f"  condition number d1/d(n-1) = {ubva.condition_number(wide.svd):.2f}")
