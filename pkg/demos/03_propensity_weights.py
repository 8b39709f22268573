"""Propensity scores and inverse probability of treatment weights.

The propensity model is a logistic regression of the binary exposure on
covariates. Each unit's weight is 1/p if exposed and 1/(1-p) if not.
Diagnostics summarise the weights by arm, including the Kish effective
sample size. A propensity of exactly 0 or 1 is a positivity violation and
is reported with the offending rows unless a clamp is requested.

Run: python3 demos/03_propensity_weights.py
"""
from dataclasses import replace

import numpy as np

from drglm import fit_propensity, make_weights, weight_diagnostics
from drglm.errors import PositivityError
from drglm.simlab import generate

ds = generate("gaussian", 2000, np.random.default_rng(5))

for formula in ["x ~ z1 + I(z1^2) + z2", "x ~ z1"]:
    pf = fit_propensity(ds, formula)
    w = make_weights(pf)
    d = weight_diagnostics(w)
    print(f"{formula:<24} phat in [{pf.phat.min():.3f}, {pf.phat.max():.3f}]  "
          f"weights in [{d['min']:.2f}, {d['max']:.2f}]")
    print(f"{'':24} exposed: n {d['n_1']}, ESS {d['ess_1']:.0f};  unexposed: n {d['n_0']}, ESS {d['ess_0']:.0f}")

# the intercept's score equation balances the exposure exactly
pf = fit_propensity(ds, "x ~ z1 + I(z1^2) + z2")
print("\nsum(x - phat) =", float(np.sum(pf.exposure - pf.phat)))

# positivity: force two propensities to the boundary
bad = replace(pf, phat=np.r_[0.0, 1.0, pf.phat[2:]])
try:
    make_weights(bad)
except PositivityError as exc:
    print(f"PositivityError on rows {exc.rows[:5]}")
clamped = make_weights(bad, clamp=0.01)
print("with clamp=0.01 the first two weights are", clamped.w[:2])
