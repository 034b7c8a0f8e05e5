"""Energy efficiency of a single link.

An EE player maximizes rate / (circuit power + radiated power). On one
unit subchannel with unit noise and unit circuit power the optimum is
p = e - 1 with efficiency 1/e. Dinkelbach's method finds it by solving a
short sequence of waterfilling problems; the budget only matters when it
is tighter than the unconstrained optimum.
"""
import math

import numpy as np

from qvipower import dinkelbach_zeta, level_for_budget
from qvipower.oracles import ee_optimum_golden

res = dinkelbach_zeta([1.0], 1.0, eps=1e-12)
print(f"Dinkelbach: nu* = {res.nu_star:.12f} (1/e = {1 / math.e:.12f})")
print(f"            z*  = {res.z_star[0]:.12f} (e-1 = {math.e - 1:.12f})")
print(f"            {res.iterations} parametric subproblems")

# a brute-force cross check: golden-section search on total power
s, ee = ee_optimum_golden([1.0], 1.0)
print(f"golden section: power {s:.8f}, efficiency {ee:.8f}")

# the rate / efficiency trade-off on a three-subchannel link
zeta = np.array([0.3, 0.8, 2.0])
opt = dinkelbach_zeta(zeta, circuit=0.5)
print("\nthree subchannels, circuit power 0.5:")
print(f"  EE-optimal allocation {np.round(opt.z_star, 4)} uses {opt.z_star.sum():.3f} power units")
for budget in (0.5, opt.z_star.sum(), 5.0):
    p = level_for_budget(zeta, budget).power
    rate = np.log1p(p / zeta).sum()
    print(f"  spend {budget:5.2f}: rate {rate:.3f} nats, efficiency {rate / (0.5 + budget):.4f}")
