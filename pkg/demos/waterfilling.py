"""Waterfilling and the simplex projection.

A rate-maximizing link pours its power budget over subchannels like water
over an uneven floor: the floor height on subchannel n is the effective
noise zeta[n] and every wet subchannel ends at the same water level.
The same allocation is the Euclidean projection of -zeta onto the
budget simplex, which this script checks numerically.
"""
import numpy as np

from qvipower import level_for_budget, project_simplex, waterfill

zeta = np.array([0.2, 0.5, 1.0, 3.0])
budget = 1.5

res = level_for_budget(zeta, budget)
print(f"floor (effective noise): {zeta}")
print(f"budget {budget} -> water height 1/level = {1 / res.level:.4f}")
print(f"allocation: {np.round(res.power, 4)}  (sum {res.power.sum():.4f})")
print("the worst subchannel stays dry:", res.power[-1] == 0.0)

# a fixed level instead of a budget: free waterfilling
print("free fill at level 1.0:", waterfill(zeta, 1.0))

proj = project_simplex(-zeta, budget)
print(f"projection of -zeta onto the budget simplex: {np.round(proj, 4)}")
print(f"max gap between the two: {np.max(np.abs(proj - res.power)):.1e}")
