"""Checking whether an equilibrium is provably unique.

The report builds the coupling matrices A and B, the strong monotonicity
modulus beta, the Lipschitz modulus L and their ratio Gamma. Uniqueness
is certified when B is positive definite and the sampled sensitivity of
the EE players' optimal power stays below 1 / Gamma.
"""
import json

import numpy as np

from qvipower import GameInstance, analyze

for g in (0.2, 0.5):
    gain2 = np.array([[[1.0], [g]], [[g], [1.0]]])
    inst = GameInstance(gain2, np.ones((2, 1)), [1.0, 1.0], [1.0, 1.0], ("RATE", "RATE"))
    rep = analyze(inst)
    print(f"cross gain {g}: B offdiag {rep.B[0, 1]:+.3f}, PD {rep.B_positive_definite}, "
          f"certified {rep.uniqueness_certified}")

# a weakly coupled mixed game: three links, the first one energy efficient
rng = np.random.default_rng(7)
gain2 = rng.uniform(0.0, 0.02, (3, 3, 4))
gain2[np.arange(3), np.arange(3)] = rng.uniform(0.8, 1.5, (3, 4))
inst = GameInstance(gain2, np.ones((3, 4)), [2.0] * 3, [0.2] * 3, ("EE", "RATE", "RATE"))
rep = analyze(inst, sample_count=200, seed=0)
summary = {k: v for k, v in rep.to_dict().items() if k not in ("A", "B")}
print("\nmixed game report:")
print(json.dumps(summary, indent=2))
