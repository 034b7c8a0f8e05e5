"""Instance builders shared by the test modules."""
import numpy as np

from qvipower import GameInstance
from qvipower.analysis import analyze


def single(zeta=1.0, budget=10.0, circuit=1.0, role="EE"):
    """One link, one subchannel, unit direct gain, noise ``zeta``."""
    return GameInstance(np.ones((1, 1, 1)), [[zeta]], [budget], [circuit], (role,))


def symmetric_pair(g, role=("RATE", "RATE"), budget=1.0, circuit=1.0):
    """K=2, N=1, unit direct gains and noise, cross gain ``g``."""
    gain2 = np.array([[[1.0], [g]], [[g], [1.0]]])
    return GameInstance(gain2, np.ones((2, 1)), [budget] * 2, [circuit] * 2, role)


def random_instance(rng, K=None, N=None, cross=1.0, roles=None):
    K = int(rng.integers(1, 5)) if K is None else K
    N = int(rng.integers(1, 9)) if N is None else N
    gain2 = rng.exponential(1.0, (K, K, N))
    off = ~np.eye(K, dtype=bool)
    gain2[off] *= cross
    noise2 = rng.uniform(0.2, 2.0, (K, N))
    budget = rng.uniform(0.5, 5.0, K)
    circuit = rng.uniform(0.2, 2.0, K)
    if roles is None:
        roles = tuple(rng.choice(["RATE", "EE"], K))
    return GameInstance(gain2, noise2, budget, circuit, tuple(roles))


def weakly_coupled(rng):
    """Small mixed game with weak interference and slack EE budgets."""
    K = int(rng.integers(2, 4))
    N = int(rng.integers(2, 5))
    gain2 = rng.uniform(0.0, 0.05, (K, K, N))
    gain2[np.arange(K), np.arange(K)] = rng.uniform(0.8, 1.5, (K, N))
    role = ("EE",) + tuple(rng.choice(["EE", "RATE"], K - 1))
    return GameInstance(gain2, np.ones((K, N)), np.full(K, 2.0), np.full(K, 0.2), role)


def certified_mixed(rng, count, sample_count=100):
    """``count`` weakly coupled games whose uniqueness report certifies them."""
    out = []
    while len(out) < count:
        inst = weakly_coupled(rng)
        if analyze(inst, sample_count=sample_count, seed=0).uniqueness_certified:
            out.append(inst)
    return out


def pd_rate_game(rng, K=None, N=None):
    """All-RATE game with B positive definite (rejection sampled)."""
    from qvipower.analysis import operator_constants

    while True:
        inst = random_instance(rng, K=K, N=N, cross=0.05, roles=None)
        inst = inst.with_roles(("RATE",) * inst.K)
        if operator_constants(inst).B_positive_definite:
            return inst


def random_profile(rng, inst):
    shares = rng.dirichlet(np.ones(inst.N), size=inst.K)
    return shares * (rng.uniform(0, 1, inst.K) * inst.budget)[:, None]
