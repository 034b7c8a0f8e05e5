"""Energy-efficiency best responses via Dinkelbach's method.

For fixed opponents, link ``k`` sees effective noise ``zeta`` and its
energy efficiency is ``sum(log(1 + p/zeta)) / (circuit + sum(p))``. Without
a budget the maximizer is a waterfilling allocation whose level equals the
optimal efficiency itself; Dinkelbach's iteration finds that level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .model import GameInstance, as_profile, effective_noise
from .waterfill import level_for_budget, waterfill

DEFAULT_EPS = 1e-6
DEFAULT_MAX_ITER = 200


@dataclass(frozen=True)
class DinkelbachResult:
    """Unconstrained energy-efficiency optimum of one link.

    Attributes
    ----------
    nu_star : float
        Maximum energy efficiency (nats per power unit).
    z_star : ndarray
        Allocation attaining it when the budget is ignored.
    t_star : float
        ``1 / (circuit + sum(z_star))``.
    iterations : int
        Number of parametric subproblems solved.
    nu_history : tuple of float
        Parameter values visited, starting with the initial guess.
    """

    nu_star: float
    z_star: np.ndarray
    t_star: float
    iterations: int
    nu_history: tuple

    @property
    def radiated_power(self) -> float:
        """Total radiated power ``1/t_star - circuit`` at the optimum."""
        return float(self.z_star.sum())


def _rate_from_zeta(power, zeta):
    return float(np.log1p(power / zeta).sum())


def dinkelbach_zeta(zeta, circuit: float, eps: float = DEFAULT_EPS, nu0: float | None = None,
                    max_iter: int = DEFAULT_MAX_ITER, reference_power: float | None = None) -> DinkelbachResult:
    """Dinkelbach's method on a single link given its effective noise.

    Parameters
    ----------
    zeta : array_like
        Effective noise per subchannel (``inf`` marks dead subchannels).
    circuit : float
        Static circuit power.
    eps : float
        Stop once ``R(z) - nu (circuit + sum z) < eps`` for ``z = wf(nu)``.
    nu0 : float, optional
        Initial parameter. Defaults to the efficiency of a uniform split of
        ``reference_power`` (or of ``circuit`` when that is not given).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    zeta = np.asarray(zeta, dtype=float)
    finite = np.isfinite(zeta)
    if not finite.any():
        raise ValueError("no usable subchannel")
    zmin = float(zeta[finite].min())
    # positive lower bound on the optimum: all of `circuit` on the best subchannel
    floor_nu = np.log1p(circuit / zmin) / (2.0 * circuit)
    if nu0 is None:
        total = circuit if reference_power is None else reference_power
        uniform = np.where(finite, total / finite.sum(), 0.0)
        nu0 = _rate_from_zeta(uniform, zeta) / (circuit + uniform.sum())
    if not nu0 > 0:
        nu0 = floor_nu
    nu = float(nu0)
    history = [nu]
    for it in range(1, max_iter + 1):
        z = waterfill(zeta, nu)
        rate = _rate_from_zeta(z, zeta)
        cost = circuit + z.sum()
        residual = rate - nu * cost
        nu_next = rate / cost
        if rate == 0.0:
            # nu above 1/zmin shuts every subchannel; restart from a valid lower bound
            nu_next = floor_nu
        history.append(nu_next)
        if rate > 0.0 and abs(residual) < eps:
            z_star = waterfill(zeta, nu_next)
            t_star = 1.0 / (circuit + z_star.sum())
            return DinkelbachResult(nu_next, z_star, t_star, it, tuple(history))
        nu = nu_next
    raise NonConvergence(f"Dinkelbach did not converge in {max_iter} iterations", max_iter)


def dinkelbach(inst: GameInstance, k: int, p, eps: float = DEFAULT_EPS, nu0: float | None = None,
               max_iter: int = DEFAULT_MAX_ITER) -> DinkelbachResult:
    """Unconstrained EE optimum of link ``k`` against the opponents in ``p``.

    ``p[k]`` is ignored. The default starting point is the efficiency of the
    uniform allocation of the link's budget.
    """
    zeta = effective_noise(inst, k, p)
    return dinkelbach_zeta(zeta, float(inst.circuit[k]), eps=eps, nu0=nu0, max_iter=max_iter,
                           reference_power=float(inst.budget[k]))


def ee_target(budget: float, circuit: float, result: DinkelbachResult) -> float:
    """Total power of the EE best response: ``min(budget, 1/t* - circuit)``."""
    return min(budget, max(0.0, 1.0 / result.t_star - circuit))


def best_response_ee(inst: GameInstance, k: int, p, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Energy-efficiency maximizing allocation of link ``k`` within its budget.

    Waterfilling whose total is the smaller of the budget and the radiated
    power at the unconstrained optimum.
    """
    zeta = effective_noise(inst, k, p)
    res = dinkelbach_zeta(zeta, float(inst.circuit[k]), eps=eps, reference_power=float(inst.budget[k]))
    target = ee_target(float(inst.budget[k]), float(inst.circuit[k]), res)
    if target < inst.budget[k]:
        return res.z_star.copy()
    return level_for_budget(zeta, target).power


def g_constraint(inst: GameInstance, k: int, p, eps: float = DEFAULT_EPS) -> float:
    """Excess of link ``k``'s power over its EE-optimal radiated power.

    Negative when the link transmits less than its unconstrained EE optimum.
    """
    p = as_profile(inst, p)
    res = dinkelbach(inst, k, p, eps=eps)
    return float(p[k].sum() - (1.0 / res.t_star - inst.circuit[k]))
