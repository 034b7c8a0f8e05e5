"""Slow, independent reference computations.

Each routine here solves a problem that the fast code solves in closed form,
but by brute force (bisection, grid or golden-section search). They exist
so that test values can be regenerated without trusting the code under test.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .model import GameInstance, effective_noise


def bisect(fun, lo: float, hi: float, tol: float = 1e-14, max_iter: int = 400) -> float:
    """Root of a decreasing function on ``[lo, hi]`` by plain bisection."""
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if fun(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def waterfill_bisection(zeta, target: float) -> np.ndarray:
    """Budget waterfilling by bisecting on the water height."""
    zeta = np.asarray(zeta, dtype=float)
    finite = np.isfinite(zeta)
    z = zeta[finite]
    if target == 0:
        return np.zeros_like(zeta)
    height = bisect(lambda h: target - np.maximum(h - z, 0.0).sum(), float(z.min()), float(z.min()) + target)
    out = np.zeros_like(zeta)
    out[finite] = np.maximum(height - z, 0.0)
    return out


def simplex_grid_projection(z, mass: float, steps: int = 40) -> np.ndarray:
    """Closest grid point of the simplex ``{x >= 0, sum x = mass}`` to ``z``.

    Exhaustive over the lattice with spacing ``mass / steps``; only sensible
    for two or three coordinates.
    """
    z = np.asarray(z, dtype=float)
    n = z.size
    best, best_d = None, math.inf
    for head in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(head) > steps:
            continue
        x = np.array(head + (steps - sum(head),), dtype=float) * (mass / steps)
        d = float(np.sum((x - z) ** 2))
        if d < best_d:
            best, best_d = x, d
    return best


def _simplex_points(n: int, steps: int):
    for head in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(head) <= steps:
            yield np.array(head + (steps - sum(head),), dtype=float) / steps


def grid_best_response(zeta, budget: float, circuit: float | None = None, steps: int = 200,
                       mass_steps: int = 200) -> tuple[np.ndarray, float]:
    """Brute-force best response of one link for one or two subchannels.

    With ``circuit=None`` the objective is the rate at full budget; otherwise
    it is the energy efficiency over every total power in ``[0, budget]``.
    Returns the best allocation and its objective value.
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.size > 2:
        raise ValueError("grid search is limited to N <= 2")
    masses = [budget] if circuit is None else np.linspace(0.0, budget, mass_steps + 1)[1:]
    best, best_val = None, -math.inf
    for mass in masses:
        for share in _simplex_points(zeta.size, steps):
            x = share * mass
            val = float(np.log1p(x / zeta).sum())
            if circuit is not None:
                val /= circuit + x.sum()
            if val > best_val:
                best, best_val = x, val
    return best, best_val


def golden_section_max(fun, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Maximizer of a unimodal function on ``[lo, hi]``."""
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - inv * (b - a), a + inv * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + inv * (b - a)
            fd = fun(d)
        else:
            b, d, fd = d, c, fc
            c = b - inv * (b - a)
            fc = fun(c)
    return 0.5 * (a + b)


def ee_optimum_golden(zeta, circuit: float, budget: float | None = None) -> tuple[float, float]:
    """Best total power and efficiency of one link by golden-section search.

    For a fixed total the best split is budget waterfilling, so the
    efficiency is a unimodal function of the total alone. The total is
    searched in ``[0, budget]`` (or a generous bracket when unbounded).
    """
    zeta = np.asarray(zeta, dtype=float)

    def ee(s):
        x = waterfill_bisection(zeta, s)
        return float(np.log1p(x / zeta).sum()) / (circuit + s)

    hi = budget if budget is not None else 1e3 * (circuit + float(np.max(zeta[np.isfinite(zeta)])))
    s = golden_section_max(ee, 0.0, hi)
    return s, ee(s)


def best_response_oracle(inst: GameInstance, k: int, p) -> np.ndarray:
    """Role-dependent best response built only from bisection and golden search."""
    zeta = effective_noise(inst, k, p)
    budget = float(inst.budget[k])
    if inst.role[k] == "RATE":
        return waterfill_bisection(zeta, budget)
    s, _ = ee_optimum_golden(zeta, float(inst.circuit[k]), budget)
    return waterfill_bisection(zeta, s)


def penalized_response_bisection(zeta, budget: float, omega: float, rho: float, alpha: float = 0.0):
    """Penalized single-link subproblem by bisection on the total power.

    The water level for total ``s`` decreases in ``s`` and the penalty price
    ``[alpha + rho (s - omega)]^+`` increases, so their difference has a
    single root. If it is still positive at the budget, the budget binds.
    Returns ``(power, price, budget_multiplier)``.
    """
    zeta = np.asarray(zeta, dtype=float)
    z = zeta[np.isfinite(zeta)]

    def level(s):
        if s == 0:
            return 1.0 / float(z.min())
        x = waterfill_bisection(z, s)
        active = x > 0
        return 1.0 / ((s + z[active].sum()) / active.sum())

    def price(s):
        return max(alpha + rho * (s - omega), 0.0)

    def gap(s):
        return level(s) - price(s)

    if gap(budget) > 0:
        s = budget
        mult = gap(budget)
    elif gap(0.0) <= 0:
        s, mult = 0.0, 0.0
    else:
        s, mult = bisect(gap, 0.0, budget), 0.0
    return waterfill_bisection(zeta, s), price(s), mult
