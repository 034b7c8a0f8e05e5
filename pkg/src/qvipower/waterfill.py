"""Waterfilling, exact water-level search and simplex projection."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import EmptySupport, InvalidLevel
from .model import GameInstance, effective_noise


class WaterfillResult(NamedTuple):
    """Power vector, the multiplier that produced it, and whether the
    requested total was met."""

    power: np.ndarray
    level: float
    active_budget: bool


def waterfill(zeta, level: float) -> np.ndarray:
    """Return ``max(0, 1/level - zeta)`` elementwise.

    Infinite entries of ``zeta`` always get zero power.
    """
    if not level > 0:
        raise InvalidLevel(f"water level must be > 0, got {level!r}")
    zeta = np.asarray(zeta, dtype=float)
    return np.maximum(1.0 / level - zeta, 0.0)


def level_for_budget(zeta, target: float) -> WaterfillResult:
    """Find the level whose waterfilling allocation sums to ``target``.

    Uses the sort-based piecewise solution: with the ``m`` smallest entries
    active, the water height is ``(target + sum of those entries) / m``; the
    active set is the largest ``m`` whose height clears the ``m``-th entry.
    """
    zeta = np.asarray(zeta, dtype=float)
    if target < 0:
        raise ValueError(f"target power must be >= 0, got {target!r}")
    finite = np.isfinite(zeta)
    dense = bool(finite.all())
    if not dense and not finite.any():
        raise EmptySupport("every subchannel has infinite effective noise")
    z = np.sort(zeta if dense else zeta[finite])
    if target == 0:
        return WaterfillResult(np.zeros_like(zeta), 1.0 / z[0], True)
    heights = (target + np.cumsum(z)) / np.arange(1, z.size + 1)
    # the first entry always qualifies; roundoff can hide that when target << z
    active = np.flatnonzero(heights > z)
    m = int(active[-1]) if active.size else 0
    height = float(heights[m])
    # height - inf = -inf, clipped to zero
    power = np.maximum(height - zeta, 0.0)
    return WaterfillResult(power, 1.0 / height, True)


def project_simplex(z, mass: float = 1.0) -> np.ndarray:
    """Euclidean projection of ``z`` onto ``{x >= 0, sum(x) = mass}``.

    Entries equal to ``-inf`` are pinned to zero. Uses the sort/threshold
    algorithm: ``x = max(z + shift, 0)`` with ``shift`` fixed by the mass.
    """
    z = np.asarray(z, dtype=float)
    if mass < 0:
        raise ValueError(f"mass must be >= 0, got {mass!r}")
    out = np.zeros_like(z)
    finite = np.isfinite(z)
    if mass == 0 or not finite.any():
        return out
    v = z[finite]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - mass
    idx = np.arange(1, u.size + 1)
    positive = np.flatnonzero(u - css / idx > 0)
    rho = positive[-1] if positive.size else 0
    shift = -css[rho] / (rho + 1.0)
    out[finite] = np.maximum(v + shift, 0.0)
    return out


def best_response_rate(inst: GameInstance, k: int, p) -> np.ndarray:
    """Rate-maximizing allocation of link ``k`` against the others in ``p``.

    Waterfilling over the effective noise with the whole budget spent. The
    entries ``p[k]`` of the profile are ignored.
    """
    zeta = effective_noise(inst, k, p)
    return level_for_budget(zeta, float(inst.budget[k])).power
