"""Problem datum and payoff evaluations for the power-allocation game.

A game is ``K`` transmitter/receiver links sharing ``N`` parallel Gaussian
subchannels. Link ``k`` either maximizes its rate (role ``"RATE"``) or its
energy efficiency (role ``"EE"``). Power profiles are arrays of shape
``(K, N)``; ``p[k]`` is the allocation of link ``k``.

All rates are in nats (natural logarithm).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateChannel, InvalidInstance

RATE = "RATE"
EE = "EE"
ROLES = (RATE, EE)


class DerivedCoefficients(NamedTuple):
    """Normalized noise ``xi[k, n]`` and coupling ``D[k, i, n]``."""

    xi: np.ndarray
    D: np.ndarray


def _as_float_array(value, name, shape):
    try:
        arr = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInstance(name, f"not numeric ({exc})") from None
    if arr.shape != shape:
        raise InvalidInstance(name, f"expected shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInstance(name, "contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GameInstance:
    """Full datum of a heterogeneous power-allocation game.

    Parameters
    ----------
    gain2 : array_like, shape (K, K, N)
        ``gain2[k, i, n]`` is the squared channel magnitude from
        transmitter ``i`` to receiver ``k`` on subchannel ``n``.
    noise2 : array_like, shape (K, N)
        Noise variance at each receiver and subchannel (> 0).
    budget : array_like, shape (K,)
        Total transmit power available to each link (> 0).
    circuit : array_like, shape (K,)
        Static circuit power of each link (> 0).
    role : sequence of {"RATE", "EE"}
        Objective of each link.
    """

    gain2: np.ndarray
    noise2: np.ndarray
    budget: np.ndarray
    circuit: np.ndarray
    role: tuple = field(default=())

    def __post_init__(self):
        try:
            g = np.asarray(self.gain2, dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidInstance("gain2", f"not numeric ({exc})") from None
        if g.ndim != 3 or g.shape[0] != g.shape[1]:
            raise InvalidInstance("gain2", f"expected shape (K, K, N), got {np.shape(g)}")
        K, _, N = g.shape
        if K < 1 or N < 1:
            raise InvalidInstance("gain2", "K and N must be positive")
        gain2 = _as_float_array(g, "gain2", (K, K, N))
        if np.any(gain2 < 0):
            raise InvalidInstance("gain2", "gains must be nonnegative")
        noise2 = _as_float_array(self.noise2, "noise2", (K, N))
        if np.any(noise2 <= 0):
            raise InvalidInstance("noise2", "noise variances must be strictly positive")
        budget = _as_float_array(self.budget, "budget", (K,))
        if np.any(budget <= 0):
            raise InvalidInstance("budget", "power budgets must be strictly positive")
        circuit = _as_float_array(self.circuit, "circuit", (K,))
        if np.any(circuit <= 0):
            raise InvalidInstance("circuit", "circuit powers must be strictly positive")
        role = tuple(self.role) if len(self.role) else (RATE,) * K
        if len(role) != K:
            raise InvalidInstance("role", f"expected {K} entries, got {len(role)}")
        bad = [r for r in role if r not in ROLES]
        if bad:
            raise InvalidInstance("role", f"unknown role(s) {bad}; use RATE or EE")
        direct = gain2[np.arange(K), np.arange(K), :]
        dead = np.flatnonzero(~np.any(direct > 0, axis=1))
        if dead.size:
            raise DegenerateChannel("gain2", f"player(s) {dead.tolist()} have zero direct gain on every subchannel")
        for name, value in (("gain2", gain2), ("noise2", noise2), ("budget", budget),
                            ("circuit", circuit), ("role", role)):
            object.__setattr__(self, name, value)

    @property
    def K(self) -> int:
        return self.gain2.shape[0]

    @property
    def N(self) -> int:
        return self.gain2.shape[2]

    @cached_property
    def is_ee(self) -> np.ndarray:
        return np.array([r == EE for r in self.role])

    @cached_property
    def ee_players(self) -> np.ndarray:
        return np.flatnonzero(self.is_ee)

    @cached_property
    def coefficients(self) -> DerivedCoefficients:
        return derive_coefficients(self)

    def with_roles(self, role: Sequence[str]) -> "GameInstance":
        return GameInstance(self.gain2, self.noise2, self.budget, self.circuit, tuple(role))

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "N": self.N,
            "gain2": self.gain2.tolist(),
            "noise2": self.noise2.tolist(),
            "budget": self.budget.tolist(),
            "circuit": self.circuit.tolist(),
            "role": list(self.role),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GameInstance":
        if not isinstance(doc, dict):
            raise InvalidInstance("<root>", "expected a JSON object")
        for key in ("K", "N", "gain2", "noise2", "budget", "circuit", "role"):
            if key not in doc:
                raise InvalidInstance(key, "missing field")
        K, N = doc["K"], doc["N"]
        for key, val in (("K", K), ("N", N)):
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                raise InvalidInstance(key, "must be a positive integer")
        try:
            gain2 = np.array(doc["gain2"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidInstance("gain2", f"not numeric ({exc})") from None
        if gain2.shape != (K, K, N):
            raise InvalidInstance("gain2", f"expected shape {(K, K, N)}, got {gain2.shape}")
        if not isinstance(doc["role"], list):
            raise InvalidInstance("role", "must be a list")
        return cls(gain2, doc["noise2"], doc["budget"], doc["circuit"], tuple(doc["role"]))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "GameInstance":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidInstance("<json>", str(exc)) from None
        return cls.from_dict(doc)


def derive_coefficients(inst: GameInstance) -> DerivedCoefficients:
    """Normalize noise and cross gains by the direct gain of each receiver.

    ``xi[k, n] = noise2[k, n] / gain2[k, k, n]`` and
    ``D[k, i, n] = gain2[k, i, n] / gain2[k, k, n]``. Subchannels with a
    zero direct gain get ``xi = inf`` and a zero coupling row, so they never
    receive power.
    """
    K = inst.K
    direct = inst.gain2[np.arange(K), np.arange(K), :]  # (K, N)
    alive = direct > 0
    safe = np.where(alive, direct, 1.0)
    xi = np.where(alive, inst.noise2 / safe, np.inf)
    D = np.where(alive[:, None, :], inst.gain2 / safe[:, None, :], 0.0)
    D[np.arange(K), np.arange(K), :] = 1.0
    return DerivedCoefficients(xi, D)


def as_profile(inst: GameInstance, p) -> np.ndarray:
    """Reshape a stacked or ``(K, N)`` power vector to ``(K, N)``."""
    arr = np.asarray(p, dtype=float)
    if arr.shape == (inst.K * inst.N,):
        arr = arr.reshape(inst.K, inst.N)
    if arr.shape != (inst.K, inst.N):
        raise ValueError(f"power profile must have shape {(inst.K, inst.N)}, got {arr.shape}")
    return arr


def uniform_profile(inst: GameInstance) -> np.ndarray:
    """Each link spreads its full budget evenly over the subchannels."""
    return np.repeat((inst.budget / inst.N)[:, None], inst.N, axis=1)


def is_feasible(inst: GameInstance, p, tol: float = 1e-9) -> bool:
    p = as_profile(inst, p)
    return bool(np.all(p >= -tol) and np.all(p.sum(axis=1) <= inst.budget + tol))


def interference(inst: GameInstance, p) -> np.ndarray:
    """Received noise plus interference ``noise2[k,n] + sum_{i!=k} gain2[k,i,n] p[i,n]``."""
    p = as_profile(inst, p)
    total = np.einsum("kin,in->kn", inst.gain2, p)
    K = inst.K
    own = inst.gain2[np.arange(K), np.arange(K), :] * p
    return inst.noise2 + total - own


def effective_noise(inst: GameInstance, k: int, p) -> np.ndarray:
    """Interference-plus-noise of link ``k`` normalized by its direct gain."""
    p = as_profile(inst, p)
    xi, D = inst.coefficients
    coupled = D[k] * p
    coupled[k] = 0.0
    return xi[k] + coupled.sum(axis=0)


def rates(inst: GameInstance, p) -> np.ndarray:
    """Achievable rate of every link, in nats."""
    p = as_profile(inst, p)
    K = inst.K
    direct = inst.gain2[np.arange(K), np.arange(K), :]
    sinr = direct * p / interference(inst, p)
    return np.log1p(sinr).sum(axis=1)


def rate(inst: GameInstance, k: int, p) -> float:
    p = as_profile(inst, p)
    sinr = inst.gain2[k, k] * p[k] / interference(inst, p)[k]
    return float(np.log1p(sinr).sum())


def energy_efficiencies(inst: GameInstance, p) -> np.ndarray:
    """Rate per unit of consumed power ``R_k / (circuit_k + sum_n p_k(n))``."""
    p = as_profile(inst, p)
    return rates(inst, p) / (inst.circuit + p.sum(axis=1))


def energy_efficiency(inst: GameInstance, k: int, p) -> float:
    p = as_profile(inst, p)
    return rate(inst, k, p) / (inst.circuit[k] + p[k].sum())


def mapping_F(inst: GameInstance, p) -> np.ndarray:
    """Stacked negative rate gradients, length ``K * N``.

    Entry ``(k, n)`` is ``-1 / (xi[k, n] + sum_i D[k, i, n] p[i, n])``.
    """
    p = as_profile(inst, p)
    xi, D = inst.coefficients
    s = xi + np.einsum("kin,in->kn", D, p)
    return (-1.0 / s).ravel()


def sigma_factors(inst: GameInstance):
    """Interference factors used by the uniqueness certificates.

    Returns
    -------
    varsigma : ndarray, shape (K, K, N)
        ``(noise2[i, n] + sum_l gain2[i, l, n] budget[l]) / noise2[k, n]``
        indexed ``[k, i, n]``.
    varsigma_tilde : ndarray, shape (K, N)
        ``xi[k, n] + sum_i D[k, i, n] budget[i]``, the sum including
        ``i = k``.
    """
    full = inst.noise2 + np.einsum("iln,l->in", inst.gain2, inst.budget)  # (K, N) indexed [i, n]
    varsigma = full[None, :, :] / inst.noise2[:, None, :]
    xi, D = inst.coefficients
    varsigma_tilde = xi + np.einsum("kin,i->kn", D, inst.budget)
    return varsigma, varsigma_tilde
