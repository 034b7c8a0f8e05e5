"""Uniqueness certificates and operator constants of the game.

The negative-gradient operator ``F`` of the game is strongly monotone with
constant ``beta`` whenever the interference matrix ``B`` is positive
definite, and Lipschitz with modulus ``L = ||A||_2``. Their ratio ``Gamma``
bounds how sensitive the EE players' feasible sets may be for the
equilibrium to be unique; ``kappa`` is the step-size constant used by the
distributed solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fractional import DEFAULT_EPS, dinkelbach
from .model import GameInstance, sigma_factors

PD_THRESHOLD = 1e-12


@dataclass(frozen=True)
class OperatorConstants:
    A: np.ndarray
    B: np.ndarray
    lambda_min_Bsym: float
    L: float
    beta: float
    Gamma: float | None
    kappa: float | None
    max_varsigma_tilde2: float

    @property
    def B_positive_definite(self) -> bool:
        return self.lambda_min_Bsym > PD_THRESHOLD


@dataclass(frozen=True)
class UniquenessReport:
    """Everything needed to judge (heuristic) uniqueness of the equilibrium.

    ``Gamma`` and ``kappa`` are ``None`` when ``B`` is not positive definite
    (``beta <= 0``), since they are then undefined. ``delta_hat`` is a
    sampled lower estimate of the Lipschitz constant of the EE players'
    optimal radiated power with respect to the profile.
    """

    A: np.ndarray
    B: np.ndarray
    lambda_min_Bsym: float
    L: float
    beta: float
    Gamma: float | None
    kappa: float | None
    delta_hat: float
    B_positive_definite: bool
    uniqueness_certified: bool
    dd_row_ok: bool
    dd_col_ok: bool
    heuristic: bool
    sample_count: int

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "lambda_min_Bsym": self.lambda_min_Bsym,
            "L": self.L,
            "beta": self.beta,
            "Gamma": self.Gamma,
            "kappa": self.kappa,
            "delta_hat": self.delta_hat,
            "B_positive_definite": self.B_positive_definite,
            "uniqueness_certified": self.uniqueness_certified,
            "dd_row_ok": self.dd_row_ok,
            "dd_col_ok": self.dd_col_ok,
            "heuristic": self.heuristic,
            "sample_count": self.sample_count,
        }


def build_A(inst: GameInstance) -> np.ndarray:
    """``A[k, i] = max_n gain2[k,i,n] gain2[k,k,n] / noise2[k,n]**2``."""
    K = inst.K
    direct = inst.gain2[np.arange(K), np.arange(K), :]
    return np.max(inst.gain2 * (direct / inst.noise2 ** 2)[:, None, :], axis=2)


def _coupling(inst: GameInstance) -> np.ndarray:
    """``max_n gain2[k,i,n] / gain2[i,i,n] * varsigma[k,i,n]`` for every pair."""
    K = inst.K
    varsigma, _ = sigma_factors(inst)
    direct = inst.gain2[np.arange(K), np.arange(K), :]  # indexed [i, n]
    num = inst.gain2 * varsigma
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(num > 0, num / direct[None, :, :], 0.0)
    return ratio.max(axis=2)


def build_B(inst: GameInstance) -> np.ndarray:
    """Unit diagonal, off-diagonal ``-max_n gain2[k,i,n]/gain2[i,i,n] * varsigma[k,i,n]``."""
    B = -_coupling(inst)
    np.fill_diagonal(B, 1.0)
    return B


def operator_constants(inst: GameInstance) -> OperatorConstants:
    """Closed-form constants: ``L``, ``beta``, ``Gamma`` and ``kappa``."""
    A = build_A(inst)
    B = build_B(inst)
    lam_min = float(np.linalg.eigvalsh(0.5 * (B + B.T)).min())
    L = math.sqrt(max(float(np.linalg.eigvalsh(A.T @ A).max()), 0.0))
    _, vt = sigma_factors(inst)
    max_vt2 = float(np.max(vt[np.isfinite(vt)] ** 2))
    beta = lam_min / max_vt2
    if lam_min > PD_THRESHOLD:
        Gamma = L / lam_min * max_vt2
        kappa = beta / (1.0 + Gamma ** -2) if Gamma > 0 else beta
    else:
        Gamma = kappa = None
    return OperatorConstants(A, B, lam_min, L, beta, Gamma, kappa, max_vt2)


def diagonal_dominance(inst: GameInstance, w=None) -> tuple[bool, bool]:
    """Weighted row and column dominance tests on ``B``'s off-diagonal part."""
    C = _coupling(inst)
    np.fill_diagonal(C, 0.0)
    w = np.ones(inst.K) if w is None else np.asarray(w, dtype=float)
    if w.shape != (inst.K,) or np.any(w <= 0):
        raise ValueError("w must be a positive vector of length K")
    row = (C @ w) / w
    col = (w @ C) / w
    return bool(np.all(row < 1)), bool(np.all(col < 1))


def sample_profile(inst: GameInstance, rng: np.random.Generator) -> np.ndarray:
    """Random feasible profile: uniform point on each budget simplex,
    scaled by a Uniform(0, 1) fraction of the budget."""
    K, N = inst.K, inst.N
    shares = rng.dirichlet(np.ones(N), size=K)
    mass = rng.uniform(0.0, 1.0, size=K) * inst.budget
    return shares * mass[:, None]


def omega(inst: GameInstance, p, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Budget for rate players; EE-optimal radiated power for EE players."""
    out = inst.budget.astype(float).copy()
    for k in inst.ee_players:
        res = dinkelbach(inst, k, p, eps=eps)
        out[k] = 1.0 / res.t_star - inst.circuit[k]
    return out


def estimate_delta(inst: GameInstance, sample_count: int, seed=None, eps: float = 1e-10) -> float:
    """Largest observed ``||omega(p) - omega(p')|| / ||p - p'||`` over random pairs."""
    ee = inst.ee_players
    if ee.size == 0:
        return 0.0
    _, D = inst.coefficients
    cross = D[ee].copy()
    cross[np.arange(ee.size), ee, :] = 0.0
    if not np.any(cross):
        return 0.0  # no EE link hears anyone, so omega is constant
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(sample_count):
        p = sample_profile(inst, rng)
        q = sample_profile(inst, rng)
        dist = np.linalg.norm(p - q)
        if dist == 0:
            continue
        best = max(best, float(np.linalg.norm(omega(inst, p, eps) - omega(inst, q, eps)) / dist))
    return best


def analyze(inst: GameInstance, sample_count: int = 200, seed=0, w=None) -> UniquenessReport:
    """Evaluate the uniqueness conditions on ``inst``.

    Certification requires ``B`` positive definite and
    ``delta_hat < 1 / Gamma``. When the game has EE players the delta test
    rests on sampling, so the report is flagged ``heuristic``.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    c = operator_constants(inst)
    delta_hat = estimate_delta(inst, sample_count, seed)
    pd = c.B_positive_definite
    certified = bool(pd and delta_hat < 1.0 / c.Gamma)
    row_ok, col_ok = diagonal_dominance(inst, w)
    return UniquenessReport(
        A=c.A, B=c.B, lambda_min_Bsym=c.lambda_min_Bsym, L=c.L, beta=c.beta,
        Gamma=c.Gamma, kappa=c.kappa, delta_hat=delta_hat,
        B_positive_definite=pd, uniqueness_certified=certified,
        dd_row_ok=row_ok, dd_col_ok=col_ok,
        heuristic=bool(inst.ee_players.size > 0), sample_count=sample_count,
    )
