"""Nash-equilibrium solvers for the heterogeneous game.

Two algorithms are provided:

* :func:`spa_solve`, a sequential penalty method. Each outer iteration
  solves a penalized game (budget constraint kept, EE constraint moved into
  a quadratic penalty with weight ``rho``) by Gauss-Seidel best responses;
  ``rho`` grows geometrically until the EE constraint violation vanishes.
* :func:`ncp_solve`, a distributed two-layer method. The inner layer is
  iterative waterfilling with per-link prices ``gamma``
  (:func:`iwfp`); the outer layer moves each EE link's price along the gap
  between its EE-optimal radiated power and its actual power.

Both return the final profile together with a :class:`SolverTrace`.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import estimate_delta, operator_constants
from .errors import InvalidPrice, NonConvergence
from .fractional import DEFAULT_EPS, dinkelbach_zeta
from .model import RATE, GameInstance, as_profile, uniform_profile
from .waterfill import level_for_budget, waterfill, best_response_rate

log = logging.getLogger(__name__)

STEP_RULES = ("kappa", "adaptive", "fixed")


@dataclass
class SolverConfig:
    """Tolerances, caps and schedules shared by both solvers.

    ``max_outer=None`` selects the solver default (500 for the distributed
    solver, 60 for the penalty method).

    ``step_rule="kappa"`` uses ``tau = 2 kappa`` when ``B`` is positive
    definite and a sampled uniqueness check (``certify_samples`` pairs)
    passes; otherwise it falls back to ``"adaptive"``, a safeguarded
    Barzilai-Borwein step starting from ``step`` (default 1e-2).
    ``"fixed"`` uses ``step`` throughout. Under every rule the step is
    halved once ``flip_patience`` sign changes of ``Phi`` pass without a
    new best residual.
    """

    outer_eps: float = 1e-6
    inner_eps: float = 1e-9
    dinkelbach_eps: float = DEFAULT_EPS
    max_outer: int | None = None
    max_inner: int = 10_000
    rho0: float = 1.0
    rho_growth: float = 5.0
    alpha: float = 0.0
    step_rule: str = "kappa"
    step: float | None = None
    flip_patience: int = 3
    certify_samples: int = 32
    seed: int = 0

    def __post_init__(self):
        for name in ("outer_eps", "inner_eps", "dinkelbach_eps", "rho0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.rho_growth > 1:
            raise ValueError("rho_growth must exceed 1 so the penalty tends to infinity")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if self.step_rule == "fixed" and not (self.step is not None and self.step > 0):
            raise ValueError("the fixed step rule needs a positive step")
        if self.max_inner < 1 or (self.max_outer is not None and self.max_outer < 1):
            raise ValueError("iteration caps must be positive")
        if self.certify_samples < 1 or self.flip_patience < 1:
            raise ValueError("certify_samples and flip_patience must be positive")


@dataclass
class IterationRecord:
    iteration: int
    power: np.ndarray
    rate: np.ndarray
    ee: np.ndarray
    price: np.ndarray
    phi: np.ndarray
    ne_residual: float
    merit: float
    inner_sweeps: int
    step: float = math.nan
    rho: float = math.nan
    budget_multiplier: np.ndarray | None = None


@dataclass
class SolverTrace:
    """Per-outer-iteration history of a solver run.

    For the distributed solver ``price`` holds ``gamma`` and ``phi`` holds
    ``Phi(gamma)``. For the penalty method ``price`` holds the penalty price
    ``[alpha + rho g]^+`` and ``phi`` holds ``-g`` (same sign convention).
    """

    solver: str
    roles: tuple
    records: list = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_residual(self) -> float:
        return self.records[-1].ne_residual if self.records else math.nan

    @property
    def final_power(self) -> np.ndarray | None:
        return self.records[-1].power if self.records else None

    def summary(self) -> dict:
        return {
            "solver": self.solver,
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "message": self.message,
        }

    def csv_rows(self):
        yield ("iter", "k", "sum_power_k", "rate_k", "ee_k", "gamma_k", "phi_k", "residual")
        for rec in self.records:
            for k in range(rec.power.shape[0]):
                yield (rec.iteration, k, _fmt(rec.power[k].sum()), _fmt(rec.rate[k]), _fmt(rec.ee[k]),
                       _fmt(rec.price[k]), _fmt(rec.phi[k]), _fmt(rec.ne_residual))

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.csv_rows())
        return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x))


def best_response(inst: GameInstance, k: int, p, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Best response of link ``k`` according to its role."""
    from .fractional import best_response_ee

    if inst.role[k] == RATE:
        return best_response_rate(inst, k, p)
    return best_response_ee(inst, k, p, eps=eps)


def ne_residual(inst: GameInstance, p, eps: float = DEFAULT_EPS) -> float:
    """``max_k ||p_k - BR_k(p_-k)||_inf``; zero exactly at an equilibrium."""
    p = as_profile(inst, p)
    return max(float(np.max(np.abs(p[k] - best_response(inst, k, p, eps)))) for k in range(inst.K))


class _Loop:
    """Per-run constants the solver loops touch on every sweep."""

    def __init__(self, inst: GameInstance):
        xi, D = inst.coefficients
        self.xi = xi
        self.cross = D.copy()
        self.cross[np.arange(inst.K), np.arange(inst.K), :] = 0.0
        self.K = inst.K
        self.budget = [float(b) for b in inst.budget]
        self.circuit = [float(c) for c in inst.circuit]
        self.is_rate = [r == RATE for r in inst.role]
        self.ee = inst.ee_players
        # without cross coupling one sweep is already the fixed point
        self.uncoupled = not np.any(self.cross)

    def zeta(self, k, p):
        if self.uncoupled:
            return self.xi[k]
        return self.xi[k] + (self.cross[k] * p).sum(axis=0)


def _residual_from_omega(lp: _Loop, p, omega, optima=None):
    """NE residual reusing already computed EE-optimal radiated powers.

    ``optima[k]``, when given, is link ``k``'s unconstrained EE optimum and
    is its best response whenever that fits in the budget.
    """
    worst = 0.0
    for k in range(lp.K):
        if optima is not None and k in optima and omega[k] < lp.budget[k]:
            br = optima[k]
        else:
            target = lp.budget[k] if lp.is_rate[k] else min(lp.budget[k], max(omega[k], 0.0))
            br = level_for_budget(lp.zeta(k, p), target).power
        worst = max(worst, float(np.abs(p[k] - br).max()))
    return worst


def _omega(lp: _Loop, p, eps, nu_cache, optima=None):
    """Budget for RATE links, EE-optimal radiated power for EE links.

    Fills ``optima`` (if given) with each EE link's optimal allocation.
    """
    omega = np.array(lp.budget)
    for k in lp.ee:
        res = dinkelbach_zeta(lp.zeta(k, p), lp.circuit[k], eps=eps,
                              nu0=nu_cache.get(k), reference_power=lp.budget[k])
        nu_cache[k] = res.nu_star
        omega[k] = 1.0 / res.t_star - lp.circuit[k]
        if optima is not None:
            optima[k] = res.z_star
    return omega


def _fill_payoffs(inst, records):
    """Rates and EE of every recorded profile in one vectorized pass."""
    if not records:
        return
    P = np.stack([r.power for r in records])
    K = inst.K
    direct = inst.gain2[np.arange(K), np.arange(K), :]
    total = np.einsum("kin,tin->tkn", inst.gain2, P)
    sinr = direct * P / (inst.noise2 + total - direct * P)
    r = np.log1p(sinr).sum(axis=2)
    e = r / (inst.circuit + P.sum(axis=2))
    for rec, rk, ek in zip(records, r, e):
        rec.rate, rec.ee = rk, ek


# -- iterative waterfilling with pricing ------------------------------------

def _iwfp(lp: _Loop, gamma, p0, inner_eps, max_sweeps):
    p = np.array(p0, dtype=float)
    chi = np.zeros(lp.K)
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for k in range(lp.K):
            zeta = lp.zeta(k, p)
            budget = lp.budget[k]
            new = None
            if gamma[k] > 0:
                free = waterfill(zeta, gamma[k])
                if free.sum() < budget:
                    new, chi[k] = free, 0.0
            if new is None:
                res = level_for_budget(zeta, budget)
                new, chi[k] = res.power, max(res.level - gamma[k], 0.0)
            delta = max(delta, float(np.max(np.abs(new - p[k]))))
            p[k] = new
        if delta < inner_eps or lp.uncoupled:
            return p, chi, sweep
    raise NonConvergence(f"IWFP did not converge in {max_sweeps} sweeps", max_sweeps)


def _check_prices(inst, gamma):
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != (inst.K,):
        raise InvalidPrice(f"gamma must have length {inst.K}")
    if np.any(gamma < 0):
        raise InvalidPrice("prices must be nonnegative")
    if np.any(gamma[~inst.is_ee] != 0):
        raise InvalidPrice("rate-maximizing links must have zero price")
    return gamma


def iwfp(inst: GameInstance, gamma, p0=None, cfg: SolverConfig | None = None) -> np.ndarray:
    """Solve the priced game by sequential waterfilling sweeps.

    Link ``k`` waterfills at level ``gamma[k]``; if that would exceed its
    budget the level is raised (by ``chi_k``) until the budget is met
    exactly. Sweeps run in ascending link order until no entry moves by
    more than ``cfg.inner_eps``.

    Raises
    ------
    NonConvergence
        If ``cfg.max_inner`` sweeps are exhausted.
    """
    cfg = cfg or SolverConfig()
    gamma = _check_prices(inst, gamma)
    p0 = uniform_profile(inst) if p0 is None else p0
    p, _, _ = _iwfp(_Loop(inst), gamma, as_profile(inst, p0), cfg.inner_eps, cfg.max_inner)
    return p


# -- distributed NCP solver --------------------------------------------------

def initial_step(inst: GameInstance, cfg: SolverConfig) -> tuple[float, str]:
    """Starting outer step and the rule actually in force."""
    if cfg.step_rule == "fixed":
        return float(cfg.step), "fixed"
    if cfg.step_rule == "kappa":
        c = operator_constants(inst)
        if c.kappa is None:
            log.info("B is not positive definite; kappa undefined, using the adaptive step rule")
        else:
            # kappa is only conjectured when the uniqueness conditions hold; a sampled
            # delta at or above 1/Gamma already refutes them
            delta = estimate_delta(inst, cfg.certify_samples, cfg.seed)
            if delta < 1.0 / c.Gamma:
                return 2.0 * c.kappa, "kappa"
            log.info("uniqueness conditions fail (delta_hat=%.3g >= 1/Gamma=%.3g); using the adaptive step rule",
                     delta, 1.0 / c.Gamma)
    return (cfg.step if cfg.step else 1e-2), "adaptive"


def ncp_solve(inst: GameInstance, cfg: SolverConfig | None = None, p0=None):
    """Distributed equilibrium computation through prices on EE links.

    Each outer iteration solves the priced game with :func:`iwfp` (warm
    started), computes every EE link's optimal radiated power with
    Dinkelbach's method, forms ``Phi_k = omega_k - sum(p_k)`` and moves
    ``gamma_k <- [gamma_k - tau Phi_k]^+``. The run stops once
    ``max_k |gamma_k Phi_k| <= outer_eps`` and ``Phi >= -outer_eps``.

    Returns
    -------
    p : ndarray, shape (K, N)
    trace : SolverTrace
        ``trace.converged`` is False when the outer cap is hit or the inner
        layer fails; the last computed profile is still returned.
    """
    cfg = cfg or SolverConfig()
    max_outer = cfg.max_outer if cfg.max_outer is not None else 500
    trace = SolverTrace("ncp", inst.role)
    p = uniform_profile(inst) if p0 is None else as_profile(inst, p0).copy()
    gamma = np.zeros(inst.K)
    ee = inst.ee_players
    tau, rule = initial_step(inst, cfg)
    lp = _Loop(inst)
    tau_cap = math.inf
    nu_cache: dict = {}
    flips = 0
    best_natural = math.inf
    prev = None
    for j in range(max_outer + 1):
        try:
            p, chi, sweeps = _iwfp(lp, gamma, p, cfg.inner_eps, cfg.max_inner)
        except NonConvergence as exc:
            trace.message = f"inner layer failed at outer iteration {j}: {exc}"
            break
        optima: dict = {}
        omega = _omega(lp, p, cfg.dinkelbach_eps, nu_cache, optima)
        phi = np.zeros(inst.K)
        phi[ee] = omega[ee] - p[ee].sum(axis=1)
        merit = float(np.max(np.abs(gamma * phi))) if ee.size else 0.0
        feasible = bool(phi[ee].min() >= -cfg.outer_eps) if ee.size else True
        trace.records.append(IterationRecord(
            iteration=j, power=p.copy(), rate=None, ee=None,
            price=gamma.copy(), phi=phi.copy(), ne_residual=_residual_from_omega(lp, p, omega, optima),
            merit=merit, inner_sweeps=sweeps, step=tau, budget_multiplier=chi.copy()))
        if merit <= cfg.outer_eps and feasible:
            trace.converged = True
            trace.message = f"converged after {j} price updates"
            break
        if j == max_outer:
            trace.message = f"outer cap {max_outer} reached"
            break
        # Overshoot safeguard on the natural residual |min(gamma, Phi)| (|gamma*Phi| itself
        # grows while gamma leaves 0). Sign flips of Phi without a new best residual mean the
        # prices oscillate; a monotone ramp of gamma never flips and is left alone.
        natural = float(np.max(np.abs(np.minimum(gamma[ee], phi[ee]))))
        if natural < best_natural:
            best_natural, flips = natural, 0
        elif prev is not None and np.any(np.sign(phi[ee]) != np.sign(prev[1][ee])):
            flips += 1
        if flips >= cfg.flip_patience:
            tau_cap = tau = 0.5 * tau
            flips = 0
        elif rule == "adaptive" and prev is not None:
            dg, dphi = gamma - prev[0], phi - prev[1]
            curv = float(dg @ dphi)
            if curv > 0:
                tau = min(curv / float(dphi @ dphi), 2.0 * tau, tau_cap)
        prev = (gamma.copy(), phi.copy())
        gamma[ee] = np.maximum(gamma[ee] - tau * phi[ee], 0.0)
    _fill_payoffs(inst, trace.records)
    return p, trace


# -- sequential penalty approach ---------------------------------------------

def penalized_response(zeta, budget: float, omega: float, rho: float, alpha: float = 0.0):
    """Exact per-link solution of the penalized subproblem.

    Finds the total power ``s`` where the waterfilling level for ``s``
    equals the penalty price ``[alpha + rho (s - omega)]^+``. Both sides are
    piecewise smooth in ``s``; on the segment with ``m`` active subchannels
    the balance reduces to a quadratic solved in closed form. If the budget
    is reached first, the budget multiplier absorbs the difference.

    Returns
    -------
    power : ndarray
    price : float
        ``[alpha + rho (s - omega)]^+``.
    budget_multiplier : float
        Nonnegative; positive only when ``sum(power) == budget``.
    """
    zeta = np.asarray(zeta, dtype=float)
    shift = omega - alpha / rho
    z = np.sort(zeta[np.isfinite(zeta)])
    m = np.arange(1, z.size + 1)
    S = np.cumsum(z)
    starts = (m - 1) * z - np.concatenate(([0.0], S[:-1]))
    r_start = 1.0 / z - rho * np.maximum(starts - shift, 0.0)
    live = np.flatnonzero(r_start > 0)
    if live.size == 0:
        s = 0.0
    else:
        i = live[-1]
        mi, Si = m[i], S[i]
        s = 0.5 * ((shift - Si) + math.sqrt((Si + shift) ** 2 + 4.0 * mi / rho))
        s = max(s, 0.0)
    s = min(s, budget)
    res = level_for_budget(zeta, s)
    price = max(rho * (s - shift), 0.0)
    mult = max(res.level - price, 0.0) if s >= budget else 0.0
    return res.power, price, mult


def spa_solve(inst: GameInstance, cfg: SolverConfig | None = None, p0=None):
    """Sequential penalty method for the heterogeneous game.

    For ``rho = rho0 * rho_growth**j`` the penalized game is solved by
    Gauss-Seidel sweeps: RATE links waterfill their full budget, EE links
    call :func:`penalized_response` with their current EE-optimal radiated
    power. The run stops once every EE link's excess power
    ``[g_k]^+`` is below ``outer_eps``.

    Returns
    -------
    p : ndarray, shape (K, N)
    trace : SolverTrace
    """
    cfg = cfg or SolverConfig()
    max_outer = cfg.max_outer if cfg.max_outer is not None else 60
    trace = SolverTrace("spa", inst.role)
    p = uniform_profile(inst) if p0 is None else as_profile(inst, p0).copy()
    K = inst.K
    lp = _Loop(inst)
    nu_cache: dict = {}
    price = np.zeros(K)
    mult = np.zeros(K)
    for j in range(max_outer):
        rho = cfg.rho0 * cfg.rho_growth ** j
        for sweep in range(1, cfg.max_inner + 1):
            delta = 0.0
            for k in range(K):
                zeta = lp.zeta(k, p)
                budget = lp.budget[k]
                if lp.is_rate[k]:
                    res = level_for_budget(zeta, budget)
                    new, price[k], mult[k] = res.power, 0.0, res.level
                else:
                    dk = dinkelbach_zeta(zeta, lp.circuit[k], eps=cfg.dinkelbach_eps,
                                         nu0=nu_cache.get(k), reference_power=budget)
                    nu_cache[k] = dk.nu_star
                    omega_k = 1.0 / dk.t_star - lp.circuit[k]
                    new, price[k], mult[k] = penalized_response(zeta, budget, omega_k, rho, cfg.alpha)
                delta = max(delta, float(np.max(np.abs(new - p[k]))))
                p[k] = new
            if delta < cfg.inner_eps:
                break
        else:
            trace.message = f"inner sweeps did not converge at outer iteration {j}"
            break
        optima: dict = {}
        omega = _omega(lp, p, cfg.dinkelbach_eps, nu_cache, optima)
        g = np.zeros(K)
        g[inst.ee_players] = p[inst.ee_players].sum(axis=1) - omega[inst.ee_players]
        violation = float(np.max(np.maximum(g, 0.0)))
        trace.records.append(IterationRecord(
            iteration=j, power=p.copy(), rate=None, ee=None,
            price=price.copy(), phi=-g, ne_residual=_residual_from_omega(lp, p, omega, optima),
            merit=violation, inner_sweeps=sweep, rho=rho, budget_multiplier=mult.copy()))
        if violation < cfg.outer_eps:
            trace.converged = True
            trace.message = f"converged at rho={rho:g}"
            break
    else:
        trace.message = f"outer cap {max_outer} reached"
    _fill_payoffs(inst, trace.records)
    return p, trace
