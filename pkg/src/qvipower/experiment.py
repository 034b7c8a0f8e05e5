"""Monte Carlo experiments on random Rayleigh-fading instances.

Two experiments are provided:

* :func:`run_convergence_probability` sweeps the average SIR and, per trial,
  runs both solvers; the distributed solver counts as converged when it
  stops and lands within a relative tolerance of the penalty solver's
  profile.
* :func:`run_dynamics` follows one distributed run at a fixed SIR and
  compares each link's efficiency and rate with uniform allocation.

Trials are independent. Each gets its own random stream derived from
``(seed, trial)``, so results do not depend on how trials are scheduled.
The same stream is reused at every SIR point, which means one trial sees
the same fading realization at every SIR and only the cross-gain scale
changes.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.optimize import isotonic_regression

from .errors import InvalidSpec, QviPowerError
from .model import EE, RATE, ROLES, GameInstance, energy_efficiencies, rates, uniform_profile
from .solvers import SolverConfig, ncp_solve, spa_solve

log = logging.getLogger(__name__)

_SOLVER_KEYS = {f.name for f in fields(SolverConfig)}


@dataclass
class ExperimentSpec:
    """Parameters of a Monte Carlo sweep.

    ``snr_db`` is either a scalar or a ``(K, N)`` nested list. ``budget``
    defaults to ``N`` and ``circuit`` to 1 for every link. ``role`` defaults
    to the first half of the links maximizing EE and the rest rate.
    ``ncp`` and ``spa`` hold :class:`SolverConfig` overrides.
    """

    K: int = 8
    N: int = 16
    role: list | None = None
    snr_db: float | list = 0.0
    sir_db: list = field(default_factory=lambda: [0.0, 3.0, 6.0, 10.0, 15.0, 20.0])
    trials: int = 50
    budget: float | list | None = None
    circuit: float | list = 1.0
    seed: int = 0
    ncp: dict = field(default_factory=dict)
    spa: dict = field(default_factory=dict)
    agreement_tol: float = 1e-2
    dynamics_sir_db: float | None = 3.0
    dynamics_trial: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        for name in ("K", "N", "trials"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                raise InvalidSpec(name, "must be a positive integer")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise InvalidSpec("seed", "must be a nonnegative integer")
        if self.role is None:
            half = self.K // 2
            self.role = [EE] * half + [RATE] * (self.K - half)
        self.role = list(self.role)
        if len(self.role) != self.K or any(r not in ROLES for r in self.role):
            raise InvalidSpec("role", f"expected {self.K} entries from {ROLES}")
        try:
            grid = [float(s) for s in self.sir_db]
        except (TypeError, ValueError):
            raise InvalidSpec("sir_db", "must be a list of numbers") from None
        if not grid:
            raise InvalidSpec("sir_db", "SIR grid is empty")
        if any(math.isnan(s) for s in grid) or grid != sorted(grid):
            raise InvalidSpec("sir_db", "SIR grid must be sorted ascending")
        self.sir_db = grid
        self._per_link("snr_db", self.snr_db, (self.K, self.N), finite=True)
        self._per_link("budget", float(self.N) if self.budget is None else self.budget, (self.K,), positive=True)
        self._per_link("circuit", self.circuit, (self.K,), positive=True)
        if not self.agreement_tol > 0:
            raise InvalidSpec("agreement_tol", "must be positive")
        for name in ("ncp", "spa"):
            cfg = getattr(self, name)
            if not isinstance(cfg, dict):
                raise InvalidSpec(name, "must be an object of solver settings")
            unknown = set(cfg) - _SOLVER_KEYS
            if unknown:
                raise InvalidSpec(name, f"unknown solver setting(s) {sorted(unknown)}")
            try:
                SolverConfig(**cfg)
            except (TypeError, ValueError) as exc:
                raise InvalidSpec(name, str(exc)) from None
        if self.dynamics_trial < 0:
            raise InvalidSpec("dynamics_trial", "must be nonnegative")

    def _per_link(self, name, value, shape, finite=False, positive=False):
        try:
            arr = np.broadcast_to(np.asarray(value, dtype=float), shape)
        except (TypeError, ValueError):
            raise InvalidSpec(name, f"must be a scalar or have shape {shape}") from None
        if not np.all(np.isfinite(arr)) or (positive and np.any(arr <= 0)):
            raise InvalidSpec(name, "must be finite" + (" and positive" if positive else ""))
        return arr

    def array(self, name) -> np.ndarray:
        shape = (self.K, self.N) if name == "snr_db" else (self.K,)
        value = getattr(self, name)
        if name == "budget" and value is None:
            value = float(self.N)
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    def solver_config(self, name: str) -> SolverConfig:
        return SolverConfig(**getattr(self, name))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc) -> "ExperimentSpec":
        if not isinstance(doc, dict):
            raise InvalidSpec("<root>", "expected a JSON object")
        unknown = set(doc) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidSpec(sorted(unknown)[0], "unknown field")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise InvalidSpec("<root>", str(exc)) from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidSpec("<json>", str(exc)) from None
        return cls.from_dict(doc)


@dataclass
class TrialRecord:
    """Outcome of one trial at one SIR point.

    ``agreement`` is the relative infinity-norm distance between the two
    solvers' profiles and is only set when both converged.
    """

    sir_db: float
    trial: int
    seed: int
    digest: str
    ncp_converged: bool = False
    ncp_iterations: int = 0
    spa_converged: bool = False
    spa_iterations: int = 0
    ncp_residual: float = math.nan
    agreement: float | None = None
    converged: bool = False
    ncp_power: np.ndarray | None = None
    spa_power: np.ndarray | None = None
    rate: np.ndarray | None = None
    ee: np.ndarray | None = None
    uniform_ee: np.ndarray | None = None
    ee_gain_pct: np.ndarray | None = None
    error: str | None = None


def trial_seed(master: int, trial: int) -> int:
    """64-bit seed of trial ``trial``, independent of scheduling."""
    ss = np.random.SeedSequence(master, spawn_key=(trial,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def cross_scale(K: int, sir_db: float) -> float:
    """Variance of each cross gain so that their sum has mean ``1/SIR``."""
    if K == 1 or (math.isinf(sir_db) and sir_db > 0):
        return 0.0
    return 1.0 / ((K - 1) * 10.0 ** (sir_db / 10.0))


def sample_channel(spec: ExperimentSpec, seed: int, sir_db: float | None = None) -> GameInstance:
    """Rayleigh-fading instance for one trial.

    Squared magnitudes of unit-variance complex Gaussians are exponential
    with mean 1. Cross gains are scaled by :func:`cross_scale` and the
    noise variance is ``10**(-SNR/10)``, so the direct links keep unit mean
    gain. ``sir_db`` defaults to the first grid point.
    """
    sir = spec.sir_db[0] if sir_db is None else float(sir_db)
    rng = np.random.default_rng(seed)
    K, N = spec.K, spec.N
    gain2 = rng.exponential(1.0, size=(K, K, N))
    off = ~np.eye(K, dtype=bool)
    gain2[off] *= cross_scale(K, sir)
    noise2 = 10.0 ** (-spec.array("snr_db") / 10.0)
    return GameInstance(gain2, noise2, spec.array("budget"), spec.array("circuit"), tuple(spec.role))


def digest(inst: GameInstance) -> str:
    h = hashlib.sha256()
    for arr in (inst.gain2, inst.noise2, inst.budget, inst.circuit):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


def relative_distance(a, b) -> float:
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def ee_gain_pct(inst: GameInstance, p) -> np.ndarray:
    """Percentage change of every link's efficiency relative to uniform allocation."""
    base = energy_efficiencies(inst, uniform_profile(inst))
    return 100.0 * (energy_efficiencies(inst, p) - base) / base


def run_trial(spec: ExperimentSpec, sir_db: float, trial: int) -> TrialRecord:
    """Run both solvers on one sampled instance; failures are recorded."""
    seed = trial_seed(spec.seed, trial)
    inst = sample_channel(spec, seed, sir_db)
    rec = TrialRecord(sir_db=float(sir_db), trial=trial, seed=seed, digest=digest(inst))
    try:
        pn, tn = ncp_solve(inst, spec.solver_config("ncp"))
        rec.ncp_converged, rec.ncp_iterations = tn.converged, tn.iterations
        rec.ncp_residual = tn.final_residual
        rec.ncp_power = pn
        rec.rate, rec.ee = rates(inst, pn), energy_efficiencies(inst, pn)
        rec.uniform_ee = energy_efficiencies(inst, uniform_profile(inst))
        rec.ee_gain_pct = ee_gain_pct(inst, pn)
        ps, ts = spa_solve(inst, spec.solver_config("spa"))
        rec.spa_converged, rec.spa_iterations = ts.converged, ts.iterations
        rec.spa_power = ps
        if rec.ncp_converged and rec.spa_converged:
            rec.agreement = relative_distance(pn, ps)
            rec.converged = rec.agreement <= spec.agreement_tol
    except (QviPowerError, FloatingPointError, ValueError, ZeroDivisionError) as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        log.warning("trial %d at SIR %g dB failed: %s", trial, sir_db, rec.error)
    return rec


def _run_task(args):
    spec_doc, sir_db, trial = args
    return run_trial(ExperimentSpec.from_dict(spec_doc), sir_db, trial)


def run_trials(spec: ExperimentSpec, tasks, jobs: int = 1) -> list[TrialRecord]:
    """Run ``(sir_db, trial)`` tasks, in a process pool when ``jobs > 1``.

    Records come back sorted by ``(sir_db, trial)`` whatever the schedule.
    """
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        out = [run_trial(spec, s, t) for s, t in tasks]
    else:
        doc = spec.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_run_task, [(doc, s, t) for s, t in tasks], chunksize=4))
    return sorted(out, key=lambda r: (r.sir_db, r.trial))


def isotonic_increasing(y, weights=None) -> np.ndarray:
    """Least-squares nondecreasing fit of ``y``."""
    return isotonic_regression(np.asarray(y, dtype=float), weights=weights, increasing=True).x


@dataclass
class ConvergenceRow:
    sir_db: float
    trials: int
    converged: int
    p_c: float
    mean_agreement: float | None


def convergence_table(spec: ExperimentSpec, records) -> list[ConvergenceRow]:
    rows = []
    for sir in spec.sir_db:
        here = [r for r in records if r.sir_db == sir]
        agree = [r.agreement for r in here if r.agreement is not None]
        n_conv = sum(r.converged for r in here)
        rows.append(ConvergenceRow(sir, len(here), n_conv, n_conv / len(here) if here else math.nan,
                                   float(np.mean(agree)) if agree else None))
    return rows


def run_convergence_probability(spec: ExperimentSpec, jobs: int = 1):
    """Empirical convergence probability of the distributed solver per SIR.

    Returns
    -------
    rows : list of ConvergenceRow
    records : list of TrialRecord
    """
    tasks = [(s, t) for s in spec.sir_db for t in range(spec.trials)]
    records = run_trials(spec, tasks, jobs)
    return convergence_table(spec, records), records


@dataclass
class DynamicsResult:
    sir_db: float
    trial: int
    converged: bool
    iterations: int
    roles: tuple
    rate: np.ndarray          # (iterations, K)
    ee: np.ndarray            # (iterations, K)
    gamma: np.ndarray         # (iterations, K)
    uniform_rate: np.ndarray
    uniform_ee: np.ndarray
    ee_gain_pct: np.ndarray   # final, every link
    rate_gain_pct: np.ndarray


def run_dynamics(spec: ExperimentSpec, sir_db: float | None = None, trial: int | None = None) -> DynamicsResult:
    """Follow one distributed run and compare with uniform allocation."""
    sir = spec.dynamics_sir_db if sir_db is None else sir_db
    sir = spec.sir_db[0] if sir is None else float(sir)
    trial = spec.dynamics_trial if trial is None else trial
    inst = sample_channel(spec, trial_seed(spec.seed, trial), sir)
    _, tr = ncp_solve(inst, spec.solver_config("ncp"))
    u = uniform_profile(inst)
    ur, ue = rates(inst, u), energy_efficiencies(inst, u)
    rate_hist = np.array([r.rate for r in tr.records])
    ee_hist = np.array([r.ee for r in tr.records])
    return DynamicsResult(
        sir_db=sir, trial=trial, converged=tr.converged, iterations=tr.iterations, roles=inst.role,
        rate=rate_hist, ee=ee_hist, gamma=np.array([r.price for r in tr.records]),
        uniform_rate=ur, uniform_ee=ue,
        ee_gain_pct=100.0 * (ee_hist[-1] - ue) / ue, rate_gain_pct=100.0 * (rate_hist[-1] - ur) / ur)


# -- output -------------------------------------------------------------------

def _num(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def convergence_csv(rows) -> str:
    out = [("sir_db", "trials", "converged", "p_c", "mean_agreement")]
    out += [(_num(r.sir_db), r.trials, r.converged, _num(r.p_c), _num(r.mean_agreement)) for r in rows]
    return _csv(out)


def trials_csv(records, role) -> str:
    out = [("sir_db", "trial", "seed", "digest", "ncp_converged", "ncp_iterations", "spa_converged",
            "spa_iterations", "ncp_residual", "agreement", "converged", "mean_ee_gain_pct", "error")]
    for r in records:
        gain = None
        if r.ee_gain_pct is not None:
            ee = np.array([x == EE for x in role])
            gain = float(np.mean(r.ee_gain_pct[ee])) if ee.any() else None
        out.append((_num(r.sir_db), r.trial, r.seed, r.digest, int(r.ncp_converged), r.ncp_iterations,
                    int(r.spa_converged), r.spa_iterations, _num(r.ncp_residual), _num(r.agreement),
                    int(r.converged), _num(gain), r.error or ""))
    return _csv(out)


def dynamics_csv(res: DynamicsResult) -> str:
    out = [("iter", "player", "role", "rate", "ee", "gamma")]
    for j in range(res.iterations):
        for k, role in enumerate(res.roles):
            out.append((j, k, role, _num(res.rate[j, k]), _num(res.ee[j, k]), _num(res.gamma[j, k])))
    return _csv(out)


def baseline_csv(res: DynamicsResult) -> str:
    out = [("player", "role", "uniform_rate", "uniform_ee", "final_rate", "final_ee", "rate_gain_pct",
            "ee_gain_pct")]
    for k, role in enumerate(res.roles):
        out.append((k, role, _num(res.uniform_rate[k]), _num(res.uniform_ee[k]), _num(res.rate[-1, k]),
                    _num(res.ee[-1, k]), _num(res.rate_gain_pct[k]), _num(res.ee_gain_pct[k])))
    return _csv(out)


def _columns(x, y) -> str:
    return "".join(f"{_num(a)} {_num(b)}\n" for a, b in zip(x, y))


def write_outputs(spec: ExperimentSpec, out_dir, rows=None, records=None, dyn: DynamicsResult | None = None) -> list:
    """Emit CSV, JSON and two-column plot files; returns the written paths."""
    out = Path(out_dir)
    written = []

    def put(name, text):
        atomic_write_text(out / name, text)
        written.append(out / name)

    summary = {"spec": spec.to_dict()}
    if rows is not None:
        put("convergence.csv", convergence_csv(rows))
        put("trials.csv", trials_csv(records, spec.role))
        put("plot/pc_vs_sir.dat", _columns([r.sir_db for r in rows], [r.p_c for r in rows]))
        summary["convergence"] = [asdict(r) for r in rows]
        summary["failed_trials"] = sum(r.error is not None for r in records)
    if dyn is not None:
        put("dynamics.csv", dynamics_csv(dyn))
        put("dynamics_baseline.csv", baseline_csv(dyn))
        steps = range(dyn.iterations)
        for k in range(len(dyn.roles)):
            put(f"plot/ee_player{k}.dat", _columns(steps, dyn.ee[:, k]))
            put(f"plot/rate_player{k}.dat", _columns(steps, dyn.rate[:, k]))
        ee = [k for k, r in enumerate(dyn.roles) if r == EE]
        summary["dynamics"] = {
            "sir_db": dyn.sir_db, "trial": dyn.trial, "converged": dyn.converged,
            "iterations": dyn.iterations,
            "ee_gain_pct": {str(k): float(dyn.ee_gain_pct[k]) for k in ee},
            "rate_gain_pct": {str(k): float(dyn.rate_gain_pct[k]) for k in range(len(dyn.roles))},
        }
    put("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return written
