"""A small Monte Carlo convergence study.

For each signal-to-interference ratio the harness draws Rayleigh fading
games (the same fading across SIR points, only the cross-gain scale
changes), runs both solvers and counts how often they agree. It also
records the price dynamics on one instance and compares the equilibrium
against a uniform power split. The command line equivalent is

    qvipower experiment --spec spec.json --out results/
"""
import sys
import tempfile
from pathlib import Path

from qvipower.experiment import ExperimentSpec, run_convergence_probability, run_dynamics, write_outputs

spec = ExperimentSpec(K=4, N=8, trials=10, sir_db=[0.0, 6.0, 15.0], seed=1)
rows, records = run_convergence_probability(spec)
print("SIR dB  trials  converged  P_c")
for r in rows:
    print(f"{r.sir_db:6g}  {r.trials:6d}  {r.converged:9d}  {r.p_c:.2f}")

dyn = run_dynamics(spec)
print(f"\ndynamics at {dyn.sir_db} dB: converged={dyn.converged} in {dyn.iterations} iterations")
for k, role in enumerate(dyn.roles):
    print(f"  link {k} ({role}): EE gain over uniform {dyn.ee_gain_pct[k]:+.1f}%, "
          f"rate gain {dyn.rate_gain_pct[k]:+.1f}%")

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="qvipower-"))
paths = write_outputs(spec, out, rows, records, dyn)
print(f"\nwrote {len(paths)} files under {out}")
