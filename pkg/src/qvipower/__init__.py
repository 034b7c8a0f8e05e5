"""Nash equilibria of power-allocation games where each link maximizes
either its rate or its energy efficiency."""

from .analysis import UniquenessReport, analyze, operator_constants
from .errors import (DegenerateChannel, EmptySupport, InvalidInstance, InvalidLevel, InvalidPrice, InvalidSpec,
                     NonConvergence, QviPowerError)
from .fractional import DinkelbachResult, best_response_ee, dinkelbach, dinkelbach_zeta, g_constraint
from .model import (EE, RATE, GameInstance, derive_coefficients, effective_noise, energy_efficiencies,
                    energy_efficiency, mapping_F, rate, rates, uniform_profile)
from .solvers import SolverConfig, SolverTrace, iwfp, ncp_solve, ne_residual, spa_solve
from .waterfill import best_response_rate, level_for_budget, project_simplex, waterfill

__all__ = [
    "EE", "RATE", "GameInstance", "derive_coefficients", "effective_noise", "rate", "rates",
    "energy_efficiency", "energy_efficiencies", "mapping_F", "uniform_profile",
    "waterfill", "level_for_budget", "project_simplex", "best_response_rate",
    "DinkelbachResult", "dinkelbach", "dinkelbach_zeta", "best_response_ee", "g_constraint",
    "UniquenessReport", "analyze", "operator_constants",
    "SolverConfig", "SolverTrace", "iwfp", "ncp_solve", "spa_solve", "ne_residual",
    "QviPowerError", "InvalidInstance", "InvalidSpec", "DegenerateChannel", "InvalidLevel", "EmptySupport",
    "InvalidPrice", "NonConvergence",
]
