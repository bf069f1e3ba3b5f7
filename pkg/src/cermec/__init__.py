"""Fair resource allocation for wireless-powered edge computing with energy recycling."""

__version__ = "0.1.0"

from .scenario import (ChannelRealization, Scenario, default_scenario, draw_channels,
                       random_layout, validate)
from .physics import Allocation, computable_bits, evaluate, feasibility
from .results import DualState, InfeasibleScenarioError, SolverResult
from .kkt_solvers import solve_cfba, solve_mfba, solve_zfba
from .benchmarks import solve_fcoa, solve_flca, solve_nera
from .oracle import solve_generic, solve_maxmin_epigraph

__all__ = [
    "Allocation", "ChannelRealization", "DualState", "InfeasibleScenarioError", "Scenario",
    "SolverResult", "computable_bits", "default_scenario", "draw_channels", "evaluate",
    "feasibility", "random_layout", "solve_cfba", "solve_fcoa", "solve_flca", "solve_generic",
    "solve_maxmin_epigraph", "solve_mfba", "solve_nera", "solve_zfba", "validate",
]
