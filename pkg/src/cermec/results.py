"""Result containers shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .physics import Allocation


class InfeasibleScenarioError(ValueError):
    """The minimum-data demands cannot all be met.

    ``binding`` is the index of the sensor with the largest shortfall and
    ``shortfall`` the missing bits per sensor at the best max-min point found.
    """

    def __init__(self, message: str, binding: int, shortfall=None):
        super().__init__(message)
        self.binding = binding
        self.shortfall = None if shortfall is None else np.asarray(shortfall)


class DualInfeasibleError(ValueError):
    pass


@dataclass
class DualState:
    """Lagrange multipliers of the two alternating blocks.

    ``time`` holds the slot/frequency block (omega, zeta or lambda family) and
    ``power`` the energy block (mu, theta or varepsilon family), keyed by the
    family letter and index, e.g. ``time["omega2"]``.  ``energy_price`` is the
    shadow price of one joule at each sensor including the value its
    transmission has for peers as recycled energy.
    """

    regime: str
    time: Dict[str, np.ndarray] = field(default_factory=dict)
    power: Dict[str, np.ndarray] = field(default_factory=dict)
    energy_price: Optional[np.ndarray] = None
    scale: float = 1.0


@dataclass
class SolverResult:
    solver: str
    alpha: float
    allocation: Allocation
    P: np.ndarray
    p: np.ndarray
    R: np.ndarray
    objective: float
    jain: float
    iterations: int
    trace: List[float]
    converged: bool
    duals: Optional[DualState] = None
    chi: Optional[np.ndarray] = None
    gamma: Optional[float] = None
    feasibility: List[str] = field(default_factory=list)
    info: Dict[str, float] = field(default_factory=dict)

    @property
    def total_bits(self) -> float:
        return float(np.sum(self.R))

    @property
    def largest_gap(self) -> float:
        return float(np.max(self.R) - np.min(self.R))
