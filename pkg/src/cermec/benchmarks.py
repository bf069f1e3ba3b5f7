"""Comparison schemes, each optimal within its restricted strategy space.

All three are throughput maximizers (``alpha = 0``):

* ``flca``: local computing only, no offloading.
* ``fcoa``: offloading only, every CPU idle.
* ``nera``: the full scheme with the peer-to-peer recycled energy removed.
"""

from __future__ import annotations

import time

import numpy as np

from . import fairness
from .kkt_solvers import DEFAULT_OPTIONS, SolverOptions, recover_original, solve_zfba
from .physics import Allocation, computable_bits, feasibility, harvested_energy
from .results import InfeasibleScenarioError, SolverResult
from .scenario import ChannelRealization, Scenario


def flca_allocation(s: Scenario, ch: ChannelRealization) -> Allocation:
    """Equal slots, PS always at full power, each CPU as fast as its energy allows.

    With no offloading the slots only schedule the PS, so they are split
    evenly. Every sensor then spends all its harvest on computing:
    ``f = min(f_max, (E / (T phi))**(1/3))``.
    """
    K = s.K
    t = np.full(K, s.T_eff / K)
    a = Allocation(t, s.P_max * t, np.zeros(K), np.zeros(K))
    E = harvested_energy(s, ch, a)
    f = np.minimum(s.f_max, np.cbrt(E / (s.T * s.phi)))
    return a.replace(f=f)


def solve_flca(s: Scenario, ch: ChannelRealization) -> SolverResult:
    """Full local computing.

    Raises
    ------
    InfeasibleScenarioError
        If some sensor cannot reach ``R_min`` on its own CPU.
    """
    t0 = time.perf_counter()
    a = flca_allocation(s, ch)
    R = computable_bits(s, ch, a)
    short = s.R_min - R
    if np.max(short) > 1e-9 * max(float(np.max(s.R_min)), 1.0):
        k = int(np.argmax(short))
        raise InfeasibleScenarioError(
            f"local computing cannot meet the demand; sensor {k} falls short by {short[k]:.6g} bit",
            binding=k, shortfall=np.maximum(short, 0.0))
    orig = recover_original(a)
    obj = float(np.sum(R))
    return SolverResult(
        solver="flca", alpha=0.0, allocation=a, P=orig.P, p=orig.p, R=R,
        objective=obj, jain=fairness.jain_or_nan(R), iterations=1, trace=[obj],
        converged=True, feasibility=feasibility(s, ch, a),
        info={"wall_s": time.perf_counter() - t0},
    )


def solve_fcoa(s: Scenario, ch: ChannelRealization, *,
               options: SolverOptions = DEFAULT_OPTIONS) -> SolverResult:
    """Full offloading: the throughput solver with ``f`` pinned at zero."""
    return solve_zfba(s, ch, local=False, options=options, name="fcoa")


def solve_nera(s: Scenario, ch: ChannelRealization, *,
               options: SolverOptions = DEFAULT_OPTIONS) -> SolverResult:
    """Throughput solver that ignores energy recycled between sensors.

    The allocation is planned with the sensor-to-sensor gains zeroed. The
    rates do not depend on those gains, so they are reported unchanged;
    the feasibility check uses the real channels, where the extra
    harvest only adds slack.
    """
    res = solve_zfba(s, ch.without_recycling(), options=options, name="nera")
    res.feasibility = feasibility(s, ch, res.allocation)
    return res


SOLVERS = {"flca": solve_flca, "fcoa": solve_fcoa, "nera": solve_nera}
