"""Monte Carlo sweeps over one scenario parameter.

A sweep document is a ``key = value`` file::

    parameter = alpha
    values = 0, 1, 2, 5, 10
    solvers = fair          # or a list such as zfba, fcoa, nera, flca
    seeds = 0-49            # ranges and lists may be mixed: 0-9, 20, 31
    output = alpha.csv      # optional
    P_max = 2.0             # any other key overrides the scenario template

Each seed redraws the layout and the channels, so every cell of the grid
sees the same set of geometries.
"""

from __future__ import annotations

import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kvdoc
from .benchmarks import solve_fcoa, solve_flca, solve_nera
from .kkt_solvers import solve_cfba, solve_mfba, solve_zfba
from .oracle import solve_generic
from .results import InfeasibleScenarioError, SolverResult
from .scenario import Scenario, draw_channels, random_layout, scenario_from_mapping, validate

#: Parameters accepted besides the scalar scenario fields.
#: ``ws_distance_scale`` multiplies every inter-sensor distance.
EXTRA_PARAMETERS = ("ws_distance_scale",)
_SWEEPABLE = ("alpha", "K", "N", "T", "epsilon", "B", "eta", "P_max", "noise_power",
              "beta", "f_max", "C", "phi", "R_min") + EXTRA_PARAMETERS
_SPEC_KEYS = ("parameter", "values", "solvers", "seeds", "output", "cfba_alpha")

SOLVER_NAMES = ("fair", "zfba", "cfba", "mfba", "oracle", "flca", "fcoa", "nera")


class SweepError(ValueError):
    """Invalid sweep specification."""


def run_solver(name: str, s: Scenario, ch, cfba_alpha: float = 1.0) -> SolverResult:
    """Dispatch by solver name.

    ``fair`` picks the regime from ``s.alpha``; ``cfba`` uses ``s.alpha``
    when it is finite and positive and ``cfba_alpha`` otherwise.
    """
    a = s.alpha
    if name == "fair":
        if a == 0:
            return solve_zfba(s, ch)
        return solve_mfba(s, ch) if math.isinf(a) else solve_cfba(s, ch, a)
    if name == "zfba":
        return solve_zfba(s, ch)
    if name == "cfba":
        return solve_cfba(s, ch, a if 0 < a < math.inf else cfba_alpha)
    if name == "mfba":
        return solve_mfba(s, ch)
    if name == "oracle":
        return solve_generic(s, ch, a)
    if name == "flca":
        return solve_flca(s, ch)
    if name == "fcoa":
        return solve_fcoa(s, ch)
    if name == "nera":
        return solve_nera(s, ch)
    raise SweepError(f"unknown solver {name!r}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: Tuple[float, ...]
    seeds: Tuple[int, ...]
    solvers: Tuple[str, ...] = ("fair",)
    scenario: Dict[str, Tuple[str, int]] = field(default_factory=dict)
    output: Optional[str] = None
    cfba_alpha: float = 1.0

    def __post_init__(self):
        if self.parameter not in _SWEEPABLE:
            raise SweepError(f"cannot sweep {self.parameter!r}; choose from {', '.join(_SWEEPABLE)}")
        if not self.values:
            raise SweepError("values must not be empty")
        if not self.seeds:
            raise SweepError("seeds must not be empty")
        for name in self.solvers:
            if name not in SOLVER_NAMES:
                raise SweepError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
        if self.parameter in ("K", "N") and any(v != int(v) or v < 1 for v in self.values):
            raise SweepError(f"{self.parameter} values must be positive integers")
        if self.parameter == "ws_distance_scale" and not all(v > 0 for v in self.values):
            raise SweepError("ws_distance_scale values must be positive")
        for key in self.scenario:
            if key == self.parameter:
                raise SweepError(f"{key!r} is both swept and fixed")
        for v in self.values:  # surface scenario errors before any solve
            bad = validate(self.template(v))
            if bad:
                raise SweepError(f"{self.parameter} = {v!r}: " + "; ".join(bad))

    def template(self, value) -> Scenario:
        """Scenario for one grid value, before the per-seed layout."""
        doc = dict(self.scenario)
        p = self.parameter
        if p in ("K", "N"):
            doc[p] = (str(int(value)), 0)
        s = scenario_from_mapping(doc)
        if p in ("K", "N", "ws_distance_scale"):
            return s
        try:
            return s.replace(**{p: value})
        except ValueError as exc:
            raise SweepError(f"{p} = {value!r}: {exc}") from None

    def instance(self, value, seed: int):
        """``(scenario, channels)`` of one cell."""
        s = random_layout(self.template(value), seed)
        if self.parameter == "ws_distance_scale":
            s = s.replace(d_ws_ws=s.d_ws_ws * float(value))
        return s, draw_channels(s, seed)

    @classmethod
    def from_text(cls, text: str) -> "SweepSpec":
        doc = kvdoc.loads(text)
        for key in ("parameter", "values", "seeds"):
            if key not in doc:
                raise kvdoc.DocumentError(f"sweep is missing {key!r}")
        raw, line = doc["parameter"]
        param = raw.strip()
        vals = tuple(float(v) for v in kvdoc.parse_vector(doc["values"][0], "values", doc["values"][1]))
        seeds = parse_seeds(*doc["seeds"])
        solvers = tuple(x.strip() for x in doc["solvers"][0].split(",") if x.strip()) if "solvers" in doc else ("fair",)
        cfba_alpha = kvdoc.parse_float(*doc["cfba_alpha"]) if "cfba_alpha" in doc else 1.0
        output = doc["output"][0] if "output" in doc else None
        scen = {k: v for k, v in doc.items() if k not in _SPEC_KEYS}
        try:
            return cls(param, vals, seeds, solvers, scen, output, cfba_alpha)
        except SweepError as exc:
            raise kvdoc.DocumentError(str(exc)) from None


def parse_seeds(raw: str, line: Optional[int] = None) -> Tuple[int, ...]:
    """Parse ``"0-4, 9"`` into ``(0, 1, 2, 3, 4, 9)``."""
    out = []
    for part in (p.strip() for p in raw.split(",")):
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\s*-\s*(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise kvdoc.DocumentError(f"seeds: empty range {part!r}", line)
            out.extend(range(lo, hi + 1))
        else:
            out.append(kvdoc.parse_int(part, "seeds", line))
    if not out:
        raise kvdoc.DocumentError("seeds: empty list", line)
    return tuple(out)


@dataclass
class SweepRecord:
    parameter: str
    value: float
    solver: str
    seed: int
    R: np.ndarray
    jfi: float
    iterations: int
    wall_s: float
    converged: bool
    status: str = "ok"

    @property
    def total_bits(self) -> float:
        return float(np.sum(self.R)) if self.R.size else math.nan

    @property
    def gap_bits(self) -> float:
        return float(np.max(self.R) - np.min(self.R)) if self.R.size else math.nan

    @property
    def flagged(self) -> bool:
        return self.status != "ok"


def _cell(spec: SweepSpec, value, seed: int, solver: str) -> SweepRecord:
    s, ch = spec.instance(value, seed)
    t0 = time.perf_counter()
    try:
        res = run_solver(solver, s, ch, spec.cfba_alpha)
    except InfeasibleScenarioError:
        status, res = "infeasible", None
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        status, res = f"error: {type(exc).__name__}", None
    wall = time.perf_counter() - t0
    if res is None:
        return SweepRecord(spec.parameter, value, solver, seed, np.zeros(0), math.nan, 0, wall, False, status)
    status = "ok" if res.converged and not res.feasibility else "nonconverged"
    return SweepRecord(spec.parameter, value, res.solver if solver != "fair" else solver, seed,
                       np.asarray(res.R, float), res.jain, res.iterations, wall, res.converged, status)


def _cell_args(args):
    return _cell(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepRecord]:
    """Solve every ``(value, seed, solver)`` cell.

    Failures are recorded in their cell. Records are sorted by
    ``(value, solver, seed)`` whatever the execution order.
    """
    jobs = [(spec, v, seed, name) for v in spec.values for name in spec.solvers for seed in spec.seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_cell_args, jobs, chunksize=8))
    else:
        records = [_cell(*j) for j in jobs]
    records.sort(key=lambda r: (r.value, r.solver, r.seed))
    return records


def _fmt(v) -> str:
    return "%.12g" % v


def csv_text(records: Sequence[SweepRecord], timing: bool = True) -> str:
    """CSV with one row per record; a cell with fewer sensors leaves trailing fields empty.

    With ``timing=False`` the ``wall_s`` column is left empty so that
    repeated runs give identical bytes.
    """
    if not records:
        raise ValueError("no records to write")
    K = max(max((r.R.size for r in records)), 1)
    head = ["parameter", "value", "solver", "seed", "total_bits", "jfi", "gap_bits",
            "iterations", "wall_s"] + [f"R_{k + 1}" for k in range(K)]
    lines = [",".join(head)]
    for r in records:
        row = [r.parameter, _fmt(r.value), r.solver, str(r.seed), _fmt(r.total_bits), _fmt(r.jfi),
               _fmt(r.gap_bits), str(r.iterations), _fmt(r.wall_s) if timing else ""]
        row += [_fmt(x) for x in r.R] + [""] * (K - r.R.size)
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def emit_csv(records: Sequence[SweepRecord], path, timing: bool = True) -> None:
    """Write :func:`csv_text` to ``path``."""
    text = csv_text(records, timing)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def medians(records: Sequence[SweepRecord]) -> Dict[Tuple[float, str], Dict[str, float]]:
    """Per ``(value, solver)`` medians over the seeds of the unflagged cells."""
    groups: Dict[Tuple[float, str], List[SweepRecord]] = {}
    for r in records:
        if not r.flagged:
            groups.setdefault((r.value, r.solver), []).append(r)
    out = {}
    for key, rs in sorted(groups.items()):
        R = [r.R for r in rs]
        out[key] = {
            "total_bits": float(np.median([r.total_bits for r in rs])),
            "jfi": float(np.median([r.jfi for r in rs])),
            "gap_bits": float(np.median([r.gap_bits for r in rs])),
            "gap_ratio": float(np.median([r.gap_bits / np.mean(x) for r, x in zip(rs, R)])),
            "cells": len(rs),
        }
    return out


def spec_to_text(spec: SweepSpec) -> str:
    items = [("parameter", spec.parameter), ("values", list(spec.values)),
             ("solvers", ", ".join(spec.solvers)), ("seeds", ", ".join(map(str, spec.seeds)))]
    if spec.output:
        items.append(("output", spec.output))
    items.append(("cfba_alpha", spec.cfba_alpha))
    text = kvdoc.dumps(items, header="cermec sweep")
    return text + "".join(f"{k} = {raw}\n" for k, (raw, _) in spec.scenario.items())
