"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 infeasible scenario,
3 non-convergence or a failed feasibility check.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import List, Optional

import numpy as np

from . import __version__, kvdoc
from .cer_analysis import CerDomainError, gap_approx, gap_exact, setting_from_channels
from .experiments import SweepSpec, csv_text, run_sweep, run_solver
from .physics import evaluate
from .results import InfeasibleScenarioError, SolverResult
from .scenario import Scenario, dbm_to_watt, draw_channels, validate

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NONCONVERGED = 0, 1, 2, 3

SOLVE_CHOICES = ("zfba", "cfba", "mfba", "oracle", "flca", "fcoa", "nera")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_alpha(raw: str) -> float:
    if raw.strip().lower() in ("max-min", "maxmin", "inf"):
        return math.inf
    try:
        v = float(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"alpha must be a number or 'max-min', got {raw!r}") from None
    if not v >= 0:
        raise argparse.ArgumentTypeError("alpha must be >= 0")
    return v


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load_scenario(path: str) -> Scenario:
    s = Scenario.from_text(_read(path))
    bad = validate(s)
    if bad:
        raise UsageError("invalid scenario: " + "; ".join(bad))
    return s


def _write(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {out}: {exc.strerror}") from None


def _pick_solver(solver: Optional[str], alpha: float) -> str:
    if solver is None:
        return "zfba" if alpha == 0 else ("mfba" if math.isinf(alpha) else "cfba")
    if solver == "cfba" and not (0 < alpha < math.inf):
        raise UsageError("--solver cfba needs a finite --alpha > 0")
    if solver == "mfba" and not math.isinf(alpha):
        raise UsageError("--solver mfba needs --alpha max-min")
    if solver in ("zfba", "flca", "fcoa", "nera") and alpha != 0:
        raise UsageError(f"--solver {solver} maximizes total bits; use --alpha 0")
    return solver


def result_document(s: Scenario, ch, res: SolverResult) -> str:
    a = res.allocation
    data, energy = evaluate(s, ch, a)
    items = [
        ("status", "converged" if res.converged else "not-converged"),
        ("solver", res.solver), ("alpha", res.alpha), ("seed", ch.seed),
        ("iterations", res.iterations), ("objective", res.objective),
        ("total_bits", res.total_bits), ("jfi", res.jain), ("largest_gap", res.largest_gap),
        ("sum_t", float(np.sum(a.t))), ("T_eff", s.T_eff),
        ("t", a.t), ("Pbar", a.Pbar), ("pbar", a.pbar), ("f", a.f),
        ("P", res.P), ("p", res.p),
        ("R", res.R), ("R_LC", data.R_LC), ("R_CO", data.R_CO),
        ("E_EH", energy.E_EH), ("E_EC", energy.E_EC),
        ("feasibility", "ok" if not res.feasibility else " ".join(res.feasibility)),
    ]
    if res.chi is not None:
        items.append(("chi", res.chi))
    if res.gamma is not None:
        items.append(("gamma", res.gamma))
    items.append(("trace", list(res.trace)))
    return kvdoc.dumps(items, header="cermec result")


def cmd_solve(args) -> int:
    s = _load_scenario(args.scenario)
    alpha = s.alpha if args.alpha is None else args.alpha
    solver = _pick_solver(args.solver, alpha)
    s = s.replace(alpha=alpha)
    ch = draw_channels(s, args.seed)
    try:
        res = run_solver(solver, s, ch)
    except InfeasibleScenarioError as exc:
        doc = kvdoc.dumps([("status", "infeasible"), ("solver", solver), ("seed", args.seed),
                           ("binding", exc.binding),
                           ("shortfall", np.asarray(exc.shortfall if exc.shortfall is not None else [])),
                           ("message", str(exc))], header="cermec result")
        _write(doc, args.out)
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    _write(result_document(s, ch, res), args.out)
    if not res.converged or res.feasibility:
        print("solver did not converge to a feasible point", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        spec = SweepSpec.from_text(_read(args.spec))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    records = run_sweep(spec, workers=args.workers)
    _write(csv_text(records, timing=args.timing), args.out if args.out is not None else spec.output)
    flagged = [r for r in records if r.flagged]
    if flagged:
        print(f"{len(flagged)} of {len(records)} cells flagged", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_cer_gap(args) -> int:
    s = _load_scenario(args.scenario)
    ch = draw_channels(s, args.seed)
    noise = args.noise
    if args.noise_dbm is not None:
        noise = dbm_to_watt(args.noise_dbm)
    c = setting_from_channels(s, ch, P0=args.P0, noise=noise)
    exact = gap_exact(c)
    try:
        approx = gap_approx(c)
    except CerDomainError as exc:
        raise UsageError(str(exc)) from None
    lines = ["k,gap_exact,gap_approx,rel_diff"]
    for k in range(c.K):
        rel = abs(exact[k] - approx[k]) / approx[k] if approx[k] > 0 else (0.0 if exact[k] == 0 else math.inf)
        lines.append(f"{k + 1},{exact[k]:.12g},{approx[k]:.12g},{rel:.6g}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cermec", description="Fair resource allocation for wireless-powered edge computing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="solve one scenario")
    sp.add_argument("scenario", help="scenario key-value file")
    sp.add_argument("--alpha", type=_parse_alpha, default=None,
                    help="fairness parameter, or 'max-min' (default: the scenario's)")
    sp.add_argument("--solver", choices=SOLVE_CHOICES, default=None,
                    help="default: zfba, cfba or mfba according to alpha")
    sp.add_argument("--seed", type=int, default=0, help="channel seed")
    sp.add_argument("--out", default=None, help="result file (default stdout)")
    sp.set_defaults(func=cmd_solve)

    sw = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    sw.add_argument("spec", help="sweep key-value file")
    sw.add_argument("--out", default=None, help="CSV path (default: the sweep file's output key, else stdout)")
    sw.add_argument("--workers", type=int, default=1, help="worker processes")
    sw.add_argument("--timing", action="store_true",
                    help="fill the wall_s column (output then differs between runs)")
    sw.set_defaults(func=cmd_sweep)

    cg = sub.add_parser("cer-gap", help="per-sensor offloading gain from recycling")
    cg.add_argument("scenario")
    cg.add_argument("--seed", type=int, default=0)
    cg.add_argument("--P0", type=float, default=None, help="PS power [W] (default P_max)")
    grp = cg.add_mutually_exclusive_group()
    grp.add_argument("--noise", type=float, default=None, help="noise power override [W]")
    grp.add_argument("--noise-dbm", type=float, default=None, help="noise power override [dBm]")
    cg.set_defaults(func=cmd_cer_gap)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, kvdoc.DocumentError) as exc:
        print(f"cermec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
