"""Command-line front end.

Subcommands:

* ``run``    solve one problem with one heuristic and write a report
* ``bench``  solve with several heuristics / thresholds and tabulate
* ``list``   show the built-in problems
* ``export`` write a built-in problem in the problem-file format

Exit codes: 0 success, 2 problem parse/validation error, 3 validated
integration failure, 4 node/branch limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Optional

from . import kernels
from .bnb import Problem, Solution, SolverConfig, solve
from .interval import Box, Interval
from .ivp import IntegrationError, IntegratorConfig
from .problem_io import ProblemFileError, parse_problem, render_problem
from .problems import by_name, catalog

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INTEGRATION = 3
EXIT_LIMIT = 4

_HEURISTIC_ALIASES = {
    "rr": "round_robin",
    "round_robin": "round_robin",
    "round-robin": "round_robin",
    "lf": "largest_first",
    "largest_first": "largest_first",
    "largest-first": "largest_first",
    "smear": "smear",
    "s": "smear",
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def load_problem(ref: str) -> Problem:
    """A catalog name, or a path to a problem file."""
    if os.path.sep in ref or ref.endswith(".prob") or os.path.exists(ref):
        try:
            with open(ref, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise CliError(f"cannot read {ref!r}: {err}", EXIT_PARSE) from None
        try:
            return parse_problem(text, name=os.path.basename(ref))
        except (ProblemFileError, ValueError) as err:
            raise CliError(f"{ref}: {err}", EXIT_PARSE) from None
    try:
        return by_name(ref).problem
    except KeyError as err:
        raise CliError(str(err.args[0]), EXIT_PARSE) from None


def _heuristic(name: str) -> str:
    key = name.strip().lower()
    if key not in _HEURISTIC_ALIASES:
        raise CliError(f"unknown heuristic {name!r} (rr, lf or smear)", EXIT_PARSE)
    return _HEURISTIC_ALIASES[key]


def _solver_config(args, heuristic: str, event_sink=None) -> SolverConfig:
    integ = IntegratorConfig(order=args.order, h0=args.step)
    return SolverConfig(
        epsilon=args.epsilon,
        heuristic=heuristic,
        integrator=integ,
        feas_tol=args.feas_tol,
        smear_mode=args.smear_mode,
        quad_subdivide=args.quad_subdivide,
        max_branches=args.max_branches,
        event_sink=event_sink,
    )


def _iv(iv: Optional[Interval]):
    if iv is None:
        return None
    return [iv.lo, iv.hi]


def _box(box: Optional[Box]):
    if box is None:
        return None
    return [[c.lo, c.hi] for c in box]


def _run_row(problem_ref: str, heuristic: str, args, sol: Solution,
             wall: float) -> dict:
    return {
        "problem": problem_ref,
        "heuristic": heuristic,
        "epsilon": args.epsilon,
        "status": sol.status,
        "solution_box": _box(sol.psol),
        "cost": _iv(sol.csol),
        "upper_bound": sol.cbar,
        "branches": sol.branch_count,
        "nodes": sol.nodes_processed,
        "accepted_boxes": len(sol.accepted),
        "wall_time_s": wall,
    }


def _report_config(args) -> dict:
    return {
        "order": args.order,
        "step": args.step,
        "feas_tol": args.feas_tol,
        "smear_mode": args.smear_mode,
        "quad_subdivide": args.quad_subdivide,
        "max_branches": args.max_branches,
        "backend": kernels.BACKEND,
    }


def _emit_report(report: dict, args) -> None:
    fmt = args.format
    if fmt == "json":
        text = json.dumps(report, indent=2)
    elif fmt == "csv":
        text = _csv_report(report)
    else:
        text = _table_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


_ROW_FIELDS = ("problem", "heuristic", "epsilon", "status", "solution_box",
               "cost", "upper_bound", "branches", "nodes", "accepted_boxes",
               "gain_vs_largest_first", "wall_time_s")


def _csv_report(report: dict) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(_ROW_FIELDS)
    for row in report["rows"]:
        w.writerow([json.dumps(row[f]) if isinstance(row.get(f), (list, dict))
                    else row.get(f, "") for f in _ROW_FIELDS])
    return buf.getvalue().rstrip("\n")


def _fmt_box(box) -> str:
    if box is None:
        return "-"
    return "; ".join(f"[{lo:.6g}, {hi:.6g}]" for lo, hi in box)


def _table_report(report: dict) -> str:
    head = ["eps", "heuristic", "status", "solution box", "cost", "branches", "gain"]
    rows = []
    for r in report["rows"]:
        gain = r.get("gain_vs_largest_first")
        cost = r["cost"]
        rows.append([
            f"{r['epsilon']:g}",
            r["heuristic"],
            r["status"],
            _fmt_box(r["solution_box"]),
            "-" if cost is None else f"[{cost[0]:.6g}, {cost[1]:.6g}]",
            str(r["branches"]),
            "-" if gain is None else f"{gain * 100:.1f}%",
        ])
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
              for i, h in enumerate(head)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*head), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*row) for row in rows]
    return "\n".join(lines)


def _open_events(path: Optional[str]):
    if not path:
        return None, None
    fh = open(path, "w", encoding="utf-8")

    def sink(ev: dict) -> None:
        fh.write(json.dumps(ev) + "\n")

    return sink, fh


def cmd_run(args) -> int:
    prob = load_problem(args.problem)
    heuristic = _heuristic(args.heuristic)
    sink, fh = _open_events(args.events)
    try:
        cfg = _solver_config(args, heuristic, sink)
        t0 = time.perf_counter()
        sol = solve(prob, cfg)
        wall = time.perf_counter() - t0
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INTEGRATION
    finally:
        if fh:
            fh.close()
    report = {
        "command": "run",
        "config": _report_config(args),
        "rows": [_run_row(args.problem, heuristic, args, sol, wall)],
    }
    report["rows"][0]["gain_vs_largest_first"] = None
    _emit_report(report, args)
    return EXIT_LIMIT if sol.status != "ok" else EXIT_OK


def cmd_bench(args) -> int:
    prob = load_problem(args.problem)
    heuristics = [_heuristic(h) for h in args.heuristics.split(",") if h.strip()]
    if not heuristics:
        raise CliError("no heuristics requested", EXIT_PARSE)
    try:
        epsilons = [float(e) for e in args.epsilons.split(",") if e.strip()]
    except ValueError:
        raise CliError(f"bad epsilon list {args.epsilons!r}", EXIT_PARSE) from None
    rows = []
    worst = EXIT_OK
    for eps in epsilons:
        eps_rows = []
        base_branches = None
        for heuristic in heuristics:
            ns = argparse.Namespace(**vars(args))
            ns.epsilon = eps
            try:
                cfg = _solver_config(ns, heuristic)
                t0 = time.perf_counter()
                sol = solve(prob, cfg)
                wall = time.perf_counter() - t0
            except IntegrationError as err:
                print(f"error: {err}", file=sys.stderr)
                return EXIT_INTEGRATION
            row = _run_row(args.problem, heuristic, ns, sol, wall)
            if heuristic == "largest_first":
                base_branches = sol.branch_count
            if sol.status != "ok":
                worst = EXIT_LIMIT
            eps_rows.append(row)
        for row in eps_rows:
            if row["heuristic"] != "largest_first" and base_branches:
                row["gain_vs_largest_first"] = (
                    (base_branches - row["branches"]) / base_branches)
            else:
                row["gain_vs_largest_first"] = None
        rows.extend(eps_rows)
    report = {"command": "bench", "config": _report_config(args), "rows": rows}
    _emit_report(report, args)
    return worst


def cmd_list(args) -> int:
    for entry in catalog():
        prob = entry.problem
        print(f"{entry.name:18s} states={prob.sys.n_states} params={prob.sys.n_params}"
              f" constraints={len(prob.endpoint_constraints)}  {entry.note}")
    return EXIT_OK


def cmd_export(args) -> int:
    try:
        entry = by_name(args.problem)
    except KeyError as err:
        raise CliError(str(err.args[0]), EXIT_PARSE) from None
    text = render_problem(entry.problem)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=1e-3,
                   help="stop splitting boxes narrower than this (default 1e-3)")
    p.add_argument("--order", type=int, default=4,
                   help="Taylor order of the validated integrator (default 4)")
    p.add_argument("--step", type=float, default=None,
                   help="integration step size (default: span/50)")
    p.add_argument("--max-branches", type=int, default=None,
                   help="abort after this many bisections")
    p.add_argument("--feas-tol", type=float, default=1e-3,
                   help="equality-constraint tolerance for incumbent updates")
    p.add_argument("--smear-mode", choices=("auto", "terminal", "horizon"),
                   default="auto", help="sensitivity norm window for the smear rule")
    p.add_argument("--quad-subdivide", type=int, default=1,
                   help="split each panel this many times in the rectangle rule")
    p.add_argument("--out", default=None, help="write the report to this path")
    p.add_argument("--format", choices=("json", "csv", "table"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="odebnb",
        description="Guaranteed global optimization of ODE parameters by "
                    "interval branch & bound over validated integration.")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve one problem")
    p_run.add_argument("problem", help="built-in name or problem-file path")
    p_run.add_argument("--heuristic", default="lf",
                       help="bisection rule: rr, lf or smear (default lf)")
    p_run.add_argument("--events", default=None,
                       help="write a JSON-lines event stream to this path")
    _add_solver_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_bench = sub.add_parser("bench", help="compare heuristics and thresholds")
    p_bench.add_argument("problem")
    p_bench.add_argument("--heuristics", default="lf,smear",
                         help="comma-separated list (default lf,smear)")
    p_bench.add_argument("--epsilons", default="1e-2,1e-3",
                         help="comma-separated width thresholds")
    _add_solver_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    p_list = sub.add_parser("list", help="list built-in problems")
    p_list.set_defaults(func=cmd_list)

    p_exp = sub.add_parser("export", help="print a built-in problem as a file")
    p_exp.add_argument("problem")
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except IntegrationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INTEGRATION


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
