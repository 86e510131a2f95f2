"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 infeasible
constraints, 4 time budget expired (the incumbent result is still written).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .alignment import heu_min, heu_opt, optimal_alignment, random_alignment_expectation
from .aspexport import bundled_encodings, export_facts, export_schedule_facts
from .errors import DataError, InfeasibleError, PortschedError, SizeGuardError
from .evaluation import (
    ALIGNMENT_MODES,
    EvalConfig,
    SYSTEMS,
    cross_validate,
    k_fold,
    merge_reports,
    reduced_cutoff_study,
)
from .executor import load_commands, run as execute_run
from .matrix import load_runtimes
from .model import Alignment, schedule_from_json, schedule_to_json, total_time
from .optimizer import OptimizerConfig, optimize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3
EXIT_BUDGET = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_matrix_args(parser, cutoff_required=True):
    parser.add_argument("--runtimes", required=True, metavar="CSV",
                        help="runtime table: instance,solver,time (seconds or 'timeout')")
    parser.add_argument("--cutoff", type=int, required=cutoff_required, metavar="S",
                        help="cutoff time in seconds")
    parser.add_argument("--scale", type=int, default=1, metavar="N",
                        help="time units per second for discretization (default 1)")


def _build_parser() -> _Parser:
    parser = _Parser(prog="portsched",
                     description="Solver portfolio scheduling from runtime data.")
    parser.add_argument("--version", action="version", version=f"portsched {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_opt = sub.add_parser("optimize", help="compute a coverage-maximal schedule")
    _add_matrix_args(p_opt)
    p_opt.add_argument("--units", type=int, default=1, help="processing units (default 1)")
    p_opt.add_argument("--norm", type=int, default=2, metavar="N",
                       help="tie-break norm exponent (default 2)")
    p_opt.add_argument("--norm-dir", choices=["min", "max"], default="min",
                       help="minimize or maximize the norm (default min)")
    p_opt.add_argument("--time-limit", type=float, default=None, metavar="S",
                       help="wall-clock budget for the search; best incumbent on expiry")
    p_opt.add_argument("--out", required=True, metavar="JSON",
                       help="where to write the schedule")

    p_align = sub.add_parser("align", help="order a schedule's solvers")
    _add_matrix_args(p_align, cutoff_required=False)
    p_align.add_argument("--schedule", required=True, metavar="JSON",
                         help="schedule to align (cutoff defaults from it)")
    p_align.add_argument("--mode", choices=["exact", "heu-opt", "heu-min", "random-expect"],
                         default="exact", help="alignment strategy (default exact)")
    p_align.add_argument("--seed", type=int, default=0,
                         help="RNG seed for random-expect sampling (default 0)")
    p_align.add_argument("--samples", type=int, default=10000,
                         help="samples for random-expect beyond the exact limit")
    p_align.add_argument("--time-limit", type=float, default=None, metavar="S",
                         help="wall-clock budget for the exact search")
    p_align.add_argument("--out", default=None, metavar="JSON",
                         help="where to write the aligned schedule")

    p_eval = sub.add_parser("evaluate", help="cross-validate systems on a runtime table")
    _add_matrix_args(p_eval)
    p_eval.add_argument("--folds", type=int, default=10, metavar="K",
                        help="number of cross-validation folds (default 10)")
    p_eval.add_argument("--seed", type=int, default=0, help="fold shuffle seed (default 0)")
    p_eval.add_argument("--systems", default=",".join(SYSTEMS), metavar="LIST",
                        help=f"comma-separated systems (default {','.join(SYSTEMS)})")
    p_eval.add_argument("--units", type=int, default=1, help="processing units (default 1)")
    p_eval.add_argument("--align", choices=list(ALIGNMENT_MODES), default="exact",
                        help="alignment used by trained schedules (default exact)")
    p_eval.add_argument("--train-cutoff-ratio", default=None, metavar="R",
                        help="comma-separated ratios in (0,1]: train at round(cutoff*R)")
    p_eval.add_argument("--report", required=True, metavar="CSV",
                        help="report CSV path; a JSON twin is written alongside")

    p_export = sub.add_parser("export-asp", help="emit ASP facts and bundled encodings")
    p_export.add_argument("--runtimes", metavar="CSV", help="runtime table to export")
    p_export.add_argument("--cutoff", type=int, metavar="S", help="cutoff time in seconds")
    p_export.add_argument("--scale", type=int, default=1, metavar="N",
                          help="time units per second (default 1)")
    p_export.add_argument("--units", type=int, default=1, help="units fact value (default 1)")
    p_export.add_argument("--schedule", metavar="JSON",
                          help="export this schedule as slice/3 facts instead")
    p_export.add_argument("--out", metavar="LP", help="fact file to write")
    p_export.add_argument("--encodings-dir", metavar="DIR",
                          help="also write the two bundled encodings here")

    p_run = sub.add_parser("run", help="execute a schedule against real solver commands")
    p_run.add_argument("--schedule", required=True, metavar="JSON",
                       help="schedule (with positions) to execute")
    p_run.add_argument("--commands", required=True, metavar="CONF",
                       help="TOML or JSON solver command configuration")
    p_run.add_argument("--instance", required=True, metavar="PATH",
                       help="problem instance passed to the commands")
    p_run.add_argument("--grace", type=float, default=1.0, metavar="S",
                       help="seconds between SIGTERM and SIGKILL (default 1.0)")
    p_run.add_argument("--unit-seconds", type=float, default=1.0, metavar="S",
                       help="wall-clock seconds per schedule time unit (default 1.0)")
    p_run.add_argument("--run-dir", default=None, metavar="DIR",
                       help="directory for captured solver output")
    p_run.add_argument("--out", default=None, metavar="JSON",
                       help="where to write the run result")
    return parser


def _cmd_optimize(args) -> int:
    matrix = load_runtimes(args.runtimes, args.cutoff, args.scale)
    config = OptimizerConfig(
        units=args.units,
        time_budget=args.time_limit,
        norm_exponent=args.norm,
        norm_direction=args.norm_dir,
    )
    result = optimize(matrix, config)
    Path(args.out).write_text(schedule_to_json(result.schedule), "utf-8")
    slices = " ".join(
        f"{s}:{result.schedule.slices[s]}@{result.schedule.unit_of[s]}"
        for s in result.schedule.scheduled_solvers()
    )
    print(f"schedule: {slices or '(empty)'}")
    print(
        f"solved {result.coverage}/{len(matrix.instances)} "
        f"(L^{args.norm}={result.norm}, "
        f"{'optimal' if result.optimal else 'budget expired, incumbent'})"
    )
    return EXIT_OK if result.optimal else EXIT_BUDGET


def _cmd_align(args) -> int:
    schedule, _ = schedule_from_json(Path(args.schedule).read_text("utf-8"))
    cutoff = args.cutoff if args.cutoff is not None else schedule.cutoff
    matrix = load_runtimes(args.runtimes, cutoff, args.scale)
    if matrix.cutoff != schedule.cutoff:
        raise DataError(
            f"schedule cutoff {schedule.cutoff} does not match table cutoff {matrix.cutoff}"
        )
    if args.mode == "random-expect":
        value = random_alignment_expectation(matrix, schedule, args.samples, args.seed)
        print(f"expected total time: {value}")
        return EXIT_OK
    optimal = True
    if args.mode == "exact":
        result = optimal_alignment(matrix, schedule, time_budget=args.time_limit)
        alignment, total, optimal = result.alignment, result.total_time, result.optimal
    elif args.mode == "heu-opt":
        alignment = heu_opt(matrix, schedule)
        total = None
    else:
        alignment = heu_min(schedule)
        total = None
    if total is None:
        total = total_time(matrix, schedule, alignment)
    if args.out:
        Path(args.out).write_text(schedule_to_json(schedule, alignment), "utf-8")
    orders = "; ".join(
        ",".join(alignment.for_unit(u))
        for u in range(1, schedule.units + 1)
        if alignment.for_unit(u)
    )
    print(f"alignment: {orders or '(empty)'}")
    print(f"total time: {total}" + ("" if optimal else " (budget expired, incumbent)"))
    return EXIT_OK if optimal else EXIT_BUDGET


def _cmd_evaluate(args) -> int:
    matrix = load_runtimes(args.runtimes, args.cutoff, args.scale)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    if not systems:
        raise DataError("no systems requested")
    folds = k_fold(matrix, args.folds, args.seed)
    config = EvalConfig(units=args.units, alignment=args.align)
    if args.train_cutoff_ratio is None:
        report = cross_validate(matrix, systems, folds, config)
    else:
        ratios = [float(r) for r in args.train_cutoff_ratio.split(",") if r.strip()]
        report = merge_reports(
            [reduced_cutoff_study(matrix, system, ratios, folds, config) for system in systems]
        )
    csv_path = Path(args.report)
    csv_path.write_text(report.to_csv(), "utf-8")
    csv_path.with_suffix(".json").write_text(report.to_json(), "utf-8")
    for row in report.rows:
        if row.fold is None:
            print(
                f"{row.system} (train cutoff {row.train_cutoff}): "
                f"{row.timeouts}/{row.instances} timeouts, PAR10 {float(row.par10):.2f}"
            )
    return EXIT_OK


def _cmd_export_asp(args) -> int:
    wrote_something = False
    if args.schedule:
        if not args.out:
            raise DataError("--schedule export requires --out")
        schedule, _ = schedule_from_json(Path(args.schedule).read_text("utf-8"))
        export = export_schedule_facts(schedule)
        Path(args.out).write_text(export.facts, "utf-8")
        Path(args.out + ".map.csv").write_text(export.mapping_csv(), "utf-8")
        print(f"wrote {args.out} ({len(schedule.scheduled_solvers())} slice facts)")
        wrote_something = True
    elif args.runtimes:
        if args.cutoff is None:
            raise DataError("--runtimes export requires --cutoff")
        if not args.out:
            raise DataError("--runtimes export requires --out")
        matrix = load_runtimes(args.runtimes, args.cutoff, args.scale)
        export = export_facts(matrix, args.units)
        Path(args.out).write_text(export.facts, "utf-8")
        Path(args.out + ".map.csv").write_text(export.mapping_csv(), "utf-8")
        print(
            f"wrote {args.out} "
            f"({len(matrix.instances)}x{len(matrix.solvers)} time facts)"
        )
        wrote_something = True
    if args.encodings_dir:
        directory = Path(args.encodings_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for name, text in bundled_encodings().items():
            target = directory / f"{name}.lp"
            target.write_text(text, "utf-8")
            print(f"wrote {target}")
        wrote_something = True
    if not wrote_something:
        raise DataError("nothing to export: pass --runtimes, --schedule or --encodings-dir")
    return EXIT_OK


def _cmd_run(args) -> int:
    schedule, alignment = schedule_from_json(Path(args.schedule).read_text("utf-8"))
    if alignment is None:
        alignment = Alignment.name_order(schedule)
    commands = load_commands(args.commands)
    result = execute_run(
        schedule,
        alignment,
        commands,
        args.instance,
        grace=args.grace,
        unit_seconds=args.unit_seconds,
        run_dir=args.run_dir,
    )
    text = result.to_json()
    if args.out:
        Path(args.out).write_text(text, "utf-8")
    print(text, end="")
    return EXIT_OK


_HANDLERS = {
    "optimize": _cmd_optimize,
    "align": _cmd_align,
    "evaluate": _cmd_evaluate,
    "export-asp": _cmd_export_asp,
    "run": _cmd_run,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (DataError, SizeGuardError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except PortschedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
