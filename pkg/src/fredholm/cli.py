"""Command-line entry point: ``fredholm <command> [options]``.

Exit status: 0 for a solution (or a clean run), 2 when a fixed vector was
found, 1 on any error.
"""

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from .errors import FredholmError
from .lab import lemma_suite
from .problem import (
    bap_report,
    dump_report,
    error_report,
    parse_problem,
    psido_report,
    run,
    split_report,
    with_overrides,
)

EXIT_SOLUTION = 0
EXIT_ERROR = 1
EXIT_FIXED_VECTOR = 2


def _exit_code(report):
    return {"solution": EXIT_SOLUTION, "fixed_vector": EXIT_FIXED_VECTOR}.get(report["outcome"], EXIT_ERROR)


def _load(args):
    try:
        text = Path(args.problem).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileNotFoundError(f"cannot read {args.problem}: {exc.strerror}") from None
    spec = parse_problem(text)
    if args.theta is not None or args.tol is not None or args.resolution is not None:
        spec = with_overrides(spec, args.theta, args.tol, args.resolution)
    return spec


def _cmd_solve(args):
    report = run(_load(args))
    return report, _exit_code(report)


def _cmd_psido(args):
    report = psido_report(_load(args), steps=args.steps)
    return report, _exit_code(report)


def _cmd_split(args):
    report = split_report(_load(args))
    return report, EXIT_ERROR if report["outcome"] == "error" else EXIT_SOLUTION


def _cmd_bap(args):
    report = bap_report(_load(args), args.N)
    ok = report["outcome"] != "error" and report["sound"]
    return report, EXIT_SOLUTION if ok else EXIT_ERROR


def _cmd_lemma(args):
    summary = lemma_suite(cases=args.cases, seed=args.seed)
    report = {"outcome": "lemma_suite", "seed": args.seed, **asdict(summary)}
    ok = summary.lemma_failures == 0 and summary.corollary_failures == 0
    return report, EXIT_SOLUTION if ok else EXIT_ERROR


def _positive_int(text):
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def build_parser():
    parser = argparse.ArgumentParser(prog="fredholm", description="Solve (I - T) x = y or find a fixed vector of T.")
    sub = parser.add_subparsers(dest="command", required=True)

    def problem_command(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("problem", help="problem file (JSON)")
        p.add_argument("--theta", type=float, help="target bound for ||K|| (default 0.5)")
        p.add_argument("--tol", type=float, help="residual tolerance (default 1e-8)")
        p.add_argument("--resolution", type=int, help="Fourier N or grid size")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.set_defaults(func=func)
        return p

    problem_command("solve", _cmd_solve, "full pipeline with certificate")
    problem_command("split", _cmd_split, "splitting certificate only")
    bap = problem_command("bap-probe", _cmd_bap, "tail measurements for a Fourier-basis operator")
    bap.add_argument("--N", type=_positive_int, nargs="+", default=[8, 16, 32, 64])
    psido = problem_command("psido", _cmd_psido, "circle pipeline with Sobolev readings and bootstrap")
    psido.add_argument("--steps", type=int, default=4)

    lemma = sub.add_parser("lemma-suite", help="random rank checks on finite matrices")
    lemma.add_argument("--cases", type=_positive_int, default=1000)
    lemma.add_argument("--seed", type=int, default=0)
    lemma.add_argument("--output")
    lemma.set_defaults(func=_cmd_lemma)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        report, code = args.func(args)
    except (FredholmError, FileNotFoundError) as exc:
        report, code = error_report(exc), EXIT_ERROR
    report.setdefault("timing", {"seconds": time.perf_counter() - t0})
    text = dump_report(report) if report.get("outcome") != "lemma_suite" else json.dumps(report, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
