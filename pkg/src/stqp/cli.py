"""Command-line interface.

Subcommands: generate, solve, simulate, moments, check-tail (plus a
debugging brute-force `oracle` subcommand).  All randomness flows through
--seed; no entropy is taken from the environment.

Exit codes: 0 success (certified for solve), 2 usage or I/O error,
3 success without a certificate, 4 support-cap capacity error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .defect import MatrixFormatError, read_matrix, write_matrix
from .ensembles import (
    EndpointPower,
    GOE,
    GaussianWigner,
    HeavyTail,
    ShiftedExponential,
    sample_matrix,
)
from .kkt import CapacityError
from .oracle import brute_force_stqp
from .solver import solve
from .stats import (
    moment_closed_form,
    moment_mc,
    moment_quadrature,
    simulate,
    tail_condition_report,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNCERTIFIED = 3
EXIT_CAPACITY = 4

_ENSEMBLES = ("goe", "wigner", "heavy-tail", "endpoint-power", "shifted-exponential")


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _size_grid(text: str) -> list[int]:
    try:
        grid = [int(p) for p in text.split(",") if p]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size grid {text!r}") from exc
    if not grid:
        raise argparse.ArgumentTypeError("size grid is empty")
    return grid


def _add_ensemble_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("ensemble")
    group.add_argument("--ensemble", choices=_ENSEMBLES, default="goe")
    group.add_argument("--gamma2", type=float, default=1.0, help="wigner diagonal variance")
    group.add_argument("--sigma2", type=float, default=0.5, help="wigner off-diagonal variance")
    group.add_argument("--alpha-d", type=float, default=2.0, help="heavy-tail diagonal exponent")
    group.add_argument("--alpha-o", type=float, default=3.0, help="heavy-tail off-diagonal exponent")
    group.add_argument("--endpoint", type=float, default=0.0, metavar="A", help="lower endpoint -A")
    group.add_argument("--beta-d", type=float, default=1.0, help="endpoint-power diagonal exponent")
    group.add_argument("--beta-o", type=float, default=2.0, help="endpoint-power off-diagonal exponent")
    group.add_argument("--lambda-d", type=float, default=1.0, help="shifted-exponential diagonal rate")
    group.add_argument("--lambda-o", type=float, default=1.0, help="shifted-exponential off-diagonal rate")


def _ensemble_from_args(args, parser: argparse.ArgumentParser):
    try:
        if args.ensemble == "goe":
            return GOE()
        if args.ensemble == "wigner":
            return GaussianWigner(args.gamma2, args.sigma2)
        if args.ensemble == "heavy-tail":
            return HeavyTail(args.alpha_d, args.alpha_o)
        if args.ensemble == "endpoint-power":
            return EndpointPower(args.endpoint, args.beta_d, args.beta_o)
        return ShiftedExponential(args.endpoint, args.lambda_d, args.lambda_o)
    except ValueError as exc:
        parser.error(str(exc))


def _print_json(obj) -> None:
    print(json.dumps(obj))


def _cmd_generate(args, parser) -> int:
    spec = _ensemble_from_args(args, parser)
    q = sample_matrix(spec, args.n, args.seed)
    try:
        write_matrix(q, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _print_json({"ensemble": spec.describe(), "n": args.n, "seed": args.seed, "out": args.out})
    return EXIT_OK


def _load_instance(args, parser):
    if args.input:
        return read_matrix(args.input)
    if args.n is None:
        parser.error("either --input or --ensemble/--n/--seed is required")
    spec = _ensemble_from_args(args, parser)
    return sample_matrix(spec, args.n, args.seed)


def _cmd_solve(args, parser) -> int:
    try:
        q = _load_instance(args, parser)
    except (OSError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        sol = solve(q, support_cap=args.support_cap)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    _print_json(sol.to_json_dict())
    return EXIT_OK if sol.certified_exact_dnn else EXIT_UNCERTIFIED


def _cmd_simulate(args, parser) -> int:
    spec = _ensemble_from_args(args, parser)
    sink = None
    out_fh = None
    if args.out:
        try:
            out_fh = open(args.out, "w", encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        sink = lambda rec: out_fh.write(json.dumps(rec.to_json_dict()) + "\n")
    try:
        summary = simulate(
            spec,
            args.n,
            args.trials,
            args.seed,
            solve=args.solve,
            threads=args.threads,
            record_sink=sink,
        )
    finally:
        if out_fh is not None:
            out_fh.close()
    if args.json:
        _print_json(summary.to_json_dict())
    else:
        d = summary.to_json_dict()
        for key in (
            "n",
            "trials",
            "freq_large_component",
            "freq_large_stderr",
            "freq_certified",
            "mean_q4",
            "five_tree_bound",
            "goe_theory_bound",
        ):
            print(f"{key:22s} {d[key]}")
    return EXIT_OK


def _cmd_moments(args, parser) -> int:
    spec = _ensemble_from_args(args, parser)
    if args.method == "closed-form" and args.ensemble != "shifted-exponential":
        parser.error("--method closed-form requires --ensemble shifted-exponential")
    reports = []
    for n in args.n_grid:
        if args.method == "quadrature":
            reports.append(moment_quadrature(spec, n, args.power))
        elif args.method == "mc":
            reports.append(moment_mc(spec, n, args.power, args.trials, args.seed, threads=args.threads))
        else:
            try:
                reports.append(moment_closed_form(spec, n, args.power))
            except ValueError as exc:
                parser.error(str(exc))
    if args.json:
        _print_json([r.to_json_dict() for r in reports])
    else:
        print(f"{'n':>8} {'power':>5} {'method':>12} {'estimate':>14} {'stderr':>12} {'n^5*E':>14}")
        for r in reports:
            stderr = f"{r.stderr:.5g}" if r.stderr is not None else "-"
            scaled = f"{r.scaled:.8g}" if r.scaled is not None else "-"
            print(f"{r.n:>8} {r.s:>5} {r.method:>12} {r.estimate:>14.8g} {stderr:>12} {scaled:>14}")
    return EXIT_OK


def _cmd_check_tail(args, parser) -> int:
    spec = _ensemble_from_args(args, parser)
    try:
        report = tail_condition_report(spec, args.n_grid, method=args.method, trials=args.trials, seed=args.seed)
    except ValueError as exc:
        parser.error(str(exc))
    if args.json:
        _print_json(report.to_json_dict())
    else:
        print(f"{'n':>8} {'n^5*E[q^4]':>16}")
        for n, v in zip(report.n_grid, report.scaled_values):
            print(f"{n:>8} {v:>16.8g}")
        print(f"theoretical: {report.theoretical}")
        print(f"empirical:   {report.empirical} (slope {report.slope:.3f})")
        print(f"consistent:  {'yes' if report.consistent else 'no'}")
    return EXIT_OK


def _cmd_oracle(args, parser) -> int:
    try:
        q = _load_instance(args, parser)
    except (OSError, MatrixFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        sol = brute_force_stqp(q, cap=args.cap)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    _print_json(
        {
            "value": sol.value,
            "support": [i + 1 for i in sol.support],
            "weights": [float(sol.x[i]) for i in sol.support],
            "near_tie": sol.near_tie,
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stqp",
        description="Exact random-instance StQP solver and defect-graph statistics",
    )
    sub = parser.add_subparsers(
        dest="command",
        required=True,
        metavar="{generate,solve,simulate,moments,check-tail}",
    )

    p = sub.add_parser("generate", help="sample an instance and write the matrix file")
    _add_ensemble_flags(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="solve an instance and print the solution JSON")
    _add_ensemble_flags(p)
    p.add_argument("--input", help="matrix file (overrides inline generation)")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--support-cap", type=_positive_int, default=25)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="defect-graph Monte Carlo at one size")
    _add_ensemble_flags(p)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--solve", action="store_true", help="also solve every trial")
    p.add_argument("--out", help="write one TrialRecord JSON per line")
    p.add_argument("--json", action="store_true", help="summary as JSON instead of text")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("moments", help="estimate E[F_O(m_n)^s] on a size grid")
    _add_ensemble_flags(p)
    p.add_argument("--power", type=int, default=4)
    p.add_argument("--method", choices=("mc", "quadrature", "closed-form"), default="quadrature")
    p.add_argument("--n-grid", type=_size_grid, required=True)
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_moments)

    p = sub.add_parser("check-tail", help="classify the decay of n^5*E[F_O(m_n)^4]")
    _add_ensemble_flags(p)
    p.add_argument("--n-grid", type=_size_grid, required=True)
    p.add_argument("--method", choices=("quadrature", "mc"), default="quadrature")
    p.add_argument("--trials", type=_positive_int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_check_tail)

    # debugging helper, omitted from the subcommand metavar on purpose
    p = sub.add_parser("oracle")
    _add_ensemble_flags(p)
    p.add_argument("--input")
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=_positive_int, default=16)
    p.set_defaults(func=_cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


def main_entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    main_entry()
