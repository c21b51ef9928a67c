"""Command-line front end.

Subcommands: solve, analyze, trace, generate, simulate.  ``analyze`` maps
its verdict onto the exit code (0 converges, 2 diverges, 3 inconclusive)
so CI scripts can gate on it; every command exits 1 on a file or
validation problem.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, engine, generate, network
from .model import InvalidModelError, build_factor_graph, load_model, save_model
from .oracle import dense_posterior

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGES = 2
EXIT_INCONCLUSIVE = 3

_INIT_CHOICES = {
    "zero": engine.InitStrategy.zero,
    "L": engine.InitStrategy.lower_bound,
    "U": engine.InitStrategy.upper_bound,
}


def _fmt(value: float) -> str:
    return format(value, ".12g")


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", type=Path, help="model file to read")
    parser.add_argument("--tol", type=float, default=1e-10, help="convergence tolerance")
    parser.add_argument("--max-iters", type=int, default=10000, help="sweep/tick budget")
    parser.add_argument("--init", choices=sorted(_INIT_CHOICES), default="zero",
                        help="initial message precisions")
    parser.add_argument("--seed", type=int, help="seed for randomized commands")
    parser.add_argument("--out", type=Path, help="output file path")
    parser.add_argument("--oracle", action="store_true",
                        help="also print the dense solution and deviations")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gbpkit",
        description="Gaussian belief propagation with convergence certification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run message passing and print beliefs")
    _common_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("analyze", help="print a convergence certificate")
    _common_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("trace", help="write per-sweep convergence-rate CSV")
    _common_flags(p)
    p.add_argument("--compare-inits", action="store_true",
                   help="write one trace per init in {zero, L, U}")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("generate", help="write a random model file")
    _common_flags(p)
    p.add_argument("--kind", choices=generate.KINDS, required=True)
    p.add_argument("--size", type=int, required=True, help="number of variables")
    p.add_argument("--coeff-range", type=float, nargs=2, default=(-2.0, 2.0),
                   metavar=("LOW", "HIGH"))
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run the agent network")
    _common_flags(p)
    p.add_argument("--schedule", choices=(network.SCHEDULE_SYNCHRONOUS,
                                          network.SCHEDULE_RANDOM_SEQUENTIAL),
                   default=network.SCHEDULE_SYNCHRONOUS)
    p.add_argument("--log", type=Path, help="write the per-message event log CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def _require_model(args):
    if args.model is None:
        raise ValueError(f"{args.command}: --model is required")
    return load_model(args.model)


def _print_beliefs(beliefs: engine.BeliefSet, posterior=None) -> None:
    if posterior is None:
        print(f"{'variable':<12} {'mean':>20} {'variance':>20}")
        for vid in beliefs.means:
            print(f"{vid:<12} {_fmt(beliefs.means[vid]):>20} {_fmt(beliefs.variances[vid]):>20}")
        return
    print(f"{'variable':<12} {'mean':>20} {'variance':>20} {'oracle_mean':>20} {'oracle_var':>20}")
    worst_mean = 0.0
    worst_var = 0.0
    for vid in beliefs.means:
        exact_mean = posterior.mean_of(vid)
        exact_var = posterior.variance_of(vid)
        worst_mean = max(worst_mean, abs(beliefs.means[vid] - exact_mean))
        worst_var = max(worst_var, abs(beliefs.variances[vid] - exact_var))
        print(
            f"{vid:<12} {_fmt(beliefs.means[vid]):>20} {_fmt(beliefs.variances[vid]):>20}"
            f" {_fmt(exact_mean):>20} {_fmt(exact_var):>20}"
        )
    print(f"max |mean - oracle_mean|: {_fmt(worst_mean)}")
    print(f"max |variance - oracle_var|: {_fmt(worst_var)}")


def cmd_solve(args) -> int:
    model = _require_model(args)
    graph = build_factor_graph(model)
    result = engine.run(
        graph, model,
        strategy=_INIT_CHOICES[args.init](),
        tolerance=args.tol,
        max_iters=args.max_iters,
    )
    _print_beliefs(result.beliefs, dense_posterior(model) if args.oracle else None)
    print(f"status: {result.status} after {result.state.iteration} sweeps")
    return EXIT_OK


def cmd_analyze(args) -> int:
    model = _require_model(args)
    graph = build_factor_graph(model)
    cert = analysis.certify(graph, model, tolerance=args.tol)
    cycles = ", ".join(str(c) for c in cert.topology.component_cycles)
    print(f"topology: {cert.topology.kind} (cycles per component: {cycles})")
    print(f"graph: {len(graph.variable_ids)} variables, {len(graph.factor_ids)} factors, "
          f"{len(graph.fv_edges)} edges")
    if cert.bounds.lower:
        lo = cert.bounds.lower.values()
        hi = cert.bounds.upper.values()
        print(f"precision bounds: lower in [{_fmt(min(lo))}, {_fmt(max(lo))}], "
              f"upper in [{_fmt(min(hi))}, {_fmt(max(hi))}]")
    print(f"fixed point reached in {cert.fixed_point.iterations} iterations")
    print(f"mean-update spectral radius: {_fmt(cert.mean_spectral_radius)}")
    kind = "walk-summable" if cert.walk_summability.is_walk_summable else "not walk-summable"
    print(f"walk-summability radius: {_fmt(cert.walk_summability.radius)} ({kind})")
    print(f"verdict: {cert.describe()}")
    if cert.verdict == analysis.VERDICT_CONVERGES:
        return EXIT_OK
    if cert.verdict == analysis.VERDICT_DIVERGES:
        return EXIT_DIVERGES
    return EXIT_INCONCLUSIVE


def cmd_trace(args) -> int:
    model = _require_model(args)
    graph = build_factor_graph(model)
    out = args.out if args.out is not None else Path("trace.csv")
    if args.compare_inits:
        for name in ("zero", "L", "U"):
            points = analysis.rate_trace(
                graph, model, _INIT_CHOICES[name](), tolerance=args.tol,
                max_iters=args.max_iters,
            )
            path = out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
            path.write_text(analysis.trace_to_csv(points), encoding="utf-8")
            print(f"wrote {path} ({len(points)} rows, init {name}, "
                  f"final distance {_fmt(points[-1].distance)})")
        return EXIT_OK
    points = analysis.rate_trace(
        graph, model, _INIT_CHOICES[args.init](), tolerance=args.tol,
        max_iters=args.max_iters,
    )
    out.write_text(analysis.trace_to_csv(points), encoding="utf-8")
    print(f"wrote {out} ({len(points)} rows, init {args.init}, "
          f"final distance {_fmt(points[-1].distance)})")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.seed is None:
        raise ValueError("generate: --seed is required")
    if args.out is None:
        raise ValueError("generate: --out is required")
    model = generate.generate_model(args.kind, args.size, args.seed, tuple(args.coeff_range))
    save_model(model, args.out)
    print(f"wrote {args.out} (kind {args.kind}, {len(model.variables)} variables, "
          f"{len(model.factors)} factors, seed {args.seed})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _require_model(args)
    if args.schedule == network.SCHEDULE_RANDOM_SEQUENTIAL:
        if args.seed is None:
            raise ValueError("simulate: --seed is required for the random-sequential schedule")
        schedule = network.Schedule.random_sequential(args.seed)
    else:
        schedule = network.Schedule.synchronous()
    result = network.simulate(
        model, schedule, tolerance=args.tol, max_ticks=args.max_iters,
        log_path=args.log,
    )
    _print_beliefs(result.beliefs, dense_posterior(model) if args.oracle else None)
    print(f"status: {result.status} after {result.ticks} ticks "
          f"({result.messages_sent} messages)")
    if args.log is not None:
        print(f"wrote {args.log}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidModelError as err:
        print("error: invalid model", file=sys.stderr)
        for violation in err.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_ERROR
    except FileNotFoundError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, RuntimeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


def run_main() -> None:
    raise SystemExit(main())
