"""Command-line entry point.

Subcommands: generate | run | trials | bounds | probe | bench.  Exit codes:
0 success, 1 parameter error, 2 input/validation error.  All floating-point
values are printed with 12 significant digits so identical configurations
produce byte-identical output.
"""

from __future__ import annotations

import argparse
import sys

from . import generators, harness, mechanisms, stream as streammod
from .errors import ModelViolationError, ParameterError, StreamFormatError
from .noise import RandomSource
from .stream import Stream, distinct_counts, total_flippancy


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


MECHANISMS = (
    "known-k",
    "unknown-k",
    "unknown-k-all",
    "zero",
    "laplace-T",
    "gaussian-T",
    "continual-likes",
)


def _add_mechanism_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mechanism", required=True, choices=MECHANISMS)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--K", type=int, help="flippancy budget (required for known-k)")
    p.add_argument("--T", type=int, help="override the stream header's T")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=("live", "zero"), default="live")


def _make_run_fn(args, T: int):
    """Build a (src, stream) -> RunResult callable from CLI flags."""
    name = args.mechanism
    if name == "zero":
        return lambda src, s: mechanisms.run_zero(s)
    if name == "continual-likes":
        return lambda src, s: mechanisms.run_continual_likes(args.eps, T, s, src)
    pp = mechanisms.PrivacyParams(args.eps, args.delta)
    if name == "known-k":
        if args.K is None:
            raise ParameterError("--K is required for mechanism known-k")
        return lambda src, s: mechanisms.run_known_k(pp, args.beta, T, args.K, s, src)
    if name == "unknown-k":
        return lambda src, s: mechanisms.run_unknown_k(pp, args.beta, T, s, src)
    if name == "unknown-k-all":
        return lambda src, s: mechanisms.run_unknown_k_all_bounds(
            pp, args.beta, T, s, src
        )
    if name == "laplace-T":
        return lambda src, s: mechanisms.run_laplace_baseline(pp, T, s, src)
    if name == "gaussian-T":
        return lambda src, s: mechanisms.run_gaussian_baseline(pp, T, s, src)
    raise ParameterError(f"unknown mechanism {name!r}")


def _load_stream(path: str, args) -> tuple[Stream, int]:
    s = streammod.read_file(path)
    report = streammod.validate(s)
    if not report.ok:
        item, t = report.violation
        raise ModelViolationError(
            f"stream violates the likes model (item {item} at step {t})"
        )
    T = args.T if getattr(args, "T", None) else s.T
    return s, T


def cmd_generate(args) -> int:
    if args.family == "blocks":
        if args.m is None or args.J is None or args.Tprime is None:
            raise ParameterError("blocks requires --m, --J, --Tprime")
        J = tuple(int(v) for v in args.J.split(","))
        s = generators.blocks_stream(args.d or args.m, args.m, J, args.Tprime)
    elif args.family == "multiupdate":
        if args.m is None or args.I is None or args.Tprime is None:
            raise ParameterError("multiupdate requires --m, --I, --Tprime")
        I = tuple(int(v) for v in args.I.split(","))
        s = generators.multiupdate_stream(args.d or args.m, args.m, I, args.Tprime)
    elif args.family == "marginals":
        if args.file is None:
            raise ParameterError("marginals requires --file")
        table = generators.read_marginals_file(args.file)
        if args.variant == "singleton":
            s = generators.marginals_to_stream_singleton(table)
        else:
            s = generators.marginals_to_stream_multi(table)
    elif args.family == "random":
        if args.d is None or args.T is None:
            raise ParameterError("random requires --d and --T")
        s = generators.random_stream(
            d=args.d,
            T=args.T,
            model=args.model,
            singleton=args.singleton,
            target_K=args.K,
            seed=args.seed,
        )
    else:
        raise ParameterError(f"unknown generator family {args.family!r}")
    streammod.write_file(s, args.output)
    summary = total_flippancy(s)
    print(f"wrote {args.output} d={s.d} T={s.T} model={s.model} K={summary.total_K}")
    return 0


def cmd_run(args) -> int:
    s, T = _load_stream(args.input, args)
    run_fn = _make_run_fn(args, T)
    src = RandomSource(args.seed, args.noise)
    result = run_fn(src, s)
    truth = distinct_counts(s)
    lines = ["t,output,truth,abs_error"]
    for t, (out, q) in enumerate(zip(result.outputs, truth), start=1):
        lines.append(f"{t},{_fmt(out)},{q},{_fmt(abs(out - q))}")
    report = harness.evaluate(result, s)
    lines.append(
        f"# max_error={_fmt(report.max_error)}"
        f" aborts={1 if result.abort_step is not None else 0}"
        f" instances={result.instances}"
    )
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_trials(args) -> int:
    s, T = _load_stream(args.input, args)
    run_fn = _make_run_fn(args, T)
    summary = harness.run_trials(
        run_fn, s, args.trials, args.seed, mode=args.noise, bound=args.bound
    )
    print(f"n_trials={summary.n_trials}")
    for q, v in sorted(summary.quantiles.items()):
        print(f"max_error_q{int(q * 100)}={_fmt(v)}")
    if summary.pass_fraction is not None:
        print(f"bound={_fmt(summary.bound)}")
        print(f"pass_fraction={_fmt(summary.pass_fraction)}")
    return 0


def cmd_bounds(args) -> int:
    pp = mechanisms.PrivacyParams(args.eps, args.delta)
    spec = harness.theoretical_bound(
        pp, args.beta, args.T, args.K, args.d, regime=args.regime
    )
    for name, value in spec.branches.items():
        print(f"branch_{name}={_fmt(value)}")
    print(f"min={_fmt(spec.minimum)}")
    return 0


def cmd_probe(args) -> int:
    x, T = _load_stream(args.input, args)
    y, _ = _load_stream(args.neighbor, args)
    run_fn = _make_run_fn(args, T)
    result = harness.privacy_probe(
        run_fn,
        x,
        y,
        bin_width=args.bin_width,
        n_samples=args.samples,
        base_seed=args.seed,
        delta=args.delta,
    )
    print(f"status={result.status}")
    if result.eps_hat is not None:
        print(f"eps_hat={_fmt(result.eps_hat)}")
    print(f"n_bins={result.n_bins}")
    print(f"eligible_bins={result.eligible_bins}")
    print(f"projection_step={result.projection_step}")
    return 0


def cmd_bench(args) -> int:
    s, T = _load_stream(args.input, args)
    run_fn = _make_run_fn(args, T)
    report = harness.throughput_bench(run_fn, s, seed=args.seed, mode=args.noise)
    print(f"updates={report.updates}")
    print(f"steps={report.steps}")
    print(f"seconds={_fmt(report.seconds)}")
    print(f"updates_per_second={_fmt(report.updates_per_second)}")
    print(f"laplace_draws={report.laplace_draws}")
    print(f"laplace_calls={report.laplace_calls}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpdistinct")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a .dstream file")
    gen.add_argument("family", choices=("blocks", "multiupdate", "marginals", "random"))
    gen.add_argument("--d", type=int, default=None)
    gen.add_argument("--m", type=int)
    gen.add_argument("--J", help="comma-separated block indices (blocks)")
    gen.add_argument("--I", help="comma-separated time steps (multiupdate)")
    gen.add_argument("--Tprime", type=int)
    gen.add_argument("--file", help="marginals table file")
    gen.add_argument("--variant", choices=("singleton", "multi"), default="singleton")
    gen.add_argument("--T", type=int)
    gen.add_argument("--model", choices=("general", "likes"), default="likes")
    gen.add_argument("--singleton", action="store_true")
    gen.add_argument("--K", type=int, default=0)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_generate)

    run = sub.add_parser("run", help="run a mechanism over a stream, emit CSV")
    run.add_argument("--input", required=True)
    run.add_argument("-o", "--output")
    _add_mechanism_flags(run)
    run.set_defaults(func=cmd_run)

    trials = sub.add_parser("trials", help="multi-trial error statistics")
    trials.add_argument("--input", required=True)
    trials.add_argument("--trials", type=int, default=100)
    trials.add_argument("--bound", type=float)
    _add_mechanism_flags(trials)
    trials.set_defaults(func=cmd_trials)

    bounds = sub.add_parser("bounds", help="theoretical error branches")
    bounds.add_argument("--eps", type=float, required=True)
    bounds.add_argument("--delta", type=float, default=0.0)
    bounds.add_argument("--beta", type=float, required=True)
    bounds.add_argument("--T", type=int, required=True)
    bounds.add_argument("--K", type=int, required=True)
    bounds.add_argument("--d", type=int, required=True)
    bounds.add_argument("--regime", choices=("known", "unknown"), default="known")
    bounds.set_defaults(func=cmd_bounds)

    probe = sub.add_parser("probe", help="empirical privacy witness")
    probe.add_argument("--input", required=True, help="stream x")
    probe.add_argument("--neighbor", required=True, help="stream y")
    probe.add_argument("--samples", type=int, default=10**5)
    probe.add_argument("--bin-width", type=float, default=1.0)
    _add_mechanism_flags(probe)
    probe.set_defaults(func=cmd_probe)

    bench = sub.add_parser("bench", help="throughput benchmark")
    bench.add_argument("--input", required=True)
    _add_mechanism_flags(bench)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return 1
    except (StreamFormatError, ModelViolationError, FileNotFoundError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
