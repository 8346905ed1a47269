"""Command-line front end.

Subcommands: fit, eval, assign, hist, generate, synth, bench. Machine-
readable results go to stdout; progress and diagnostics go to stderr.
Exit codes: 0 success, 1 usage error, 2 data/format error, 3 fit failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from .config import DIST_EUCL, DIST_MAHA, FitConfig, SeedMode
from .datasets import PRESET_DEFAULT_N, PRESETS, MixtureSpec, load_dataset, save_dataset
from .em import learn
from .errors import DataError, FitError, ModelFormatError
from .inference import AssignMode, assign_batch, generate, raw_hist
from .likelihood import avg_log_p
from .model import GmmModel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_FIT = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; this CLI reserves 2 for data
    # errors and uses 1 for usage.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(parser, threads=True, seed=True):
    if threads:
        parser.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                            help="worker threads (default: all cores)")
    if seed:
        parser.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaussmix",
                     description="Diagonal-covariance Gaussian mixture modelling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a mixture to a CSV dataset")
    p.add_argument("--input", required=True, help="CSV dataset, one sample per row")
    p.add_argument("--output", required=True, help="where to write the model file")
    p.add_argument("--gaussians", type=int, required=True)
    p.add_argument("--dist", choices=[DIST_EUCL, DIST_MAHA], default=DIST_EUCL)
    p.add_argument("--seed-mode", choices=[m.value for m in SeedMode], default=SeedMode.STATIC_SUBSET.value)
    p.add_argument("--initial-model", help="existing model, required for --seed-mode keep-existing")
    p.add_argument("--km-iters", type=int, default=10)
    p.add_argument("--em-iters", type=int, default=5)
    p.add_argument("--var-floor", type=float, default=1e-10)
    p.add_argument("--em-tol", type=float, default=1e-10)
    p.add_argument("--print-progress", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="print the average log-likelihood of a dataset under a model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("assign", help="print the assignment index of every sample")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=[m.value for m in AssignMode], default=AssignMode.EUCL.value)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_assign)

    p = sub.add_parser("hist", help="print 'component,count,frac' assignment counts")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--mode", choices=[m.value for m in AssignMode], default=AssignMode.EUCL.value)
    _add_common(p, seed=False)
    p.set_defaults(func=cmd_hist)

    p = sub.add_parser("generate", help="sample a CSV dataset from a model")
    p.add_argument("--model", required=True)
    p.add_argument("-n", type=int, required=True, help="number of samples")
    p.add_argument("--output", help="output CSV (default: stdout)")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth", help="generate a synthetic CSV dataset")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=sorted(PRESETS))
    group.add_argument("--spec", help="JSON file with weights/means/scales")
    p.add_argument("-n", type=int, help="number of samples (presets have defaults)")
    p.add_argument("--output", help="output CSV (default: stdout)")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time identical fits over a list of thread counts")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--input", help="CSV dataset to fit")
    group.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("-n", type=int, help="samples to draw when using a preset")
    p.add_argument("--gaussians", type=int, default=20)
    p.add_argument("--dist", choices=[DIST_EUCL, DIST_MAHA], default=DIST_MAHA)
    p.add_argument("--km-iters", type=int, default=10)
    p.add_argument("--em-iters", type=int, default=10)
    p.add_argument("--var-floor", type=float, default=1e-10)
    p.add_argument("--threads-list", default="1,2,4", help="comma-separated thread counts; must include 1")
    _add_common(p, threads=False)
    p.set_defaults(func=cmd_bench)

    return parser


def _fit_config(args, n_threads=None) -> FitConfig:
    return FitConfig(
        n_gaus=args.gaussians,
        dist_mode=args.dist,
        seed_mode=SeedMode(getattr(args, "seed_mode", SeedMode.STATIC_SUBSET.value)),
        km_iter=args.km_iters,
        em_iter=args.em_iters,
        var_floor=args.var_floor,
        n_threads=n_threads if n_threads is not None else args.threads,
        rng_seed=args.seed,
        em_rel_tol=getattr(args, "em_tol", 1e-10),
        print_mode=getattr(args, "print_progress", False),
    )


def cmd_fit(args) -> int:
    X = load_dataset(args.input)
    config = _fit_config(args)
    init_model = None
    if config.seed_mode == SeedMode.KEEP_EXISTING:
        if not args.initial_model:
            raise UsageError("--seed-mode keep-existing requires --initial-model")
        init_model = GmmModel.load(args.initial_model)
    started = time.perf_counter()
    model, report = learn(X, config, init_model)
    elapsed = time.perf_counter() - started
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    model.save(args.output)
    final = report.final_log_likelihood
    if final is None:
        final = avg_log_p(X, model, n_threads=config.n_threads)
    print(f"avg_log_p {final:.17g}")
    print(f"seconds {elapsed:.3f}")
    return EXIT_OK


def cmd_eval(args) -> int:
    model = GmmModel.load(args.model)
    X = load_dataset(args.input)
    print(f"{avg_log_p(X, model, n_threads=args.threads):.17g}")
    return EXIT_OK


def cmd_assign(args) -> int:
    model = GmmModel.load(args.model)
    X = load_dataset(args.input)
    idx = assign_batch(X, model, AssignMode(args.mode), n_threads=args.threads)
    sys.stdout.write("\n".join(str(i) for i in idx) + "\n")
    return EXIT_OK


def cmd_hist(args) -> int:
    model = GmmModel.load(args.model)
    X = load_dataset(args.input)
    counts = raw_hist(X, model, AssignMode(args.mode), n_threads=args.threads)
    n = X.shape[0]
    for g, c in enumerate(counts):
        print(f"{g},{c},{c / n:.17g}")
    return EXIT_OK


def cmd_generate(args) -> int:
    model = GmmModel.load(args.model)
    if args.n < 1:
        raise UsageError("-n must be a positive integer")
    X = generate(model, args.n, args.seed)
    save_dataset(X, args.output if args.output else sys.stdout)
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.preset:
        spec = PRESETS[args.preset]()
        n = args.n if args.n is not None else PRESET_DEFAULT_N[args.preset]
    else:
        spec = MixtureSpec.from_json(args.spec)
        if args.n is None:
            raise UsageError("-n is required with --spec")
        n = args.n
    if n < 1:
        raise UsageError("-n must be a positive integer")
    X = spec.sample(n, args.seed)
    save_dataset(X, args.output if args.output else sys.stdout)
    return EXIT_OK


def _parse_thread_list(text: str) -> list[int]:
    try:
        threads = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"invalid thread list {text!r}") from None
    if not threads or any(t < 1 for t in threads):
        raise UsageError("thread list must contain positive integers")
    if 1 not in threads:
        raise UsageError("thread list must include 1 (the speedup baseline)")
    return threads


def cmd_bench(args) -> int:
    threads = _parse_thread_list(args.threads_list)
    if args.input:
        X = load_dataset(args.input)
    else:
        preset = args.preset or "bench"
        spec = PRESETS[preset]()
        n = args.n if args.n is not None else PRESET_DEFAULT_N[preset]
        if n < 1:
            raise UsageError("-n must be a positive integer")
        X = spec.sample(n, args.seed)

    timings: dict[int, float] = {}
    for t in threads:
        config = _fit_config(args, n_threads=t)
        started = time.perf_counter()
        model, report = learn(X, config)
        timings[t] = time.perf_counter() - started
        final = report.final_log_likelihood
        if final is None:
            final = avg_log_p(X, model, n_threads=t)
        km_share = report.km_seconds / max(report.km_seconds + report.em_seconds, 1e-12)
        print(f"threads={t} seconds={timings[t]:.6f} avg_log_p={final:.17g} km_share={km_share:.3f}",
              file=sys.stderr)

    print("threads,seconds,speedup")
    base = timings[1]
    for t in threads:
        print(f"{t},{timings[t]:.6f},{base / timings[t]:.4f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gaussmix: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FitError as exc:
        print(f"gaussmix: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (DataError, ModelFormatError) as exc:
        print(f"gaussmix: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"gaussmix: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"gaussmix: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
