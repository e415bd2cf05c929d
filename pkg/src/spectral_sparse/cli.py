"""Command line interface: `spectral-sparse <subcommand> [flags]`.

Exit codes: 0 when every trial completed, 1 when some (algorithm, trial) pairs
failed, 2 for usage, configuration, parse and I/O errors.
"""

from pathlib import Path
import argparse
import logging
import math
import sys

from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from .config import ALGORITHMS, ExperimentConfig
from .experiments import (
    BenchReport, recover_single, run_cs_bench, run_deblur_bench, run_rate_check,
    run_success_curve,
)
from .results import ResultRow, summarize
from .problems import BlurSpec, load_image_csv, make_cs_instance, make_deblur_instance
from .tuning import AlphaRule

__all__ = ["build_parser", "main"]

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2

_RUNNERS = {
    "cs-bench": ("cs_bench", run_cs_bench),
    "deblur-bench": ("deblur_bench", run_deblur_bench),
    "success-curve": ("success_curve", run_success_curve),
    "rate-check": ("rate_check", run_rate_check),
    "recover": ("recover_single", None),
}

_RULES = ("order_delta", "oder_delta", "discrepancy", "rate_two_thirds", "rate_one_half",
          "rate_four_thirds", "rate_linear")


def _size(text: str) -> tuple[int, int]:
    m, _, n = text.lower().partition("x")
    try:
        return int(m), int(n or m)
    except ValueError:
        raise argparse.ArgumentTypeError(f'"{text}" is not a size like 200x200.') from None


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="JSON experiment configuration.")
    parser.add_argument("--seed", type=int, help="Global seed (default: config, $SPECTRAL_SPARSE_SEED, 0).")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--snr-db", type=float)
    rule = parser.add_mutually_exclusive_group()
    rule.add_argument("--alpha", type=float, help="Fixed regularization parameter.")
    rule.add_argument("--alpha-rule", choices=_RULES, help="Parameter choice rule for all algorithms.")
    parser.add_argument("--success-threshold", type=float)
    parser.add_argument("--out", type=Path, dest="output_dir", help="Output directory.")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--algorithms", nargs="+", choices=ALGORITHMS)
    parser.add_argument("--max-iters", type=int)
    timing = parser.add_mutually_exclusive_group()
    timing.add_argument("--timing", dest="timing", action="store_const", const="wall")
    timing.add_argument("--no-timing", dest="timing", action="store_const", const="off",
                        help="Write time_ms as 0 for byte-identical reruns.")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-sparse",
        description="Sparse recovery through nonlinear SVD regularization and iterative thresholding.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    cmd = commands.add_parser("cs-bench", help="Gaussian compressive sensing benchmark.")
    _common(cmd)
    cmd.add_argument("--sizes", nargs="+", type=_size, help="Operator sizes like 200x200.")

    cmd = commands.add_parser("deblur-bench", help="Gaussian deblurring benchmark.")
    _common(cmd)
    cmd.add_argument("--image-sizes", nargs="+", type=int)
    cmd.add_argument("--taus", nargs="+", type=float)
    cmd.add_argument("--band", type=int)
    cmd.add_argument("--image", type=Path, dest="image_path", help="Grayscale image as CSV.")
    cmd.add_argument("--svd-cache", type=Path, help="Archive of precomputed singular systems.")

    cmd = commands.add_parser("success-curve", help="Success rate against the support size.")
    _common(cmd)
    cmd.add_argument("--family", choices=("cs", "deblur"))
    cmd.add_argument("--sizes", nargs=1, type=_size)
    cmd.add_argument("--supports", nargs="+", type=int)
    cmd.add_argument("--svd-cache", type=Path)

    cmd = commands.add_parser("rate-check", help="Convergence rates of l1-SVD on synthetics.")
    _common(cmd)

    cmd = commands.add_parser("recover", help="Recover x from stored K and y.")
    _common(cmd)
    cmd.add_argument("--operator", type=Path, help="K as CSV.")
    cmd.add_argument("--data", type=Path, help="y as CSV.")
    cmd.add_argument("--instance", type=Path, help="Directory written by the generate command.")
    cmd.add_argument("--delta", type=float, help="Noise level for rules that need one.")

    cmd = commands.add_parser("generate", help="Write a problem instance as CSV files.")
    cmd.add_argument("family", choices=("cs", "deblur"))
    cmd.add_argument("--size", type=_size, default=(200, 200), help="m x n of a cs instance.")
    cmd.add_argument("--s", type=int, help="Nonzeros of a cs instance (default 0.1·m).")
    cmd.add_argument("--n", type=int, default=32, help="Image side length.")
    cmd.add_argument("--tau", type=float, default=0.7)
    cmd.add_argument("--band", type=int)
    cmd.add_argument("--image", type=Path, dest="image_path")
    cmd.add_argument("--sparsity", type=float, default=0.1, help="Ratio of nonzero pixels.")
    cmd.add_argument("--snr-db", type=float, default=80.0)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--out", type=Path, required=True)
    cmd.add_argument("-v", "--verbose", action="count", default=0)
    return parser


def _configure_logging(verbosity: int):
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def _config(args: argparse.Namespace) -> ExperimentConfig:
    experiment, _ = _RUNNERS[args.command]
    rule = None
    if args.alpha is not None:
        rule = AlphaRule.fixed(args.alpha)
    elif args.alpha_rule is not None:
        rule = AlphaRule(kind=args.alpha_rule)
    overrides = {
        "experiment": experiment,
        "seed": args.seed,
        "trials": args.trials,
        "snr_db": args.snr_db,
        "alpha_rule": rule,
        "success_threshold": args.success_threshold,
        "output_dir": args.output_dir,
        "workers": args.workers,
        "algorithms": args.algorithms,
        "max_iters": args.max_iters,
        "timing": args.timing,
    }
    for name in ("sizes", "image_sizes", "taus", "band", "image_path", "svd_cache",
                 "family", "supports"):
        overrides[name] = getattr(args, name, None)
    return ExperimentConfig.load(args.config, **overrides)


def _show(out: Console, report: BenchReport):
    if report.rows and isinstance(report.rows[0], ResultRow):
        table = Table("algorithm", "m", "n", "trials", "median Rerror", "median ms", "success")
        for row in summarize(report.rows):
            table.add_row(
                row["algorithm"], str(row["m"]), str(row["n"]), str(row["trials"]),
                f"{row['median_rerror']:.3e}", f"{row['median_time_ms']:.2f}",
                f"{row['success_rate']:.0%}",
            )
        out.print(table)
    elif report.rows and "slope" in report.rows[0]:
        table = Table("regime", "rule", "slope", "R²", "expected", "reproduces")
        for row in report.rows:
            table.add_row(
                row["regime"], row["rule"], f"{row['slope']:.3f}", f"{row['r_squared']:.4f}",
                f"{row['expected_slope']:.3f}", "[green]yes" if row["reproduces"] else "[red]no",
            )
        out.print(table)
    for name, path in report.files.items():
        out.print(f"  {name:24s} → {path}")


def _generate(args: argparse.Namespace, out: Console) -> int:
    if args.family == "cs":
        m, n = args.size
        instance = make_cs_instance(m, n, args.s, args.snr_db, args.seed)
    else:
        spec = BlurSpec(args.n, args.band, args.tau)
        image = None if args.image_path is None else load_image_csv(args.image_path, args.n)
        with out.status(f"Building the {args.n}² x {args.n}² blur operator..."):
            instance = make_deblur_instance(spec, image, args.snr_db, args.seed, args.sparsity)
    instance.save(args.out)
    snr = "inf" if math.isinf(instance.snr_db) else f"{instance.snr_db:g}"
    out.print(
        f"Wrote {args.family} instance {instance.K.shape[0]}x{instance.K.shape[1]} "
        f"(s={instance.sparsity}, snr={snr} dB, δ={instance.delta:.3e}) to {args.out}."
    )
    return EXIT_OK


def _run(args: argparse.Namespace, out: Console) -> int:
    if args.command == "generate":
        return _generate(args, out)
    config = _config(args)
    _, runner = _RUNNERS[args.command]
    with out.status(f"Running {config.experiment} ({config.trials} trials)..."):
        if runner is None:
            report = recover_single(config, args.operator, args.data, args.instance, args.delta)
        else:
            report = runner(config)
    _show(out, report)
    if report.ok:
        out.print("[green]Ok.")
        return EXIT_OK
    err = Console(stderr=True)
    err.print(f"[red]Failed: {len(report.failures)} (algorithm, trial) pairs.")
    for failure in report.failures:
        err.print(f"  {failure}", markup=False, highlight=False, soft_wrap=True)
    return EXIT_PARTIAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    _configure_logging(args.verbose)
    out = Console()
    try:
        return _run(args, out)
    except (OSError, ValueError, LookupError) as exc:
        Console(stderr=True).print(f"[red]Failed: {escape(str(exc))}", highlight=False, soft_wrap=True)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
