"""
alpha-diversity command line.

Usage:
  python cli.py pmf --law blocks --alpha 0.5 --theta 1 --n 2
  python cli.py pmf --law rho --alpha 0.5 --n 2 --z 1
  python cli.py pmf --law unseen --alpha 0.5 --theta 1 --n 10 --j 4 --m 12
  python cli.py pmf --law esf --alpha 0.5 --theta 1 --sizes 2,1,1
  python cli.py sample --what ml --alpha 0.5 --theta 0 --reps 100000 --seed 7
  python cli.py fit --input labels.txt --input-format plain
  python cli.py rate --mode prior --alpha 0.5 --theta 6 --check
  python cli.py predict --alpha 0.5 --theta 1 --n 10 --j 4 --m 2000

Exit codes: 0 success, 1 numerical or input failure, 2 usage error,
3 acceptance check failed.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

import pandas as pd
from pydantic import BaseModel, ValidationError

from berry_esseen import (
    DEFAULT_POSTERIOR_GRID,
    DEFAULT_PRIOR_GRID,
    check_acceptance,
    rate_experiment_posterior,
    rate_experiment_prior,
)
from config import get_settings
from errors import AcceptanceError, PitmanError
from inference import FORMATS, fit_eppf, ingest, predict_unseen
from logging_conf import configure_logging
from models import FitBounds, ModelParams, Partition, PosteriorContext, SeedSpec
from partition_laws import pmf_blocks, pmf_esf, pmf_rho, pmf_unseen
from reports import BaseReport, DrawReport, PmfReport, RateReportWriter, format_float
from samplers import (
    sample_block_counts,
    sample_blocks_via_representation_many,
    sample_ml_many,
    sample_partitions,
    sample_posterior_diversity_many,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_CHECK = 0, 1, 2, 3


class UsageError(Exception):
    """Flag combination rejected before any computation."""


def _require(args: argparse.Namespace, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name, None) is None]
    if missing:
        raise UsageError(f"missing required flag(s) for this command: {', '.join(missing)}")


def _positive(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value < 1:
            raise UsageError(f"--{name} must be at least 1, got {value}")


def _parse_grid(text: str) -> List[int]:
    try:
        grid = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"--grid must be comma separated integers, got {text!r}") from None
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError(f"--grid must be strictly increasing positive integers, got {text!r}")
    return grid


class DiversityManager:
    """One method per subcommand; each returns the process exit code."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.seed = SeedSpec(master_seed=args.seed, stream_id=0)
        self.threads = args.threads or get_settings().threads

    # ------------------------------------------------------------------ output

    def emit_table(self, frame: pd.DataFrame, metadata: dict) -> None:
        if (self.args.format or "csv") == "json":
            text = json.dumps({"metadata": metadata, "rows": json.loads(frame.to_json(orient="records",
                                                                                         double_precision=15))},
                              indent=2) + "\n"
        else:
            text = BaseReport.render_csv(frame, metadata)
        BaseReport.write_text(text, self.args.out)

    def emit_model(self, model: BaseModel) -> None:
        if (self.args.format or "json") == "csv":
            text = BaseReport.render_csv(pd.json_normalize(model.model_dump(mode="json")))
        else:
            text = BaseReport.render_json(model)
        BaseReport.write_text(text, self.args.out)

    def params(self) -> ModelParams:
        _require(self.args, "alpha", "theta")
        return ModelParams(alpha=self.args.alpha, theta=self.args.theta)

    def context(self) -> PosteriorContext:
        _require(self.args, "n", "j")
        return PosteriorContext(params=self.params(), n=self.args.n, j=self.args.j)

    # ------------------------------------------------------------------ commands

    def pmf(self) -> int:
        args = self.args
        _positive(args, "n", "m")
        meta = {"law": args.law}
        if args.law == "blocks":
            _require(args, "n")
            params = self.params()
            pmf = pmf_blocks(params, args.n)
            meta.update(alpha=format_float(params.alpha), theta=format_float(params.theta), n=args.n)
        elif args.law == "rho":
            _require(args, "alpha", "n", "z")
            if not args.z > 0:
                raise UsageError("--z must be positive")
            pmf = pmf_rho(args.alpha, args.n, args.z)
            meta.update(alpha=format_float(args.alpha), n=args.n, z=format_float(args.z))
        elif args.law == "unseen":
            _require(args, "m")
            ctx = self.context()
            pmf = pmf_unseen(ctx, args.m, route=args.route)
            meta.update(alpha=format_float(ctx.params.alpha), theta=format_float(ctx.params.theta),
                        n=ctx.n, j=ctx.j, m=args.m, route=args.route)
        else:
            params = self.params()
            if args.sizes is not None:
                try:
                    partition = Partition.from_block_sizes([int(s) for s in args.sizes.split(",")])
                except ValueError as e:
                    raise UsageError(f"--sizes: {e}") from None
            elif args.input is not None:
                partition = ingest(args.input, args.input_format).partition
            else:
                raise UsageError("--law esf needs --sizes or --input")
            meta.update(alpha=format_float(params.alpha), theta=format_float(params.theta),
                        n=partition.n, j=partition.j)
            self.emit_table(PmfReport.single(pmf_esf(params, partition)), meta)
            return EXIT_OK
        self.emit_table(PmfReport.frame(pmf), meta)
        return EXIT_OK

    def sample(self) -> int:
        args = self.args
        _positive(args, "n")
        if args.reps < 1:
            raise UsageError("--reps must be at least 1")
        meta = {"what": args.what, "seed": args.seed, "reps": args.reps}
        if args.what == "ml":
            params = self.params()
            frame = DrawReport.values(sample_ml_many(params, args.reps, self.seed, self.threads))
        elif args.what == "posterior-diversity":
            ctx = self.context()
            params = ctx.params
            meta.update(n=ctx.n, j=ctx.j)
            frame = DrawReport.values(sample_posterior_diversity_many(ctx, args.reps, self.seed, self.threads))
        elif args.what == "blocks-representation":
            _require(args, "n")
            params = self.params()
            meta["n"] = args.n
            frame = DrawReport.values(
                sample_blocks_via_representation_many(params, args.n, args.reps, self.seed, self.threads), "k")
        elif args.what == "blocks":
            _require(args, "n")
            params = self.params()
            meta["n"] = args.n
            frame = DrawReport.values(sample_block_counts(params, args.n, args.reps, self.seed, self.threads), "k")
        else:
            _require(args, "n")
            params = self.params()
            meta["n"] = args.n
            frame = DrawReport.partitions(sample_partitions(params, args.n, args.reps, self.seed, self.threads))
        meta.update(alpha=format_float(params.alpha), theta=format_float(params.theta))
        self.emit_table(frame, meta)
        return EXIT_OK

    def fit(self) -> int:
        args = self.args
        _require(args, "input")
        sample = ingest(args.input, args.input_format)
        bounds = FitBounds(epsilon=args.epsilon, theta_max=args.theta_max, starts=args.starts)
        self.emit_model(fit_eppf(sample, bounds, threads=self.threads))
        return EXIT_OK

    def rate(self) -> int:
        args = self.args
        if args.mode == "prior":
            params = self.params()
            grid = _parse_grid(args.grid) if args.grid else list(DEFAULT_PRIOR_GRID)
            run = lambda: rate_experiment_prior(params, grid, threads=self.threads)
        else:
            ctx = self.context()
            if args.check and not ctx.theorem_scope:
                raise UsageError("--check needs theta > 0, n >= 5 and n/alpha - j >= 1 in posterior mode")
            grid = _parse_grid(args.grid) if args.grid else list(DEFAULT_POSTERIOR_GRID)
            run = lambda: rate_experiment_posterior(ctx, grid, threads=self.threads)

        report = run()
        BaseReport.write_text(RateReportWriter.render(report, args.format or "csv"), args.out)
        if args.check:
            band = None
            if args.slope_lo is not None or args.slope_hi is not None:
                alpha = report.params.alpha
                band = (args.slope_lo if args.slope_lo is not None else -alpha - 0.15,
                        args.slope_hi if args.slope_hi is not None else -alpha + 0.15)
            violations = check_acceptance(report, band, args.ratio_max)
            if violations:
                raise AcceptanceError(violations)
            logger.info("Acceptance check passed")
        return EXIT_OK

    def predict(self) -> int:
        args = self.args
        _require(args, "m")
        _positive(args, "n", "m")
        if not 0.0 < args.level < 1.0:
            raise UsageError("--level must lie in (0, 1)")
        if args.reps < 1:
            raise UsageError("--reps must be at least 1")
        estimate = predict_unseen(self.context(), args.m, mode=args.mode, level=args.level,
                                  mc_draws=args.reps, seed=self.seed, threads=self.threads)
        self.emit_model(estimate)
        return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: PITMAN_THREADS or CPU count)")
    common.add_argument("--format", choices=["csv", "json"], default=None, help="output format")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--alpha", type=float)
    params.add_argument("--theta", type=float)
    params.add_argument("--n", type=int)
    params.add_argument("--j", type=int)

    parser = argparse.ArgumentParser(prog="cli.py", description="Poisson-Dirichlet partition laws")
    sub = parser.add_subparsers(dest="command", required=True)

    pmf = sub.add_parser("pmf", parents=[common, params], help="exact discrete laws")
    pmf.add_argument("--law", choices=["blocks", "esf", "rho", "unseen"], required=True)
    pmf.add_argument("--z", type=float)
    pmf.add_argument("--m", type=int)
    pmf.add_argument("--route", choices=["mixture", "noncentral"], default="mixture")
    pmf.add_argument("--sizes", help="block sizes, comma separated (--law esf)")
    pmf.add_argument("--input", help="label file (--law esf)")
    pmf.add_argument("--input-format", choices=FORMATS, default="plain")

    sample = sub.add_parser("sample", parents=[common, params], help="random draws")
    sample.add_argument("--what", required=True,
                        choices=["partition", "blocks", "ml", "posterior-diversity", "blocks-representation"])
    sample.add_argument("--reps", type=int, default=1)

    fit = sub.add_parser("fit", parents=[common], help="EPPF maximum likelihood")
    fit.add_argument("--input", required=True)
    fit.add_argument("--input-format", choices=FORMATS, default="plain")
    fit.add_argument("--epsilon", type=float, default=1e-4)
    fit.add_argument("--theta-max", type=float, default=1e4)
    fit.add_argument("--starts", type=int, default=5)

    rate = sub.add_parser("rate", parents=[common, params], help="Kolmogorov-distance rate experiment")
    rate.add_argument("--mode", choices=["prior", "posterior"], default="prior")
    rate.add_argument("--grid", help="strictly increasing sizes, comma separated")
    rate.add_argument("--check", action="store_true", help="exit 3 unless the acceptance bands hold")
    rate.add_argument("--slope-lo", type=float)
    rate.add_argument("--slope-hi", type=float)
    rate.add_argument("--ratio-max", type=float, default=10.0)

    predict = sub.add_parser("predict", parents=[common, params], help="unseen-species prediction")
    predict.add_argument("--m", type=int)
    predict.add_argument("--mode", choices=["auto", "exact", "asymptotic"], default="auto")
    predict.add_argument("--level", type=float, default=0.95)
    predict.add_argument("--reps", type=int, default=100_000, help="Monte Carlo draws (asymptotic mode)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging()
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be at least 1")

    manager = DiversityManager(args)
    command = getattr(manager, args.command)
    try:
        return command()
    except UsageError as e:
        parser.error(str(e))
    except ValidationError as e:
        parser.error(f"invalid parameters: {e.errors()[0]['msg']}")
    except AcceptanceError as e:
        for violation in e.violations:
            print(f"CHECK FAILED: {violation}", file=sys.stderr)
        return EXIT_CHECK
    except PitmanError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
