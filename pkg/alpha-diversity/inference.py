"""
Data-facing layer: species-label ingestion, EPPF maximum likelihood and
unseen-species prediction.
"""

import io
import logging
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Literal, Optional, TextIO, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError
from scipy import optimize

from config import get_settings
from errors import DegenerateSampleError, DomainError, EmptyInputError, IngestError, LimitExceededError
from models import (
    FitBounds,
    FitResult,
    ModelParams,
    Partition,
    PosteriorContext,
    SeedSpec,
    SpeciesSample,
    UnseenEstimate,
)
from partition_laws import pmf_esf, pmf_unseen
from samplers import sample_posterior_diversity_many

logger = logging.getLogger(__name__)

Source = Union[str, Path, TextIO]
Format = Literal["csv", "jsonl", "plain"]
FORMATS = ("csv", "jsonl", "plain")
CSV_HEADER = "label"


# ============================================================================
# Ingestion
# ============================================================================


class LabelRecord(BaseModel):
    label: Union[str, int]


class SampleReader:
    """Reads one observation label per record and reduces the labels to a partition."""

    def __init__(self, fmt: Format = "plain"):
        if fmt not in FORMATS:
            raise DomainError(f"unknown input format {fmt!r}; expected one of {FORMATS}")
        self.fmt = fmt

    def read_text(self, source: Source) -> str:
        if hasattr(source, "read"):
            return source.read()
        if str(source) == "-":
            return sys.stdin.read()
        try:
            return Path(source).read_text(encoding="utf-8")
        except OSError as e:
            raise IngestError(f"cannot read {source}: {e}") from e

    def parse_plain(self, text: str) -> List[str]:
        return [line.strip() for line in text.splitlines() if line.strip()]

    def parse_jsonl(self, text: str) -> List[str]:
        labels = []
        for number, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = LabelRecord.model_validate_json(line)
            except ValidationError as e:
                raise IngestError(f"expected an object with a 'label' field ({e.errors()[0]['msg']})",
                                  line=number) from None
            label = str(record.label)
            if not label:
                raise IngestError("empty label", line=number)
            labels.append(label)
        return labels

    def parse_csv(self, text: str) -> List[str]:
        """Single label column; a first row reading 'label' is taken as the header."""
        try:
            frame = pd.read_csv(io.StringIO(text), header=None, dtype=str,
                                keep_default_na=False, skip_blank_lines=True)
        except pd.errors.EmptyDataError:
            return []
        except pd.errors.ParserError as e:
            found = re.search(r"line (\d+)", str(e))
            raise IngestError(f"expected a single label column ({e})",
                              line=int(found.group(1)) if found else None) from None
        if frame.shape[1] != 1:
            raise IngestError(f"expected a single label column, found {frame.shape[1]}", line=1)
        labels = [value.strip() for value in frame.iloc[:, 0].tolist()]
        if labels and labels[0].lower() == CSV_HEADER:
            labels = labels[1:]
        for number, label in enumerate(labels, start=1):
            if not label:
                raise IngestError("empty label", line=number)
        return labels

    def read(self, source: Source) -> SpeciesSample:
        text = self.read_text(source)
        labels = getattr(self, f"parse_{self.fmt}")(text)
        if not labels:
            raise EmptyInputError("input contains no observations")
        return sample_from_labels(labels)


def sample_from_labels(labels: List[str]) -> SpeciesSample:
    counts = pd.Series(labels, dtype=str).value_counts(sort=False)
    partition = Partition.from_block_sizes(counts.to_numpy().tolist())
    logger.info(f"Ingested n={partition.n} observations of j={partition.j} species")
    return SpeciesSample(n=partition.n, partition=partition,
                         label_counts={str(k): int(v) for k, v in counts.items()})


def ingest(source: Source, fmt: Format = "plain") -> SpeciesSample:
    return SampleReader(fmt).read(source)


def emit_labels(partition: Partition, fmt: Format = "plain") -> str:
    """Synthetic labels s1, s2, ... realising the partition, in the given format."""
    if fmt not in FORMATS:
        raise DomainError(f"unknown output format {fmt!r}")
    labels = []
    for index, size in enumerate(partition.block_sizes(), start=1):
        labels.extend([f"s{index}"] * size)
    if fmt == "csv":
        return pd.DataFrame({CSV_HEADER: labels}).to_csv(index=False, lineterminator="\n")
    if fmt == "jsonl":
        return "".join(LabelRecord(label=label).model_dump_json() + "\n" for label in labels)
    return "".join(label + "\n" for label in labels)


def write_sample(partition: Partition, path: Union[str, Path], fmt: Format = "plain") -> None:
    Path(path).write_text(emit_labels(partition, fmt), encoding="utf-8")


def context_from_sample(sample: SpeciesSample, params: ModelParams) -> PosteriorContext:
    return PosteriorContext(params=params, n=sample.n, j=sample.j)


# ============================================================================
# EPPF maximum likelihood
# ============================================================================


class EppfObjective:
    """Negative log EPPF in (alpha, s), s = log(theta + alpha)."""

    def __init__(self, partition: Partition, bounds: FitBounds):
        self.partition = partition
        self.bounds = bounds

    def to_params(self, x: np.ndarray) -> ModelParams:
        eps = self.bounds.epsilon
        alpha = float(np.clip(x[0], eps, 1.0 - eps))
        theta = min(math.exp(float(x[1])) - alpha, self.bounds.theta_max)
        return ModelParams(alpha=alpha, theta=max(theta, -alpha + eps))

    def __call__(self, x: np.ndarray) -> float:
        return -pmf_esf(self.to_params(x), self.partition)

    def box(self) -> List[tuple]:
        eps = self.bounds.epsilon
        return [(eps, 1.0 - eps), (math.log(eps), math.log(self.bounds.theta_max + 1.0))]

    def starts(self) -> List[np.ndarray]:
        count = self.bounds.starts
        alphas = np.linspace(0.15, 0.85, count) if count > 1 else np.array([0.5])
        thetas = np.geomspace(0.5, 50.0, count)[::-1] if count > 1 else np.array([1.0])
        return [np.array([a, math.log(t + a)]) for a, t in zip(alphas, thetas)]


def _at_boundary(params: ModelParams, bounds: FitBounds, tol: float = 1e-6) -> bool:
    eps = bounds.epsilon
    return (params.alpha <= eps + tol or params.alpha >= 1.0 - eps - tol
            or params.theta <= -params.alpha + eps + tol
            or params.theta >= bounds.theta_max * (1.0 - tol))


def fit_eppf(sample: SpeciesSample, bounds: Optional[FitBounds] = None, threads: int = 1) -> FitResult:
    """Maximise the EPPF over the box by bounded Nelder-Mead from several starts."""
    bounds = bounds or FitBounds()
    if sample.n < 2:
        raise DegenerateSampleError("fitting needs at least two observations")
    objective = EppfObjective(sample.partition, bounds)

    def solve(x0: np.ndarray):
        return optimize.minimize(objective, x0, method="Nelder-Mead", bounds=objective.box(),
                                 options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})

    starts = objective.starts()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(solve, starts))
    else:
        results = [solve(x0) for x0 in starts]

    best = min(results, key=lambda r: r.fun)
    params = objective.to_params(best.x)
    log_likelihood = pmf_esf(params, sample.partition)
    boundary = _at_boundary(params, bounds)
    logger.info(f"EPPF fit: alpha={params.alpha:.6f} theta={params.theta:.6f} "
                f"loglik={log_likelihood:.6f} converged={best.success} boundary={boundary}")
    return FitResult(params=params, log_likelihood=log_likelihood, converged=bool(best.success),
                     boundary_flag=boundary, n=sample.n, j=sample.j)


# ============================================================================
# Unseen species
# ============================================================================


def predict_unseen(ctx: PosteriorContext, m: int,
                   mode: Literal["auto", "exact", "asymptotic"] = "auto",
                   level: float = 0.95, mc_draws: int = 100_000,
                   seed: Optional[SeedSpec] = None, threads: int = 1) -> UnseenEstimate:
    """Estimate K_m^(n), the number of new species among m further draws.

    exact: moments and equal-tail interval of the posterior PMF.
    asymptotic: K_m^(n) ~ m**alpha S_{alpha,theta}(n,j), summarised from mc_draws draws.
    """
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    if not 0.0 < level < 1.0:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    limit = get_settings().exact_limit
    if mode == "auto":
        mode = "exact" if m <= limit else "asymptotic"
    lo_p, hi_p = (1.0 - level) / 2.0, (1.0 + level) / 2.0

    if mode == "exact":
        if m > limit:
            raise LimitExceededError(
                f"m = {m} exceeds the exact limit {limit}; use the asymptotic mode (or raise PITMAN_EXACT_LIMIT)"
            )
        pmf = pmf_unseen(ctx, m)
        return UnseenEstimate(m=m, mode="exact", mean=pmf.mean(), median=float(pmf.quantile(0.5)),
                              credible_interval=(float(pmf.quantile(lo_p)), float(pmf.quantile(hi_p))),
                              level=level, context=ctx)
    if mode != "asymptotic":
        raise DomainError(f"unknown mode {mode!r}")

    draws = sample_posterior_diversity_many(ctx, mc_draws, seed or SeedSpec(), threads)
    scale = m ** ctx.params.alpha
    lo, hi = np.quantile(draws, [lo_p, hi_p])
    return UnseenEstimate(m=m, mode="asymptotic", mean=scale * float(draws.mean()),
                          median=scale * float(np.median(draws)),
                          credible_interval=(scale * float(lo), scale * float(hi)),
                          level=level, mc_draws=mc_draws, context=ctx)
