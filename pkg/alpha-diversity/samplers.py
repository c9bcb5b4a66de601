"""
Random-variate generation for the partition model.

Every sampler takes a SeedSpec. Bulk draws are produced in fixed-size chunks,
chunk c using the stream (master_seed, stream_id, c), so the output does not
depend on how many worker threads evaluate the chunks.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np

from errors import DomainError
from models import ModelParams, Partition, PosteriorContext, SeedSpec
from partition_laws import LogPmf, log_enb_mass, log_gfc_row
from stable import ml_law

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
ENB_TAIL = 1e-14
ENB_MAX_SUPPORT = 2 ** 24
_U53 = float(2 ** 53)


def rng_for(seed: SeedSpec, *substream: int) -> np.random.Generator:
    """PCG64 generator for (master_seed, stream_id, *substream)."""
    sequence = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.stream_id, *substream))
    return np.random.Generator(np.random.PCG64(sequence))


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform draws on the open interval (0, 1)."""
    return (rng.integers(0, 2 ** 53, size=size) + 0.5) / _U53


def draw_many(draw: Callable[[np.random.Generator, int], np.ndarray], reps: int,
              seed: SeedSpec, threads: int = 1) -> np.ndarray:
    """Run draw(rng, count) over CHUNK_SIZE chunks and concatenate in chunk order."""
    if reps < 1:
        raise DomainError(f"reps must be positive, got {reps}")
    counts = [min(CHUNK_SIZE, reps - start) for start in range(0, reps, CHUNK_SIZE)]

    def run(chunk: int) -> np.ndarray:
        return np.asarray(draw(rng_for(seed, chunk), counts[chunk]))

    if threads <= 1 or len(counts) == 1:
        parts = [run(c) for c in range(len(counts))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, range(len(counts))))
    return np.concatenate(parts)


# ============================================================================
# Partitions
# ============================================================================


def _seat(params: ModelParams, n: int, rng: np.random.Generator) -> Partition:
    alpha, theta = params.alpha, params.theta
    owner = np.empty(n, dtype=np.int64)
    owner[0] = 0
    sizes = [1]
    for i in range(1, n):
        j = len(sizes)
        if rng.random() * (theta + i) < theta + j * alpha:
            owner[i] = j
            sizes.append(1)
            continue
        # existing block: uniform earlier customer, accepted w.p. (n_b - alpha) / n_b
        while True:
            b = int(owner[rng.integers(i)])
            if rng.random() * sizes[b] < sizes[b] - alpha:
                break
        owner[i] = b
        sizes[b] += 1
    return Partition.from_block_sizes(sizes)


def sample_partition(params: ModelParams, n: int, seed: SeedSpec) -> Partition:
    """Sequential seating: new block w.p. (theta + j alpha)/(theta + i), block b w.p. (n_b - alpha)/(theta + i)."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return _seat(params, n, rng_for(seed))


def sample_partitions(params: ModelParams, n: int, reps: int, seed: SeedSpec,
                      threads: int = 1) -> list[Partition]:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        out = np.empty(count, dtype=object)
        for r in range(count):
            out[r] = _seat(params, n, rng)
        return out

    return list(draw_many(draw, reps, seed, threads))


def sample_block_counts(params: ModelParams, n: int, reps: int, seed: SeedSpec,
                        threads: int = 1) -> np.ndarray:
    """K_n only: the block count is a Markov chain on its own, so replicates advance together."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    alpha, theta = params.alpha, params.theta

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        blocks = np.ones(count, dtype=np.int64)
        for i in range(1, n):
            blocks += rng.random(count) * (theta + i) < theta + blocks * alpha
        return blocks

    return draw_many(draw, reps, seed, threads)


# ============================================================================
# Continuous laws
# ============================================================================


def _ml_draws(params: ModelParams, rng: np.random.Generator, count: int) -> np.ndarray:
    return ml_law(params).quantile_interp(open_uniform(rng, count))


def sample_ml(params: ModelParams, seed: SeedSpec, size: Optional[int] = None):
    """S_{alpha,theta} by inversion. A single draw is refined on the exact CDF."""
    rng = rng_for(seed)
    if size is None:
        return ml_law(params).quantile(float(open_uniform(rng)))
    return _ml_draws(params, rng, size)


def sample_ml_many(params: ModelParams, reps: int, seed: SeedSpec, threads: int = 1) -> np.ndarray:
    ml_law(params).quantile_interp(np.array([0.5]))  # build the shared grid before fanning out
    return draw_many(lambda rng, count: _ml_draws(params, rng, count), reps, seed, threads)


def _posterior_draws(ctx: PosteriorContext, rng: np.random.Generator, count: int) -> np.ndarray:
    b = rng.beta(ctx.beta_a, ctx.beta_b, size=count)
    return b * _ml_draws(ctx.params.shifted(ctx.n), rng, count)


def sample_posterior_diversity(ctx: PosteriorContext, seed: SeedSpec, size: Optional[int] = None):
    """Beta(j + theta/alpha, n/alpha - j) times an independent S_{alpha,theta+n}."""
    rng = rng_for(seed)
    if size is None:
        b = float(rng.beta(ctx.beta_a, ctx.beta_b))
        return b * ml_law(ctx.params.shifted(ctx.n)).quantile(float(open_uniform(rng)))
    return _posterior_draws(ctx, rng, size)


def sample_posterior_diversity_many(ctx: PosteriorContext, reps: int, seed: SeedSpec,
                                    threads: int = 1) -> np.ndarray:
    ml_law(ctx.params.shifted(ctx.n)).quantile_interp(np.array([0.5]))
    return draw_many(lambda rng, count: _posterior_draws(ctx, rng, count), reps, seed, threads)


def sample_gem_weights(params: ModelParams, k: int, seed: SeedSpec) -> np.ndarray:
    """First k stick-breaking weights, V_i ~ Beta(1 - alpha, theta + i alpha)."""
    if k < 1:
        raise DomainError(f"k must be positive, got {k}")
    rng = rng_for(seed)
    i = np.arange(1, k + 1)
    v = rng.beta(1.0 - params.alpha, params.theta + i * params.alpha)
    remaining = np.concatenate([[1.0], np.cumprod(1.0 - v)[:-1]])
    return v * remaining


# ============================================================================
# Compound representations
# ============================================================================


@lru_cache(maxsize=64)
def trunc_enb_pmf(alpha: float, q: float) -> LogPmf:
    """Zero-truncated ENB(alpha, q) on 1..x_max, x_max the first point with cumulative mass >= 1 - 1e-14."""
    block, start, masses = 1024, 1, []
    total = 0.0
    while True:
        chunk = np.exp(log_enb_mass(alpha, q, np.arange(start, start + block)))
        masses.append(chunk)
        cumulative = total + np.cumsum(chunk)
        hit = np.flatnonzero(cumulative >= 1.0 - ENB_TAIL)
        if hit.size:
            masses[-1] = chunk[: hit[0] + 1]
            break
        total = float(cumulative[-1])
        start += block
        if start > ENB_MAX_SUPPORT:
            logger.warning(f"ENB({alpha}, {q}) truncated at {start - 1} with mass {total:.15f}")
            break
        block *= 2
    probs = np.concatenate(masses)
    return LogPmf.from_log_weights(1, np.log(probs))


def _enb_draws(alpha: float, q: float, rng: np.random.Generator, count: int) -> np.ndarray:
    pmf = trunc_enb_pmf(alpha, q)
    cdf = pmf.cdf()
    idx = np.searchsorted(cdf, open_uniform(rng, count), side="left")
    return pmf.support_min + np.minimum(idx, len(cdf) - 1)


def sample_trunc_enb(alpha: float, q: float, seed: SeedSpec, size: Optional[int] = None):
    """Inversion on the cumulative ENB masses."""
    draws = _enb_draws(alpha, q, rng_for(seed), 1 if size is None else size)
    return int(draws[0]) if size is None else draws


def sample_compound(alpha: float, q: float, z: float, seed: SeedSpec,
                    size: Optional[int] = None) -> Tuple:
    """(N, S) with N ~ Poisson(z [1 - (1-q)**alpha]) and S the sum of N iid ENB(alpha, q) draws."""
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    rng = rng_for(seed)
    lam = z * -math.expm1(alpha * math.log1p(-q))
    counts = rng.poisson(lam, size=1 if size is None else size)
    draws = _enb_draws(alpha, q, rng, int(counts.sum()))
    owner = np.repeat(np.arange(counts.size), counts)
    totals = np.bincount(owner, weights=draws, minlength=counts.size).astype(np.int64)
    if size is None:
        return int(counts[0]), int(totals[0])
    return counts, totals


def _rho_draws(alpha: float, n: int, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    row = log_gfc_row(alpha, n)[1:]
    log_w = row[None, :] + np.log(z)[:, None] * np.arange(1, n + 1)[None, :]
    log_w -= log_w.max(axis=1, keepdims=True)
    cdf = np.cumsum(np.exp(log_w), axis=1)
    u = open_uniform(rng, z.size) * cdf[:, -1]
    return 1 + np.minimum((cdf < u[:, None]).sum(axis=1), n - 1)


def _representation_draws(params: ModelParams, n: int, rng: np.random.Generator, count: int) -> np.ndarray:
    s = _ml_draws(params, rng, count)
    g = rng.gamma(params.theta + n, size=count)
    return _rho_draws(params.alpha, n, s * g ** params.alpha, rng)


def sample_blocks_via_representation(params: ModelParams, n: int, seed: SeedSpec,
                                     size: Optional[int] = None):
    """K_n through z = S_{alpha,theta} G**alpha, G ~ Gamma(theta + n), then k ~ rho(.; alpha, n, z)."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    draws = _representation_draws(params, n, rng_for(seed), 1 if size is None else size)
    return int(draws[0]) if size is None else draws


def sample_blocks_via_representation_many(params: ModelParams, n: int, reps: int, seed: SeedSpec,
                                          threads: int = 1) -> np.ndarray:
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    ml_law(params).quantile_interp(np.array([0.5]))
    return draw_many(lambda rng, count: _representation_draws(params, n, rng, count), reps, seed, threads)
