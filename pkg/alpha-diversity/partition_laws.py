"""
Exact finite-n partition laws under PD(alpha, theta).

Every law is returned as a LogPmf: log-probabilities over a contiguous
integer window, normalised once by a single max-subtraction.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Literal, Optional

import numpy as np
from scipy import integrate, special, stats

from config import get_settings
from errors import DomainError, NormalizationError
from models import ModelParams, Partition, PosteriorContext
from specfun import GfcTable, central_row, central_table, gfc_table, log_rising_factorial_seq
from stable import log_tilted_moment

logger = logging.getLogger(__name__)

SHARED_TABLE_MAX = 2048
POISSON_TAIL = 1e-14
MIXTURE_CHUNK = 256
MIXTURE_Z_MAX = 750.0


# ============================================================================
# LogPmf
# ============================================================================


@dataclass(frozen=True)
class LogPmf:
    """Discrete law on {support_min, ..., support_min + len(log_probs) - 1}."""
    support_min: int
    log_probs: np.ndarray

    def __post_init__(self):
        values = np.array(self.log_probs, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise NormalizationError("a LogPmf needs a nonempty one-dimensional support")
        tol = get_settings().pmf_tol
        total = special.logsumexp(values)
        if not abs(total) <= tol:
            raise NormalizationError(f"log-probabilities sum to exp({total:.3e}), tolerance {tol:.0e}")
        if np.any(values > tol):
            raise NormalizationError("log-probability above zero")
        values.setflags(write=False)
        object.__setattr__(self, "log_probs", values)

    @classmethod
    def from_log_weights(cls, support_min: int, log_weights: np.ndarray) -> "LogPmf":
        weights = np.asarray(log_weights, dtype=float)
        return cls(support_min=support_min, log_probs=weights - special.logsumexp(weights))

    @classmethod
    def checked(cls, support_min: int, log_probs: np.ndarray) -> "LogPmf":
        """Accept probabilities that already sum to one, then remove the rounding residue."""
        values = np.asarray(log_probs, dtype=float)
        total = special.logsumexp(values)
        tol = get_settings().pmf_tol
        if not abs(total) <= tol:
            raise NormalizationError(f"probabilities sum to {math.exp(total):.12g}, not 1")
        return cls(support_min=support_min, log_probs=values - total)

    @property
    def support_max(self) -> int:
        return self.support_min + len(self.log_probs) - 1

    def support(self) -> np.ndarray:
        return np.arange(self.support_min, self.support_max + 1)

    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs)

    def log_prob(self, k: int) -> float:
        if k < self.support_min or k > self.support_max:
            return -math.inf
        return float(self.log_probs[k - self.support_min])

    def prob(self, k: int) -> float:
        return math.exp(self.log_prob(k))

    def cdf(self) -> np.ndarray:
        """P[K <= k] over the support."""
        return np.minimum(np.cumsum(self.probs()), 1.0)

    def mean(self) -> float:
        return float(np.dot(self.support(), self.probs()))

    def variance(self) -> float:
        mu = self.mean()
        return float(np.dot((self.support() - mu) ** 2, self.probs()))

    def quantile(self, p: float) -> int:
        """Smallest k with P[K <= k] >= p."""
        if not 0.0 <= p <= 1.0:
            raise DomainError(f"level must lie in [0, 1], got {p}")
        idx = int(np.searchsorted(self.cdf(), p - 1e-15, side="left"))
        return self.support_min + min(idx, len(self.log_probs) - 1)

    def aligned(self, lo: int, hi: int) -> np.ndarray:
        """Probabilities on {lo..hi}, zero outside the support."""
        out = np.zeros(hi - lo + 1)
        a, b = max(lo, self.support_min), min(hi, self.support_max)
        if a <= b:
            out[a - lo: b - lo + 1] = self.probs()[a - self.support_min: b - self.support_min + 1]
        return out

    def total_variation(self, other: "LogPmf") -> float:
        lo = min(self.support_min, other.support_min)
        hi = max(self.support_max, other.support_max)
        return 0.5 * float(np.sum(np.abs(self.aligned(lo, hi) - other.aligned(lo, hi))))


# ============================================================================
# Coefficient rows
# ============================================================================


def _bucket(n: int) -> int:
    size = 16
    while size < n:
        size *= 2
    return size


@lru_cache(maxsize=32)
def _large_row(alpha: float, n: int) -> np.ndarray:
    return central_row(alpha, n)


def log_gfc_row(alpha: float, n: int, table: Optional[GfcTable] = None) -> np.ndarray:
    """log C(n,k;alpha), k = 0..n; small n share one cached table per alpha."""
    if table is not None:
        return table.log_row(n)
    if n <= SHARED_TABLE_MAX:
        return central_table(alpha, _bucket(n)).log_row(n)
    return _large_row(alpha, n)


# ============================================================================
# Prior laws
# ============================================================================


def pmf_blocks(params: ModelParams, n: int, table: Optional[GfcTable] = None) -> LogPmf:
    """P[K_n = k] = [theta]_(k,alpha) / [theta]_(n,1) * C(n,k;alpha) / alpha**k, k = 1..n.

    The common factor theta is cancelled so theta <= 0 is handled:
    [theta]_(k,alpha)/[theta]_(n,1) = [theta+alpha]_(k-1,alpha)/[theta+1]_(n-1,1).
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if n == 1:
        return LogPmf(support_min=1, log_probs=np.array([0.0]))
    alpha, theta = params.alpha, params.theta
    ks = np.arange(1, n + 1)
    row = log_gfc_row(alpha, n, table)[1:]
    log_num = log_rising_factorial_seq(theta + alpha, n - 1, alpha)
    log_den = log_rising_factorial_seq(theta + 1.0, n - 1, 1.0)[-1]
    return LogPmf.checked(1, log_num + row - ks * math.log(alpha) - log_den)


def expected_blocks(params: ModelParams, n: int) -> float:
    """E[K_n] by the predictive recursion E[K_{i+1}] = E[K_i] + (theta + alpha E[K_i]) / (theta + i).

    Equal to (theta/alpha) ([theta+alpha]_(n)/[theta]_(n) - 1) for theta != 0.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    alpha, theta = params.alpha, params.theta
    expected = 1.0
    for i in range(1, n):
        expected += (theta + alpha * expected) / (theta + i)
    return expected


def pmf_esf(params: ModelParams, partition: Partition) -> float:
    """log P[M_n = m] from the Ewens-Pitman sampling formula

        n! [theta]_(j,alpha) / [theta]_(n,1) * prod_l ([1-alpha]_(l-1) / l!)**m_l / m_l!
    """
    alpha, theta = params.alpha, params.theta
    n, j = partition.n, partition.j
    mult = np.asarray(partition.multiplicities, dtype=float)
    sizes = np.arange(1, n + 1, dtype=float)
    used = mult > 0
    log_blocks = (special.gammaln(sizes[used] - alpha) - special.gammaln(1.0 - alpha)
                  - special.gammaln(sizes[used] + 1.0))
    return float(
        special.gammaln(n + 1.0)
        + log_rising_factorial_seq(theta + alpha, j - 1, alpha)[-1]
        - log_rising_factorial_seq(theta + 1.0, n - 1, 1.0)[-1]
        + np.dot(mult[used], log_blocks)
        - np.sum(special.gammaln(mult[used] + 1.0))
    )


def iter_partitions(n: int) -> Iterator[Partition]:
    """Every partition of the integer n, as multiplicity vectors."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")

    def parts(remaining: int, largest: int) -> Iterator[list]:
        if remaining == 0:
            yield []
            return
        for size in range(min(remaining, largest), 0, -1):
            for rest in parts(remaining - size, size):
                yield [size] + rest

    for sizes in parts(n, n):
        yield Partition.from_block_sizes(sizes)


# ============================================================================
# Conditioned-Poisson law and its limit
# ============================================================================


def pmf_rho(alpha: float, n: int, z: float, table: Optional[GfcTable] = None) -> LogPmf:
    """rho({k}; alpha, n, z) = C(n,k;alpha) z**k / sum_j C(n,j;alpha) z**j, k = 1..n."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    row = log_gfc_row(alpha, n, table)[1:]
    return LogPmf.from_log_weights(1, row + np.arange(1, n + 1) * math.log(z))


def log_enb_mass(alpha: float, q: float, x: np.ndarray) -> np.ndarray:
    """log P[Q = x] for the zero-truncated extended negative binomial law (x >= 1)."""
    if not (0.0 < alpha < 1.0 and 0.0 < q < 1.0):
        raise DomainError(f"ENB law needs alpha, q in (0, 1), got alpha={alpha}, q={q}")
    xs = np.asarray(x, dtype=float)
    const = (special.gammaln(alpha + 1.0) + math.log(math.sin(math.pi * alpha) / math.pi)
             - math.log(-math.expm1(alpha * math.log1p(-q))))
    return const + special.gammaln(xs - alpha) - special.gammaln(xs + 1.0) + xs * math.log(q)


def pmf_rho_bayes(alpha: float, q: float, z: float, n: int) -> LogPmf:
    """Law of the Poisson count N given S = Q_1 + ... + Q_N = n, by brute-force convolution.

    N ~ Poisson(z [1 - (1-q)**alpha]), Q_i iid zero-truncated ENB(alpha, q).
    Only counts k <= n can produce S = n, so the count needs no further truncation.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    lam = z * -math.expm1(alpha * math.log1p(-q))
    mass = np.zeros(n + 1)
    mass[1:] = np.exp(log_enb_mass(alpha, q, np.arange(1, n + 1)))
    log_weights = np.full(n, -np.inf)
    power = np.zeros(n + 1)
    power[0] = 1.0
    for k in range(1, n + 1):
        power = np.convolve(power, mass)[: n + 1]
        if power[n] > 0:
            log_weights[k - 1] = stats.poisson.logpmf(k, lam) + math.log(power[n])
    return LogPmf.from_log_weights(1, log_weights)


def pmf_rho_limit(z: float, k_max: Optional[int] = None) -> LogPmf:
    """Shifted Poisson law e**-z z**(k-1) / (k-1)!, k = 1..k_max.

    Without k_max the window covers all but 1e-14 of the mass; the law is
    renormalised on the window either way.
    """
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    if k_max is None:
        k_max = int(stats.poisson.ppf(1.0 - POISSON_TAIL, z)) + 2
    if k_max < 1:
        raise DomainError(f"k_max must be positive, got {k_max}")
    ks = np.arange(1, k_max + 1)
    return LogPmf.from_log_weights(1, stats.poisson.logpmf(ks - 1, z))


def mixing_density(params: ModelParams, n: int, z: float) -> float:
    """f(z; alpha, theta, n) = z**(theta/alpha + n/alpha - 1) / (Gamma(theta/alpha) [theta]_(n,1))
    * int x**n exp(-x z**(1/alpha)) f_alpha(x) dx, with Gamma(theta/alpha)[theta]_(n,1)
    rewritten as alpha Gamma(theta/alpha + 1) [theta+1]_(n-1,1)."""
    if not z > 0:
        raise DomainError(f"z must be positive, got {z}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    alpha, theta = params.alpha, params.theta
    log_f = ((theta / alpha + n / alpha - 1.0) * math.log(z)
             - math.log(alpha) - special.gammaln(theta / alpha + 1.0)
             - log_rising_factorial_seq(theta + 1.0, n - 1, 1.0)[-1]
             + log_tilted_moment(alpha, n, z ** (1.0 / alpha)))
    return math.exp(log_f)


def pmf_blocks_by_mixture(params: ModelParams, n: int) -> LogPmf:
    """P[K_n = k] rebuilt as int rho({k}; alpha, n, z) f(z; alpha, theta, n) dz, all k at once."""

    def integrand(z: float) -> np.ndarray:
        if z <= 0 or z > MIXTURE_Z_MAX + 10.0 * n:
            return np.zeros(n)
        return pmf_rho(params.alpha, n, z).probs() * mixing_density(params, n, z)

    probs, err = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=1e-12, epsrel=1e-9, norm="max")
    logger.debug(f"mixture rebuild of K_{n}: quadrature error {err:.2e}")
    return LogPmf.from_log_weights(1, np.log(probs))


# ============================================================================
# Posterior unseen-species law
# ============================================================================


def pmf_unseen(ctx: PosteriorContext, m: int,
               route: Literal["noncentral", "mixture"] = "mixture",
               table: Optional[GfcTable] = None) -> LogPmf:
    """P[K_m^(n) = k | K_n = j], k = 0..m.

    noncentral: [theta/alpha + j]_(k) / [theta + n]_(m) * C(m,k;alpha,-n+j alpha),
        rising factorials with increment 1.
    mixture: sum_l P[K*_m = l] BetaBinomial(k; l, theta/alpha + j, n/alpha - j),
        K*_m the block count of m draws under PD(alpha, theta + n).

    A shared `table` holds central coefficients and only serves the mixture
    route; the noncentral route builds its own shifted row.
    """
    if m < 1:
        raise DomainError(f"m must be positive, got {m}")
    alpha, theta = ctx.params.alpha, ctx.params.theta
    if route == "noncentral":
        if table is not None:
            raise DomainError("a shared coefficient table only applies to the mixture route")
        nc_table = gfc_table(alpha, m, shift=ctx.shift, keep=[m])
        log_probs = (log_rising_factorial_seq(ctx.beta_a, m, 1.0)
                     - log_rising_factorial_seq(theta + ctx.n, m, 1.0)[-1]
                     + nc_table.log_row(m))
        return LogPmf.checked(0, log_probs)
    if route != "mixture":
        raise DomainError(f"unknown route {route!r}")

    blocks = pmf_blocks(ctx.params.shifted(ctx.n), m, table)
    ks = np.arange(m + 1)[:, None]
    acc = np.full(m + 1, -np.inf)
    for start in range(1, m + 1, MIXTURE_CHUNK):
        ls = np.arange(start, min(start + MIXTURE_CHUNK, m + 1))
        log_bb = stats.betabinom.logpmf(ks, ls[None, :], ctx.beta_a, ctx.beta_b)
        chunk = special.logsumexp(log_bb + blocks.log_probs[ls - 1][None, :], axis=1)
        acc = np.logaddexp(acc, chunk)
    logger.debug(f"pmf_unseen mixture route: m={m}, context={ctx}")
    return LogPmf.checked(0, acc)
