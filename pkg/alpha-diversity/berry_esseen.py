"""
Kolmogorov distances between scaled block-count laws and their limits, and the
rate experiments that measure how fast they shrink.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from errors import DomainError
from models import ModelParams, PosteriorContext, RateReport, RateRow
from partition_laws import LogPmf, pmf_blocks, pmf_unseen
from specfun import GfcTable, gfc_table
from stable import PosteriorDiversityLaw, ml_law

logger = logging.getLogger(__name__)

DEFAULT_PRIOR_GRID = (16, 64, 256, 1024, 4096)
DEFAULT_POSTERIOR_GRID = (16, 64, 256, 1024)
SLOPE_HALF_WIDTH = 0.15
RATIO_MAX = 10.0
PRIOR_SCOPE_THETA = 5.0

CdfHandle = Callable[[np.ndarray], np.ndarray]


def kolmogorov_discrete_vs_continuous(pmf: LogPmf, scale: float, cdf: CdfHandle) -> float:
    """sup_x |P[K/scale <= x] - F(x)| for continuous nondecreasing F.

    The step function only moves at x_k = k/scale, so the supremum is attained
    next to a jump: max_k max(|P[K <= k] - F(x_k)|, |P[K <= k-1] - F(x_k)|).
    """
    if not scale > 0:
        raise DomainError(f"scale must be positive, got {scale}")
    at_jump = np.asarray(cdf(pmf.support() / scale), dtype=float)
    upper = pmf.cdf()
    lower = np.concatenate([[0.0], upper[:-1]])
    gap = max(float(np.max(np.abs(upper - at_jump))), float(np.max(np.abs(lower - at_jump))))
    return min(gap, 1.0)


def kolmogorov_grid_scan(pmf: LogPmf, scale: float, cdf: CdfHandle, step: float = 1e-4) -> float:
    """Brute-force sup over a uniform grid on the scaled axis."""
    xs = np.arange(0.0, pmf.support_max / scale + 1.0, step)
    steps = pmf.cdf()
    idx = np.searchsorted(pmf.support(), np.floor(xs * scale + 1e-12), side="right") - 1
    step_values = np.where(idx >= 0, steps[np.clip(idx, 0, None)], 0.0)
    return float(np.max(np.abs(step_values - np.asarray(cdf(xs)))))


def fit_loglog_slope(ns: Sequence[float], dks: Sequence[float]) -> Tuple[float, float]:
    """Ordinary least squares of log d_K on log n: (slope, standard error)."""
    if len(ns) < 2:
        raise DomainError("slope fit needs at least two grid points")
    fit = stats.linregress(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(dks, dtype=float)))
    stderr = float(fit.stderr) if len(ns) > 2 else 0.0
    return float(fit.slope), stderr


def _validate_grid(grid: Sequence[int]) -> List[int]:
    values = [int(v) for v in grid]
    if not values or values[0] < 1:
        raise DomainError("grid must be a nonempty list of positive sizes")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise DomainError(f"grid must be strictly increasing, got {values}")
    return values


class RateExperiment:
    """Exact d_K over a grid of sizes, rows evaluated in a thread pool, then sorted on n."""

    def __init__(self, params: ModelParams, grid: Sequence[int],
                 context: Optional[PosteriorContext] = None, threads: int = 1):
        self.params = context.params if context is not None else params
        self.context = context
        self.grid = _validate_grid(grid)
        self.threads = max(1, threads)
        self.table: Optional[GfcTable] = None

    @property
    def mode(self) -> str:
        return "prior" if self.context is None else "posterior"

    @property
    def theorem_scope(self) -> bool:
        if self.context is None:
            return self.params.theta > PRIOR_SCOPE_THETA
        return self.context.theorem_scope

    def _prior_row(self, n: int, cdf: CdfHandle) -> RateRow:
        scale = n ** self.params.alpha
        d_k = kolmogorov_discrete_vs_continuous(pmf_blocks(self.params, n, self.table), scale, cdf)
        return RateRow(n=n, d_k=d_k, scaled=scale * d_k)

    def _posterior_row(self, m: int, cdf: CdfHandle) -> RateRow:
        scale = m ** self.params.alpha
        pmf = pmf_unseen(self.context, m, route="mixture", table=self.table)
        d_k = kolmogorov_discrete_vs_continuous(pmf, scale, cdf)
        return RateRow(n=m, d_k=d_k, scaled=scale * d_k)

    def run(self) -> RateReport:
        start_time = datetime.now()
        if not self.theorem_scope:
            logger.warning(f"{self.mode} run at {self.params} is outside the theorem hypotheses; exploratory only")

        self.table = gfc_table(self.params.alpha, self.grid[-1], keep=self.grid)
        if self.context is None:
            law = ml_law(self.params)
            law.cdf_interp(np.array([law.mean()]))
            cdf, row = law.cdf_interp, self._prior_row
        else:
            cdf, row = PosteriorDiversityLaw(self.context).cdf, self._posterior_row

        if self.threads == 1:
            rows = [row(n, cdf) for n in self.grid]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                rows = list(pool.map(lambda n: row(n, cdf), self.grid))
        rows.sort(key=lambda r: r.n)

        positive = [r for r in rows if r.d_k > 0]
        if len(positive) < len(rows):
            logger.warning(f"{len(rows) - len(positive)} grid rows with d_K = 0 left out of the slope fit")
        slope, stderr = fit_loglog_slope([r.n for r in positive], [r.d_k for r in positive])

        report = RateReport(
            mode=self.mode,
            params=self.params,
            context=self.context,
            rows=rows,
            fitted_slope=slope,
            slope_stderr=stderr,
            theorem_scope=self.theorem_scope,
        )
        execution_time = (datetime.now() - start_time).total_seconds()
        logger.info(f"""
=== Rate Experiment Complete ===
Mode: {self.mode}
Params: alpha={self.params.alpha}, theta={self.params.theta}
Grid: {self.grid}
Fitted slope: {slope:.4f} (stderr {stderr:.4f})
Scaled ratio: {report.scaled_ratio:.3f}
Execution time: {execution_time:.2f}s
        """)
        return report


def rate_experiment_prior(params: ModelParams, n_grid: Sequence[int] = DEFAULT_PRIOR_GRID,
                          threads: int = 1) -> RateReport:
    """d_K(K_n / n**alpha, S_{alpha,theta}) on n_grid plus the fitted log-log slope."""
    return RateExperiment(params, n_grid, threads=threads).run()


def rate_experiment_posterior(ctx: PosteriorContext, m_grid: Sequence[int] = DEFAULT_POSTERIOR_GRID,
                              threads: int = 1) -> RateReport:
    """d_K(K_m^(n) / m**alpha, S_{alpha,theta}(n,j)) on m_grid plus the fitted log-log slope."""
    return RateExperiment(ctx.params, m_grid, context=ctx, threads=threads).run()


def check_acceptance(report: RateReport, slope_band: Optional[Tuple[float, float]] = None,
                     ratio_max: float = RATIO_MAX) -> List[str]:
    """Violations of the slope band (default -alpha +/- 0.15) and the scaled-column ratio bound."""
    alpha = report.params.alpha
    lo, hi = slope_band if slope_band is not None else (-alpha - SLOPE_HALF_WIDTH, -alpha + SLOPE_HALF_WIDTH)
    violations = []
    if not lo <= report.fitted_slope <= hi:
        violations.append(f"fitted slope {report.fitted_slope:.4f} outside [{lo:.3f}, {hi:.3f}]")
    ratio = report.scaled_ratio
    if not math.isfinite(ratio) or ratio > ratio_max:
        violations.append(f"scaled column ratio {ratio:.3f} exceeds {ratio_max}")
    return violations
