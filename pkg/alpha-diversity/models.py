"""
Pydantic models shared across the library, CLI and reports.
"""

import math
from typing import List, Literal, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from errors import InadmissibleParameterError, InvalidPartitionError

# ============================================================================
# Parameters
# ============================================================================


class ModelParams(BaseModel):
    """The pair (alpha, theta) of PD(alpha, theta), restricted to 0 < alpha < 1, theta > -alpha."""
    model_config = ConfigDict(frozen=True)

    alpha: float
    theta: float

    @model_validator(mode="after")
    def _admissible(self) -> "ModelParams":
        if not (0.0 < self.alpha < 1.0):
            raise InadmissibleParameterError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.theta > -self.alpha:
            raise InadmissibleParameterError(
                f"theta must exceed -alpha = {-self.alpha}, got {self.theta}"
            )
        return self

    def shifted(self, by: float) -> "ModelParams":
        return ModelParams(alpha=self.alpha, theta=self.theta + by)


class PosteriorContext(BaseModel):
    """Conditioning data (params, n, j): n observations featuring j distinct species."""
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    n: int = Field(..., ge=1)
    j: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _within_sample(self) -> "PosteriorContext":
        if self.j > self.n:
            raise InadmissibleParameterError(f"j = {self.j} exceeds n = {self.n}")
        return self

    @property
    def beta_a(self) -> float:
        return self.params.theta / self.params.alpha + self.j

    @property
    def beta_b(self) -> float:
        return self.n / self.params.alpha - self.j

    @property
    def shift(self) -> float:
        """Non-central shift r = -n + j*alpha of the posterior coefficients."""
        return -self.n + self.j * self.params.alpha

    @property
    def theorem_scope(self) -> bool:
        return self.params.theta > 0 and self.n >= 5 and self.beta_b >= 1


class SeedSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(0, ge=0, lt=2**64)
    stream_id: int = Field(0, ge=0, lt=2**64)

    def child(self, stream_id: int) -> "SeedSpec":
        return SeedSpec(master_seed=self.master_seed, stream_id=stream_id)


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    abs_tol: float = Field(1e-12, gt=0)
    rel_tol: float = Field(1e-10, gt=0)
    max_subdivisions: int = Field(2000, ge=1)


# ============================================================================
# Partitions and samples
# ============================================================================


class Partition(BaseModel):
    """Partition of {1..n} recorded by its block-size multiplicities m_1..m_n."""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=1)
    multiplicities: Tuple[int, ...]

    @model_validator(mode="after")
    def _consistent(self) -> "Partition":
        if len(self.multiplicities) != self.n:
            raise InvalidPartitionError(
                f"expected {self.n} multiplicities, got {len(self.multiplicities)}"
            )
        if any(m < 0 for m in self.multiplicities):
            raise InvalidPartitionError("multiplicities must be nonnegative")
        total = sum((l + 1) * m for l, m in enumerate(self.multiplicities))
        if total != self.n:
            raise InvalidPartitionError(f"sum of l*m_l is {total}, expected n = {self.n}")
        return self

    @classmethod
    def from_block_sizes(cls, sizes: Sequence[int]) -> "Partition":
        sizes = [int(s) for s in sizes]
        if not sizes or any(s < 1 for s in sizes):
            raise InvalidPartitionError("block sizes must be positive and nonempty")
        n = sum(sizes)
        mult = [0] * n
        for s in sizes:
            mult[s - 1] += 1
        return cls(n=n, multiplicities=tuple(mult))

    @property
    def j(self) -> int:
        return sum(self.multiplicities)

    def block_sizes(self) -> List[int]:
        """Block sizes in descending order."""
        sizes: List[int] = []
        for size in range(self.n, 0, -1):
            sizes.extend([size] * self.multiplicities[size - 1])
        return sizes


class SpeciesSample(BaseModel):
    n: int
    partition: Partition
    label_counts: dict[str, int] = Field(default_factory=dict)

    @property
    def j(self) -> int:
        return self.partition.j


# ============================================================================
# Inference results
# ============================================================================


class FitBounds(BaseModel):
    epsilon: float = Field(1e-4, gt=0, lt=0.5)
    theta_max: float = Field(1e4, gt=0)
    starts: int = Field(5, ge=1)


class FitResult(BaseModel):
    params: ModelParams
    log_likelihood: float
    converged: bool
    boundary_flag: bool
    n: int
    j: int


class UnseenEstimate(BaseModel):
    m: int
    mode: Literal["exact", "asymptotic"]
    mean: float
    median: float
    credible_interval: Tuple[float, float]
    level: float
    mc_draws: Optional[int] = None
    context: PosteriorContext


# ============================================================================
# Rate experiments
# ============================================================================


class RateRow(BaseModel):
    n: int = Field(..., description="n (prior mode) or m (posterior mode)")
    d_k: float = Field(..., ge=0.0, le=1.0)
    scaled: float


class RateReport(BaseModel):
    mode: Literal["prior", "posterior"]
    params: ModelParams
    context: Optional[PosteriorContext] = None
    rows: List[RateRow]
    fitted_slope: float
    slope_stderr: float
    theorem_scope: bool

    @model_validator(mode="after")
    def _increasing(self) -> "RateReport":
        ns = [row.n for row in self.rows]
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ValueError("report grid must be strictly increasing")
        return self

    @property
    def scaled_ratio(self) -> float:
        scaled = [row.scaled for row in self.rows]
        if min(scaled) <= 0:
            return math.inf
        return max(scaled) / min(scaled)
