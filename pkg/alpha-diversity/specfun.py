"""
Special-function kernel: rising factorials, generalized factorial coefficient
tables (central and non-central) and Stirling numbers of the second kind.

Coefficients are stored as logarithms. A coefficient equal to zero (k > m, or
the k = 0 column of a central table for m >= 1) is stored as -inf.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Tuple

import mpmath
import numpy as np

from config import get_settings
from errors import DomainError, TableSizeError, TableValidationError

logger = logging.getLogger(__name__)

VALIDATION_MAX_N = 12
VALIDATION_RTOL = 1e-10
VALIDATION_DPS = 60
STIRLING_MAX_N = 30


def log_rising_factorial(x: float, n: int, a: float = 1.0) -> float:
    """log of [x]_(n,a) = prod_{i<n} (x + i*a)."""
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    if n == 0:
        return 0.0
    factors = x + a * np.arange(n, dtype=float)
    if np.any(factors <= 0):
        raise DomainError(f"rising factorial [{x}]_({n},{a}) has a nonpositive factor")
    return math.fsum(np.log(factors))


def log_rising_factorial_seq(x: float, n: int, a: float = 1.0) -> np.ndarray:
    """log [x]_(k,a) for k = 0..n."""
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    factors = x + a * np.arange(n, dtype=float)
    if np.any(factors <= 0):
        raise DomainError(f"rising factorial [{x}]_({n},{a}) has a nonpositive factor")
    out = np.zeros(n + 1)
    out[1:] = np.cumsum(np.log(factors))
    return out


@dataclass(frozen=True)
class GfcTable:
    """Immutable table of log C(m, k; alpha, r) for the retained rows m."""
    alpha: float
    n_max: int
    noncentral_shift: float
    rows: dict = field(repr=False)

    def log_row(self, m: int) -> np.ndarray:
        """log C(m, k) for k = 0..m (read-only view)."""
        try:
            return self.rows[m]
        except KeyError:
            if 0 <= m <= self.n_max:
                raise TableSizeError(f"row {m} was not retained in this table") from None
            raise TableSizeError(f"row {m} outside table of size {self.n_max}") from None

    def log_value(self, m: int, k: int) -> float:
        if k < 0 or k > m:
            return -math.inf
        return float(self.log_row(m)[k])

    def value(self, m: int, k: int) -> float:
        return math.exp(self.log_value(m, k))

    @property
    def retained(self) -> Tuple[int, ...]:
        return tuple(sorted(self.rows))


def gfc_alternating_sum(m: int, k: int, alpha: float, shift: float = 0.0,
                        dps: int = VALIDATION_DPS) -> mpmath.mpf:
    """C(m,k;alpha,r) = (1/k!) sum_i (-1)^i binom(k,i) [-i*alpha - r]_(m), at dps digits."""
    with mpmath.workdps(dps):
        a = mpmath.mpf(alpha)
        r = mpmath.mpf(shift)
        total = mpmath.mpf(0)
        for i in range(k + 1):
            total += (-1) ** i * mpmath.binomial(k, i) * mpmath.rf(-i * a - r, m)
        return total / mpmath.factorial(k)


def _validate(table_rows: dict, alpha: float, shift: float, upto: int) -> None:
    for m in range(upto + 1):
        row = table_rows[m]
        for k in range(m + 1):
            exact = gfc_alternating_sum(m, k, alpha, shift)
            stored = row[k]
            if exact == 0:
                if stored != -math.inf:
                    raise TableValidationError(
                        f"C({m},{k}) should vanish but recurrence gave exp({stored})"
                    )
                continue
            if exact < 0 or stored == -math.inf:
                raise TableValidationError(
                    f"C({m},{k};{alpha},{shift}) = {mpmath.nstr(exact, 12)} not representable"
                )
            rel = abs(mpmath.exp(stored) / exact - 1)
            if rel > VALIDATION_RTOL:
                raise TableValidationError(
                    f"C({m},{k};{alpha},{shift}) mismatch: relative error {float(rel):.3e}"
                )


def gfc_table(alpha: float, n_max: int, shift: float = 0.0,
              keep: Optional[Iterable[int]] = None) -> GfcTable:
    """Build log C(m,k;alpha,r) for 0 <= k <= m <= n_max by the triangular recurrence

        C(m+1,k) = (m - k*alpha - r) C(m,k) + alpha C(m,k-1),   C(0,0) = 1,

    then certify the first rows against the alternating-sum definition.
    `keep` restricts which rows are retained (all by default).
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if n_max < 1:
        raise DomainError(f"n_max must be positive, got {n_max}")
    limit = get_settings().table_limit
    if n_max > limit:
        raise TableSizeError(
            f"n_max = {n_max} exceeds the table limit {limit} (set PITMAN_TABLE_LIMIT to raise it)"
        )

    check_upto = min(n_max, VALIDATION_MAX_N)
    wanted = set(range(n_max + 1)) if keep is None else {int(m) for m in keep}
    wanted |= set(range(check_upto + 1))
    log_alpha = math.log(alpha)

    rows: dict = {}
    row = np.array([0.0])
    for m in range(n_max + 1):
        if m in wanted:
            row.setflags(write=False)
            rows[m] = row
        if m == n_max:
            break
        ks = np.arange(m + 1, dtype=float)
        mult = m - ks * alpha - shift
        present = row > -np.inf
        if np.any(present & (mult < 0)):
            raise TableValidationError(
                f"shift {shift} makes C({m + 1},k;{alpha}) signed; only positive tables are supported"
            )
        stay = np.full(m + 1, -np.inf)
        grow = present & (mult > 0)
        stay[grow] = row[grow] + np.log(mult[grow])
        nxt = np.full(m + 2, -np.inf)
        nxt[: m + 1] = stay
        nxt[1:] = np.logaddexp(nxt[1:], row + log_alpha)
        row = nxt

    _validate(rows, alpha, shift, check_upto)
    if keep is not None:
        final = {int(m) for m in keep}
        rows = {m: r for m, r in rows.items() if m in final}
    logger.debug(f"Built gfc table alpha={alpha} shift={shift} n_max={n_max} ({len(rows)} rows kept)")
    return GfcTable(alpha=alpha, n_max=n_max, noncentral_shift=shift, rows=rows)


@lru_cache(maxsize=8)
def central_table(alpha: float, n_max: int) -> GfcTable:
    """Shared central table; reused by every law built on the same alpha."""
    logger.info(f"Building central gfc table alpha={alpha} up to n={n_max}")
    return gfc_table(alpha, n_max)


def central_row(alpha: float, n: int) -> np.ndarray:
    """log C(n,k;alpha), k = 0..n, without retaining the other rows."""
    return gfc_table(alpha, n, keep=[n]).log_row(n)


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind S(n,k), exact."""
    if n > STIRLING_MAX_N:
        raise TableSizeError(f"stirling2 supports n <= {STIRLING_MAX_N}, got {n}")
    if not 0 <= k <= n:
        raise DomainError(f"stirling2 needs 0 <= k <= n, got n={n}, k={k}")
    return _stirling2(n, k)


@lru_cache(maxsize=None)
def _stirling2(n: int, k: int) -> int:
    if k > n:
        return 0
    if n == k:
        return 1
    if k == 0:
        return 0
    return k * _stirling2(n - 1, k) + _stirling2(n - 1, k - 1)
