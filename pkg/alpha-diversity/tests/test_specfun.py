"""Rising factorials, generalized factorial coefficients and Stirling numbers."""

import math

import numpy as np
import pytest

from errors import DomainError, TableSizeError, TableValidationError
from specfun import (
    central_table,
    gfc_alternating_sum,
    gfc_table,
    log_rising_factorial,
    log_rising_factorial_seq,
    stirling2,
)


class TestRisingFactorial:
    def test_small_products(self):
        assert log_rising_factorial(1.0, 2, 1.0) == pytest.approx(math.log(2.0))
        assert log_rising_factorial(3.0, 0, 0.5) == 0.0
        assert log_rising_factorial(0.5, 3, 0.5) == pytest.approx(math.log(0.75))

    def test_sequence_matches_scalar(self):
        seq = log_rising_factorial_seq(1.3, 6, 0.4)
        for k in range(7):
            assert seq[k] == pytest.approx(log_rising_factorial(1.3, k, 0.4), abs=1e-14)

    def test_nonpositive_factor(self):
        with pytest.raises(DomainError):
            log_rising_factorial(-1.0, 3)
        with pytest.raises(DomainError):
            log_rising_factorial_seq(-0.5, 2, 0.5)


class TestGfcTable:
    def test_small_values(self):
        assert gfc_table(0.3, 1).value(1, 1) == pytest.approx(0.3, rel=1e-14)
        table = gfc_table(0.5, 2)
        assert table.value(2, 1) == pytest.approx(0.25, rel=1e-14)
        assert table.value(2, 2) == pytest.approx(0.25, rel=1e-14)
        assert table.value(2, 3) == 0.0
        assert table.log_value(2, 0) == -math.inf

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
    def test_recurrence_matches_alternating_sum(self, alpha):
        table = gfc_table(alpha, 12)
        for m in range(1, 13):
            for k in range(1, m + 1):
                exact = float(gfc_alternating_sum(m, k, alpha))
                assert table.value(m, k) == pytest.approx(exact, rel=1e-10)

    @pytest.mark.parametrize("alpha,theta", [(0.3, 1.0), (0.5, 6.0), (0.7, 0.4)])
    def test_column_sum_identity(self, alpha, theta):
        """sum_k C(n,k) alpha^-k [theta]_(k,alpha) = [theta]_(n,1)."""
        n = 40
        row = gfc_table(alpha, n).log_row(n)[1:]
        ks = np.arange(1, n + 1)
        terms = [row[k - 1] - k * math.log(alpha) + log_rising_factorial(theta, k, alpha) for k in ks]
        total = np.logaddexp.reduce(terms)
        assert total == pytest.approx(log_rising_factorial(theta, n, 1.0), rel=1e-12)

    def test_noncentral_rows_beyond_validation(self):
        alpha, n, j = 0.5, 3, 2
        shift = -n + j * alpha
        table = gfc_table(alpha, 15, shift=shift)
        for k in (1, 5, 10, 15):
            exact = float(gfc_alternating_sum(15, k, alpha, shift))
            assert table.value(15, k) == pytest.approx(exact, rel=1e-9)
        assert table.log_value(1, 0) > -math.inf

    def test_signed_shift_rejected(self):
        with pytest.raises(TableValidationError):
            gfc_table(0.5, 5, shift=1.0)

    def test_keep_drops_other_rows(self):
        table = gfc_table(0.5, 20, keep=[20])
        assert table.retained == (20,)
        assert len(table.log_row(20)) == 21
        with pytest.raises(TableSizeError):
            table.log_row(5)
        with pytest.raises(TableSizeError):
            table.log_row(21)

    def test_rows_are_read_only(self):
        row = gfc_table(0.5, 4).log_row(4)
        with pytest.raises(ValueError):
            row[0] = 1.0

    def test_table_limit_from_environment(self, monkeypatch):
        monkeypatch.setenv("PITMAN_TABLE_LIMIT", "10")
        with pytest.raises(TableSizeError):
            gfc_table(0.5, 11)

    def test_bad_arguments(self):
        with pytest.raises(DomainError):
            gfc_table(1.0, 5)
        with pytest.raises(DomainError):
            gfc_table(0.5, 0)

    def test_central_table_is_shared(self):
        assert central_table(0.5, 16) is central_table(0.5, 16)


class TestStirling:
    def test_known_values(self):
        assert stirling2(3, 2) == 3
        assert stirling2(4, 2) == 7
        assert stirling2(7, 7) == 1
        assert stirling2(5, 0) == 0

    def test_bell_number(self):
        assert sum(stirling2(10, k) for k in range(11)) == 115975

    def test_range(self):
        with pytest.raises(TableSizeError):
            stirling2(31, 2)
        with pytest.raises(DomainError):
            stirling2(3, 4)
