import math
from collections import defaultdict

import numpy as np
import pytest
from scipy import integrate, special

from errors import DomainError, NormalizationError
from models import ModelParams, Partition, PosteriorContext
from partition_laws import (
    LogPmf,
    expected_blocks,
    iter_partitions,
    log_enb_mass,
    mixing_density,
    pmf_blocks,
    pmf_blocks_by_mixture,
    pmf_esf,
    pmf_rho,
    pmf_rho_bayes,
    pmf_rho_limit,
    pmf_unseen,
)
from specfun import gfc_table, log_rising_factorial

PARAMS = ModelParams(alpha=0.5, theta=1.0)
CTX = PosteriorContext(params=PARAMS, n=10, j=4)


class TestLogPmf:
    def test_rejects_unnormalised(self):
        with pytest.raises(NormalizationError):
            LogPmf(support_min=0, log_probs=np.log([0.5, 0.6]))
        with pytest.raises(NormalizationError):
            LogPmf.checked(0, np.log([0.5, 0.4]))

    def test_summaries(self):
        pmf = LogPmf.from_log_weights(2, np.log([1.0, 2.0, 1.0]))
        assert pmf.support().tolist() == [2, 3, 4]
        assert pmf.mean() == pytest.approx(3.0)
        assert pmf.variance() == pytest.approx(0.5)
        assert pmf.quantile(0.25) == 2
        assert pmf.quantile(0.5) == 3
        assert pmf.quantile(1.0) == 4
        assert pmf.prob(7) == 0.0

    def test_total_variation(self):
        a = LogPmf.from_log_weights(1, np.log([1.0, 1.0]))
        b = LogPmf.from_log_weights(2, np.log([1.0, 1.0]))
        assert a.total_variation(b) == pytest.approx(0.5)
        assert a.total_variation(a) == 0.0


class TestPriorBlocks:
    def test_two_customers(self):
        pmf = pmf_blocks(PARAMS, 2)
        np.testing.assert_allclose(pmf.probs(), [0.25, 0.75], rtol=1e-14)

    def test_single_customer(self):
        pmf = pmf_blocks(PARAMS, 1)
        assert pmf.support().tolist() == [1]
        assert pmf.prob(1) == 1.0

    @pytest.mark.parametrize("theta", [-0.45, 0.0, 1.0, 6.0])
    def test_normalised_at_size_500(self, theta):
        pmf = pmf_blocks(ModelParams(alpha=0.5, theta=theta), 500)
        assert pmf.probs().sum() == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("alpha,theta", [(0.5, 1.0), (0.3, 2.0), (0.8, -0.5)])
    def test_mean_matches_recursion(self, alpha, theta):
        params = ModelParams(alpha=alpha, theta=theta)
        assert pmf_blocks(params, 200).mean() == pytest.approx(expected_blocks(params, 200), rel=1e-10)

    def test_mean_closed_form(self):
        params = ModelParams(alpha=0.4, theta=2.0)
        n = 100
        ratio = math.exp(log_rising_factorial(2.4, n) - log_rising_factorial(2.0, n))
        assert expected_blocks(params, n) == pytest.approx(2.0 / 0.4 * (ratio - 1.0), rel=1e-12)

    def test_large_n_outside_shared_table(self):
        pmf = pmf_blocks(ModelParams(alpha=0.5, theta=6.0), 5000)
        assert pmf.support_max == 5000
        assert pmf.mean() == pytest.approx(expected_blocks(ModelParams(alpha=0.5, theta=6.0), 5000), rel=1e-9)

    def test_bad_size(self):
        with pytest.raises(DomainError):
            pmf_blocks(PARAMS, 0)


class TestSamplingFormula:
    def test_two_customer_partitions(self):
        assert pmf_esf(PARAMS, Partition(n=2, multiplicities=(0, 1))) == pytest.approx(math.log(0.25))
        assert pmf_esf(PARAMS, Partition(n=2, multiplicities=(2, 0))) == pytest.approx(math.log(0.75))

    def test_hand_computed(self):
        partition = Partition.from_block_sizes([2, 1, 1])
        assert pmf_esf(PARAMS, partition) == pytest.approx(math.log(0.375), rel=1e-13)

    def test_enumeration_sums_to_one(self):
        total = sum(math.exp(pmf_esf(ModelParams(alpha=0.35, theta=0.7), p)) for p in iter_partitions(6))
        assert total == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("n", [3, 5, 8])
    @pytest.mark.parametrize("alpha,theta", [(0.5, 1.0), (0.25, -0.2), (0.8, 3.0)])
    def test_aggregation_reproduces_block_law(self, n, alpha, theta):
        params = ModelParams(alpha=alpha, theta=theta)
        by_blocks = defaultdict(float)
        for partition in iter_partitions(n):
            by_blocks[partition.j] += math.exp(pmf_esf(params, partition))
        expected = pmf_blocks(params, n)
        for k in range(1, n + 1):
            assert by_blocks[k] == pytest.approx(expected.prob(k), abs=1e-10)

    def test_partition_count(self):
        assert sum(1 for _ in iter_partitions(8)) == 22


class TestConditionedPoisson:
    def test_two_elements(self):
        np.testing.assert_allclose(pmf_rho(0.5, 2, 1.0).probs(), [0.5, 0.5], rtol=1e-14)
        np.testing.assert_allclose(pmf_rho(0.5, 2, 2.0).probs(), [1.0 / 3.0, 2.0 / 3.0], rtol=1e-14)
        assert pmf_rho(0.3, 1, 5.0).prob(1) == 1.0

    def test_enb_unit_mass(self):
        assert math.exp(log_enb_mass(0.5, 0.5, 1)) == pytest.approx(0.25 / (1.0 - math.sqrt(0.5)), rel=1e-13)

    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.8])
    @pytest.mark.parametrize("q", [0.1, 0.4, 0.9])
    @pytest.mark.parametrize("z", [0.3, 1.0, 4.0])
    def test_bayes_construction(self, alpha, q, z):
        n = 15
        brute = pmf_rho_bayes(alpha, q, z, n)
        np.testing.assert_allclose(brute.probs(), pmf_rho(alpha, n, z).probs(), rtol=1e-10, atol=1e-14)

    def test_bayes_construction_small(self):
        brute = pmf_rho_bayes(0.4, 0.5, 0.7, 6)
        assert brute.total_variation(pmf_rho(0.4, 6, 0.7)) < 1e-10

    def test_limit_law(self):
        limit = pmf_rho_limit(1.0)
        assert limit.prob(1) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert limit.mean() == pytest.approx(2.0, rel=1e-12)
        assert pmf_rho_limit(3.5).mean() == pytest.approx(4.5, rel=1e-12)

    def test_limit_window_is_renormalised(self):
        window = pmf_rho_limit(2.0, k_max=3)
        assert window.support_max == 3
        assert window.probs().sum() == pytest.approx(1.0, abs=1e-14)

    def test_convergence_to_limit(self):
        limit = pmf_rho_limit(1.0)
        gaps = [pmf_rho(0.5, n, 1.0).total_variation(limit) for n in (100, 1000, 10000)]
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.02

    def test_bad_z(self):
        with pytest.raises(DomainError):
            pmf_rho(0.5, 3, 0.0)
        with pytest.raises(DomainError):
            pmf_rho_limit(-1.0)


class TestMixture:
    def test_mixing_density_is_a_density(self):
        total, _ = integrate.quad(lambda z: mixing_density(PARAMS, 5, z), 0.0, np.inf,
                                  epsabs=1e-12, epsrel=1e-10, limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)
        assert mixing_density(PARAMS, 5, 0.4) > 0

    def test_mixing_density_other_alpha(self):
        """At alpha = 0.3 the tilted moment must match the coefficient sum it stands for."""
        params, n, z = ModelParams(alpha=0.3, theta=1.0), 5, 1.0
        alpha, theta = params.alpha, params.theta
        row = gfc_table(alpha, n).log_row(n)[1:]
        log_sum = np.logaddexp.reduce(row + np.arange(1, n + 1) * math.log(z))
        expected = math.exp((theta / alpha - 1.0) * math.log(z) - z + log_sum - math.log(alpha)
                            - special.gammaln(theta / alpha + 1.0) - log_rising_factorial(theta + 1.0, n - 1))
        value = mixing_density(params, n, z)
        assert value > 0
        assert value == pytest.approx(expected, rel=1e-6)

    def test_mixture_reproduces_block_law(self):
        rebuilt = pmf_blocks_by_mixture(PARAMS, 5)
        np.testing.assert_allclose(rebuilt.probs(), pmf_blocks(PARAMS, 5).probs(), atol=1e-6)

    @pytest.mark.slow
    def test_mixture_other_alpha(self):
        params = ModelParams(alpha=0.3, theta=2.0)
        rebuilt = pmf_blocks_by_mixture(params, 6)
        np.testing.assert_allclose(rebuilt.probs(), pmf_blocks(params, 6).probs(), atol=1e-6)


class TestUnseen:
    def test_single_draw(self):
        ctx = PosteriorContext(params=PARAMS, n=2, j=1)
        for route in ("noncentral", "mixture"):
            pmf = pmf_unseen(ctx, 1, route=route)
            assert pmf.prob(1) == pytest.approx(0.5, rel=1e-12)
        assert pmf_unseen(CTX, 1).prob(1) == pytest.approx(3.0 / 11.0, rel=1e-12)

    @pytest.mark.parametrize("m", range(1, 13))
    def test_routes_agree(self, m):
        exact = pmf_unseen(CTX, m, route="noncentral")
        mixed = pmf_unseen(CTX, m, route="mixture")
        assert exact.support_min == mixed.support_min == 0
        np.testing.assert_allclose(exact.probs(), mixed.probs(), rtol=0, atol=1e-10)

    def test_mean_closed_form(self):
        """E[K_m | n, j] = (theta/alpha + j) ([theta+n+alpha]_m / [theta+n]_m - 1)."""
        m = 300
        ratio = math.exp(log_rising_factorial(11.5, m) - log_rising_factorial(11.0, m))
        assert pmf_unseen(CTX, m).mean() == pytest.approx(6.0 * (ratio - 1.0), rel=1e-9)

    @pytest.mark.parametrize("n,j,m", [(5, 5, 20), (30, 2, 40), (8, 3, 60)])
    def test_normalised(self, n, j, m):
        ctx = PosteriorContext(params=ModelParams(alpha=0.3, theta=0.5), n=n, j=j)
        for route in ("noncentral", "mixture"):
            assert pmf_unseen(ctx, m, route=route).probs().sum() == pytest.approx(1.0, abs=1e-10)

    def test_unknown_route(self):
        with pytest.raises(DomainError):
            pmf_unseen(CTX, 3, route="direct")

    def test_noncentral_route_rejects_a_table(self):
        table = gfc_table(PARAMS.alpha, 8)
        with pytest.raises(DomainError):
            pmf_unseen(CTX, 8, route="noncentral", table=table)
        assert pmf_unseen(CTX, 8, route="mixture", table=table).probs().sum() == pytest.approx(1.0, abs=1e-10)
