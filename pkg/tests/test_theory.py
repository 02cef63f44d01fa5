import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ebmeans import (
    BetaBinomialPrior,
    ComplexityPrior,
    Configuration,
    DataVector,
    ModelConfig,
    enumerate_posterior,
    generate_data,
    rho_threshold,
    size_prior_ratio_report,
    strong_signal_partition,
    tv_upper_bound,
    zeta_threshold,
)
from ebmeans.theory import SignalPartition

from _reference import RHO_N200_M2, RHO_N500_M2, ZETA_N200


def test_rho_values():
    assert rho_threshold(ModelConfig(n=200), M=2.0) == pytest.approx(
        RHO_N200_M2, abs=1e-9
    )
    assert rho_threshold(ModelConfig(n=500), M=2.0) == pytest.approx(
        RHO_N500_M2, abs=1e-9
    )


def test_rho_alpha_to_one_limit():
    # with log n = 1 and alpha -> 1 the formula tends to sqrt(4 M) = 2 at M=1
    n = 3  # log 3 > 1; rescale by hand below
    cfg = ModelConfig(n=n, alpha=1.0 - 1e-12, tau=1e-12)
    got = rho_threshold(cfg, M=1.0)
    assert got == pytest.approx(math.sqrt(4.0 * math.log(n)), rel=1e-9)
    assert got / math.sqrt(math.log(n)) == pytest.approx(2.0, rel=1e-9)


def test_rho_domain_errors():
    with pytest.raises(ValueError):
        rho_threshold(ModelConfig(n=1), M=1.0)
    with pytest.raises(ValueError):
        rho_threshold(ModelConfig(n=10), M=0.0)


@given(
    st.floats(1.0, 4.0),
    st.floats(1.0, 4.0),
    st.integers(5, 5000),
    st.floats(0.05, 0.94),
)
@settings(max_examples=100, deadline=None)
def test_rho_monotonicity(M, sigma2, n, alpha):
    import warnings

    def rho(M_, s2_, n_, a_):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return rho_threshold(ModelConfig(n=n_, sigma2=s2_, alpha=a_), M_)

    base = rho(M, sigma2, n, alpha)
    assert rho(M * 1.1, sigma2, n, alpha) > base
    assert rho(M, sigma2 * 1.1, n, alpha) > base
    assert rho(M, sigma2, n + 1, alpha) > base
    assert rho(M, sigma2, n, min(alpha * 1.05, 0.99)) < base


def test_zeta_value():
    cfg = ModelConfig(n=200)
    assert zeta_threshold(cfg, a1=1.0, s_star=10, s_dagger=9) == pytest.approx(
        ZETA_N200, abs=1e-9
    )


def test_zeta_below_rho_at_matching_constants():
    cfg = ModelConfig(n=200)
    zeta = zeta_threshold(cfg, a1=1.0, s_star=10, s_dagger=9)
    rho = rho_threshold(cfg, M=2.0)  # M = 1 + a1
    assert zeta < rho


def test_zeta_one_missing_simplification():
    # s_dagger = s_star - 1 kills the log-2 term
    rng = np.random.default_rng(5)
    for _ in range(10):
        n = int(rng.integers(20, 2000))
        s_star = int(rng.integers(2, 10))
        a1 = float(rng.uniform(0.5, 3.0))
        cfg = ModelConfig(n=n)
        got = zeta_threshold(cfg, a1=a1, s_star=s_star, s_dagger=s_star - 1)
        inner = a1 * math.log(n) + math.log((n - s_star + 1) / s_star)
        expected = math.sqrt(2 * cfg.sigma2 * (1 + cfg.alpha) / cfg.alpha * inner)
        assert got == pytest.approx(expected, rel=1e-12)


def test_zeta_domain_errors():
    cfg = ModelConfig(n=200)
    with pytest.raises(ValueError):
        zeta_threshold(cfg, a1=1.0, s_star=5, s_dagger=5)
    with pytest.raises(ValueError):
        zeta_threshold(cfg, a1=1.0, s_star=210, s_dagger=1)
    # a negative braced term must raise, not clamp
    with pytest.raises(ValueError, match="negative"):
        zeta_threshold(ModelConfig(n=4), a1=0.01, s_star=4, s_dagger=3)


def test_strong_signal_partition_examples():
    part = strong_signal_partition(np.array([7.0, 7.0, 2.0, 0.0]), rho=6.6)
    assert part.true_support.indices == (1, 2, 3)
    assert part.strong_indices.indices == (1, 2)
    assert part.s_star == 3 and part.s_dagger == 2

    empty = strong_signal_partition(np.zeros(5), rho=1.0)
    assert empty.true_support.indices == ()
    assert empty.strong_indices.indices == ()

    signed = strong_signal_partition(np.array([7.0, -7.0]), rho=6.6)
    assert signed.strong_indices.indices == (1, 2)


def test_signal_partition_subset_invariant():
    with pytest.raises(ValueError):
        SignalPartition(
            true_support=Configuration((1,)), strong_indices=Configuration((2,))
        )


def test_ratio_report_complexity():
    rep = size_prior_ratio_report(ComplexityPrior(a=1.0, c=1.0), n=100, s_max=100)
    assert rep.min_ratio == pytest.approx(0.01, rel=1e-12)
    assert rep.max_ratio == pytest.approx(0.01, rel=1e-12)
    assert rep.implied_a1 == pytest.approx(1.0, abs=1e-12)
    assert rep.implied_a2 == pytest.approx(1.0, abs=1e-12)

    rep2 = size_prior_ratio_report(ComplexityPrior(a=2.0, c=1.0), n=10, s_max=10)
    assert rep2.min_ratio == pytest.approx(0.01, rel=1e-12)
    assert rep2.max_ratio == pytest.approx(0.01, rel=1e-12)


def test_ratio_report_beta_binomial():
    rep = size_prior_ratio_report(BetaBinomialPrior(xi=1.01), n=100, s_max=20)
    assert 0.0 < rep.min_ratio <= rep.max_ratio < 1.0
    assert rep.implied_a1 >= rep.implied_a2


def test_ratio_report_validation():
    with pytest.raises(ValueError):
        size_prior_ratio_report(ComplexityPrior(a=1.0), n=10, s_max=0)
    with pytest.raises(ValueError):
        size_prior_ratio_report(ComplexityPrior(a=1.0), n=10, s_max=11)


@given(st.floats(0.0, 1.0))
def test_tv_bound_affine(pi_star):
    bound = tv_upper_bound(pi_star)
    assert 0.0 <= bound <= 2.0
    assert bound == pytest.approx(2.0 - 2.0 * pi_star, abs=1e-12)


def test_tv_bound_examples_and_domain():
    assert tv_upper_bound(1.0) == 0.0
    assert tv_upper_bound(0.9) == pytest.approx(0.2, abs=1e-15)
    with pytest.raises(ValueError):
        tv_upper_bound(1.5)


def test_tv_bound_shrinks_with_signal_strength():
    # exact enumeration: stronger signals concentrate mass on the support
    cfg = ModelConfig(n=10)
    prior = ComplexityPrior(a=1.0)
    support = Configuration((1, 2, 3))
    grid = (2.0, 3.0, 4.0, 5.0, 6.0, 7.0)
    per_seed = []
    for seed in range(5):
        noise = np.random.default_rng(seed).standard_normal(10)
        bounds = []
        for mag in grid:
            theta = np.zeros(10)
            theta[:3] = mag
            table = enumerate_posterior(cfg, prior, DataVector(theta + noise))
            bounds.append(tv_upper_bound(table.posterior_probability(support)))
        assert bounds[-1] < bounds[0]
        per_seed.append(bounds)
    mean_trend = np.mean(per_seed, axis=0)
    assert np.all(np.diff(mean_trend) < 0)
