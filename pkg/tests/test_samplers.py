import math

import numpy as np
import pytest
from functools import lru_cache
from scipy.special import expit, roots_legendre
from scipy.stats import beta as beta_dist

from ebmeans import (
    BetaBinomialPrior,
    ChainSettings,
    ComplexityPrior,
    Configuration,
    ConfigurationSamples,
    DataVector,
    ModelConfig,
    chain_summary,
    conditional_inclusion_probabilities,
    draw_theta_given_config,
    enumerate_posterior,
    gibbs_chain,
    inclusion_probability,
    log_unnorm_posterior,
    mh_chain,
    posterior_variance,
)


@lru_cache(maxsize=1)
def _unit_interval_rule(nodes=10_000):
    # Gauss-Legendre on [0, 1]
    x, w = roots_legendre(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


def _all_subsets(n):
    masks = range(2**n)
    return [
        Configuration(tuple(k + 1 for k in range(n) if m >> k & 1)) for m in masks
    ]


def _mh_kernel(cfg, prior, Y, flip_p):
    """Exact MH transition matrix over all configurations, built from the
    documented proposal: flip w.p. flip_p, swap otherwise (self-move when
    empty/full)."""
    n = cfg.n
    subsets = _all_subsets(n)
    lp = np.array([log_unnorm_posterior(cfg, prior, Y, S) for S in subsets])
    index = {S.indices: i for i, S in enumerate(subsets)}
    m = len(subsets)
    K = np.zeros((m, m))
    for i, S in enumerate(subsets):
        inside = set(S.indices)
        size = len(inside)
        # flip moves
        for k in range(1, n + 1):
            T = inside ^ {k}
            j = index[tuple(sorted(T))]
            accept = min(1.0, math.exp(lp[j] - lp[i]))
            K[i, j] += flip_p / n * accept
        # swap moves
        if 0 < size < n:
            for out in inside:
                for into in set(range(1, n + 1)) - inside:
                    T = (inside - {out}) | {into}
                    j = index[tuple(sorted(T))]
                    accept = min(1.0, math.exp(lp[j] - lp[i]))
                    K[i, j] += (1 - flip_p) / (size * (n - size)) * accept
        K[i, i] += 1.0 - K[i].sum()
    return subsets, K


@pytest.mark.parametrize("n", [3, 4])
@pytest.mark.parametrize(
    "prior", [ComplexityPrior(a=1.0), BetaBinomialPrior(xi=1.01)]
)
def test_mh_detailed_balance_exact(n, prior):
    cfg = ModelConfig(n=n)
    rng = np.random.default_rng(n)
    Y = DataVector(rng.standard_normal(n) * 2.5)
    subsets, K = _mh_kernel(cfg, prior, Y, flip_p=0.9)
    table = enumerate_posterior(cfg, prior, Y)
    pi = np.array([table.posterior_probability(S) for S in subsets])
    assert np.allclose(K.sum(axis=1), 1.0, atol=1e-14)
    flow = pi[:, None] * K
    assert np.abs(flow - flow.T).max() < 1e-12


@pytest.mark.parametrize("n", [3, 4])
def test_gibbs_sweep_preserves_exact_marginal(n):
    # one exact Gibbs sweep (W | S then S' | W, with W integrated by
    # Gauss-Legendre quadrature) applied to the enumerated posterior
    cfg = ModelConfig(n=n)
    prior = BetaBinomialPrior(xi=1.01)
    rng = np.random.default_rng(17 + n)
    Y = DataVector(rng.standard_normal(n) + np.array([4.0] + [0.0] * (n - 1)))
    table = enumerate_posterior(cfg, prior, Y)
    subsets = _all_subsets(n)
    pi = np.array([table.posterior_probability(S) for S in subsets])
    b = prior.b_n(n)

    w, wq = _unit_interval_rule()
    # independent transcription of the inclusion odds
    log_pref = -0.5 * math.log1p(cfg.alpha / cfg.tau) + cfg.alpha * Y.y**2 / (
        2 * cfg.sigma2
    )
    p_incl = expit(log_pref[None, :] + (np.log1p(-w) - np.log(w))[:, None])

    member = np.array(
        [[k + 1 in S for k in range(n)] for S in subsets]
    )  # (2^n, n)
    # P(S' | w) for all nodes and subsets
    probs = np.where(member[None, :, :], p_incl[:, None, :], 1 - p_incl[:, None, :])
    p_next_given_w = probs.prod(axis=2)  # (nodes, 2^n)

    after = np.zeros(len(subsets))
    for i, S in enumerate(subsets):
        dens = beta_dist.pdf(w, b + n - S.size, S.size + 1)
        after += pi[i] * (wq * dens) @ p_next_given_w
    assert after.sum() == pytest.approx(1.0, abs=1e-9)
    tv = 0.5 * np.abs(after - pi).sum()
    assert tv < 1e-6


def test_mh_seed_determinism(strong_signal_case):
    cfg, _, Y = strong_signal_case
    prior = ComplexityPrior(a=1.0)
    settings = ChainSettings(iterations=5000, seed=99)
    s1 = mh_chain(cfg, prior, Y, settings)
    s2 = mh_chain(cfg, prior, Y, settings)
    assert s1.draws == s2.draws
    assert s1.accept_count == s2.accept_count
    s3 = mh_chain(cfg, prior, Y, ChainSettings(iterations=5000, seed=100))
    assert s3.draws != s1.draws


def test_gibbs_seed_determinism(strong_signal_case):
    cfg, _, Y = strong_signal_case
    prior = BetaBinomialPrior()
    settings = ChainSettings(iterations=5000, seed=7)
    s1 = gibbs_chain(cfg, prior, Y, settings)
    s2 = gibbs_chain(cfg, prior, Y, settings)
    assert s1.draws == s2.draws
    assert np.array_equal(s1.w_draws, s2.w_draws)
    assert np.all((s1.w_draws > 0) & (s1.w_draws < 1))
    assert s1.accept_count is None


def test_mh_matches_oracle(strong_signal_case):
    cfg, _, Y = strong_signal_case
    prior = ComplexityPrior(a=1.0)
    table = enumerate_posterior(cfg, prior, Y)
    samples = mh_chain(cfg, prior, Y, ChainSettings(iterations=50_000, seed=1))
    summary = chain_summary(samples)
    for k in range(1, 11):
        assert summary.inclusion_frequencies[k - 1] == pytest.approx(
            inclusion_probability(table, k), abs=0.02
        )


def test_gibbs_matches_oracle_and_mh(strong_signal_case):
    cfg, _, Y = strong_signal_case
    prior = BetaBinomialPrior()
    table = enumerate_posterior(cfg, prior, Y)
    g = gibbs_chain(cfg, prior, Y, ChainSettings(iterations=50_000, seed=2))
    m = mh_chain(cfg, prior, Y, ChainSettings(iterations=50_000, seed=3))
    pg = chain_summary(g).inclusion_frequencies
    pm = chain_summary(m).inclusion_frequencies
    for k in range(1, 11):
        exact = inclusion_probability(table, k)
        assert pg[k - 1] == pytest.approx(exact, abs=0.02)
        assert pg[k - 1] == pytest.approx(pm[k - 1], abs=0.03)


def test_gibbs_requires_beta_binomial(strong_signal_case):
    cfg, _, Y = strong_signal_case
    with pytest.raises(TypeError, match="BetaBinomial"):
        gibbs_chain(cfg, ComplexityPrior(a=1.0), Y, ChainSettings(iterations=2000))


def test_conditional_inclusion_limits():
    cfg = ModelConfig(n=4)
    Y = DataVector(np.array([3.0, -2.0, 0.5, 0.0]))
    # w -> 1: inclusion odds vanish for every index (monotonically)
    probs = [
        conditional_inclusion_probabilities(cfg, Y, w)
        for w in (0.5, 0.9, 0.999, 1.0 - 1e-9, 1.0 - 1e-12)
    ]
    for earlier, later in zip(probs, probs[1:]):
        assert np.all(later < earlier)
    assert np.all(probs[-1] < 1e-5)
    # w -> 0: everything is included
    p_lo = conditional_inclusion_probabilities(cfg, Y, 1e-13)
    assert np.all(p_lo > 1.0 - 1e-5)
    with pytest.raises(ValueError):
        conditional_inclusion_probabilities(cfg, Y, 1.0)


def test_gibbs_empty_configuration_weight_update():
    # W | S=empty ~ Beta(b_n + n, 1): mean near 1
    n = 10
    prior = BetaBinomialPrior(xi=1.01)
    b = prior.b_n(n)
    mean = (b + n) / (b + n + 1)
    draws = np.random.default_rng(0).beta(b + n, 1.0, size=200_000)
    assert draws.mean() == pytest.approx(mean, abs=5e-4)
    assert mean > 0.95


def test_chain_settings_validation():
    with pytest.raises(ValueError):
        ChainSettings(iterations=1000, burn_in=1000)
    with pytest.raises(ValueError):
        ChainSettings(iterations=0)
    with pytest.raises(ValueError):
        ChainSettings(iterations=1000, flip_probability=0.0)
    with pytest.raises(ValueError):
        ChainSettings(iterations=1000, seed=-1)
    with pytest.warns(UserWarning, match="floor"):
        ChainSettings(iterations=500)
    assert ChainSettings(iterations=4000).burn_in == 400


def test_samples_invariants():
    draws = (Configuration((1,)), Configuration(()))
    with pytest.raises(ValueError):
        ConfigurationSamples(
            n=2, draws=draws, iterations=5, burn_in=0, seed=0
        )  # wrong length
    with pytest.raises(ValueError):
        ConfigurationSamples(
            n=2, draws=draws, iterations=2, burn_in=0, seed=0, accept_count=3
        )
    with pytest.raises(ValueError):
        ConfigurationSamples(
            n=2,
            draws=draws,
            iterations=2,
            burn_in=0,
            seed=0,
            w_draws=np.array([0.5, 1.0]),
        )


def test_draw_theta_point_mass_and_moments():
    cfg = ModelConfig(n=4)
    Y = DataVector(np.array([3.0, -1.0, 0.5, 2.0]))
    rng = np.random.default_rng(8)
    assert np.array_equal(
        draw_theta_given_config(cfg, Y, Configuration(()), rng), np.zeros(4)
    )
    S = Configuration((1, 3))
    m = 100_000
    out = np.array([draw_theta_given_config(cfg, Y, S, rng) for _ in range(m)])
    assert np.all(out[:, [1, 3]] == 0.0)
    v = posterior_variance(cfg)
    for col, k in ((0, 1), (2, 3)):
        assert abs(out[:, col].mean() - Y.y[k - 1]) < 4 * math.sqrt(v / m)
        assert out[:, col].var() == pytest.approx(v, rel=0.05)


def test_chain_summary_contract(strong_signal_case):
    cfg, _, Y = strong_signal_case
    constant = ConfigurationSamples(
        n=3,
        draws=(Configuration((1, 2)),) * 4,
        iterations=4,
        burn_in=0,
        seed=0,
    )
    summary = chain_summary(constant)
    assert summary.inclusion_frequencies.tolist() == [1.0, 1.0, 0.0]
    assert summary.mean_size == 2.0
    assert summary.acceptance_rate is None

    samples = mh_chain(
        cfg, ComplexityPrior(a=1.0), Y, ChainSettings(iterations=50_000, seed=5)
    )
    summary = chain_summary(samples)
    assert summary.acceptance_rate == samples.accept_count / samples.iterations
    table = enumerate_posterior(cfg, ComplexityPrior(a=1.0), Y)
    expected_size = sum(inclusion_probability(table, k) for k in range(1, 11))
    assert summary.mean_size == pytest.approx(expected_size, abs=0.05)

    with pytest.raises(ValueError):
        chain_summary(
            ConfigurationSamples(
                n=2, draws=(), iterations=1, burn_in=1, seed=0
            )
        )


def test_chain_dump_format(strong_signal_case):
    cfg, _, Y = strong_signal_case
    samples = mh_chain(
        cfg, ComplexityPrior(a=1.0), Y, ChainSettings(iterations=1200, seed=4)
    )
    text = samples.to_text()
    lines = text.splitlines()
    assert lines[0] == "iteration,size,indices"
    assert len(lines) == 1 + 1200 - 120
    first = lines[1].split(",")
    assert first[0] == "121"  # 1-based global iteration after burn-in
    assert int(first[1]) == len(first[2].split(";")) if first[2] else True
