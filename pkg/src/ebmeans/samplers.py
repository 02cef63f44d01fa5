"""MCMC over configurations for n beyond the enumeration cap.

Two chains share the stationary law of the marginal configuration
posterior:

* ``mh_chain`` — Metropolis-Hastings with a mixed proposal: with
  probability ``flip_probability`` toggle a uniformly chosen index,
  otherwise swap a uniformly chosen member with a uniformly chosen
  non-member (the swap is skipped as a self-move when the configuration
  is empty or full). Both proposals are symmetric, so acceptance is
  min{1, exp(delta log posterior)}.
* ``gibbs_chain`` — for the beta-binomial prior only, alternating the
  closed-form conditionals: indices are included independently given
  the latent weight W, and W given the configuration is a Beta draw.

RNG contract: numpy's PCG64 via ``np.random.default_rng(seed)``; all
randomness for a chain comes from that single stream, so a fixed seed
reproduces draws bit-for-bit. Parallel replicates must use distinct
child seeds (see the experiments module for the stream-splitting rule).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .model import (
    BetaBinomialPrior,
    Configuration,
    DataVector,
    ModelConfig,
    SizePrior,
    log_config_prior_by_size,
    posterior_variance,
)


@dataclass(frozen=True)
class ChainSettings:
    """Iteration budget, burn-in (default 10%), seed, and MH move mix."""

    iterations: int
    burn_in: int | None = None
    seed: int = 0
    flip_probability: float = 0.9

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", self.iterations // 10)
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError(
                f"burn_in must lie in [0, iterations), got {self.burn_in} "
                f"with iterations={self.iterations}"
            )
        if not 0.0 < self.flip_probability <= 1.0:
            raise ValueError(
                f"flip_probability must lie in (0, 1], got {self.flip_probability}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.iterations < 1000:
            warnings.warn(
                f"iterations={self.iterations} is below the recommended "
                "floor of 1000",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class ConfigurationSamples:
    """Retained MCMC draws plus chain metadata.

    ``accept_count`` is present for MH chains only; ``w_draws`` (the
    latent inclusion weight) for Gibbs chains only.
    """

    n: int
    draws: tuple[Configuration, ...]
    iterations: int
    burn_in: int
    seed: int
    accept_count: int | None = None
    w_draws: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.draws) != self.iterations - self.burn_in:
            raise ValueError(
                f"expected {self.iterations - self.burn_in} retained draws, "
                f"got {len(self.draws)}"
            )
        if self.accept_count is not None and not (
            0 <= self.accept_count <= self.iterations
        ):
            raise ValueError("accept_count must lie in [0, iterations]")
        if self.w_draws is not None:
            w = np.asarray(self.w_draws, dtype=float)
            if w.size != len(self.draws):
                raise ValueError("w_draws length must match draws")
            if not np.all((w > 0.0) & (w < 1.0)):
                raise ValueError("latent weights must lie strictly in (0, 1)")
            w = w.copy()
            w.flags.writeable = False
            object.__setattr__(self, "w_draws", w)

    def to_text(self) -> str:
        """Chain dump: 'iteration,size,indices' per retained draw; the
        iteration column is the 1-based global iteration number."""
        lines = ["iteration,size,indices"]
        for i, S in enumerate(self.draws):
            idx = ";".join(str(k) for k in S.indices)
            lines.append(f"{self.burn_in + i + 1},{S.size},{idx}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ChainSummary:
    acceptance_rate: float | None
    mean_size: float
    size_counts: np.ndarray
    inclusion_frequencies: np.ndarray


def _inclusion_log_prefactor(cfg: ModelConfig, Y: DataVector) -> np.ndarray:
    # Per-index part of the Gibbs inclusion odds, free of the latent weight.
    return -0.5 * math.log1p(cfg.alpha / cfg.tau) + cfg.alpha * Y.y**2 / (
        2.0 * cfg.sigma2
    )


def conditional_inclusion_probabilities(
    cfg: ModelConfig, Y: DataVector, w: float
) -> np.ndarray:
    """P(k in S | W = w) for every index under the beta-binomial model:
    odds are ((1-w)/w) * (1 + alpha/tau)^{-1/2} * exp(alpha Y_k^2 / 2 sigma^2)."""
    if not 0.0 < w < 1.0:
        raise ValueError(f"latent weight must lie in (0, 1), got {w}")
    log_r = math.log1p(-w) - math.log(w)
    return expit(_inclusion_log_prefactor(cfg, Y) + log_r)


def mh_chain(
    cfg: ModelConfig, prior: SizePrior, Y: DataVector, settings: ChainSettings
) -> ConfigurationSamples:
    """Metropolis-Hastings chain on configurations, started from the empty set."""
    n = cfg.n
    if Y.n != n:
        raise ValueError(f"data length {Y.n} does not match n={n}")
    rng = np.random.default_rng(settings.seed)
    iters = settings.iterations
    # One block per random role, drawn in a fixed order for reproducibility.
    u_move = rng.random(iters)
    u_pick = rng.random(iters)
    u_pick2 = rng.random(iters)
    u_accept = rng.random(iters)

    prior_by_size = log_config_prior_by_size(prior, n).tolist()
    pen = 0.5 * math.log1p(cfg.alpha / cfg.tau)
    gain = (cfg.alpha / (2.0 * cfg.sigma2) * Y.y**2).tolist()

    # Index bookkeeping (0-based internally) with O(1) uniform picks.
    members: list[int] = []
    nonmembers = list(range(n))
    pos = [-1] * n  # position of k in members if in, else in nonmembers
    for k in range(n):
        pos[k] = k
    is_member = [False] * n

    def move(k: int, source: list, dest: list) -> None:
        p = pos[k]
        last = source[-1]
        source[p] = last
        pos[last] = p
        source.pop()
        pos[k] = len(dest)
        dest.append(k)

    flip_p = settings.flip_probability
    burn = settings.burn_in
    accept_count = 0
    draws: list[Configuration] = []
    size = 0
    for t in range(iters):
        if u_move[t] < flip_p:
            k = int(u_pick[t] * n)
            if is_member[k]:
                delta = prior_by_size[size - 1] - prior_by_size[size] + pen - gain[k]
            else:
                delta = prior_by_size[size + 1] - prior_by_size[size] - pen + gain[k]
            if delta >= 0.0 or math.log(u_accept[t]) < delta:
                accept_count += 1
                if is_member[k]:
                    is_member[k] = False
                    move(k, members, nonmembers)
                    size -= 1
                else:
                    is_member[k] = True
                    move(k, nonmembers, members)
                    size += 1
        elif 0 < size < n:
            i = members[int(u_pick[t] * size)]
            j = nonmembers[int(u_pick2[t] * (n - size))]
            delta = gain[j] - gain[i]
            if delta >= 0.0 or math.log(u_accept[t]) < delta:
                accept_count += 1
                is_member[i] = False
                is_member[j] = True
                move(i, members, nonmembers)
                move(j, nonmembers, members)
        # else: swap proposed from an empty/full configuration, a self-move
        if t >= burn:
            draws.append(Configuration(tuple(sorted(k + 1 for k in members))))

    return ConfigurationSamples(
        n=n,
        draws=tuple(draws),
        iterations=iters,
        burn_in=burn,
        seed=settings.seed,
        accept_count=accept_count,
    )


def gibbs_chain(
    cfg: ModelConfig,
    bb_prior: SizePrior,
    Y: DataVector,
    settings: ChainSettings,
) -> ConfigurationSamples:
    """Gibbs chain alternating S | W and W | S; beta-binomial prior only.

    Each iteration records the configuration drawn given the current
    weight and the weight refreshed from that configuration. The chain
    starts from a prior draw of W.
    """
    if not isinstance(bb_prior, BetaBinomialPrior):
        raise TypeError(
            f"the Gibbs chain requires a BetaBinomialPrior, got "
            f"{type(bb_prior).__name__}"
        )
    n = cfg.n
    if Y.n != n:
        raise ValueError(f"data length {Y.n} does not match n={n}")
    rng = np.random.default_rng(settings.seed)
    b = bb_prior.b_n(n)
    log_pref = _inclusion_log_prefactor(cfg, Y)
    w_lo = np.nextafter(0.0, 1.0)
    w_hi = np.nextafter(1.0, 0.0)  # keep the latent chain off the boundary

    w = float(np.clip(rng.beta(b, 1.0), w_lo, w_hi))
    burn = settings.burn_in
    draws: list[Configuration] = []
    w_draws: list[float] = []
    for t in range(settings.iterations):
        p = expit(log_pref + (math.log1p(-w) - math.log(w)))
        incl = rng.random(n) < p
        size = int(incl.sum())
        w = float(np.clip(rng.beta(b + n - size, size + 1.0), w_lo, w_hi))
        if t >= burn:
            draws.append(
                Configuration(tuple((np.flatnonzero(incl) + 1).tolist()))
            )
            w_draws.append(w)

    return ConfigurationSamples(
        n=n,
        draws=tuple(draws),
        iterations=settings.iterations,
        burn_in=burn,
        seed=settings.seed,
        w_draws=np.array(w_draws),
    )


def draw_theta_given_config(
    cfg: ModelConfig, Y: DataVector, S: Configuration, rng: np.random.Generator
) -> np.ndarray:
    """One posterior draw of theta given the configuration: independent
    N(Y_k, v_alpha) on S, exact zeros elsewhere."""
    if Y.n != cfg.n:
        raise ValueError(f"data length {Y.n} does not match n={cfg.n}")
    S.validate_for(cfg.n)
    theta = np.zeros(cfg.n)
    if S.size:
        idx = np.fromiter(S.indices, dtype=int, count=S.size) - 1
        theta[idx] = Y.y[idx] + math.sqrt(posterior_variance(cfg)) * (
            rng.standard_normal(S.size)
        )
    return theta


def chain_summary(samples: ConfigurationSamples) -> ChainSummary:
    """Acceptance rate (MH), model-size distribution, and per-index
    empirical inclusion frequencies of the retained draws."""
    if not samples.draws:
        raise ValueError("cannot summarize an empty chain")
    n = samples.n
    size_counts = np.zeros(n + 1, dtype=int)
    incl = np.zeros(n)
    for S in samples.draws:
        size_counts[S.size] += 1
        for k in S.indices:
            incl[k - 1] += 1
    m = len(samples.draws)
    rate = (
        samples.accept_count / samples.iterations
        if samples.accept_count is not None
        else None
    )
    return ChainSummary(
        acceptance_rate=rate,
        mean_size=float((size_counts * np.arange(n + 1)).sum() / m),
        size_counts=size_counts,
        inclusion_frequencies=incl / m,
    )
