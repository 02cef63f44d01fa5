"""Computable forms of the signal-strength thresholds and diagnostic bounds.

Two thresholds matter for a coordinate's posterior behavior: the
selection threshold rho_n above which the whole true support is
recovered, and the weaker zeta_n above which a single coordinate's
inclusion probability still tends to one (enough for valid marginal
coverage). Alongside them: an empirical tail-decay report for size
priors and the total-variation bound 2(1 - pi(S_true)) that turns the
posterior's weight on the true configuration into a normal-approximation
diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Configuration, ModelConfig, SizePrior, log_size_prior


@dataclass(frozen=True)
class SignalPartition:
    """True support split into strong entries (above a threshold) and the rest."""

    true_support: Configuration
    strong_indices: Configuration

    def __post_init__(self) -> None:
        if not set(self.strong_indices.indices) <= set(self.true_support.indices):
            raise ValueError("strong indices must be a subset of the true support")

    @property
    def s_star(self) -> int:
        return self.true_support.size

    @property
    def s_dagger(self) -> int:
        return self.strong_indices.size


@dataclass(frozen=True)
class RatioBoundReport:
    """Observed range of f_n(s)/f_n(s-1) and the implied n-exponents."""

    min_ratio: float
    max_ratio: float
    implied_a1: float
    implied_a2: float

    def __post_init__(self) -> None:
        if not (0 < self.min_ratio <= self.max_ratio):
            raise ValueError(
                f"ratios must be positive with min <= max, got "
                f"({self.min_ratio}, {self.max_ratio})"
            )


def rho_threshold(cfg: ModelConfig, M: float) -> float:
    """Selection threshold sqrt(2 sigma^2 (1+alpha) M log n / alpha).

    Above this magnitude a mean is reliably kept in the posterior
    support. M defaults elsewhere to 1 + a1, the explicit branch of the
    rate constant.
    """
    if not M > 0:
        raise ValueError(f"M must be positive, got {M}")
    if cfg.n < 2:
        raise ValueError(f"threshold needs n >= 2, got n={cfg.n}")
    return math.sqrt(
        2.0 * cfg.sigma2 * (1.0 + cfg.alpha) * M * math.log(cfg.n) / cfg.alpha
    )


def zeta_threshold(
    cfg: ModelConfig, a1: float, s_star: int, s_dagger: int
) -> float:
    """Marginal-coverage threshold for a single coordinate.

    zeta_n^2 = (2 sigma^2 (1+alpha)/alpha) * { a1 log n
               + log((n - s_dagger)/(s_dagger + 1))
               + (s_star - s_dagger - 1) log 2 }

    where s_dagger counts the other means already above rho_n. Raises
    when the braced term goes negative rather than clamping.
    """
    if cfg.n < 2:
        raise ValueError(f"threshold needs n >= 2, got n={cfg.n}")
    if not 0 <= s_dagger < s_star <= cfg.n:
        raise ValueError(
            f"need 0 <= s_dagger < s_star <= n, got "
            f"s_dagger={s_dagger}, s_star={s_star}, n={cfg.n}"
        )
    inner = (
        a1 * math.log(cfg.n)
        + math.log((cfg.n - s_dagger) / (s_dagger + 1.0))
        + (s_star - s_dagger - 1) * math.log(2.0)
    )
    if inner < 0:
        raise ValueError(
            f"squared threshold is negative ({inner:.6g} inside the braces); "
            "the bound is vacuous for these sizes"
        )
    return math.sqrt(2.0 * cfg.sigma2 * (1.0 + cfg.alpha) / cfg.alpha * inner)


def strong_signal_partition(theta_star, rho: float) -> SignalPartition:
    """Split a true mean vector into its support and the entries with
    |theta_i| strictly above rho."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    theta = np.asarray(theta_star, dtype=float)
    support = Configuration(tuple(int(i) + 1 for i in np.flatnonzero(theta != 0.0)))
    strong = Configuration(
        tuple(int(i) + 1 for i in np.flatnonzero(np.abs(theta) > rho))
    )
    return SignalPartition(true_support=support, strong_indices=strong)


def size_prior_ratio_report(
    prior: SizePrior, n: int, s_max: int
) -> RatioBoundReport:
    """Scan f_n(s)/f_n(s-1) for s = 1..s_max and report the observed range.

    Implied exponents solve ratio = n^{-a}; the min ratio yields the
    larger exponent (implied_a1) and the max the smaller (implied_a2),
    matching the direction of the tail-decay sandwich.
    """
    if not 1 <= s_max <= n:
        raise ValueError(f"s_max must lie in [1, {n}], got {s_max}")
    log_f = np.array([log_size_prior(prior, s, n) for s in range(s_max + 1)])
    ratios = np.exp(np.diff(log_f))
    min_ratio = float(ratios.min())
    max_ratio = float(ratios.max())
    log_n = math.log(n)
    return RatioBoundReport(
        min_ratio=min_ratio,
        max_ratio=max_ratio,
        implied_a1=-math.log(min_ratio) / log_n,
        implied_a2=-math.log(max_ratio) / log_n,
    )


def tv_upper_bound(pi_star: float) -> float:
    """Total-variation bound 2 (1 - pi_star) on the distance between the
    posterior and its normal-times-point-mass approximation at the true
    configuration."""
    if not 0.0 <= pi_star <= 1.0:
        raise ValueError(f"pi_star must lie in [0, 1], got {pi_star}")
    return 2.0 * (1.0 - pi_star)
