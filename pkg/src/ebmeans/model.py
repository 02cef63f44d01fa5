"""Sparse normal means model with an empirical (data-centered) slab prior.

The mean vector is decomposed into a configuration S (the set of
coordinates declared non-zero) and S-specific values. A size prior
f_n(|S|) combined with a uniform prior over configurations of a given
size, a N(Y_S, sigma^2/tau) slab centered at the data, and a fractional
likelihood power alpha yield a closed-form marginal posterior over
configurations:

    log pi(S) - (|S|/2) log(1 + alpha/tau) - (alpha / 2 sigma^2) ||Y_{S^c}||^2

up to an additive constant shared by all S for fixed data. Everything
here stays in log space; only differences between configurations are
meaningful. Indices are 1-based throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class ModelConfig:
    """Problem dimension and the posterior tuning constants.

    alpha is the fractional likelihood power, tau the prior precision
    of the slab. alpha + tau <= 1 keeps the slab posterior variance at
    least sigma2 (the coverage-safe regime); violating it is allowed
    but triggers a warning.
    """

    n: int
    sigma2: float = 1.0
    alpha: float = 0.95
    tau: float = 0.025

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not self.sigma2 > 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.coverage_safe:
            warnings.warn(
                f"alpha + tau = {self.alpha + self.tau:.6g} > 1: the slab "
                "posterior variance falls below sigma2 and coverage "
                "guarantees degrade",
                UserWarning,
                stacklevel=2,
            )

    @property
    def coverage_safe(self) -> bool:
        return self.alpha + self.tau <= 1.0


@dataclass(frozen=True)
class Configuration:
    """A subset of {1, ..., n}, stored as strictly increasing 1-based indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        prev = 0
        for i in idx:
            if i <= prev:
                raise ValueError(
                    f"indices must be strictly increasing and >= 1, got {idx}"
                )
            prev = i

    @classmethod
    def from_members(cls, members: Iterable[int]) -> "Configuration":
        """Build from any iterable of indices; sorts and deduplicates."""
        return cls(tuple(sorted({int(i) for i in members})))

    @property
    def size(self) -> int:
        return len(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, k: int) -> bool:
        return k in self.indices

    def complement(self, n: int) -> "Configuration":
        self.validate_for(n)
        inside = set(self.indices)
        return Configuration(tuple(i for i in range(1, n + 1) if i not in inside))

    def validate_for(self, n: int) -> None:
        if self.indices and self.indices[-1] > n:
            raise ValueError(
                f"configuration {self.indices} has indices beyond n={n}"
            )


@dataclass(frozen=True)
class ComplexityPrior:
    """Truncated geometric size prior f_n(s) proportional to (c n^a)^{-s}."""

    a: float
    c: float = 1.0

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")


@dataclass(frozen=True)
class BetaBinomialPrior:
    """Beta(b_n, 1) latent inclusion weight with b_n = n^xi, xi > 1.

    Marginally |S| is beta-binomial; the xi > 1 restriction keeps the
    size-ratio decay fast enough for the sparse regime.
    """

    xi: float = 1.01

    def __post_init__(self) -> None:
        if not self.xi > 1:
            raise ValueError(f"xi must exceed 1, got {self.xi}")

    def b_n(self, n: int) -> float:
        return float(n) ** self.xi


SizePrior = Union[ComplexityPrior, BetaBinomialPrior]


@dataclass(frozen=True)
class DataVector:
    """Observed vector Y of length n with finite entries."""

    y: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.y, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("data must be a non-empty 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data entries must all be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "y", arr)

    @property
    def n(self) -> int:
        return int(self.y.size)

    def __len__(self) -> int:
        return self.n


def _log_binom(n: int, s) -> float:
    return gammaln(n + 1) - gammaln(np.asarray(s) + 1) - gammaln(n - np.asarray(s) + 1)


def log_size_prior(prior: SizePrior, s: int, n: int) -> float:
    """log f_n(s), up to an additive constant independent of s.

    Complexity: -s log(c n^a) (so f_n(0) = 1 by convention).
    Beta-binomial: the exactly normalized value, via log-gamma.
    """
    if not 0 <= s <= n:
        raise ValueError(f"size s={s} outside [0, {n}]")
    if isinstance(prior, ComplexityPrior):
        cna = prior.c * float(n) ** prior.a
        if cna <= 1.0:
            raise ValueError(
                f"complexity prior needs c*n^a > 1, got {cna:.6g} at n={n}"
            )
        return -s * math.log(cna)
    if isinstance(prior, BetaBinomialPrior):
        b = prior.b_n(n)
        return float(
            math.log(b)
            + _log_binom(n, s)
            + gammaln(n + b - s)
            + gammaln(s + 1)
            - gammaln(n + b + 1)
        )
    raise TypeError(f"unknown size prior {type(prior).__name__}")


def log_config_prior(prior: SizePrior, S: Configuration, n: int) -> float:
    """log of the configuration prior: f_n(|S|) spread uniformly over sizes."""
    S.validate_for(n)
    s = S.size
    return log_size_prior(prior, s, n) - float(_log_binom(n, s))


def log_config_prior_by_size(prior: SizePrior, n: int) -> np.ndarray:
    """Array over s = 0..n of log f_n(s) - log C(n, s), shared by the samplers
    and the enumeration backend."""
    sizes = np.arange(n + 1)
    if isinstance(prior, ComplexityPrior):
        cna = prior.c * float(n) ** prior.a
        if cna <= 1.0:
            raise ValueError(
                f"complexity prior needs c*n^a > 1, got {cna:.6g} at n={n}"
            )
        log_f = -sizes * math.log(cna)
    elif isinstance(prior, BetaBinomialPrior):
        b = prior.b_n(n)
        log_f = (
            math.log(b)
            + _log_binom(n, sizes)
            + gammaln(n + b - sizes)
            + gammaln(sizes + 1)
            - gammaln(n + b + 1)
        )
    else:
        raise TypeError(f"unknown size prior {type(prior).__name__}")
    return np.asarray(log_f - _log_binom(n, sizes), dtype=float)


def log_unnorm_posterior(
    cfg: ModelConfig, prior: SizePrior, Y: DataVector, S: Configuration
) -> float:
    """Log posterior weight of configuration S, up to a constant shared
    across all S for fixed Y."""
    if Y.n != cfg.n:
        raise ValueError(f"data length {Y.n} does not match n={cfg.n}")
    S.validate_for(cfg.n)
    idx = np.fromiter(S.indices, dtype=int, count=S.size)
    y2 = Y.y**2
    resid = float(y2.sum() - y2[idx - 1].sum()) if S.size else float(y2.sum())
    return (
        log_config_prior(prior, S, cfg.n)
        - 0.5 * S.size * math.log1p(cfg.alpha / cfg.tau)
        - cfg.alpha / (2.0 * cfg.sigma2) * resid
    )


def posterior_variance(cfg: ModelConfig) -> float:
    """Slab posterior variance sigma^2 / (alpha + tau); >= sigma^2 exactly
    when the coverage-safe condition alpha + tau <= 1 holds."""
    return cfg.sigma2 / (cfg.alpha + cfg.tau)
