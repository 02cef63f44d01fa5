"""Exhaustive configuration posterior for small n.

Enumerates all 2^n configurations, normalizes their log weights with
log-sum-exp, and answers every downstream question (inclusion
probabilities, the mixture CDF of a linear functional, credible bounds)
exactly. This is the ground truth the MCMC samplers are validated
against; n is capped because the table grows as 2^n.

Configurations are encoded as bitmasks (bit k-1 <=> index k) with the
table ordered by size, then lexicographically by index tuple.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import logsumexp

from .mixture import NormalStepMixture
from .model import (
    Configuration,
    DataVector,
    ModelConfig,
    SizePrior,
    log_config_prior_by_size,
    posterior_variance,
)

DEFAULT_ENUMERATION_CAP = 20


class EnumerationCapError(ValueError):
    """Raised when n is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class LinearFunctional:
    """Coefficients x of the scalar functional x' theta."""

    x: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.x, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("functional coefficients must form a 1-d vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("functional coefficients must be finite")
        if not np.any(arr != 0.0):
            raise ValueError("functional coefficients must not all be zero")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "x", arr)

    @classmethod
    def coordinate(cls, k: int, n: int) -> "LinearFunctional":
        """The basis functional picking out theta_k (1-based)."""
        if not 1 <= k <= n:
            raise ValueError(f"index k={k} outside [1, {n}]")
        x = np.zeros(n)
        x[k - 1] = 1.0
        return cls(x)


@dataclass(frozen=True)
class PosteriorTable:
    """All 2^n configurations with normalized log posterior weights."""

    n: int
    cfg: ModelConfig
    masks: np.ndarray
    sizes: np.ndarray
    log_weights: np.ndarray
    normalized: bool = True

    def __len__(self) -> int:
        return int(self.masks.size)

    def configuration(self, i: int) -> Configuration:
        return _decode_mask(int(self.masks[i]))

    def entries(self) -> Iterator[tuple[Configuration, float]]:
        for i in range(len(self)):
            yield self.configuration(i), float(self.log_weights[i])

    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def log_posterior(self, S: Configuration) -> float:
        S.validate_for(self.n)
        mask = _encode(S)
        pos = np.flatnonzero(self.masks == mask)
        if pos.size != 1:
            raise ValueError(f"configuration {S.indices} not found in table")
        return float(self.log_weights[pos[0]])

    def posterior_probability(self, S: Configuration) -> float:
        return math.exp(self.log_posterior(S))

    def to_text(self, precision: int = 6) -> str:
        """Plain-text serialization: header plus one row per configuration,
        columns 'size,indices,log_weight' with 1-based indices joined by ';'."""
        lines = ["size,indices,log_weight"]
        for i in range(len(self)):
            idx = ";".join(str(k) for k in self.configuration(i).indices)
            lines.append(f"{int(self.sizes[i])},{idx},{self.log_weights[i]:.{precision}g}")
        return "\n".join(lines) + "\n"


def _encode(S: Configuration) -> int:
    mask = 0
    for k in S.indices:
        mask |= 1 << (k - 1)
    return mask


def _decode_mask(mask: int) -> Configuration:
    idx = []
    k = 1
    while mask:
        if mask & 1:
            idx.append(k)
        mask >>= 1
        k += 1
    return Configuration(tuple(idx))


def _subset_sums(values: np.ndarray) -> np.ndarray:
    """out[mask] = sum of values[k] over the set bits of mask."""
    out = np.zeros(1)
    for v in values:
        out = np.concatenate([out, out + v])
    return out


def _ordered_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Masks for all subsets, ordered by size then lexicographically."""
    masks = np.empty(2**n, dtype=np.int64)
    sizes = np.empty(2**n, dtype=np.int64)
    pos = 0
    for s in range(n + 1):
        for combo in itertools.combinations(range(n), s):
            masks[pos] = sum(1 << b for b in combo)
            sizes[pos] = s
            pos += 1
    return masks, sizes


def enumerate_posterior(
    cfg: ModelConfig,
    prior: SizePrior,
    Y: DataVector,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> PosteriorTable:
    """Build the full normalized posterior table over all 2^n configurations."""
    n = cfg.n
    if n > cap:
        raise EnumerationCapError(
            f"n={n} exceeds the enumeration cap {cap}; use the samplers instead"
        )
    if Y.n != n:
        raise ValueError(f"data length {Y.n} does not match n={n}")
    masks, sizes = _ordered_masks(n)
    y2 = Y.y**2
    kept = _subset_sums(y2)[masks]
    prior_by_size = log_config_prior_by_size(prior, n)
    log_w = (
        prior_by_size[sizes]
        - 0.5 * sizes * math.log1p(cfg.alpha / cfg.tau)
        - cfg.alpha / (2.0 * cfg.sigma2) * (y2.sum() - kept)
    )
    log_w = log_w - logsumexp(log_w)
    return PosteriorTable(
        n=n, cfg=cfg, masks=masks, sizes=sizes, log_weights=log_w
    )


def inclusion_probability(table: PosteriorTable, k: int) -> float:
    """Posterior probability that index k belongs to the configuration."""
    if not table.normalized:
        raise ValueError("table must be normalized")
    if not 1 <= k <= table.n:
        raise ValueError(f"index k={k} outside [1, {table.n}]")
    member = (table.masks >> (k - 1)) & 1 == 1
    # round-off can push the exponentiated sum an ulp past 1
    return min(1.0, float(np.exp(logsumexp(table.log_weights[member]))))


def functional_mixture(
    table: PosteriorTable, cfg: ModelConfig, Y: DataVector, x: LinearFunctional
) -> NormalStepMixture:
    """Exact posterior law of x' theta: a normal mixture over configurations
    plus a step at 0 from those where x vanishes on the support."""
    if not table.normalized:
        raise ValueError("table must be normalized")
    if Y.n != table.n or x.x.size != table.n:
        raise ValueError("data / functional length does not match the table")
    psi_hat = _subset_sums(x.x * Y.y)[table.masks]
    xnorm2 = _subset_sums(x.x**2)[table.masks]
    w = np.exp(table.log_weights)
    degenerate = xnorm2 == 0.0
    v_alpha = posterior_variance(cfg)
    return NormalStepMixture(
        jump=float(w[degenerate].sum()),
        weights=w[~degenerate],
        means=psi_hat[~degenerate],
        scales=np.sqrt(v_alpha * xnorm2[~degenerate]),
    )


def functional_cdf(
    table: PosteriorTable,
    cfg: ModelConfig,
    Y: DataVector,
    x: LinearFunctional,
    t,
):
    """Marginal posterior CDF of x' theta at t (scalar or array)."""
    return functional_mixture(table, cfg, Y, x).cdf(t)


def upper_credible_bound(
    table: PosteriorTable,
    cfg: ModelConfig,
    Y: DataVector,
    x: LinearFunctional,
    gamma: float,
) -> float:
    """Level 1-gamma upper credible bound inf{t : H(t) >= 1-gamma}."""
    _check_gamma(gamma)
    return functional_mixture(table, cfg, Y, x).quantile(1.0 - gamma)


def equal_tailed_interval(
    table: PosteriorTable,
    cfg: ModelConfig,
    Y: DataVector,
    x: LinearFunctional,
    gamma: float,
) -> tuple[float, float]:
    """Equal-tailed two-sided interval (quantiles at gamma/2 and 1-gamma/2)."""
    _check_gamma(gamma)
    mix = functional_mixture(table, cfg, Y, x)
    lower = mix.quantile(gamma / 2.0)
    upper = mix.quantile(1.0 - gamma / 2.0)
    if lower > upper:  # only from bisection noise on a flat stretch
        lower = upper = 0.5 * (lower + upper)
    return lower, upper


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2), got {gamma}")
