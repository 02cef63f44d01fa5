"""Normal mixture CDF with a point mass at the origin.

The marginal posterior of a linear functional of the means is a
weighted sum of normal CDFs plus a step at zero contributed by
configurations on which the functional degenerates. Quantile inversion
must treat the step explicitly: when the jump straddles the target
level the quantile is exactly 0; otherwise bisection on the strictly
increasing continuous part applies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

QUANTILE_TOL = 1e-9


@dataclass(frozen=True)
class NormalStepMixture:
    """CDF  t -> jump * 1[t >= 0] + sum_i weights[i] * Phi((t - means[i]) / scales[i])."""

    jump: float
    weights: np.ndarray
    means: np.ndarray
    scales: np.ndarray

    def __post_init__(self) -> None:
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        m = np.atleast_1d(np.asarray(self.means, dtype=float))
        s = np.atleast_1d(np.asarray(self.scales, dtype=float))
        if not (w.shape == m.shape == s.shape):
            raise ValueError("weights, means, scales must share one shape")
        if np.any(w < 0) or self.jump < -1e-12:
            raise ValueError("mixture weights must be nonnegative")
        if np.any(s <= 0):
            raise ValueError("component scales must be strictly positive")
        total = self.jump + w.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"mixture mass must sum to 1, got {total!r}")
        for name, arr in (("weights", w), ("means", m), ("scales", s)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "jump", float(self.jump))

    @property
    def continuous_mass(self) -> float:
        return float(self.weights.sum())

    def _continuous_cdf(self, t):
        t = np.asarray(t, dtype=float)
        z = (t[..., None] - self.means) / self.scales
        return ndtr(z) @ self.weights

    def cdf(self, t):
        """Right-continuous CDF; accepts scalars or arrays."""
        t_arr = np.asarray(t, dtype=float)
        out = self._continuous_cdf(t_arr) + self.jump * (t_arr >= 0.0)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def quantile(self, q: float) -> float:
        """Generalized inverse inf{t : cdf(t) >= q} for q in (0, 1)."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"quantile level must lie in (0, 1), got {q}")
        if self.continuous_mass <= 0.0:
            return 0.0  # pure step at the origin
        hc0 = float(self._continuous_cdf(0.0))
        # Strict comparison: exact equality means the infimum sits on the
        # jump at 0 (in floats it also avoids bisecting a saturated tail).
        if hc0 > q:
            return self._invert_continuous(q)
        if hc0 + self.jump >= q:
            return 0.0
        return self._invert_continuous(q - self.jump)

    def _invert_continuous(self, target: float) -> float:
        # The continuous part is strictly increasing, so bisection from an
        # expanded bracket is globally safe.
        reach = 10.0 * float(self.scales.max())
        lo = float(self.means.min()) - reach
        hi = float(self.means.max()) + reach
        span = hi - lo if hi > lo else 1.0
        while self._continuous_cdf(lo) > target:
            lo -= span
            span *= 2.0
        while self._continuous_cdf(hi) < target:
            hi += span
            span *= 2.0
        while hi - lo > QUANTILE_TOL:
            mid = 0.5 * (lo + hi)
            if self._continuous_cdf(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)
