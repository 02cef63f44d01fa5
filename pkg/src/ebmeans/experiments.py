"""Monte Carlo coverage harness for marginal credible intervals.

The study design: a sparse true mean vector built from count-value
blocks, one coordinate swept along a signal grid; for each grid value
and replicate, data are drawn, the posterior is computed (MCMC chain or
exact enumeration), and the two-sided credible interval for the swept
coordinate is checked against the truth.

Seed-splitting rule: each replicate derives its streams from
``np.random.SeedSequence([master_seed, grid_index, replicate_index])``,
split via ``generate_state(2)`` into a data seed and a chain seed.
Replicates are therefore independent of execution order and safe to run
in parallel.

Config files (``read_experiment_config``) are plain ``key = value``
text; see ``CONFIG_KEYS`` for the accepted keys. Unknown keys are
rejected.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .inference import IntervalRequest, interval_from_samples
from .model import (
    BetaBinomialPrior,
    ComplexityPrior,
    DataVector,
    ModelConfig,
    SizePrior,
)
from .oracle import LinearFunctional, enumerate_posterior, equal_tailed_interval
from .samplers import ChainSettings, gibbs_chain, mh_chain

METHODS = ("mh", "gibbs", "exact")


class ReplicateError(RuntimeError):
    """A replicate failed; the run is aborted rather than silently thinned."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Full description of one coverage study.

    ``theta_blocks`` are (count, value) pairs expanding to the base true
    mean vector; the entry at ``vary_index`` (1-based) is replaced by
    each ``signal_grid`` value in turn. ``data_sigma2`` optionally
    decouples the data-generating noise from the model's sigma2 (0 is
    the permitted noiseless test mode).
    """

    cfg: ModelConfig
    prior: SizePrior
    chain: ChainSettings
    theta_blocks: tuple[tuple[int, float], ...]
    vary_index: int
    signal_grid: tuple[float, ...]
    replicates: int
    gamma: float = 0.05
    method: str = "mh"
    master_seed: int = 0
    data_sigma2: float | None = None

    def __post_init__(self) -> None:
        blocks = tuple((int(c), float(v)) for c, v in self.theta_blocks)
        object.__setattr__(self, "theta_blocks", blocks)
        if any(c < 1 for c, _ in blocks):
            raise ValueError("theta block counts must be >= 1")
        if sum(c for c, _ in blocks) != self.cfg.n:
            raise ValueError(
                f"theta blocks expand to {sum(c for c, _ in blocks)} entries, "
                f"but n={self.cfg.n}"
            )
        if not 1 <= self.vary_index <= self.cfg.n:
            raise ValueError(
                f"vary_index {self.vary_index} outside [1, {self.cfg.n}]"
            )
        grid = tuple(float(v) for v in self.signal_grid)
        object.__setattr__(self, "signal_grid", grid)
        if not grid:
            raise ValueError("signal grid must be nonempty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise ValueError("signal grid must be sorted ascending")
        if self.replicates < 1:
            raise ValueError(f"replicates must be >= 1, got {self.replicates}")
        if not 0.0 < self.gamma < 0.5:
            raise ValueError(f"gamma must lie in (0, 1/2), got {self.gamma}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.method == "gibbs" and not isinstance(self.prior, BetaBinomialPrior):
            raise ValueError("the gibbs method requires a beta-binomial prior")
        if self.data_sigma2 is not None and self.data_sigma2 < 0:
            raise ValueError("data_sigma2 must be nonnegative")
        if self.master_seed < 0:
            raise ValueError("master_seed must be nonnegative")

    def base_theta(self) -> np.ndarray:
        parts = [np.full(c, v) for c, v in self.theta_blocks]
        return np.concatenate(parts)

    def noise_variance(self) -> float:
        return self.cfg.sigma2 if self.data_sigma2 is None else self.data_sigma2


@dataclass(frozen=True)
class CoverageRow:
    """One grid point of the study: empirical coverage and mean length."""

    n: int
    signal_value: float
    replicates: int
    coverage: float
    mean_length: float
    mc_standard_error: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError(f"coverage must lie in [0, 1], got {self.coverage}")
        expected = math.sqrt(
            self.coverage * (1.0 - self.coverage) / self.replicates
        )
        if not math.isclose(
            self.mc_standard_error, expected, rel_tol=1e-4, abs_tol=1e-9
        ):
            raise ValueError(
                f"mc_standard_error {self.mc_standard_error} inconsistent with "
                f"coverage {self.coverage} at {self.replicates} replicates"
            )

    @classmethod
    def from_outcomes(
        cls, n: int, signal_value: float, outcomes: Sequence[tuple[bool, float]]
    ) -> "CoverageRow":
        reps = len(outcomes)
        coverage = sum(1 for c, _ in outcomes if c) / reps
        mean_length = sum(length for _, length in outcomes) / reps
        return cls(
            n=n,
            signal_value=signal_value,
            replicates=reps,
            coverage=coverage,
            mean_length=mean_length,
            mc_standard_error=math.sqrt(coverage * (1.0 - coverage) / reps),
        )


def generate_data(theta_star, sigma2: float, seed: int) -> DataVector:
    """Y = theta_star + sqrt(sigma2) * Z with Z standard normal from the
    seeded stream; sigma2 = 0 reproduces theta_star exactly."""
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    theta = np.asarray(theta_star, dtype=float)
    rng = np.random.default_rng(seed)
    return DataVector(theta + math.sqrt(sigma2) * rng.standard_normal(theta.size))


def replicate_seeds(
    master_seed: int, grid_index: int, replicate_index: int
) -> tuple[int, int]:
    """(data_seed, chain_seed) for one replicate, from the documented
    SeedSequence([master_seed, grid_index, replicate_index]) split."""
    ss = np.random.SeedSequence([master_seed, grid_index, replicate_index])
    data_seed, chain_seed = ss.generate_state(2, dtype=np.uint64)
    return int(data_seed), int(chain_seed)


def run_replicate(
    spec: ExperimentSpec, grid_index: int, replicate_index: int
) -> tuple[bool, float]:
    """One replicate: draw data, fit, and score the two-sided interval for
    the swept coordinate. Returns (covered, interval length)."""
    signal = spec.signal_grid[grid_index]
    try:
        theta = spec.base_theta()
        theta[spec.vary_index - 1] = signal
        data_seed, chain_seed = replicate_seeds(
            spec.master_seed, grid_index, replicate_index
        )
        Y = generate_data(theta, spec.noise_variance(), data_seed)
        if spec.method == "exact":
            x = LinearFunctional.coordinate(spec.vary_index, spec.cfg.n)
            lower, upper = equal_tailed_interval(
                enumerate_posterior(spec.cfg, spec.prior, Y), spec.cfg, Y, x, spec.gamma
            )
        else:
            settings = ChainSettings(
                iterations=spec.chain.iterations,
                burn_in=spec.chain.burn_in,
                seed=chain_seed,
                flip_probability=spec.chain.flip_probability,
            )
            sampler = mh_chain if spec.method == "mh" else gibbs_chain
            samples = sampler(spec.cfg, spec.prior, Y, settings)
            result = interval_from_samples(
                samples,
                spec.cfg,
                Y,
                IntervalRequest(target=spec.vary_index, gamma=spec.gamma),
            )
            lower, upper = result.lower, result.upper
    except Exception as exc:
        raise ReplicateError(
            f"replicate {replicate_index} at grid index {grid_index} "
            f"(signal {signal:g}) failed: {exc}"
        ) from exc
    return bool(lower <= signal <= upper), float(upper - lower)


def _replicate_task(args: tuple[ExperimentSpec, int, int]) -> tuple[bool, float]:
    return run_replicate(*args)


def coverage_experiment(
    spec: ExperimentSpec,
    workers: int = 1,
    progress: Callable[[int, CoverageRow], None] | None = None,
) -> list[CoverageRow]:
    """Run the full grid. Deterministic given spec.master_seed, independent
    of worker count and execution order; a failing replicate aborts the
    run with its identity attached."""
    rows: list[CoverageRow] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for gi, signal in enumerate(spec.signal_grid):
            tasks = [(spec, gi, r) for r in range(spec.replicates)]
            if executor is None:
                outcomes = [_replicate_task(t) for t in tasks]
            else:
                chunk = max(1, spec.replicates // (4 * workers))
                outcomes = list(
                    executor.map(_replicate_task, tasks, chunksize=chunk)
                )
            row = CoverageRow.from_outcomes(spec.cfg.n, signal, outcomes)
            rows.append(row)
            if progress is not None:
                progress(gi, row)
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


COVERAGE_CSV_HEADER = "n,signal_value,replicates,coverage,mean_length,mc_se"


def coverage_csv_text(rows: Sequence[CoverageRow], precision: int = 6) -> str:
    if not rows:
        raise ValueError("no rows to write")
    p = precision
    lines = [COVERAGE_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.n},{r.signal_value:.{p}g},{r.replicates},{r.coverage:.{p}g},"
            f"{r.mean_length:.{p}g},{r.mc_standard_error:.{p}g}"
        )
    return "\n".join(lines) + "\n"


def write_coverage_csv(rows: Sequence[CoverageRow], path) -> None:
    """CSV with 6-significant-digit values and UNIX newlines; byte-identical
    for identical rows."""
    text = coverage_csv_text(rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_coverage_csv(path) -> list[CoverageRow]:
    with open(path) as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0] != COVERAGE_CSV_HEADER:
        raise ValueError(f"unrecognized coverage CSV header in {path}")
    rows = []
    for line in lines[1:]:
        n, signal, reps, cov, length, mc_se = line.split(",")
        rows.append(
            CoverageRow(
                n=int(n),
                signal_value=float(signal),
                replicates=int(reps),
                coverage=float(cov),
                mean_length=float(length),
                mc_standard_error=float(mc_se),
            )
        )
    return rows


_SVG_GEOMETRY = dict(width=640, height=440, left=70, right=20, top=20, bottom=55)


def emit_plot_svg(
    rows: Sequence[CoverageRow],
    path,
    which: str,
    nominal_level: float | None = None,
) -> None:
    """Standalone line plot (signal on x, coverage or mean length on y).

    For coverage plots, pass ``nominal_level`` (1 - gamma) to draw the
    dashed reference line. Output is a deterministic function of the rows.
    """
    if which not in ("coverage", "length"):
        raise ValueError(f"which must be 'coverage' or 'length', got {which!r}")
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to plot")
    xs = [r.signal_value for r in rows]
    ys = [r.coverage if which == "coverage" else r.mean_length for r in rows]
    y_max = 1.05 if which == "coverage" else 1.1 * max(max(ys), 1e-12)
    y_label = "coverage probability" if which == "coverage" else "mean interval length"

    g = _SVG_GEOMETRY
    px_w = g["width"] - g["left"] - g["right"]
    px_h = g["height"] - g["top"] - g["bottom"]
    x_lo, x_hi = min(xs), max(xs)
    x_span = x_hi - x_lo if x_hi > x_lo else 1.0

    def sx(v: float) -> float:
        return g["left"] + (v - x_lo) / x_span * px_w

    def sy(v: float) -> float:
        return g["top"] + (1.0 - v / y_max) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{g["width"]}" '
        f'height="{g["height"]}" viewBox="0 0 {g["width"]} {g["height"]}">',
        f'<rect width="{g["width"]}" height="{g["height"]}" fill="white"/>',
    ]
    axis_y = g["top"] + px_h
    parts.append(
        f'<line x1="{g["left"]}" y1="{axis_y}" x2="{g["left"] + px_w}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{g["left"]}" y1="{g["top"]}" x2="{g["left"]}" '
        f'y2="{axis_y}" stroke="black"/>'
    )
    for i in range(6):
        xv = x_lo + i / 5.0 * x_span
        yv = i / 5.0 * y_max
        xp, yp = sx(xv), sy(yv)
        parts.append(
            f'<line x1="{xp:.2f}" y1="{axis_y}" x2="{xp:.2f}" '
            f'y2="{axis_y + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{xp:.2f}" y="{axis_y + 18}" font-size="11" '
            f'text-anchor="middle">{xv:.3g}</text>'
        )
        parts.append(
            f'<line x1="{g["left"] - 5}" y1="{yp:.2f}" x2="{g["left"]}" '
            f'y2="{yp:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{g["left"] - 8}" y="{yp + 4:.2f}" font-size="11" '
            f'text-anchor="end">{yv:.3g}</text>'
        )
    parts.append(
        f'<text x="{g["left"] + px_w / 2:.2f}" y="{g["height"] - 15}" '
        f'font-size="13" text-anchor="middle">signal value</text>'
    )
    parts.append(
        f'<text x="18" y="{g["top"] + px_h / 2:.2f}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 18 '
        f'{g["top"] + px_h / 2:.2f})">{y_label}</text>'
    )
    if which == "coverage" and nominal_level is not None:
        yp = sy(nominal_level)
        parts.append(
            f'<line x1="{g["left"]}" y1="{yp:.2f}" x2="{g["left"] + px_w}" '
            f'y2="{yp:.2f}" stroke="gray" stroke-dasharray="6,4"/>'
        )
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>'
    )
    for x, y in zip(xs, ys):
        parts.append(
            f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="3" fill="steelblue"/>'
        )
    parts.append("</svg>")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(parts) + "\n")


# ---------------------------------------------------------------------------
# plain-text experiment config files

CONFIG_KEYS = frozenset(
    {
        "n",
        "alpha",
        "tau",
        "sigma2",
        "prior",
        "a",
        "c",
        "xi",
        "theta",
        "vary_index",
        "grid",
        "replicates",
        "gamma",
        "method",
        "iterations",
        "burn_in",
        "flip_probability",
        "master_seed",
        "data_sigma2",
    }
)


def parse_theta_blocks(text: str) -> tuple[tuple[int, float], ...]:
    """Parse a counts-and-values template like '5x7,5x2,190x0'."""
    blocks = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        count, _, value = token.partition("x")
        if not _:
            raise ValueError(f"bad theta block {token!r}; expected COUNTxVALUE")
        blocks.append((int(count), float(value)))
    if not blocks:
        raise ValueError("theta template is empty")
    return tuple(blocks)


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        fields = text.split(":")
        if len(fields) != 3:
            raise ValueError(f"bad grid range {text!r}; expected start:stop:step")
        start, stop, step = (float(f) for f in fields)
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(count))
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def read_experiment_config(path) -> ExperimentSpec:
    """Build an ExperimentSpec from a 'key = value' config file.

    Lines starting with '#' and blank lines are ignored; keys outside
    CONFIG_KEYS are rejected.
    """
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            if key in values:
                raise ValueError(f"{path}:{lineno}: duplicate key {key!r}")
            values[key] = value.strip()
    return spec_from_mapping(values)


def spec_from_mapping(values: dict[str, str]) -> ExperimentSpec:
    missing = {"n", "theta", "vary_index", "grid", "replicates"} - values.keys()
    if missing:
        raise ValueError(f"missing required config keys: {sorted(missing)}")
    cfg = ModelConfig(
        n=int(values["n"]),
        sigma2=float(values.get("sigma2", 1.0)),
        alpha=float(values.get("alpha", 0.95)),
        tau=float(values.get("tau", 0.025)),
    )
    prior_name = values.get("prior", "complexity")
    if prior_name == "complexity":
        prior: SizePrior = ComplexityPrior(
            a=float(values.get("a", 1.0)), c=float(values.get("c", 1.0))
        )
    elif prior_name == "beta-binomial":
        prior = BetaBinomialPrior(xi=float(values.get("xi", 1.01)))
    else:
        raise ValueError(f"unknown prior {prior_name!r}")
    burn = values.get("burn_in")
    chain = ChainSettings(
        iterations=int(values.get("iterations", 25000)),
        burn_in=int(burn) if burn is not None else None,
        flip_probability=float(values.get("flip_probability", 0.9)),
    )
    data_sigma2 = values.get("data_sigma2")
    return ExperimentSpec(
        cfg=cfg,
        prior=prior,
        chain=chain,
        theta_blocks=parse_theta_blocks(values["theta"]),
        vary_index=int(values["vary_index"]),
        signal_grid=parse_grid(values["grid"]),
        replicates=int(values["replicates"]),
        gamma=float(values.get("gamma", 0.05)),
        method=values.get("method", "mh"),
        master_seed=int(values.get("master_seed", 0)),
        data_sigma2=float(data_sigma2) if data_sigma2 is not None else None,
    )
