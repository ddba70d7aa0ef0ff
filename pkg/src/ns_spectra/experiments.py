"""Size sweeps, power-law fits and iteration-count searches over random matrices."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .gaussian import GaussianSpec, Shape, derive_trial_seed, generate
from .linalg import as_matrix, frobenius_norm, normalize_frobenius, singular_values
from .newton_schulz import (
    DEFAULT_TAIL_THRESHOLD,
    IterationTrace,
    NsCoefficients,
    NsSchedule,
    ns_run,
    ns_step,
)

DEFAULT_SIZES = (64, 128, 256, 512, 1024)


def out_dim(in_d: int, gamma: float) -> int:
    """``round(gamma * in_d)`` with halves rounded up, at least 1."""
    return max(1, int(math.floor(gamma * in_d + 0.5)))


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple[int, ...] = DEFAULT_SIZES
    gamma: float = 1.0
    trials_per_size: int = 32
    schedule: NsSchedule = field(default_factory=NsSchedule)
    tail_threshold: float = DEFAULT_TAIL_THRESHOLD
    master_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(self.sizes))
        if not self.sizes:
            raise ConfigurationError("sizes must be non-empty", field="sizes")
        if any(not isinstance(s, int) or s < 8 for s in self.sizes):
            raise ConfigurationError(f"every size must be an integer >= 8, got {self.sizes}", field="sizes")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigurationError(f"sizes must be strictly increasing, got {self.sizes}", field="sizes")
        if not (math.isfinite(self.gamma) and 0.0 < self.gamma <= 1.0):
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}", field="gamma")
        if not isinstance(self.trials_per_size, int) or self.trials_per_size < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials_per_size}", field="trials")
        if not 0.0 < self.tail_threshold < 1.0:
            raise ConfigurationError(f"threshold must be in (0, 1), got {self.tail_threshold}", field="threshold")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.master_seed}", field="seed")

    def shape(self, in_d: int) -> Shape:
        return Shape(in_d, out_dim(in_d, self.gamma))


@dataclass(frozen=True)
class TrialResult:
    size: int
    trial: int
    seed: int
    frobenius_norm: float  # of the raw, unnormalized matrix
    trace: IterationTrace


@dataclass
class SweepResult:
    config: SweepConfig
    trials: list[TrialResult]

    def for_size(self, size: int) -> list[TrialResult]:
        return [t for t in self.trials if t.size == size]

    def check_complete(self):
        expected = [(s, t) for s in self.config.sizes for t in range(self.config.trials_per_size)]
        got = [(r.size, r.trial) for r in self.trials]
        if got != expected:
            raise RuntimeError("sweep result is missing or misordering (size, trial) cells")

    def aggregates(self) -> dict[int, dict[str, float]]:
        """Per-size mean and standard deviation of every recorded metric.

        Iteration-indexed metrics use keys like ``tail_fraction_mean[5]``.
        """
        out = {}
        for size in self.config.sizes:
            cells = self.for_size(size)
            row: dict[str, float] = {}

            def put(name, values):
                v = np.asarray(values, dtype=np.float64)
                row[f"{name}_mean"] = float(v.mean())
                row[f"{name}_std"] = float(v.std())

            put("frobenius_norm", [c.frobenius_norm for c in cells])
            first = [c.trace[0] for c in cells]
            put("median_sval", [r.median_sval for r in first])
            put("min_sval", [r.min_sval for r in first])
            put("max_sval", [r.max_sval for r in first])
            for it in range(len(cells[0].trace)):
                put(f"tail_fraction[{it}]", [c.trace[it].tail_fraction for c in cells])
                put(f"ortho_residual[{it}]", [c.trace[it].ortho_residual for c in cells])
            out[size] = row
        return out

    def mean_tail_fraction(self, size: int, iteration: int | None = None) -> float:
        cells = self.for_size(size)
        it = -1 if iteration is None else iteration
        return float(np.mean([c.trace[it].tail_fraction for c in cells]))


def _run_trial(config: SweepConfig, size_index: int, trial: int) -> TrialResult:
    size = config.sizes[size_index]
    seed = derive_trial_seed(config.master_seed, size_index, trial)
    g = generate(GaussianSpec(config.shape(size), seed))
    _, trace = ns_run(g, config.schedule, config.tail_threshold)
    return TrialResult(size, trial, seed, frobenius_norm(g), trace)


def run_sweep(config: SweepConfig, threads: int = 1) -> SweepResult:
    """Run every (size, trial) cell; output order and values do not depend on ``threads``."""
    if not isinstance(threads, int) or threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {threads}", field="threads")
    cells = [(i, t) for i in range(len(config.sizes)) for t in range(config.trials_per_size)]
    if threads == 1:
        trials = [_run_trial(config, i, t) for i, t in cells]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trials = list(pool.map(lambda c: _run_trial(config, *c), cells))
    result = SweepResult(config, trials)
    result.check_complete()
    return result


def median_sval_per_size(result: SweepResult) -> list[tuple[int, float]]:
    """Median of the pooled normalized (iteration 0) singular values at each size."""
    if not result.trials:
        raise ConfigurationError("empty sweep result", field="result")
    sizes = list(dict.fromkeys(t.size for t in result.trials))
    return [
        (size, float(np.median(np.concatenate([t.trace[0].spectrum for t in result.for_size(size)]))))
        for size in sizes
    ]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    points_used: int

    def predict(self, x):
        return math.exp(self.intercept) * np.asarray(x, dtype=np.float64) ** self.slope


def fit_power_law(points) -> FitResult:
    """Least-squares line through ``(ln x, ln y)``: ``y ~ exp(intercept) * x**slope``."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise ConfigurationError("need at least two points to fit", field="points")
    if not np.all(np.isfinite(pts)) or np.any(pts <= 0):
        raise ConfigurationError("power-law fit needs finite positive x and y", field="points")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise ConfigurationError("all x values are equal; slope undefined", field="points")
    slope = float(dx @ (ly - ly.mean())) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(resid @ resid) / ss_tot)
    return FitResult(slope, intercept, min(r2, 1.0), pts.shape[0])


def _tall(m):
    m = as_matrix(m)
    return m.T if m.shape[0] < m.shape[1] else m


def band_fraction(spectrum: np.ndarray, epsilon: float) -> float:
    """Share of singular values inside ``[1 - epsilon, 1 + epsilon]``."""
    inside = (spectrum >= 1.0 - epsilon) & (spectrum <= 1.0 + epsilon)
    return float(np.count_nonzero(inside)) / spectrum.size


def iterations_to_band(matrices, k: NsCoefficients, band_epsilon: float, quantile: float, max_iters: int):
    """Smallest step count after which the trial-averaged in-band share reaches ``quantile``.

    Returns ``None`` when ``max_iters`` steps are not enough.
    """
    if not 0.0 < band_epsilon < 1.0:
        raise ConfigurationError(f"band epsilon must be in (0, 1), got {band_epsilon}", field="epsilon")
    if not 0.0 < quantile <= 1.0:
        raise ConfigurationError(f"quantile must be in (0, 1], got {quantile}", field="quantile")
    if not isinstance(max_iters, int) or max_iters < 1:
        raise ConfigurationError(f"max_iters must be >= 1, got {max_iters}", field="max_iters")
    current = [normalize_frobenius(_tall(m)) for m in matrices]
    for t in range(max_iters + 1):
        if t:
            current = [ns_step(m, k) for m in current]
        share = np.mean([band_fraction(singular_values(m), band_epsilon) for m in current])
        if share >= quantile:
            return t
    return None


def min_iterations_for_band(
    size: Shape,
    k: NsCoefficients,
    band_epsilon: float,
    quantile: float,
    master_seed: int,
    max_iters: int,
    trials: int = 4,
    size_index: int = 0,
):
    """:func:`iterations_to_band` over ``trials`` seeded N(0, 1) matrices of ``size``."""
    if not isinstance(trials, int) or trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}", field="trials")
    mats = (generate(GaussianSpec(size, derive_trial_seed(master_seed, size_index, t))) for t in range(trials))
    return iterations_to_band(mats, k, band_epsilon, quantile, max_iters)


def raw_spectra(shape: Shape, trials: int, master_seed: int, size_index: int = 0) -> list[np.ndarray]:
    """Singular values of unnormalized N(0, 1) matrices."""
    return [
        singular_values(generate(GaussianSpec(shape, derive_trial_seed(master_seed, size_index, t))))
        for t in range(trials)
    ]


def mean_frobenius_norm(shape: Shape, trials: int, master_seed: int, size_index: int = 0) -> float:
    return float(
        np.mean(
            [
                frobenius_norm(generate(GaussianSpec(shape, derive_trial_seed(master_seed, size_index, t))))
                for t in range(trials)
            ]
        )
    )
