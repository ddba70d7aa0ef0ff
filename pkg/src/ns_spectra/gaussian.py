"""Seeded i.i.d. Gaussian matrices.

Uniforms come from a SplitMix64 counter stream: draw ``i`` of a stream with
seed ``s`` is ``mix64(s + (i + 1) * GOLDEN)``, so any draw can be computed
without generating its predecessors.  Normals come from Box-Muller applied to
consecutive uniform pairs ``(u[2k], u[2k + 1])``, producing entries ``2k``
(cosine branch) and ``2k + 1`` (sine branch) in row-major order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


@dataclass(frozen=True)
class Shape:
    """Tall matrix dimensions: ``in_d`` rows, ``out_d`` columns, ``out_d <= in_d``."""

    in_d: int
    out_d: int

    def __post_init__(self):
        for name in ("in_d", "out_d"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}", field=name)
        if self.out_d > self.in_d:
            raise ConfigurationError(
                f"out_d={self.out_d} exceeds in_d={self.in_d}; pass the transposed shape",
                field="out_d",
            )

    @classmethod
    def tall(cls, rows: int, cols: int) -> "Shape":
        """Shape of ``rows x cols`` or of its transpose, whichever is tall."""
        return cls(max(rows, cols), min(rows, cols))

    @property
    def gamma(self) -> float:
        return self.out_d / self.in_d

    @property
    def size(self) -> int:
        return self.in_d * self.out_d


@dataclass(frozen=True)
class GaussianSpec:
    shape: Shape
    seed: int
    variance: float = 1.0
    mean: float = 0.0

    def __post_init__(self):
        if not (isinstance(self.variance, (int, float)) and math.isfinite(self.variance) and self.variance > 0):
            raise ConfigurationError(f"variance must be finite and > 0, got {self.variance!r}", field="variance")
        if self.mean != 0.0:
            raise ConfigurationError("only zero-mean matrices are generated", field="mean")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed <= MASK64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}", field="seed")


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def derive_trial_seed(master_seed: int, size_index: int, trial_index: int) -> int:
    """Seed for one (size, trial) cell, independent of the order cells run in."""
    h = mix64(master_seed + GOLDEN)
    h = mix64(h ^ ((size_index + 1) * GOLDEN & MASK64))
    return mix64(h ^ ((trial_index + 1) * _MIX2 & MASK64))


def splitmix64_stream(seed: int, count: int) -> np.ndarray:
    """First ``count`` outputs of the SplitMix64 stream for ``seed`` as uint64."""
    # uint64 array arithmetic wraps modulo 2**64, which is exactly what we want.
    z = np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN) + np.uint64(seed & MASK64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def uniform_stream(seed: int, count: int) -> np.ndarray:
    """Uniform doubles on [0, 1) with 53 random bits each."""
    return (splitmix64_stream(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def standard_normal(seed: int, count: int) -> np.ndarray:
    pairs = (count + 1) // 2
    u = uniform_stream(seed, 2 * pairs).reshape(pairs, 2)
    radius = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1], log finite
    angle = 2.0 * np.pi * u[:, 1]
    out = np.empty((pairs, 2))
    out[:, 0] = radius * np.cos(angle)
    out[:, 1] = radius * np.sin(angle)
    return out.reshape(-1)[:count]


def generate(spec: GaussianSpec) -> np.ndarray:
    """Matrix of shape ``(in_d, out_d)`` with i.i.d. N(0, variance) entries."""
    shape = spec.shape
    z = standard_normal(spec.seed, shape.size)
    if spec.variance != 1.0:
        z *= math.sqrt(spec.variance)
    return z.reshape(shape.in_d, shape.out_d)
