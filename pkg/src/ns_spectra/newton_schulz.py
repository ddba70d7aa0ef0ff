"""Newton-Schulz orthogonalization with an odd quintic matrix polynomial.

One step maps ``G`` to ``aG + b(GG^T)G + c(GG^T)^2 G``.  With ``G = USV^T``
this is ``U p(S) V^T`` where ``p(s) = as + bs^3 + cs^5``, so the singular
vectors are preserved and each singular value ``s`` becomes ``|p(s)|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DimensionError
from .linalg import as_matrix, normalize_frobenius, orthogonality_residual, singular_values


@dataclass(frozen=True)
class NsCoefficients:
    a: float
    b: float
    c: float

    def __post_init__(self):
        for name in ("a", "b", "c"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"coefficient {name} must be finite", field=name)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a, self.b, self.c)

    @classmethod
    def parse(cls, text: str) -> "NsCoefficients":
        """Parse ``"a,b,c"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ConfigurationError(f"expected three comma-separated coefficients, got {text!r}", field="coeffs")
        try:
            return cls(*(float(p) for p in parts))
        except ValueError:
            raise ConfigurationError(f"coefficients must be numbers, got {text!r}", field="coeffs") from None


# Reference muon quintic; steep slope at 0, oscillates in roughly [0.68, 1.13] once converged.
DEFAULT_COEFFICIENTS = NsCoefficients(3.4445, -4.7750, 2.0315)
IDENTITY_COEFFICIENTS = NsCoefficients(1.0, 0.0, 0.0)
DEFAULT_TAIL_THRESHOLD = 0.6


@dataclass(frozen=True)
class NsSchedule:
    """Coefficient triples for ``iterations`` steps; a single triple is reused for every step."""

    coefficients: tuple[NsCoefficients, ...] = (DEFAULT_COEFFICIENTS,)
    iterations: int = 5

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        if isinstance(self.iterations, bool) or not isinstance(self.iterations, int) or self.iterations < 1:
            raise ConfigurationError(f"iterations must be >= 1, got {self.iterations!r}", field="iterations")
        if len(self.coefficients) not in (1, self.iterations):
            raise ConfigurationError(
                f"need 1 or {self.iterations} coefficient triples, got {len(self.coefficients)}",
                field="coeffs",
            )

    @classmethod
    def constant(cls, k: NsCoefficients, iterations: int) -> "NsSchedule":
        return cls((k,), iterations)

    def step(self, i: int) -> NsCoefficients:
        """Coefficients for 0-based step ``i``."""
        return self.coefficients[0] if len(self.coefficients) == 1 else self.coefficients[i]

    def __iter__(self):
        return (self.step(i) for i in range(self.iterations))


def scalar_polynomial(s, k: NsCoefficients):
    s2 = s * s
    return s * (k.a + s2 * (k.b + s2 * k.c))


def scalar_iterate(s: float, schedule: NsSchedule) -> list[float]:
    """Trajectory ``[s, p1(s), p2(p1(s)), ...]`` of length ``iterations + 1``."""
    out = [s]
    for k in schedule:
        s = scalar_polynomial(s, k)
        out.append(s)
    return out


def ns_step(g, k: NsCoefficients) -> np.ndarray:
    """One quintic step on a tall matrix.

    Evaluated as ``M = G G^T``, then ``aG + b(MG) + c(M(MG))``.
    """
    g = as_matrix(g)
    if g.shape[0] < g.shape[1]:
        raise DimensionError(f"ns_step expects in_d >= out_d, got {g.shape}")
    gram = g @ g.T
    mg = gram @ g
    return k.a * g + k.b * mg + k.c * (gram @ mg)


def tail_fraction(spectrum: np.ndarray, threshold: float) -> float:
    """Share of singular values strictly below ``threshold``."""
    return float(np.count_nonzero(spectrum < threshold)) / spectrum.size


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    spectrum: np.ndarray
    ortho_residual: float
    tail_fraction: float

    @property
    def min_sval(self) -> float:
        return float(self.spectrum[-1])

    @property
    def max_sval(self) -> float:
        return float(self.spectrum[0])

    @property
    def median_sval(self) -> float:
        return float(np.median(self.spectrum))


@dataclass
class IterationTrace:
    tail_threshold: float
    records: list[IterationRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> IterationRecord:
        return self.records[i]

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


def _record(m: np.ndarray, iteration: int, threshold: float, svd_method: str) -> IterationRecord:
    spectrum = singular_values(m, method=svd_method)
    return IterationRecord(
        iteration=iteration,
        spectrum=spectrum,
        ortho_residual=orthogonality_residual(m),
        tail_fraction=tail_fraction(spectrum, threshold),
    )


def ns_run(g, schedule: NsSchedule, tail_threshold: float = DEFAULT_TAIL_THRESHOLD, svd_method="lapack"):
    """Normalize ``g`` by its Frobenius norm, then apply ``schedule``.

    Returns ``(output, trace)``; ``trace[0]`` describes the normalized input
    and ``trace[t]`` the matrix after ``t`` steps.  Wide inputs are processed
    as their transpose and the output is transposed back.
    """
    if not 0.0 < tail_threshold < 1.0:
        raise ConfigurationError(f"tail_threshold must be in (0, 1), got {tail_threshold}", field="tail_threshold")
    g = as_matrix(g)
    wide = g.shape[0] < g.shape[1]
    x = normalize_frobenius(g.T if wide else g)
    trace = IterationTrace(tail_threshold)
    trace.records.append(_record(x, 0, tail_threshold, svd_method))
    for i, k in enumerate(schedule, start=1):
        x = ns_step(x, k)
        trace.records.append(_record(x, i, tail_threshold, svd_method))
    return (x.T if wide else x), trace
