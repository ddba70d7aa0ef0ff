"""Marchenko-Pastur law for the singular values of a tall random matrix.

For an ``in_d x out_d`` matrix with i.i.d. entries of variance
``sigma_bar**2 / in_d`` and ``gamma = out_d / in_d <= 1``, the empirical
distribution of singular values converges to the density

    rho(s) = sqrt((u**2 - s**2) * (s**2 - l**2)) / (pi * gamma * s)

on ``[l, u] = [|1 - sqrt(gamma)|, 1 + sqrt(gamma)]`` (times ``sigma_bar``).
This is the eigenvalue law of ``A^T A`` pushed through ``s = sqrt(lambda)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConfigurationError, DegenerateInputError


@dataclass(frozen=True)
class MpParams:
    gamma: float
    sigma_bar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and 0.0 < self.gamma <= 1.0):
            raise ConfigurationError(f"gamma must be in (0, 1], got {self.gamma}", field="gamma")
        if not (math.isfinite(self.sigma_bar) and self.sigma_bar > 0.0):
            raise ConfigurationError(f"sigma_bar must be > 0, got {self.sigma_bar}", field="sigma_bar")

    @property
    def lower(self) -> float:
        return abs(1.0 - math.sqrt(self.gamma)) * self.sigma_bar

    @property
    def upper(self) -> float:
        return (1.0 + math.sqrt(self.gamma)) * self.sigma_bar


def _unit_edges(gamma: float) -> tuple[float, float]:
    r = math.sqrt(gamma)
    return abs(1.0 - r), 1.0 + r


def _unit_density(x: np.ndarray, gamma: float) -> np.ndarray:
    lo, hi = _unit_edges(gamma)
    out = np.zeros_like(x)
    if lo == 0.0:
        # sqrt(s**2 - 0) / s == 1: the s in the denominator cancels exactly.
        inside = (x >= 0.0) & (x < hi)
        out[inside] = np.sqrt(hi * hi - x[inside] ** 2) / (math.pi * gamma)
    else:
        inside = (x > lo) & (x < hi)
        xi = x[inside]
        out[inside] = np.sqrt((hi * hi - xi * xi) * (xi * xi - lo * lo)) / (math.pi * gamma * xi)
    return out


def mp_density(s, p: MpParams):
    """Singular value density; zero outside the support and at its edges.

    For ``gamma == 1`` the lower edge is 0 and the density there is its
    limit ``2 / (pi * sigma_bar)``.
    """
    x = np.asarray(s, dtype=np.float64) / p.sigma_bar
    out = _unit_density(np.atleast_1d(x).copy(), p.gamma) / p.sigma_bar
    return float(out[0]) if np.ndim(s) == 0 else out.reshape(np.shape(s))


def _unit_cdf(x: float, gamma: float) -> float:
    lo, hi = _unit_edges(gamma)
    if x <= lo:
        return 0.0
    x = min(x, hi)
    mid = 0.5 * (lo + hi)
    norm = math.pi * gamma

    # s = lo + t**2 removes the square-root singularity at the lower edge
    def lower_piece(t):
        s = lo + t * t
        ratio = t * t / s if s > 0.0 else 1.0
        return 2.0 * ratio * math.sqrt(max((hi * hi - s * s) * (s + lo), 0.0)) / norm

    # s = hi - t**2 does the same at the upper edge
    def upper_piece(t):
        s = hi - t * t
        return 2.0 * t * t * math.sqrt(max((hi + s) * (s * s - lo * lo), 0.0)) / (norm * s)

    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    total = quad(lower_piece, 0.0, math.sqrt(min(x, mid) - lo), **opts)[0]
    if x > mid:
        total += quad(upper_piece, math.sqrt(hi - x), math.sqrt(hi - mid), **opts)[0]
    return total


def mp_cdf(s, p: MpParams):
    """Integral of :func:`mp_density` from the lower edge to ``s`` (adaptive quadrature)."""
    if np.ndim(s) == 0:
        return _unit_cdf(float(s) / p.sigma_bar, p.gamma)
    x = np.asarray(s, dtype=np.float64) / p.sigma_bar
    return np.array([_unit_cdf(v, p.gamma) for v in x.ravel()]).reshape(x.shape)


def mp_quantile(q: float, p: MpParams, xtol: float = 1e-10) -> float:
    if not 0.0 <= q <= 1.0:
        raise ConfigurationError(f"quantile must be in [0, 1], got {q}", field="quantile")
    lo, hi = p.lower, p.upper
    if q == 0.0:
        return lo
    if q == 1.0 or mp_cdf(hi, p) <= q:
        return hi
    return brentq(lambda s: mp_cdf(s, p) - q, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class EmpiricalDistribution:
    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=np.float64).ravel())
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("sample has non-finite values", field="sample")
        object.__setattr__(self, "values", v)

    @property
    def count(self) -> int:
        return self.values.size

    def cdf(self, x):
        """Right-continuous empirical CDF."""
        return np.searchsorted(self.values, x, side="right") / self.values.size


Reference = Union[MpParams, EmpiricalDistribution, Callable[[np.ndarray], np.ndarray]]


def ks_statistic(sample, reference: Reference) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|``.

    ``reference`` is an :class:`MpParams`, a continuous CDF callable, or
    another :class:`EmpiricalDistribution` (exact two-sample distance).
    """
    if not isinstance(sample, EmpiricalDistribution):
        sample = EmpiricalDistribution(sample)
    n = sample.count
    if n == 0:
        raise DegenerateInputError("KS statistic of an empty sample")
    if isinstance(reference, EmpiricalDistribution):
        if reference.count == 0:
            raise DegenerateInputError("KS statistic against an empty sample")
        grid = np.concatenate([sample.values, reference.values])
        return float(np.max(np.abs(sample.cdf(grid) - reference.cdf(grid))))
    cdf = (lambda x: mp_cdf(x, reference)) if isinstance(reference, MpParams) else reference
    f = np.asarray(cdf(sample.values), dtype=np.float64)
    i = np.arange(1, n + 1)
    # both one-sided limits of the step function at each sample point
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n), 0.0))
