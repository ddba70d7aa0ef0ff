"""Dense kernels: products, Frobenius normalization and singular values.

Matrices are plain 2-D float64 numpy arrays.  The full decomposition
:func:`svd` is a one-sided (Hestenes) Jacobi method with round-robin pair
ordering; :func:`singular_values` defaults to LAPACK's divide-and-conquer
driver because the experiments need thousands of spectra and only the values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, DimensionError, NumericalError


def as_matrix(m, name="matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def _check_finite(a: np.ndarray, name="matrix"):
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} has non-finite entries")


def frobenius_norm(m) -> float:
    a = as_matrix(m)
    # scaled sum of squares, immune to overflow for huge entries
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(scale * np.sqrt(np.sum((a / scale) ** 2)))


def normalize_frobenius(m) -> np.ndarray:
    """Return ``m / ||m||_F``; every singular value of the result is in [0, 1]."""
    a = as_matrix(m)
    norm = frobenius_norm(a)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero matrix")
    return a / norm


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a, "left operand"), as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``a = u @ diag(s) @ v.T`` of a tall matrix."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


@lru_cache(maxsize=32)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Circle-method schedule: n - 1 rounds of n / 2 disjoint pairs covering every pair once."""
    idx = np.arange(n)
    rounds = []
    for _ in range(n - 1):
        p, q = idx[: n // 2], idx[n // 2 :][::-1]
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        idx = np.concatenate([idx[:1], idx[-1:], idx[1:-1]])
    return tuple(rounds)


def _jacobi_sweeps(a: np.ndarray, tol: float, max_sweeps: int):
    """Orthogonalize the columns of ``a`` by plane rotations.

    Returns ``(w, v)`` with ``a @ v = w``, ``v`` orthogonal and the columns of
    ``w`` mutually orthogonal to relative tolerance ``tol``.
    """
    m, n = a.shape
    padded = n + (n % 2)
    # Row i holds column i of a followed by column i of v, so each rotation
    # touches two contiguous rows.
    rows = np.zeros((padded, m + padded))
    rows[:n, :m] = a.T
    rows[:, m:] = np.eye(padded)
    rounds = _round_robin(padded)
    for _ in range(max_sweeps):
        off = 0.0
        for p, q in rounds:
            rp, rq = rows[p], rows[q]
            xp, xq = rp[:, :m], rq[:, :m]
            alpha = np.einsum("ij,ij->i", xp, xp)
            beta = np.einsum("ij,ij->i", xq, xq)
            gamma = np.einsum("ij,ij->i", xp, xq)
            scale = np.sqrt(alpha * beta)
            rel = np.divide(np.abs(gamma), scale, out=np.zeros_like(gamma), where=scale > 0)
            off = max(off, float(rel.max()))
            active = rel > tol
            if not active.any():
                continue
            zeta = (beta[active] - alpha[active]) / (2.0 * gamma[active])
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            rp, rq = rp[active], rq[active]
            rows[p[active]] = c[:, None] * rp - s[:, None] * rq
            rows[q[active]] = s[:, None] * rp + c[:, None] * rq
        if off <= tol:
            return rows[:n, :m].T, rows[:n, m : m + n].T
    raise NumericalError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")


def _complete_basis(u: np.ndarray, good: np.ndarray) -> np.ndarray:
    """Replace columns of ``u`` flagged ``~good`` so all columns are orthonormal."""
    m, n = u.shape
    if good.all():
        return u
    keep = u[:, good]
    q, _ = np.linalg.qr(np.hstack([keep, np.eye(m)]))
    # columns after len(keep) span the complement of keep
    fill = q[:, keep.shape[1] : keep.shape[1] + (~good).sum()]
    out = u.copy()
    out[:, ~good] = fill
    return out


def svd(m, tol=None, max_sweeps=60) -> SvdResult:
    """Thin SVD by one-sided Jacobi; singular values sorted descending.

    Wide inputs are decomposed through their transpose, so ``u`` always has
    ``m.shape[0]`` rows.  Tall inputs are first reduced to their square
    triangular factor by QR.
    """
    a = as_matrix(m)
    _check_finite(a)
    rows, cols = a.shape
    if rows < cols:
        t = svd(a.T, tol=tol, max_sweeps=max_sweeps)
        return SvdResult(u=t.v, s=t.s, v=t.u)
    if cols == 0:
        return SvdResult(np.zeros((rows, 0)), np.zeros(0), np.zeros((0, 0)))
    tol = np.finfo(np.float64).eps * rows if tol is None else tol
    q = None
    if rows > cols:
        q, a = np.linalg.qr(a)
    w, v = _jacobi_sweeps(a, tol, max_sweeps)
    s = np.linalg.norm(w, axis=0)
    order = np.argsort(-s, kind="stable")
    s, w, v = s[order], w[:, order], v[:, order]
    good = s > (s[0] if s[0] > 0 else 1.0) * np.finfo(np.float64).eps * rows
    u = np.divide(w, s, out=np.zeros_like(w), where=good[None, :])
    u = _complete_basis(u, good)
    if q is not None:
        u = q @ u
    return SvdResult(u=u, s=s, v=v)


def singular_values(m, method="lapack") -> np.ndarray:
    """Singular values sorted descending.

    ``method="lapack"`` (default) calls the values-only LAPACK driver;
    ``method="jacobi"`` uses :func:`svd`.
    """
    a = as_matrix(m)
    _check_finite(a)
    if method == "jacobi":
        return svd(a).s
    if method != "lapack":
        raise ValueError(f"unknown method {method!r}")
    if a.shape[0] < a.shape[1]:
        a = a.T
    try:
        s = np.linalg.svd(a, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(str(exc)) from exc
    return np.sort(s)[::-1]


def orthogonality_residual(m) -> float:
    """``||m.T m - I||_F / sqrt(out_d)`` for a tall ``m``."""
    a = as_matrix(m)
    rows, cols = a.shape
    if rows < cols:
        raise DimensionError(f"expected a tall matrix, got {a.shape}")
    gram = a.T @ a
    gram[np.diag_indices(cols)] -= 1.0
    return float(np.linalg.norm(gram) / np.sqrt(cols))
