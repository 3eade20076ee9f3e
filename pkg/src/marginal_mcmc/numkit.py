"""Small dense linear algebra and 1-d quadrature.

Matrices are plain 2-d float64 numpy arrays; sizes here never exceed a few
thousand rows by a few dozen columns.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, NonFinite, NotPositiveDefinite


@dataclass(frozen=True)
class CholFactor:
    """Lower-triangular ``L`` with ``L @ L.T`` equal to the factored matrix."""

    L: np.ndarray

    @property
    def dim(self) -> int:
        return self.L.shape[0]


def cholesky(A) -> CholFactor:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    scale = max(np.max(np.abs(A)), np.finfo(float).tiny)
    if np.max(np.abs(A - A.T)) > 1e-12 * scale:
        raise DimensionMismatch("matrix is not symmetric")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(L) > 0) or not np.all(np.isfinite(L)):
        raise NotPositiveDefinite("non-positive pivot")
    return CholFactor(L)


def chol_solve(F: CholFactor, b) -> np.ndarray:
    """Solve ``(L L^T) x = b`` by two triangular solves."""
    b = np.asarray(b, dtype=float)
    if b.shape[0] != F.dim:
        raise DimensionMismatch(f"rhs has length {b.shape[0]}, factor is {F.dim}x{F.dim}")
    z = solve_triangular(F.L, b, lower=True, check_finite=False)
    return solve_triangular(F.L.T, z, lower=False, check_finite=False)


def logdet_from_chol(F: CholFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(F.L))))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _gl_panels(f, a, b):
    """10-point Gauss-Legendre on each panel ``[a[k], b[k]]`` in one call of ``f``."""
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.vectorize(lambda t: float(f(t)))(x)
    if not np.all(np.isfinite(fx)):
        raise NonFinite("integrand returned a non-finite value")
    return half * (fx @ _GL_WEIGHTS)


def quad_1d(f: Callable, lo: float, hi: float, n: int = 16, rtol: float = 1e-12,
            max_depth: int = 60) -> float:
    """Integrate ``f`` over ``[lo, hi]`` with adaptive composite Gauss-Legendre.

    Starts from ``n`` equal panels of 10-point Gauss-Legendre and bisects any
    panel whose two halves disagree with the whole by more than its share of
    ``rtol`` times the running total. Bisection (rather than uniform doubling)
    keeps integrable endpoint singularities such as ``x**-0.2`` cheap.
    ``f`` should accept numpy arrays; scalar functions are vectorized.
    """
    if n < 16:
        raise ValueError("need at least 16 initial panels")
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise ValueError("integration limits must be finite")
    if hi == lo:
        return 0.0
    sign = 1.0
    if hi < lo:
        lo, hi, sign = hi, lo, -1.0
    edges = np.linspace(lo, hi, n + 1)
    a, b = edges[:-1], edges[1:]
    whole = _gl_panels(f, a, b)
    tol = rtol * max(abs(whole.sum()), 1e-300)
    width = hi - lo

    result = 0.0
    depth = 0
    while a.size:
        # refine breadth-first so each level is a single vectorized call
        m = 0.5 * (a + b)
        left = _gl_panels(f, a, m)
        right = _gl_panels(f, m, b)
        fine = left + right
        done = np.abs(fine - whole) <= tol * (b - a) / width
        if depth >= max_depth:
            done[:] = True
        result += fine[done].sum()
        keep = ~done
        a = np.concatenate([a[keep], m[keep]])
        b = np.concatenate([m[keep], b[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        depth += 1
    return sign * float(result)
