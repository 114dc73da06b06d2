"""Preconditioned conjugate gradients and inverse power iteration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import IterationLimit, SolverDivergence


@dataclass
class CGInfo:
    iterations: int
    residual: float


def pcg(A, b: np.ndarray, precond: Optional[Callable] = None, x0=None, tol: float = 1e-10,
        maxiter: Optional[int] = None):
    """Solve A x = b for symmetric positive definite A.

    Stops when ||b - A x|| <= tol ||b||.  ``precond`` applies an SPD
    approximation of A^{-1}.  Raises SolverDivergence on a non-positive
    curvature direction or when the iteration cap is hit.
    """
    n = len(b)
    maxiter = 10 * n if maxiter is None else maxiter
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), CGInfo(0, 0.0)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - A @ x
    z = precond(r) if precond else r
    d = z.copy()
    rz = r @ z
    for k in range(maxiter):
        res = np.linalg.norm(r)
        if res <= tol * bnorm:
            return x, CGInfo(k, res / bnorm)
        Ad = A @ d
        dAd = d @ Ad
        if dAd <= 0:
            raise SolverDivergence(f"operator lost positivity (d.Ad = {dAd:.3e}) at iteration {k}")
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        z = precond(r) if precond else r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
    res = np.linalg.norm(r) / bnorm
    if res <= tol:
        return x, CGInfo(maxiter, res)
    raise SolverDivergence(f"CG stalled at relative residual {res:.3e} after {maxiter} iterations")


def factor_preconditioner(A):
    """Sparse LU of A used as an (exact up to rounding) preconditioner."""
    lu = spla.splu(sps.csc_matrix(A))
    return lu.solve


def jacobi_preconditioner(A):
    d = A.diagonal()
    return lambda r: r / d


def inverse_power(S, mass: np.ndarray, tol: float = 1e-10, max_iter: int = 2000):
    """Smallest eigenpair of S x = lam diag(mass) x by inverse iteration.

    Returns (lam, x) with x normalised in the mass inner product.
    """
    solve = spla.splu(sps.csc_matrix(S)).solve
    n = S.shape[0]
    x = np.ones(n) + 0.01 * np.cos(np.arange(n))
    x /= np.sqrt(x @ (mass * x))
    lam = x @ (S @ x)
    for _ in range(max_iter):
        y = solve(mass * x)
        y /= np.sqrt(y @ (mass * y))
        lam_new = y @ (S @ y)
        x = y
        res = np.linalg.norm(S @ x - lam_new * mass * x) / (lam_new * np.linalg.norm(mass * x))
        if abs(lam_new - lam) <= tol * abs(lam_new) and res <= np.sqrt(tol):
            return float(lam_new), x
        lam = lam_new
    raise IterationLimit(f"inverse power iteration did not settle in {max_iter} steps")
