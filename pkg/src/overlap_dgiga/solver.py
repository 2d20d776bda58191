"""Linear solve and evaluation of the discrete solution."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

log = logging.getLogger(__name__)

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class DiscreteSolution:
    """Per-patch B-spline coefficients of the DG-IGA solution."""

    multipatch: object
    coefficients: tuple

    def __post_init__(self):
        for patch, c in zip(self.multipatch.patches, self.coefficients):
            if c.shape != (patch.space.size,):
                raise ValueError("coefficient count does not match patch space")

    @classmethod
    def from_vector(cls, mp, x):
        off = mp.offsets()
        return cls(mp, tuple(np.array(x[off[i]:off[i + 1]]) for i in range(len(mp.patches))))

    def vector(self):
        return np.concatenate(self.coefficients)

    def evaluate(self, patch, xhat, with_gradient=False):
        """Values (and physical gradients) on ``patch`` at points ``(N, d)``."""
        p = self.multipatch.patches[patch]
        c = self.coefficients[patch]
        if not with_gradient:
            b = p.space.tabulate(xhat, deriv=False)
            return np.sum(b.values * c[b.indices], axis=1)
        geo = p.evaluate(xhat, index=patch)
        return evaluate_on(geo, c)


def evaluate_on(geo, coeffs):
    """Value and physical gradient from precomputed :class:`PointGeometry`."""
    cl = coeffs[geo.basis.indices]
    value = np.sum(geo.basis.values * cl, axis=1)
    grad = np.einsum("nl,nla->na", cl, geo.physical_grads())
    return value, grad


def eval_solution(sol, patch, xhat, with_gradient=False):
    """Solution value (and physical gradient) at one parametric point."""
    pts = np.asarray(xhat, dtype=float)[None, :]
    if with_gradient:
        v, g = sol.evaluate(patch, pts, True)
        return float(v[0]), g[0]
    return float(sol.evaluate(patch, pts)[0])


def pcg(matrix, b, tol=1e-10, max_iter=None, x0=None, stall_window=200):
    """Jacobi-preconditioned conjugate gradients.

    Returns ``(x, relative_residual, iterations, converged)``.  Stops early if
    the best residual has not improved for ``stall_window`` iterations.
    """
    n = b.size
    max_iter = max_iter if max_iter is not None else 10 * n
    diag = matrix.diagonal()
    if np.any(diag <= 0):
        return np.zeros(n), np.inf, 0, False
    minv = 1.0 / diag
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), 0.0, 0, True
    x = np.zeros(n) if x0 is None else x0.copy()
    r = b - matrix @ x
    z = minv * r
    p = z.copy()
    rz = r @ z
    best, best_it = np.inf, 0
    res = np.linalg.norm(r) / bnorm
    for it in range(1, max_iter + 1):
        ap = matrix @ p
        pap = p @ ap
        if pap <= 0:
            break
        alpha = rz / pap
        x += alpha * p
        r -= alpha * ap
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            return x, res, it, True
        if res < 0.999 * best:
            best, best_it = res, it
        elif it - best_it > stall_window:
            break
        z = minv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, res, it, False


def _relres(matrix, x, b):
    bn = np.linalg.norm(b)
    return np.linalg.norm(matrix @ x - b) / bn if bn > 0 else np.linalg.norm(matrix @ x)


def _direct(matrix, b):
    if matrix.shape[0] <= DENSE_LIMIT:
        dense = matrix.toarray()
        try:
            return scipy.linalg.solve(dense, b, assume_a="sym" if _is_symmetric(matrix) else "gen")
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SolverError("dense factorization failed: %s" % exc) from exc
    return spla.splu(sp.csc_matrix(matrix)).solve(b)


def _is_symmetric(matrix):
    diff = abs(matrix - matrix.T)
    return diff.nnz == 0 or diff.max() <= 1e-12 * abs(matrix).max()


def solve_linear(matrix, b, tol=1e-10, max_iter=None, method="auto"):
    """Solve ``matrix x = b`` to relative residual ``tol``.

    ``method="auto"`` uses a dense factorization below 2000 unknowns and
    Jacobi-PCG otherwise, falling back to a sparse direct factorization when
    CG stagnates.  ``"cg"`` never falls back; ``"direct"`` always factorizes.

    Raises:
        SolverError: if the final residual exceeds ``tol``.
    """
    matrix = sp.csr_matrix(matrix)
    b = np.asarray(b, dtype=float)
    n = b.size
    if method not in ("auto", "cg", "direct"):
        raise ValueError("unknown method %r" % (method,))
    if method == "direct" or (method == "auto" and n <= DENSE_LIMIT):
        x = _direct(matrix, b)
    else:
        x, res, its, ok = pcg(matrix, b, tol, max_iter)
        log.debug("pcg: %d iterations, residual %.3e", its, res)
        if not ok:
            if method == "cg" or its >= (max_iter if max_iter is not None else 10 * n):
                raise SolverError("CG did not converge (residual %.3e after %d iterations)"
                                  % (res, its), residual=res)
            log.info("CG stagnated at residual %.3e; using sparse direct solve", res)
            x = _direct(matrix, b)
    res = _relres(matrix, x, b)
    if not np.isfinite(res) or res > tol:
        raise SolverError("residual %.3e exceeds tolerance %.1e" % (res, tol), residual=res)
    return x


def solve(system, tol=1e-10, max_iter=None, method="auto"):
    """Solve an assembled :class:`LinearSystem` and wrap the result per patch."""
    x = solve_linear(system.matrix, system.rhs, tol, max_iter, method)
    return DiscreteSolution.from_vector(system.multipatch, x)
