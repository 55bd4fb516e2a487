"""Per-point geometric quantities for equality-constrained descent.

Everything here is a pure function of its inputs. The central objects are
the quadratic constraint penalty V(x) = 0.5*||h(x)||^2, the orthogonal
projector onto the null space of the constraint gradients, the projected
cost gradient, and the least-squares multiplier estimate. Conventions:

* ``jac_h`` is the n-by-k matrix whose columns are the constraint
  gradients (the transpose of the usual Jacobian layout).
* The multiplier sign convention is ``grad_f = grad_ftilde + jac_h @ lam``.
  At a stationary point this lam equals minus the multiplier of the
  first-order condition written as ``-grad_f = jac_h @ Lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient

# Reciprocal condition estimate of the Gram matrix below which the
# constraint gradients are treated as rank deficient. Regularizing instead
# would silently change the geometry, so this is a hard error.
RCOND_MIN = 1e-12


@dataclass(frozen=True)
class GeometryEval:
    """Cached bundle of all per-point quantities used by the solver.

    Fields
    ------
    x : evaluation point, shape (n,)
    h_val : constraint values, shape (k,)
    jac_h : constraint gradients as columns, shape (n, k)
    grad_f : cost gradient, shape (n,)
    V : penalty 0.5*||h_val||^2
    grad_V : penalty gradient jac_h @ h_val
    projector : orthogonal projector onto Ker(jac_h^T), shape (n, n)
    grad_ftilde : projected cost gradient, projector @ grad_f
    lam : least-squares multiplier, shape (k,); grad_f = grad_ftilde + jac_h @ lam
    gram_cond : condition estimate of jac_h^T jac_h (1.0 when k == 1)
    """

    x: np.ndarray
    h_val: np.ndarray
    jac_h: np.ndarray
    grad_f: np.ndarray
    V: float
    grad_V: np.ndarray
    projector: np.ndarray
    grad_ftilde: np.ndarray
    lam: np.ndarray
    gram_cond: float


class _GramSolver:
    """Cholesky-backed solver for the k-by-k Gram matrix jac^T jac.

    Factored once per point; raises RankDeficient when the matrix is not
    numerically positive definite or its condition estimate exceeds
    1/RCOND_MIN.
    """

    __slots__ = ("_scalar", "_chol", "cond")

    def __init__(self, gram):
        k = gram.shape[0]
        if k == 1:
            g = float(gram[0, 0])
            if not np.isfinite(g) or g <= 0.0:
                raise RankDeficient(
                    "constraint gradient is numerically zero (Gram entry "
                    f"{g!r}); the submersion assumption fails here"
                )
            self._scalar = g
            self._chol = None
            self.cond = 1.0
            return
        eigs = np.linalg.eigvalsh(gram)
        lo, hi = float(eigs[0]), float(eigs[-1])
        if lo <= 0.0 or (hi > 0.0 and lo / hi < RCOND_MIN):
            raise RankDeficient(
                "Gram matrix of constraint gradients is numerically singular "
                f"(eigenvalue range [{lo:.3e}, {hi:.3e}])"
            )
        self._scalar = None
        self._chol = np.linalg.cholesky(gram)
        self.cond = hi / lo

    def solve(self, rhs):
        if self._scalar is not None:
            return rhs / self._scalar
        y = np.linalg.solve(self._chol, rhs)
        return np.linalg.solve(self._chol.T, y)


def penalty(h_val) -> float:
    """Quadratic constraint penalty 0.5 * h^T h."""
    h_val = np.asarray(h_val, dtype=float)
    return 0.5 * float(h_val @ h_val)


def _projector_from(jac_h, solver):
    n = jac_h.shape[0]
    m = jac_h @ solver.solve(jac_h.T)
    p = np.eye(n) - 0.5 * (m + m.T)
    return p


def tangent_projector(jac_h) -> np.ndarray:
    """Orthogonal projector onto the null space of the constraint gradients.

    Returns the symmetric idempotent matrix
    ``P = I - J (J^T J)^{-1} J^T`` with ``J = jac_h``; ``P @ jac_h == 0``
    and ``trace(P) == n - k``.

    Raises
    ------
    RankDeficient
        If the Gram matrix J^T J fails the positive-definite factorization
        or its condition estimate exceeds 1/RCOND_MIN.
    """
    jac_h = np.asarray(jac_h, dtype=float)
    return _projector_from(jac_h, _GramSolver(jac_h.T @ jac_h))


def projected_gradient(grad_f, projector) -> np.ndarray:
    """Component of the cost gradient tangent to the constraint set."""
    return np.asarray(projector, dtype=float) @ np.asarray(grad_f, dtype=float)


def multiplier_estimate(jac_h, grad_f) -> np.ndarray:
    """Least-squares multiplier lam = (J^T J)^{-1} J^T grad_f.

    With this convention ``grad_f - jac_h @ lam`` equals the projected
    gradient up to roundoff.
    """
    jac_h = np.asarray(jac_h, dtype=float)
    grad_f = np.asarray(grad_f, dtype=float)
    solver = _GramSolver(jac_h.T @ jac_h)
    return solver.solve(jac_h.T @ grad_f)


def kkt_residual(ev: GeometryEval) -> tuple[float, float]:
    """First-order optimality residuals (stationarity, feasibility).

    Both are small exactly when the point is an approximate KKT point:
    stationarity is ||grad_ftilde|| and feasibility is ||h_val||.
    """
    return (
        float(np.linalg.norm(ev.grad_ftilde)),
        float(np.linalg.norm(ev.h_val)),
    )
