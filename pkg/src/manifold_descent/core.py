"""Problem containers, evaluation plumbing, and finite-difference oracles.

A :class:`Problem` owns user-supplied callables for the cost, the
constraints, and their first (optionally second) derivatives. Derivatives
are never approximated behind the user's back: the finite-difference
helpers in this module exist to *validate* supplied derivatives, not to
replace them (the step-size analysis of the solver presumes exact
gradients). Problems are immutable after construction and safe to share
across concurrent solves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonFinite
from .geometry import GeometryEval, _GramSolver, _projector_from, penalty

Array = np.ndarray

#: Default central-difference step for gradients and Jacobians. Balances
#: truncation against cancellation at double precision.
FD_STEP_GRAD = 1e-6
#: Default step for second differences; cancellation is worse there.
FD_STEP_HESS = 1e-4


@dataclass(frozen=True)
class Problem:
    """Equality-constrained minimization problem: min f(x) s.t. h(x) = 0.

    Parameters
    ----------
    n : ambient dimension.
    k : number of constraints; must satisfy k < n, otherwise the tangent
        space is trivial and the projector degenerates.
    f : cost, maps an n-vector to a scalar.
    grad_f : cost gradient, maps an n-vector to an n-vector.
    h : constraint map, maps an n-vector to a k-vector.
    jac_h : constraint gradients, maps an n-vector to an n-by-k matrix
        whose COLUMNS are the gradients of the individual constraints
        (transpose of the conventional Jacobian layout).
    hess_f : optional cost Hessian, n-by-n.
    hess_h : optional sequence of k constraint Hessians, each n-by-n.
    name : identifier used in reports and output files.

    The constraint map is assumed to be a submersion wherever the solver
    operates; rank deficiency is detected at runtime and raised as
    :class:`~manifold_descent.errors.RankDeficient`, never assumed away.
    """

    n: int
    k: int
    f: Callable[[Array], float]
    grad_f: Callable[[Array], Array]
    h: Callable[[Array], Array]
    jac_h: Callable[[Array], Array]
    hess_f: Optional[Callable[[Array], Array]] = None
    hess_h: Optional[Sequence[Callable[[Array], Array]]] = None
    name: str = "problem"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.k >= self.n:
            raise ValueError(
                f"need k < n (got k={self.k}, n={self.n}); with k >= n the "
                "tangent space of the constraint set is trivial"
            )
        if self.hess_h is not None:
            hh = tuple(self.hess_h)
            if len(hh) != self.k:
                raise ValueError(
                    f"hess_h must supply one Hessian per constraint "
                    f"({self.k}), got {len(hh)}"
                )
            object.__setattr__(self, "hess_h", hh)


@dataclass(frozen=True)
class SolverConfig:
    """Step-rule parameters, tolerances, and iteration caps.

    ``lipschitz_f`` is a user-supplied bound on the Lipschitz constant of
    grad_f; trial steps are capped at 0.99 * 2 / lipschitz_f so every
    accepted step stays strictly below 2 / L_f. For the benchmark cost
    (a shifted sum of squares) the exact value is 2.
    """

    lipschitz_f: float
    beta: float = 0.5
    s: float = 1.0
    sigma: float = 1e-4
    tol_grad: float = 1e-8
    tol_feas: float = 1e-8
    max_iters: int = 50_000
    max_backtracks: int = 60
    escape_eps: Optional[float] = None  # None: auto-scale 1e-3 * (1 + |x*|)
    max_restarts: int = 5
    fd_step: float = FD_STEP_GRAD

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0.0 < self.s <= 1.0:
            raise ValueError(f"s must lie in (0, 1], got {self.s}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lipschitz_f <= 0.0:
            raise ValueError(
                f"lipschitz_f must be positive, got {self.lipschitz_f}"
            )
        for name in ("tol_grad", "tol_feas", "fd_step"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_iters < 1 or self.max_backtracks < 1:
            raise ValueError("iteration caps must be at least 1")
        if self.escape_eps is not None and self.escape_eps <= 0.0:
            raise ValueError("escape_eps must be positive when given")
        if self.max_restarts < 0:
            raise ValueError("max_restarts must be non-negative")


@dataclass(frozen=True)
class IterateRecord:
    """One logged solver step.

    ``V_val`` equals 0.5 * feas_norm**2 to roundoff; ``step`` is the
    accepted step length (0.0 on the terminal record).
    """

    k: int
    x: Array
    f_val: float
    V_val: float
    grad_ftilde_norm: float
    feas_norm: float
    step: float


def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise NonFinite(f"{what} produced a non-finite value")
    return value


def _vector(problem, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.n,):
        raise ValueError(
            f"point has shape {x.shape}, expected ({problem.n},) for "
            f"problem {problem.name!r}"
        )
    return x


def evaluate(problem: Problem, x) -> GeometryEval:
    """Evaluate the full geometric bundle at a single point.

    Every quantity is computed exactly once and cached in the returned
    :class:`GeometryEval`. Two calls at the same point return identical
    bundles (no hidden state).

    Raises
    ------
    RankDeficient
        If the Gram matrix of constraint gradients is numerically singular.
    NonFinite
        If the point or any user callable evaluates to NaN/Inf.
    """
    x = _vector(problem, x)
    _check_finite(x, "evaluation point")
    h_val = np.asarray(problem.h(x), dtype=float).reshape(-1)
    if h_val.shape != (problem.k,):
        raise ValueError(
            f"h returned shape {h_val.shape}, expected ({problem.k},)"
        )
    _check_finite(h_val, "constraint map h")
    jac = np.asarray(problem.jac_h(x), dtype=float)
    if jac.shape != (problem.n, problem.k):
        raise ValueError(
            f"jac_h returned shape {jac.shape}, expected "
            f"({problem.n}, {problem.k}) (constraint gradients as columns)"
        )
    _check_finite(jac, "constraint gradients jac_h")
    grad_f = np.asarray(problem.grad_f(x), dtype=float).reshape(-1)
    if grad_f.shape != (problem.n,):
        raise ValueError(
            f"grad_f returned shape {grad_f.shape}, expected ({problem.n},)"
        )
    _check_finite(grad_f, "cost gradient grad_f")

    solver = _GramSolver(jac.T @ jac)
    projector = _projector_from(jac, solver)
    lam = solver.solve(jac.T @ grad_f)
    grad_ftilde = projector @ grad_f
    grad_v = jac @ h_val
    return GeometryEval(
        x=x,
        h_val=h_val,
        jac_h=jac,
        grad_f=grad_f,
        V=penalty(h_val),
        grad_V=grad_v,
        projector=projector,
        grad_ftilde=grad_ftilde,
        lam=lam,
        gram_cond=solver.cond,
    )


def fd_gradient(scalar_map, x, fd_step: float = FD_STEP_GRAD) -> Array:
    """Central-difference gradient of a scalar map.

    Component i is (g(x + d e_i) - g(x - d e_i)) / (2 d). Exact for affine
    maps up to roundoff; used as an independent oracle for user-supplied
    gradients.
    """
    if fd_step <= 0.0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = fd_step
        out[i] = (scalar_map(x + e) - scalar_map(x - e)) / (2.0 * fd_step)
    return _check_finite(out, "finite-difference gradient")


def fd_jacobian(vector_map, x, fd_step: float = FD_STEP_GRAD) -> Array:
    """Central-difference constraint gradients, n-by-k (columns per output)."""
    if fd_step <= 0.0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(x, dtype=float)
    cols = None
    rows = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = fd_step
        hi = np.asarray(vector_map(x + e), dtype=float).reshape(-1)
        lo = np.asarray(vector_map(x - e), dtype=float).reshape(-1)
        row = (hi - lo) / (2.0 * fd_step)
        if cols is None:
            cols = row.size
        rows.append(row)
    return _check_finite(np.array(rows), "finite-difference Jacobian")


def fd_hessian(scalar_map, x, fd_step: float = FD_STEP_HESS) -> Array:
    """Symmetrized central-difference Hessian of a scalar map."""
    if fd_step <= 0.0:
        raise ValueError("fd_step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size
    hess = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = fd_step
        for j in range(i, n):
            ej = np.zeros(n)
            ej[j] = fd_step
            val = (
                scalar_map(x + ei + ej)
                - scalar_map(x + ei - ej)
                - scalar_map(x - ei + ej)
                + scalar_map(x - ei - ej)
            ) / (4.0 * fd_step * fd_step)
            hess[i, j] = val
            hess[j, i] = val
    hess = 0.5 * (hess + hess.T)
    return _check_finite(hess, "finite-difference Hessian")
