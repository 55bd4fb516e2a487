"""Second-order classification of converged points and the restart heuristic.

A converged descent run certifies only the first-order conditions, and
saddle points and maxima of the constrained problem are (unstable) fixed
points of the iteration too. The classifier forms the Lagrangian Hessian
at the converged point, projects it onto the tangent space, and looks for
positive curvature of the negated projection: a positive eigenvalue means
the point is not a local minimum and its eigenvector is a feasible
direction of cost decrease, along which the solver is restarted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FD_STEP_HESS, Problem, SolverConfig, evaluate, fd_hessian
from .descent import SolveReport, Termination, solve
from .errors import NonFinite
from .geometry import tangent_projector


class Classification(enum.Enum):
    LOCAL_MIN_CANDIDATE = "LocalMinCandidate"
    ESCAPABLE_STATIONARY = "EscapableStationary"


@dataclass(frozen=True)
class SecondOrderReport:
    """Curvature analysis of an approximate KKT point.

    ``max_eig`` is the largest eigenvalue of ``-P H P`` where H is the
    Lagrangian Hessian and P the tangent projector; a value above the
    tolerance certifies the point is not a local minimum.
    ``escape_dir`` is the corresponding unit eigenvector (it lies in the
    tangent space) and is present exactly in that case.
    ``LOCAL_MIN_CANDIDATE`` means no tangent positive curvature was found,
    not that strict second-order sufficiency holds. ``curvature_fd`` marks
    reports whose Hessians came from finite differences.
    """

    x_star: np.ndarray
    lambda_eq: np.ndarray
    hess_lagrangian: np.ndarray
    projected_neg_hess: np.ndarray
    max_eig: float
    escape_dir: Optional[np.ndarray]
    classification: Classification
    eig_tol: float
    curvature_fd: bool


def lagrangian_hessian(problem: Problem, x, Lambda) -> np.ndarray:
    """Symmetric Hessian of f(x) + Lambda^T h(x) in x.

    Analytic Hessians are used when the problem supplies them; otherwise
    central finite differences stand in (step 1e-4).
    """
    x = np.asarray(x, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float).reshape(problem.k)
    if problem.hess_f is not None:
        hess = np.asarray(problem.hess_f(x), dtype=float).copy()
    else:
        hess = fd_hessian(problem.f, x, FD_STEP_HESS)
    for i in range(problem.k):
        if problem.hess_h is not None:
            hi = np.asarray(problem.hess_h[i](x), dtype=float)
        else:
            hi = fd_hessian(lambda y, i=i: float(problem.h(y)[i]), x, FD_STEP_HESS)
        hess += Lambda[i] * hi
    hess = 0.5 * (hess + hess.T)
    if not np.all(np.isfinite(hess)):
        raise NonFinite("Lagrangian Hessian contains non-finite entries")
    return hess


def _unit_sign_fixed(v):
    v = v / np.linalg.norm(v)
    i = int(np.argmax(np.abs(v)))
    return v if v[i] > 0 else -v


def classify(problem: Problem, x_star, eig_tol: Optional[float] = None) -> SecondOrderReport:
    """Second-order classification of an approximate KKT point.

    The caller is responsible for x_star being approximately stationary
    and feasible (residuals within ~10x the solve tolerances); the
    multiplier is re-estimated here from the first-order decomposition
    and sign-converted to the convention ``-grad_f = jac_h @ Lambda``.

    When ``eig_tol`` is omitted it defaults to ``1e-6 * (1 + |H|)``,
    which separates genuine tangent curvature from roundoff on the
    projector's null space.
    """
    ev = evaluate(problem, x_star)
    lam_eq = -ev.lam
    hess = lagrangian_hessian(problem, ev.x, lam_eq)
    if eig_tol is None:
        eig_tol = 1e-6 * (1.0 + float(np.linalg.norm(hess, 2)))
    proj_neg = -(ev.projector @ hess @ ev.projector)
    proj_neg = 0.5 * (proj_neg + proj_neg.T)
    eigvals, eigvecs = np.linalg.eigh(proj_neg)
    max_eig = float(eigvals[-1])
    if max_eig > eig_tol:
        direction = _unit_sign_fixed(eigvecs[:, -1])
        label = Classification.ESCAPABLE_STATIONARY
    else:
        direction = None
        label = Classification.LOCAL_MIN_CANDIDATE
    return SecondOrderReport(
        x_star=ev.x,
        lambda_eq=lam_eq,
        hess_lagrangian=hess,
        projected_neg_hess=proj_neg,
        max_eig=max_eig,
        escape_dir=direction,
        classification=label,
        eig_tol=float(eig_tol),
        curvature_fd=problem.hess_f is None or problem.hess_h is None,
    )


def _rebase(records, offset):
    if offset == 0:
        return list(records)
    from dataclasses import replace

    return [replace(r, k=r.k + offset) for r in records]


def solve_with_escape(problem: Problem, x0, config: SolverConfig) -> SolveReport:
    """Descent solve fortified against saddle points and maxima.

    Runs the plain solve; on convergence classifies the terminal point and,
    when tangent positive curvature is found, restarts from
    ``x* + eps * z`` along the positive-curvature eigenvector z, up to
    ``config.max_restarts`` times. The returned report counts restarts and
    concatenates the per-leg trajectories (iteration indices continue
    across legs). Non-converged legs are returned as-is.
    """
    x0 = np.asarray(x0, dtype=float)
    trajectory = []
    offset = 0
    restarts = 0
    fallbacks = 0
    while True:
        report = solve(problem, x0, config)
        trajectory.extend(_rebase(report.trajectory, offset))
        offset = trajectory[-1].k + 1
        fallbacks += report.armijo_fallbacks
        if report.termination is not Termination.CONVERGED:
            break
        second = classify(problem, report.x_star)
        if second.classification is Classification.LOCAL_MIN_CANDIDATE:
            break
        if restarts >= config.max_restarts:
            break
        eps = config.escape_eps
        if eps is None:
            eps = 1e-3 * (1.0 + float(np.linalg.norm(report.x_star)))
        x0 = report.x_star + eps * second.escape_dir
        restarts += 1
    from dataclasses import replace

    return replace(
        report,
        restarts=restarts,
        iterations=sum(1 for r in trajectory if r.step != 0.0),
        trajectory=tuple(trajectory),
        armijo_fallbacks=fallbacks,
    )
