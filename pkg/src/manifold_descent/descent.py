"""Discrete-time descent iteration with Armijo step selection.

The update is ``x_{k+1} = x_k - t * (grad_ftilde + grad_V)``: the projected
cost gradient drives motion along the constraint set while the penalty
gradient pulls the iterate back onto it. The two components are orthogonal,
so the step vanishes exactly at first-order KKT points.

Step selection backtracks on the penalty V with the usual sufficient
decrease test. At points that are numerically feasible the test degenerates
(the directional derivative of V is zero to roundoff while curvature makes
V grow quadratically along any tangent motion), so no productive step can
decrease V; in that regime the search falls back to sufficient decrease on
the cost f itself. The fallback also catches the near-feasible case where
the V test would only admit a vanishingly small step.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import IterateRecord, Problem, SolverConfig, evaluate, penalty
from .errors import LineSearchFailed, NonFinite, RankDeficient
from .geometry import GeometryEval, kkt_residual

# A step accepted by the V test but smaller than this fraction of the trial
# cap makes no useful progress (it only happens when the iterate is far more
# feasible than the natural descent equilibrium); treat it as degenerate.
_CRAWL_RATIO = 1e-3

# Reject trial steps that land the constraint values below this fraction of
# the step's own curvature scale t^2 ||d||^2. Without the guard an accepted
# step can overshoot the constraint levels to near-exact feasibility while
# the projected gradient is still large, a state from which no step can both
# make progress and keep the penalty from growing back.
_OVERSHOOT_GUARD = 1e-2

# Penalty increase allowed per cost-certified step after the first
# iteration. Keeps the logged V sequence non-increasing to well within
# 1e-12 while still letting the iteration work its way out of states that
# are far more feasible than the descent equilibrium.
_MIDRUN_V_BUDGET = 5e-13

_EPS = float(np.finfo(float).eps)


class Termination(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    RANK_DEFICIENT = "RankDeficient"
    LINE_SEARCH_FAILED = "LineSearchFailed"


@dataclass(frozen=True)
class SolveReport:
    """Terminal state and per-step log of one solve.

    ``termination == Termination.CONVERGED`` guarantees
    ``stationarity <= tol_grad`` and ``feasibility <= tol_feas``; it is a
    first-order certificate only (second-order classification lives in the
    escape module). ``armijo_fallbacks`` counts steps accepted by the
    cost-decrease fallback rather than the penalty-decrease rule.
    """

    x_star: np.ndarray
    f_star: float
    lambda_star: np.ndarray
    stationarity: float
    feasibility: float
    iterations: int
    restarts: int
    termination: Termination
    trajectory: tuple[IterateRecord, ...]
    armijo_fallbacks: int = 0


def step_direction(ev: GeometryEval) -> np.ndarray:
    """Descent direction -(grad_ftilde + grad_V); zero exactly at KKT points."""
    return -(ev.grad_ftilde + ev.grad_V)


def _penalty_at(problem, x):
    h = np.asarray(problem.h(x), dtype=float)
    return 0.5 * float(h @ h)


def _curvature(problem, ev):
    """Spectral norm of the Lagrangian Hessian at the evaluated point.

    Uses the multiplier of the first-order condition written as
    -grad_f = jac_h @ Lambda (so Lambda = -lam); falls back to finite
    differences when analytic Hessians are absent.
    """
    from .core import fd_hessian  # local import avoids a cycle at load time

    if problem.hess_f is not None:
        hess = np.asarray(problem.hess_f(ev.x), dtype=float).copy()
    else:
        hess = fd_hessian(problem.f, ev.x)
    lam_eq = -ev.lam
    for i in range(problem.k):
        if problem.hess_h is not None:
            hi = np.asarray(problem.hess_h[i](ev.x), dtype=float)
        else:
            hi = fd_hessian(lambda y, i=i: float(problem.h(y)[i]), ev.x)
        hess = hess + lam_eq[i] * hi
    return float(np.linalg.norm(0.5 * (hess + hess.T), 2))


class _CurvatureCache:
    """Per-solve memo for the Lagrangian curvature estimate.

    The estimate drifts slowly along the trajectory, so it is refreshed
    only after the iterate has moved a meaningful relative distance.
    """

    __slots__ = ("_problem", "_x", "_val")

    def __init__(self, problem):
        self._problem = problem
        self._x = None
        self._val = 0.0

    def norm(self, ev, _rel=0.01):
        if self._x is None or np.linalg.norm(ev.x - self._x) > _rel * (
            1.0 + np.linalg.norm(self._x)
        ):
            self._val = _curvature(self._problem, ev)
            self._x = ev.x.copy()
        return self._val


def armijo_step(problem: Problem, x, d, config: SolverConfig, ev=None) -> float:
    """Backtracking step length for the direction d at the point x.

    The trial sequence is ``t = beta^m * t0`` with
    ``t0 = min(s, 0.99 * 2 / lipschitz_f)``; the cap keeps every accepted
    step strictly below 2 / L_f. Acceptance tests sufficient decrease of
    the penalty V against its directional derivative along d. When that
    slope is numerically zero, or the accepted step would be a crawl
    (below ``1e-3 * t0``), the test is vacuous at first order and the
    search instead enforces sufficient decrease of the cost f.

    Raises LineSearchFailed when no trial passes within max_backtracks,
    which signals a bad direction or a violated smoothness assumption.
    """
    t, _ = _armijo_step_ext(problem, x, d, config, ev)
    return t


def _armijo_step_ext(problem, x, d, config, ev=None, fresh_start=True, curv_cache=None):
    """armijo_step plus a flag telling whether the cost fallback fired.

    ``fresh_start`` marks the user-supplied starting point: there a crawl
    (a V-accepted step too small to make progress, the signature of a
    point far more feasible than the descent equilibrium) is replaced by
    the cost-certified step. Mid-run crawls keep the crawl step instead,
    which preserves penalty monotonicity; the overshoot guard bounds how
    deep the iteration can dip, so recovery stays short.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    if ev is None:
        ev = evaluate(problem, x)
    t0 = min(config.s, 0.99 * 2.0 / config.lipschitz_f)
    slope_v = float(ev.grad_V @ d)
    feas0 = float(np.linalg.norm(ev.h_val))
    d_sq = float(d @ d)

    # Once feasibility sits far below the target tolerance, V differences
    # are at measurement-noise scale and sufficient decrease on V stops
    # being meaningful (a noise-level pass would admit tangentially
    # explosive steps). Only the cost branch is informative there.
    gated = feas0 <= 1e-2 * config.tol_feas

    crawl = None
    if slope_v < 0.0 and not gated:
        t = t0
        accepted = None
        for _ in range(config.max_backtracks + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                h_trial = np.asarray(problem.h(x + t * d), dtype=float)
            if np.all(np.isfinite(h_trial)):
                feas = float(np.linalg.norm(h_trial))
                v_trial = 0.5 * feas * feas
                if v_trial - ev.V <= config.sigma * t * slope_v and (
                    feas >= _OVERSHOOT_GUARD * t * t * d_sq or feas == 0.0
                ):
                    accepted = t
                    break
            t *= config.beta
        if accepted is not None and accepted > _CRAWL_RATIO * t0:
            return accepted, False
        crawl = accepted
    elif slope_v > 0.0 and not gated:
        # A genuinely ascending slope for V (beyond inner-product roundoff)
        # means the caller's direction is wrong; do not paper over it.
        noise = 8.0 * _EPS * float(
            np.linalg.norm(ev.grad_V) * np.linalg.norm(d)
        )
        if slope_v > noise:
            raise LineSearchFailed(
                f"direction increases the penalty to first order "
                f"(slope {slope_v:.3e})"
            )

    # Degenerate regime: V has no meaningful first-order slope along d (the
    # point is numerically feasible) or admits only a crawl. Certify
    # progress on the cost instead. Sufficient decrease is measured against
    # the tangential slope only; the normal component of d restores
    # feasibility and may raise f by its first-order fee |grad_f . grad_V|
    # per unit step, which no fixed-weight merit can absorb as h -> 0. The
    # trial is capped by the local Lagrangian curvature so the step stays
    # contractive tangentially, and an absolute slack keeps the comparison
    # meaningful once cost differences reach roundoff.
    f0 = float(problem.f(x))
    slope_tan = float(ev.grad_ftilde @ d)
    fee = abs(float(ev.grad_f @ d) - slope_tan)
    curv = _curvature(problem, ev) if curv_cache is None else curv_cache.norm(ev)
    t_cap = min(t0, 0.9 * 2.0 / curv) if curv > 0.0 else t0
    slack = 16.0 * _EPS * (1.0 + abs(f0))
    slope_neg = min(slope_tan, 0.0)
    t = t_cap
    for _ in range(config.max_backtracks + 1):
        y = x + t * d
        with np.errstate(over="ignore", invalid="ignore"):
            f_trial = float(problem.f(y))
        ok = np.isfinite(f_trial) and f_trial - f0 <= t * (
            config.sigma * slope_neg + fee
        ) + slack
        if ok and not fresh_start:
            # Mid-run the penalty may grow only within its budget so the
            # logged V sequence stays monotone to within the stated slack.
            with np.errstate(over="ignore", invalid="ignore"):
                h_trial = np.asarray(problem.h(y), dtype=float)
            ok = np.all(np.isfinite(h_trial)) and (
                0.5 * float(h_trial @ h_trial) <= ev.V + _MIDRUN_V_BUDGET
            )
        if ok:
            return t, True
        t *= config.beta
    if crawl is not None:
        return crawl, False
    raise LineSearchFailed(
        f"no acceptable step within {config.max_backtracks} backtracks "
        f"(slope_V={slope_v:.3e}, tangential slope={slope_tan:.3e})"
    )


def _record(k, ev, f_val, step):
    return IterateRecord(
        k=k,
        x=ev.x,
        f_val=f_val,
        V_val=ev.V,
        grad_ftilde_norm=float(np.linalg.norm(ev.grad_ftilde)),
        feas_norm=float(np.linalg.norm(ev.h_val)),
        step=step,
    )


def _finish(ev, f_val, records, termination, fallbacks):
    stat, feas = kkt_residual(ev)
    return SolveReport(
        x_star=ev.x,
        f_star=f_val,
        lambda_star=ev.lam,
        stationarity=stat,
        feasibility=feas,
        iterations=len(records) - 1,
        restarts=0,
        termination=termination,
        trajectory=tuple(records),
        armijo_fallbacks=fallbacks,
    )


def solve(problem: Problem, x0, config: SolverConfig) -> SolveReport:
    """Run the descent iteration until both KKT residuals pass tolerance.

    Every iterate is logged. Errors at the starting point propagate as
    exceptions; rank deficiency or line-search failure encountered after
    at least one step terminates with the corresponding status and the
    partial trajectory, so callers keep the progress made. NonFinite
    always propagates. Hitting max_iters is a status, not an error.

    The solve is single-threaded and deterministic; concurrent solves may
    share the (immutable) problem.
    """
    x = np.asarray(x0, dtype=float)
    ev = evaluate(problem, x)  # propagates RankDeficient/NonFinite at x0
    records = []
    fallbacks = 0
    curv_cache = _CurvatureCache(problem)
    # Runs that begin essentially on the constraint set cannot keep the
    # penalty monotone while making progress (curvature forces transient
    # growth along any tangential motion), so the per-step penalty budget
    # is waived for them. Runs from genuinely infeasible points keep it,
    # which preserves monotone penalty descent.
    feasible_start = float(np.linalg.norm(ev.h_val)) <= 1e-3 * (
        1.0 + float(np.linalg.norm(x))
    )
    k = 0
    while True:
        f_val = float(problem.f(ev.x))
        stat, feas = kkt_residual(ev)
        if stat <= config.tol_grad and feas <= config.tol_feas:
            records.append(_record(k, ev, f_val, 0.0))
            return _finish(ev, f_val, records, Termination.CONVERGED, fallbacks)
        if k >= config.max_iters:
            records.append(_record(k, ev, f_val, 0.0))
            return _finish(ev, f_val, records, Termination.MAX_ITERS, fallbacks)

        d = step_direction(ev)
        try:
            t, used_fallback = _armijo_step_ext(
                problem, x, d, config, ev,
                fresh_start=(k == 0 or feasible_start),
                curv_cache=curv_cache,
            )
        except LineSearchFailed:
            records.append(_record(k, ev, f_val, 0.0))
            return _finish(
                ev, f_val, records, Termination.LINE_SEARCH_FAILED, fallbacks
            )
        fallbacks += int(used_fallback)
        records.append(_record(k, ev, f_val, t))
        x = x + t * d
        try:
            ev = evaluate(problem, x)
        except RankDeficient:
            # Finish at the last valid iterate; the bad point is not logged.
            return _finish(
                ev, f_val, records, Termination.RANK_DEFICIENT, fallbacks
            )
        k += 1
