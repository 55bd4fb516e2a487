"""Continuous-time reference dynamics and numerical assumption checks.

Three vector fields are available, all built from the same geometric
bundle:

* ``ON_MANIFOLD``     xdot = -grad_ftilde(x)
* ``EXTENDED``        xdot = -grad_ftilde(x) - grad_V(x)
* ``TWO_TIME_SCALE``  xdot = -grad_ftilde(x) - jac_h (jac_h^T jac_h)^{-1} z,
                      z = h(x) / epsilon

The first preserves the constraint values exactly (h is a first integral);
the second makes the constraint set attractive; in the third the scaled
violation z decays like exp(-t/epsilon) on its own fast time scale.
Integration uses the classical fixed-step fourth-order Runge-Kutta method:
the exact flows are the object of interest and the integrator is only a
measurement tool, so the step is exposed for convergence-in-dt studies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Problem, evaluate
from .errors import NonFinite
from .geometry import GeometryEval, _GramSolver


class FlowKind(enum.Enum):
    ON_MANIFOLD = "manifold"
    EXTENDED = "extended"
    TWO_TIME_SCALE = "tts"


@dataclass(frozen=True)
class FlowSpec:
    """Which flow to integrate, over what horizon, at what step.

    For the two-time-scale flow the fast variable has time constant
    epsilon, so dt must satisfy dt <= epsilon / 5; that is enforced here
    rather than silently producing an unstable integration.
    """

    kind: FlowKind
    t_end: float
    dt: float = 1e-3
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        if self.kind is FlowKind.TWO_TIME_SCALE:
            if self.epsilon is None or self.epsilon <= 0.0:
                raise ValueError(
                    "two-time-scale flow needs epsilon > 0, got "
                    f"{self.epsilon!r}"
                )
            if self.dt > self.epsilon / 5.0 * (1.0 + 1e-12):
                raise ValueError(
                    f"dt={self.dt} too large for epsilon={self.epsilon}; "
                    "the fast variable needs dt <= epsilon / 5"
                )


@dataclass(frozen=True)
class FlowTrace:
    """Sampled trajectory of one integrated flow (one row per step)."""

    times: np.ndarray
    states: np.ndarray
    V_vals: np.ndarray
    feas_norms: np.ndarray
    z_norms: Optional[np.ndarray] = None


def vector_field(spec: FlowSpec, ev: GeometryEval) -> np.ndarray:
    """Right-hand side of the requested flow at an evaluated point."""
    if spec.kind is FlowKind.ON_MANIFOLD:
        return -ev.grad_ftilde
    if spec.kind is FlowKind.EXTENDED:
        return -(ev.grad_ftilde + ev.grad_V)
    z = ev.h_val / spec.epsilon
    solver = _GramSolver(ev.jac_h.T @ ev.jac_h)
    return -(ev.grad_ftilde + ev.jac_h @ solver.solve(z))


def integrate(problem: Problem, x0, spec: FlowSpec) -> FlowTrace:
    """Fixed-step classical Runge-Kutta integration over [0, t_end].

    The trace is sampled at every step boundary. The number of steps is
    round(t_end / dt); with the usual choice of a horizon divisible by dt
    the final sample lands on t_end exactly.
    """
    x = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFinite("initial state contains non-finite entries")
    n_steps = max(1, int(round(spec.t_end / spec.dt)))
    dt = spec.dt
    tts = spec.kind is FlowKind.TWO_TIME_SCALE

    times = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, x.size))
    v_vals = np.empty(n_steps + 1)
    feas = np.empty(n_steps + 1)
    z_norms = np.empty(n_steps + 1) if tts else None

    def field(y):
        return vector_field(spec, evaluate(problem, y))

    for i in range(n_steps + 1):
        ev = evaluate(problem, x)
        times[i] = i * dt
        states[i] = x
        v_vals[i] = ev.V
        feas[i] = float(np.linalg.norm(ev.h_val))
        if tts:
            z_norms[i] = feas[i] / spec.epsilon
        if i == n_steps:
            break
        k1 = vector_field(spec, ev)
        k2 = field(x + 0.5 * dt * k1)
        k3 = field(x + 0.5 * dt * k2)
        k4 = field(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NonFinite(f"flow state became non-finite at t={times[i] + dt:g}")

    return FlowTrace(
        times=times, states=states, V_vals=v_vals, feas_norms=feas, z_norms=z_norms
    )


@dataclass(frozen=True)
class AssumptionCheckReport:
    """Sampled evidence for the convergence assumptions of the extended flow.

    * A1: the penalty gradient should vanish only on the constraint set.
      ``a1_hits`` lists sampled points with tiny ||grad_V|| but large ||h||.
    * A2: the penalty never increases along the on-manifold field. This is
      exact orthogonality, so ``a2_hits`` should always be empty; any hit
      indicates a numerical or rank problem.
    * A3: sublevel sets of V should be compact. The heuristic measures the
      diameter of the sampled sublevel set in the given box and again in a
      box twice as large; a diameter that keeps growing with the box
      (``a3_suspect``) is evidence of a non-compact sublevel set, e.g. for
      the paraboloid, whose constraint surface is unbounded.
    """

    count: int
    v_ref: float
    a1_hits: tuple
    a2_hits: tuple
    sublevel_count: int
    sublevel_diameter: float
    sublevel_diameter_scaled: float
    box_diameter: float
    a3_suspect: bool


def check_assumptions(
    problem: Problem,
    sample_box,
    count: int,
    *,
    v_ref: float = 0.5,
    grad_tol: float = 1e-8,
    feas_floor: float = 1e-4,
    seed: int = 0,
) -> AssumptionCheckReport:
    """Sample the box and look for numerical evidence against A1--A3.

    ``sample_box`` is a (lo, hi) pair, each a scalar or length-n vector.
    Points where the constraint gradients are rank deficient are skipped
    (they are outside the submersion region by definition).
    """
    lo, hi = sample_box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (problem.n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (problem.n,)).copy()
    rng = np.random.default_rng(seed)
    a1_hits = []
    a2_hits = []
    sub_points = []
    skipped = 0
    for _ in range(count):
        x = lo + (hi - lo) * rng.random(problem.n)
        try:
            ev = evaluate(problem, x)
        except Exception:
            skipped += 1
            continue
        gv = float(np.linalg.norm(ev.grad_V))
        feas = float(np.linalg.norm(ev.h_val))
        if gv <= grad_tol and feas >= feas_floor:
            a1_hits.append((x, gv, feas))
        descent_rate = float(ev.grad_V @ (-ev.grad_ftilde))
        scale = 1.0 + gv * float(np.linalg.norm(ev.grad_ftilde))
        if descent_rate > 1e-10 * scale:
            a2_hits.append((x, descent_rate))
        if ev.V <= v_ref:
            sub_points.append(x)
    diameter = _sampled_diameter(sub_points)
    diameter_scaled = _sampled_diameter(
        _sublevel_sample(problem, 2.0 * lo, 2.0 * hi, count, v_ref, rng)
    )
    grows = diameter > 0.0 and diameter_scaled >= 1.5 * diameter
    return AssumptionCheckReport(
        count=count - skipped,
        v_ref=v_ref,
        a1_hits=tuple(a1_hits),
        a2_hits=tuple(a2_hits),
        sublevel_count=len(sub_points),
        sublevel_diameter=diameter,
        sublevel_diameter_scaled=diameter_scaled,
        box_diameter=float(np.linalg.norm(hi - lo)),
        a3_suspect=grows,
    )


def _sublevel_sample(problem, lo, hi, count, v_ref, rng):
    pts = []
    for _ in range(count):
        x = lo + (hi - lo) * rng.random(problem.n)
        try:
            ev = evaluate(problem, x)
        except Exception:
            continue
        if ev.V <= v_ref:
            pts.append(x)
    return pts


def _sampled_diameter(points):
    if not points:
        return 0.0
    pts = np.array(points)
    center = pts.mean(axis=0)
    return float(2.0 * np.linalg.norm(pts - center, axis=1).max())
