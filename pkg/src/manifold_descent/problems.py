"""Built-in benchmark problems and a declarative polynomial problem format.

Two benchmarks are registered, both minimizing the shifted sum of squares
``f(x) = (x1+3)^2 + (x2+2)^2 + (x3+2)^2`` over a constraint surface:

* ``sphere``:      h(x) = x1^2 + x2^2 + x3^2 - 1
* ``paraboloid``:  h(x) = x1^2 + x2^2 - x3

Both come with full analytic derivatives including Hessians. User problems
can be given either programmatically (arbitrary callables via
:class:`~manifold_descent.core.Problem`) or declaratively as polynomials,
which is enough to express both benchmarks; the file format is JSON with
the exact schema documented in the README. Transcendental functions are
deliberately out of scope for the file format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import Problem
from .errors import SpecError, UnknownProblem

_SHIFT = np.array([3.0, 2.0, 2.0])


def _benchmark_cost():
    def f(x):
        d = x + _SHIFT
        return float(d @ d)

    def grad_f(x):
        return 2.0 * (x + _SHIFT)

    def hess_f(x):
        return 2.0 * np.eye(3)

    return f, grad_f, hess_f


def _sphere() -> Problem:
    f, grad_f, hess_f = _benchmark_cost()
    return Problem(
        n=3,
        k=1,
        f=f,
        grad_f=grad_f,
        h=lambda x: np.array([x @ x - 1.0]),
        jac_h=lambda x: (2.0 * x).reshape(3, 1),
        hess_f=hess_f,
        hess_h=(lambda x: 2.0 * np.eye(3),),
        name="sphere",
    )


def _paraboloid() -> Problem:
    f, grad_f, hess_f = _benchmark_cost()
    return Problem(
        n=3,
        k=1,
        f=f,
        grad_f=grad_f,
        h=lambda x: np.array([x[0] * x[0] + x[1] * x[1] - x[2]]),
        jac_h=lambda x: np.array([[2.0 * x[0]], [2.0 * x[1]], [-1.0]]),
        hess_f=hess_f,
        hess_h=(lambda x: np.diag([2.0, 2.0, 0.0]),),
        name="paraboloid",
    )


_BUILTINS = {"sphere": _sphere, "paraboloid": _paraboloid}


def builtin(name: str) -> Problem:
    """Return a registered benchmark problem by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise UnknownProblem(
            f"unknown problem {name!r}; available: {sorted(_BUILTINS)}"
        ) from None
    return factory()


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))


@dataclass(frozen=True)
class PolynomialSpec:
    """Declarative polynomial problem.

    ``cost_terms`` is a tuple of ``(coefficient, powers)`` pairs where
    ``powers`` is a length-n tuple of non-negative integer exponents, one
    per variable; ``constraint_terms`` holds one such tuple of terms per
    constraint.
    """

    name: str
    n: int
    k: int
    cost_terms: tuple
    constraint_terms: tuple

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise SpecError("n", f"must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise SpecError("k", f"must be a positive integer, got {self.k!r}")
        if self.k >= self.n:
            raise SpecError("k", f"need k < n, got k={self.k}, n={self.n}")
        object.__setattr__(
            self, "cost_terms", _check_terms(self.cost_terms, self.n, "cost")
        )
        if len(self.constraint_terms) != self.k:
            raise SpecError(
                "constraints",
                f"expected {self.k} constraint term lists, got "
                f"{len(self.constraint_terms)}",
            )
        object.__setattr__(
            self,
            "constraint_terms",
            tuple(
                _check_terms(terms, self.n, f"constraints[{i}]")
                for i, terms in enumerate(self.constraint_terms)
            ),
        )


def _check_terms(terms, n, where):
    checked = []
    for j, term in enumerate(terms):
        loc = f"{where}[{j}]"
        try:
            coeff, powers = term
        except (TypeError, ValueError):
            raise SpecError(loc, "term must be a (coeff, powers) pair") from None
        coeff = float(coeff)
        if not np.isfinite(coeff):
            raise SpecError(f"{loc}.coeff", "must be finite")
        powers = tuple(powers)
        if len(powers) != n:
            raise SpecError(
                f"{loc}.powers",
                f"length {len(powers)} does not match n={n}",
            )
        for p in powers:
            if not isinstance(p, int) or p < 0:
                raise SpecError(
                    f"{loc}.powers", f"exponents must be non-negative ints, got {p!r}"
                )
        checked.append((coeff, powers))
    return tuple(checked)


class _PolyFunc:
    """Polynomial with analytic gradient and Hessian via the power rule."""

    def __init__(self, terms, n):
        self.n = n
        self.coeff = np.array([c for c, _ in terms], dtype=float)
        self.powers = np.array(
            [p for _, p in terms], dtype=float
        ).reshape(len(terms), n)

    def value(self, x):
        if self.coeff.size == 0:
            return 0.0
        return float(self.coeff @ np.prod(x[None, :] ** self.powers, axis=1))

    def gradient(self, x):
        g = np.zeros(self.n)
        for j in range(self.n):
            mask = self.powers[:, j] > 0
            if not mask.any():
                continue
            c = self.coeff[mask] * self.powers[mask, j]
            p = self.powers[mask].copy()
            p[:, j] -= 1.0
            g[j] = c @ np.prod(x[None, :] ** p, axis=1)
        return g

    def hessian(self, x):
        hess = np.zeros((self.n, self.n))
        for i in range(self.n):
            for j in range(i, self.n):
                p = self.powers.copy()
                c = self.coeff * p[:, i]
                p[:, i] -= 1.0
                c = c * np.where(p[:, j] > 0, p[:, j], 0.0)
                mask = c != 0.0
                if mask.any():
                    pj = p[mask]
                    pj[:, j] -= 1.0
                    val = c[mask] @ np.prod(x[None, :] ** pj, axis=1)
                else:
                    val = 0.0
                hess[i, j] = val
                hess[j, i] = val
        return hess


def from_spec(spec: PolynomialSpec) -> Problem:
    """Build a Problem with analytically differentiated polynomial callables."""
    cost = _PolyFunc(spec.cost_terms, spec.n)
    cons = [_PolyFunc(terms, spec.n) for terms in spec.constraint_terms]

    def h(x):
        return np.array([c.value(x) for c in cons])

    def jac_h(x):
        return np.column_stack([c.gradient(x) for c in cons])

    return Problem(
        n=spec.n,
        k=spec.k,
        f=cost.value,
        grad_f=cost.gradient,
        h=h,
        jac_h=jac_h,
        hess_f=cost.hessian,
        hess_h=tuple(
            (lambda c: (lambda x: c.hessian(x)))(c) for c in cons
        ),
        name=spec.name,
    )


# --- JSON problem files ----------------------------------------------------

_TOP_KEYS = {"name", "n", "k", "cost", "constraints"}
_TERM_KEYS = {"coeff", "powers"}


def _parse_term(obj, loc):
    if not isinstance(obj, dict):
        raise SpecError(loc, "term must be an object with coeff and powers")
    unknown = set(obj) - _TERM_KEYS
    if unknown:
        raise SpecError(loc, f"unknown key {sorted(unknown)[0]!r}")
    missing = _TERM_KEYS - set(obj)
    if missing:
        raise SpecError(loc, f"missing key {sorted(missing)[0]!r}")
    if not isinstance(obj["powers"], list):
        raise SpecError(f"{loc}.powers", "must be a list of integer exponents")
    return (obj["coeff"], tuple(obj["powers"]))


def parse_spec(text: str) -> PolynomialSpec:
    """Parse a JSON problem definition; unknown keys are rejected."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("document", f"not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SpecError("document", "top level must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise SpecError("document", f"unknown key {sorted(unknown)[0]!r}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise SpecError("document", f"missing key {sorted(missing)[0]!r}")
    if not isinstance(doc["cost"], list):
        raise SpecError("cost", "must be a list of terms")
    if not isinstance(doc["constraints"], list):
        raise SpecError("constraints", "must be a list of term lists")
    cost_terms = tuple(
        _parse_term(t, f"cost[{i}]") for i, t in enumerate(doc["cost"])
    )
    constraint_terms = []
    for i, terms in enumerate(doc["constraints"]):
        if not isinstance(terms, list):
            raise SpecError(f"constraints[{i}]", "must be a list of terms")
        constraint_terms.append(
            tuple(
                _parse_term(t, f"constraints[{i}][{j}]")
                for j, t in enumerate(terms)
            )
        )
    if not isinstance(doc["name"], str):
        raise SpecError("name", "must be a string")
    if not isinstance(doc["n"], int) or isinstance(doc["n"], bool):
        raise SpecError("n", "must be an integer")
    if not isinstance(doc["k"], int) or isinstance(doc["k"], bool):
        raise SpecError("k", "must be an integer")
    return PolynomialSpec(
        name=doc["name"],
        n=doc["n"],
        k=doc["k"],
        cost_terms=cost_terms,
        constraint_terms=tuple(constraint_terms),
    )


def serialize_spec(spec: PolynomialSpec) -> str:
    """Canonical JSON rendering; parse_spec(serialize_spec(s)) round-trips."""
    doc = {
        "name": spec.name,
        "n": spec.n,
        "k": spec.k,
        "cost": [
            {"coeff": c, "powers": list(p)} for c, p in spec.cost_terms
        ],
        "constraints": [
            [{"coeff": c, "powers": list(p)} for c, p in terms]
            for terms in spec.constraint_terms
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_spec(path) -> PolynomialSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


#: PolynomialSpec mirroring the sphere benchmark; used for cross-checks.
SPHERE_SPEC = PolynomialSpec(
    name="sphere",
    n=3,
    k=1,
    cost_terms=(
        (1.0, (2, 0, 0)),
        (6.0, (1, 0, 0)),
        (1.0, (0, 2, 0)),
        (4.0, (0, 1, 0)),
        (1.0, (0, 0, 2)),
        (4.0, (0, 0, 1)),
        (17.0, (0, 0, 0)),
    ),
    constraint_terms=(
        (
            (1.0, (2, 0, 0)),
            (1.0, (0, 2, 0)),
            (1.0, (0, 0, 2)),
            (-1.0, (0, 0, 0)),
        ),
    ),
)
