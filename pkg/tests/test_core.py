import numpy as np
import pytest

from manifold_descent import (
    NonFinite,
    Problem,
    RankDeficient,
    SolverConfig,
    evaluate,
    fd_gradient,
    fd_hessian,
    fd_jacobian,
)


class TestProblemValidation:
    def test_k_must_be_less_than_n(self):
        with pytest.raises(ValueError, match="k < n"):
            Problem(
                n=2, k=2,
                f=lambda x: 0.0, grad_f=lambda x: np.zeros(2),
                h=lambda x: x.copy(), jac_h=lambda x: np.eye(2),
            )

    def test_dimensions_positive(self):
        with pytest.raises(ValueError):
            Problem(
                n=0, k=1,
                f=lambda x: 0.0, grad_f=lambda x: x,
                h=lambda x: x, jac_h=lambda x: x,
            )

    def test_hessian_count_checked(self):
        with pytest.raises(ValueError, match="one Hessian per constraint"):
            Problem(
                n=3, k=1,
                f=lambda x: 0.0, grad_f=lambda x: np.zeros(3),
                h=lambda x: np.array([x[0]]),
                jac_h=lambda x: np.array([[1.0], [0.0], [0.0]]),
                hess_h=(lambda x: np.zeros((3, 3)), lambda x: np.zeros((3, 3))),
            )


class TestSolverConfigValidation:
    def test_defaults_valid(self):
        cfg = SolverConfig(lipschitz_f=2.0)
        assert cfg.beta == 0.5 and cfg.s == 1.0 and cfg.sigma == 1e-4
        assert cfg.tol_grad == 1e-8 and cfg.tol_feas == 1e-8
        assert cfg.max_iters == 50_000 and cfg.max_backtracks == 60

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"beta": 0.0}, {"beta": 1.0}, {"s": 0.0}, {"s": 1.5},
            {"sigma": -1.0}, {"lipschitz_f": 0.0}, {"tol_grad": 0.0},
            {"max_iters": 0}, {"escape_eps": -1.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        base = {"lipschitz_f": 2.0}
        base.update(kwargs)
        with pytest.raises(ValueError):
            SolverConfig(**base)


class TestEvaluate:
    def test_sphere_on_manifold_point(self, sphere):
        # h(1,0,0) = 1 - 1 = 0 by hand; constraint gradient 2x.
        ev = evaluate(sphere, np.array([1.0, 0.0, 0.0]))
        assert ev.h_val == pytest.approx([0.0])
        np.testing.assert_allclose(ev.jac_h[:, 0], [2.0, 0.0, 0.0])
        assert ev.V == 0.0
        np.testing.assert_allclose(ev.grad_V, np.zeros(3))

    def test_sphere_off_manifold_point(self, sphere):
        # h(0,0,2) = 4 - 1 = 3, V = 4.5, grad_V = (2x) * h = (0,0,12).
        ev = evaluate(sphere, np.array([0.0, 0.0, 2.0]))
        assert ev.h_val == pytest.approx([3.0])
        assert ev.V == pytest.approx(4.5)
        np.testing.assert_allclose(ev.grad_V, [0.0, 0.0, 12.0])

    def test_on_manifold_penalty_vanishes(self, paraboloid):
        # Points of the surface have V = 0 and grad_V = 0 by definition.
        for x in ([1.0, 1.0, 2.0], [0.5, -0.5, 0.5], [2.0, 0.0, 4.0]):
            ev = evaluate(paraboloid, np.array(x))
            assert ev.V == 0.0
            np.testing.assert_allclose(ev.grad_V, np.zeros(3))

    def test_deterministic(self, sphere):
        x = np.array([0.3, -1.2, 0.7])
        e1 = evaluate(sphere, x)
        e2 = evaluate(sphere, x)
        for name in ("h_val", "jac_h", "grad_f", "grad_V", "projector",
                     "grad_ftilde", "lam"):
            assert np.array_equal(getattr(e1, name), getattr(e2, name))
        assert e1.V == e2.V and e1.gram_cond == e2.gram_cond

    def test_rank_deficient_at_sphere_origin(self, sphere):
        with pytest.raises(RankDeficient):
            evaluate(sphere, np.zeros(3))

    def test_non_finite_point_rejected(self, sphere):
        with pytest.raises(NonFinite):
            evaluate(sphere, np.array([np.nan, 0.0, 0.0]))

    def test_non_finite_callable_rejected(self):
        prob = Problem(
            n=2, k=1,
            f=lambda x: float("nan"),
            grad_f=lambda x: np.array([np.inf, 0.0]),
            h=lambda x: np.array([x[0]]),
            jac_h=lambda x: np.array([[1.0], [0.0]]),
        )
        with pytest.raises(NonFinite):
            evaluate(prob, np.zeros(2))

    def test_dimension_mismatch(self, sphere):
        with pytest.raises(ValueError):
            evaluate(sphere, np.zeros(2))


class TestFiniteDifferenceOracles:
    def test_gradient_of_benchmark_cost(self, sphere):
        # Analytic gradient 2(x + (3,2,2)) gives (6,4,4) at the origin.
        g = fd_gradient(sphere.f, np.zeros(3), 1e-6)
        exact = np.array([6.0, 4.0, 4.0])
        assert np.linalg.norm(g - exact) <= 1e-8 * np.linalg.norm(exact)

    def test_gradient_of_constant_map(self):
        g = fd_gradient(lambda x: 7.5, np.array([0.3, -0.4]), 1e-6)
        np.testing.assert_allclose(g, np.zeros(2))

    def test_gradient_of_linear_map_exact(self):
        # no truncation error for affine maps; only division roundoff
        # (~eps/fd_step) remains
        a = np.array([2.0, -3.0, 0.5])
        g = fd_gradient(lambda x: float(a @ x), np.array([0.1, 0.2, 0.3]))
        np.testing.assert_allclose(g, a, rtol=1e-9, atol=1e-9)

    def test_jacobian_of_sphere_constraint(self, sphere):
        jac = fd_jacobian(sphere.h, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(jac, [[2.0], [0.0], [0.0]], atol=1e-9)

    def test_jacobian_of_paraboloid_constraint(self, paraboloid):
        jac = fd_jacobian(paraboloid.h, np.zeros(3))
        np.testing.assert_allclose(jac, [[0.0], [0.0], [-1.0]], atol=1e-9)

    def test_jacobian_of_affine_map_layout(self):
        # h(x) = A x - b must come back as A^T (columns are gradients).
        rng = np.random.default_rng(7)
        A = rng.standard_normal((2, 4))
        b = rng.standard_normal(2)
        jac = fd_jacobian(lambda x: A @ x - b, rng.standard_normal(4))
        np.testing.assert_allclose(jac, A.T, rtol=1e-9, atol=1e-9)

    def test_hessian_of_benchmark_cost(self, sphere):
        hess = fd_hessian(sphere.f, np.array([0.2, -0.1, 0.4]))
        np.testing.assert_allclose(hess, 2.0 * np.eye(3), atol=1e-6)

    def test_hessian_of_sphere_constraint(self, sphere):
        hess = fd_hessian(lambda x: float(sphere.h(x)[0]), np.zeros(3))
        np.testing.assert_allclose(hess, 2.0 * np.eye(3), atol=1e-6)

    def test_hessian_of_linear_map(self):
        a = np.array([1.0, 2.0])
        hess = fd_hessian(lambda x: float(a @ x), np.zeros(2))
        np.testing.assert_allclose(hess, np.zeros((2, 2)), atol=1e-10)

    def test_fd_step_must_be_positive(self):
        with pytest.raises(ValueError):
            fd_gradient(lambda x: 0.0, np.zeros(1), 0.0)

    def test_non_finite_propagates(self):
        with pytest.raises(NonFinite):
            fd_gradient(lambda x: float("nan"), np.zeros(2))


class TestDerivativeAgreement:
    """Analytic derivatives of the built-ins against the oracles."""

    @pytest.mark.parametrize("name", ["sphere", "paraboloid"])
    def test_gradients_and_jacobians(self, name, request):
        prob = request.getfixturevalue(name)
        rng = np.random.default_rng(42)
        for _ in range(100):
            x = rng.uniform(-2.0, 2.0, size=prob.n)
            g = prob.grad_f(x)
            g_fd = fd_gradient(prob.f, x)
            assert np.linalg.norm(g - g_fd) <= 1e-5 * (1.0 + np.linalg.norm(g))
            jac = prob.jac_h(x)
            jac_fd = fd_jacobian(prob.h, x)
            assert np.linalg.norm(jac - jac_fd) <= 1e-5 * (
                1.0 + np.linalg.norm(jac)
            )
