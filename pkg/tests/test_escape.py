import numpy as np
import pytest

from manifold_descent import (
    Classification,
    Problem,
    SolverConfig,
    Termination,
    classify,
    lagrangian_hessian,
    solve,
    solve_with_escape,
)

SQRT17 = np.sqrt(17.0)
SPHERE_MAX = np.array([3.0, 2.0, 2.0]) / SQRT17
SPHERE_MIN = -SPHERE_MAX


class TestLagrangianHessian:
    def test_at_sphere_maximum(self, sphere):
        # -grad_f = jac_h * Lambda at the maximum gives Lambda = -(1+sqrt17);
        # both Hessians are 2I, so the result is 2(1+Lambda) I = -2 sqrt17 I.
        lam_eq = -(1.0 + SQRT17)
        hess = lagrangian_hessian(sphere, SPHERE_MAX, [lam_eq])
        np.testing.assert_allclose(hess, -2.0 * SQRT17 * np.eye(3), rtol=1e-12)

    def test_at_sphere_minimum(self, sphere):
        lam_eq = SQRT17 - 1.0
        hess = lagrangian_hessian(sphere, SPHERE_MIN, [lam_eq])
        np.testing.assert_allclose(hess, 2.0 * SQRT17 * np.eye(3), rtol=1e-12)

    def test_zero_multiplier_gives_cost_hessian(self, sphere):
        hess = lagrangian_hessian(sphere, np.array([0.3, 0.1, -0.2]), [0.0])
        np.testing.assert_allclose(hess, 2.0 * np.eye(3))

    def test_finite_difference_fallback(self):
        # Same sphere geometry but without analytic Hessians.
        prob = Problem(
            n=3, k=1,
            f=lambda x: float((x[0] + 3) ** 2 + (x[1] + 2) ** 2 + (x[2] + 2) ** 2),
            grad_f=lambda x: 2.0 * (x + np.array([3.0, 2.0, 2.0])),
            h=lambda x: np.array([x @ x - 1.0]),
            jac_h=lambda x: (2.0 * x).reshape(3, 1),
        )
        hess = lagrangian_hessian(prob, SPHERE_MAX, [-(1.0 + SQRT17)])
        np.testing.assert_allclose(
            hess, -2.0 * SQRT17 * np.eye(3), rtol=1e-5, atol=1e-5
        )


class TestClassify:
    def test_sphere_maximum_is_escapable(self, sphere):
        report = classify(sphere, SPHERE_MAX)
        assert report.classification is Classification.ESCAPABLE_STATIONARY
        # -P (-2 sqrt17 I) P = 2 sqrt17 P has eigenvalues {2 sqrt17, 2 sqrt17, 0}
        assert report.max_eig == pytest.approx(2.0 * SQRT17, rel=1e-6)
        assert report.escape_dir is not None
        assert np.linalg.norm(report.escape_dir) == pytest.approx(1.0)
        # escape direction lies in the tangent space Ker(jac_h^T)
        jac = sphere.jac_h(SPHERE_MAX)
        assert np.linalg.norm(jac.T @ report.escape_dir) <= 1e-8
        assert not report.curvature_fd

    def test_sphere_minimum_is_local_min_candidate(self, sphere):
        report = classify(sphere, SPHERE_MIN)
        assert report.classification is Classification.LOCAL_MIN_CANDIDATE
        assert report.escape_dir is None
        # tangent eigenvalues are -2 sqrt17; the projector null space gives 0
        assert abs(report.max_eig) <= report.eig_tol

    def test_positive_definite_hessian_is_candidate(self, paraboloid):
        # The paraboloid optimum has a positive definite Lagrangian Hessian.
        from scipy.optimize import brentq

        u = brentq(lambda s: s**3 - 5.0 * s**2 - 26.0, 5.0, 6.0, xtol=1e-14)
        x_star = np.array([-3.0 / u, -2.0 / u, 13.0 / u**2])
        report = classify(paraboloid, x_star)
        assert report.classification is Classification.LOCAL_MIN_CANDIDATE

    def test_eigendecomposition_reconstructs(self, sphere):
        report = classify(sphere, SPHERE_MAX)
        eigvals, eigvecs = np.linalg.eigh(report.projected_neg_hess)
        rebuilt = eigvecs @ np.diag(eigvals) @ eigvecs.T
        scale = np.linalg.norm(report.projected_neg_hess)
        assert np.linalg.norm(rebuilt - report.projected_neg_hess) <= 1e-10 * scale


class TestSolveWithEscape:
    def test_escapes_the_sphere_maximum(self, sphere, config):
        # The maximum is a fixed point of the iteration (both gradient
        # components vanish), so the plain solve stops there; the restart
        # must reach the global minimum.
        plain = solve(sphere, SPHERE_MAX, config)
        assert plain.termination is Termination.CONVERGED
        assert np.linalg.norm(plain.x_star - SPHERE_MAX) <= 1e-10

        report = solve_with_escape(sphere, SPHERE_MAX, config)
        assert report.termination is Termination.CONVERGED
        assert report.restarts == 1
        assert np.linalg.norm(report.x_star - SPHERE_MIN) <= 1e-6

    def test_restart_makes_strict_cost_progress(self, sphere, config):
        report = solve_with_escape(sphere, SPHERE_MAX, config)
        f_max = sphere.f(SPHERE_MAX)
        # leg 0 is the single converged record at the maximum; the record
        # after the restart point is the first accepted iterate
        assert report.trajectory[0].step == 0.0
        first_iterate = report.trajectory[2]
        assert first_iterate.f_val < f_max

    def test_generic_starts_need_no_restart(self, sphere, config):
        rng = np.random.default_rng(99)
        for _ in range(100):
            x0 = rng.standard_normal(3)
            x0 /= np.linalg.norm(x0)
            report = solve_with_escape(sphere, x0, config)
            assert report.termination is Termination.CONVERGED
            assert report.restarts == 0
            assert np.linalg.norm(report.x_star - SPHERE_MIN) <= 1e-6

    def test_unique_kkt_point_behaves_like_solve(self, paraboloid, config):
        x0 = np.array([1.0, 1.0, 2.0])
        plain = solve(paraboloid, x0, config)
        escaped = solve_with_escape(paraboloid, x0, config)
        assert escaped.restarts == 0
        np.testing.assert_allclose(escaped.x_star, plain.x_star)
        assert escaped.iterations == plain.iterations

    def test_trajectory_indices_continue_across_legs(self, sphere, config):
        report = solve_with_escape(sphere, SPHERE_MAX, config)
        ks = [rec.k for rec in report.trajectory]
        assert ks == sorted(ks)
        assert len(set(ks)) == len(ks)
