import numpy as np
import pytest

from manifold_descent import (
    FlowKind,
    FlowSpec,
    builtin,
    check_assumptions,
    evaluate,
    integrate,
    vector_field,
)


class TestFlowSpecValidation:
    def test_tts_needs_epsilon(self):
        with pytest.raises(ValueError, match="epsilon"):
            FlowSpec(FlowKind.TWO_TIME_SCALE, t_end=1.0, dt=1e-3)

    def test_tts_step_bounded_by_time_constant(self):
        with pytest.raises(ValueError, match="epsilon / 5"):
            FlowSpec(FlowKind.TWO_TIME_SCALE, t_end=1.0, dt=0.01, epsilon=0.01)

    def test_dt_positive(self):
        with pytest.raises(ValueError):
            FlowSpec(FlowKind.EXTENDED, t_end=1.0, dt=0.0)

    def test_horizon_at_least_one_step(self):
        with pytest.raises(ValueError):
            FlowSpec(FlowKind.EXTENDED, t_end=1e-4, dt=1e-3)


class TestVectorField:
    def test_on_manifold_field(self, sphere):
        ev = evaluate(sphere, np.array([1.0, 0.0, 0.0]))
        spec = FlowSpec(FlowKind.ON_MANIFOLD, t_end=1.0)
        np.testing.assert_allclose(vector_field(spec, ev), [0.0, -4.0, -4.0])

    def test_extended_field(self, sphere):
        ev = evaluate(sphere, np.array([0.0, 0.0, 2.0]))
        spec = FlowSpec(FlowKind.EXTENDED, t_end=1.0)
        np.testing.assert_allclose(vector_field(spec, ev), [-6.0, -4.0, -12.0])

    def test_two_time_scale_equals_on_manifold_when_feasible(self, sphere):
        # h is exactly zero at (1,0,0), so the fast correction vanishes
        # identically and the fields agree bit for bit.
        ev = evaluate(sphere, np.array([1.0, 0.0, 0.0]))
        tts = FlowSpec(FlowKind.TWO_TIME_SCALE, t_end=1.0, dt=1e-3, epsilon=0.01)
        base = FlowSpec(FlowKind.ON_MANIFOLD, t_end=1.0)
        assert np.array_equal(vector_field(tts, ev), vector_field(base, ev))


class TestIntegrate:
    def test_on_manifold_invariance(self, sphere):
        # h is a first integral of the projected field; drift is purely
        # integrator truncation.
        trace = integrate(
            sphere,
            np.array([1.0, 0.0, 0.0]),
            FlowSpec(FlowKind.ON_MANIFOLD, t_end=2.0, dt=1e-3),
        )
        assert np.abs(trace.feas_norms).max() <= 1e-6

    def test_fourth_order_drift_reduction(self, sphere):
        x0 = np.array([1.0, 0.0, 0.0])
        d1 = np.abs(
            integrate(
                sphere, x0, FlowSpec(FlowKind.ON_MANIFOLD, t_end=2.0, dt=2e-3)
            ).feas_norms
        ).max()
        d2 = np.abs(
            integrate(
                sphere, x0, FlowSpec(FlowKind.ON_MANIFOLD, t_end=2.0, dt=1e-3)
            ).feas_norms
        ).max()
        assert 8.0 <= d1 / d2 <= 32.0

    def test_extended_flow_penalty_decreases(self, sphere):
        trace = integrate(
            sphere,
            np.array([0.0, 0.0, 2.0]),
            FlowSpec(FlowKind.EXTENDED, t_end=10.0, dt=1e-3),
        )
        v = trace.V_vals
        above = v > 1e-10
        cut = int(np.argmin(above)) if not above.all() else len(v)
        assert np.all(np.diff(v[: cut + 1]) < 0.0)
        assert v[-1] <= 1e-10

    def test_on_manifold_cost_non_increasing(self, sphere):
        trace = integrate(
            sphere,
            np.array([1.0, 0.0, 0.0]),
            FlowSpec(FlowKind.ON_MANIFOLD, t_end=5.0, dt=1e-3),
        )
        f_vals = np.array([sphere.f(x) for x in trace.states])
        assert np.all(np.diff(f_vals) <= 1e-12)

    def test_two_time_scale_fast_decay(self, sphere):
        eps = 0.01
        trace = integrate(
            sphere,
            np.array([0.0, 0.0, 2.0]),
            FlowSpec(FlowKind.TWO_TIME_SCALE, t_end=0.35, dt=eps / 500, epsilon=eps),
        )
        envelope = trace.z_norms[0] * np.exp(-trace.times / eps)
        window = envelope >= 1e-10
        assert np.all(trace.z_norms[window] <= 1.05 * envelope[window])
        mask = trace.z_norms > 1e-10
        slope = np.polyfit(trace.times[mask], np.log(trace.z_norms[mask]), 1)[0]
        assert abs(slope * eps + 1.0) <= 0.02

    def test_trace_lengths_agree(self, sphere):
        trace = integrate(
            sphere,
            np.array([0.0, 0.0, 2.0]),
            FlowSpec(FlowKind.TWO_TIME_SCALE, t_end=0.1, dt=2e-3, epsilon=0.01),
        )
        n = len(trace.times)
        assert trace.states.shape == (n, 3)
        assert len(trace.V_vals) == n == len(trace.feas_norms) == len(trace.z_norms)


class TestCheckAssumptions:
    def test_sphere_clean(self, sphere):
        report = check_assumptions(sphere, (-3.0, 3.0), 1000, seed=0)
        assert report.a1_hits == ()
        assert report.a2_hits == ()
        assert not report.a3_suspect

    def test_paraboloid_flags_unbounded_sublevel(self, paraboloid):
        # The surface is unbounded, so near-feasible samples reach the box
        # boundary and the compact-sublevel heuristic trips.
        report = check_assumptions(paraboloid, (-3.0, 3.0), 2000, seed=1)
        assert report.a2_hits == ()
        assert report.a3_suspect

    def test_on_manifold_samples_have_zero_penalty_gradient(self, sphere):
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = rng.standard_normal(3)
            x /= np.linalg.norm(x)
            ev = evaluate(sphere, x)
            assert np.linalg.norm(ev.grad_V) <= 1e-14
