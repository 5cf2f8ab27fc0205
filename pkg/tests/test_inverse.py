import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdscat import inverse
from tdscat import timedomain as td
from tdscat.geometry import SplineStarShape
from tdscat.incident import IncidentWaveSpec, Pulse, example1_wave

ANGLES = np.arange(4) * np.pi / 2
RECEIVERS = 4.0 * np.stack([np.cos(ANGLES), np.sin(ANGLES)], 1)


def small_context(wave=None, N=64, n_s=64):
    wave = example1_wave() if wave is None else wave
    return inverse.InversionContext(RECEIVERS, wave, td.make_grid(2, 10.0, N), n_s)


def true_shape():
    q = 2 * np.pi * np.arange(8) / 8
    return SplineStarShape(1.0 + 0.15 * np.cos(2 * q), np.array([0.1, -0.05]))


class LinearContext:
    """Stand-in forward model ``F(p) = A (p - p0)`` on a tiny time grid."""

    def __init__(self, A, p0, M=2, N=5, tau=0.1, n_s=64):
        self.A, self.p0, self.M, self.N, self.tau, self.n_s = A, p0, M, N, tau, n_s

    def forward(self, shape):
        return td.TimeSignals(self.tau, (self.A @ (shape.params() - self.p0)).reshape(self.M, self.N))

    def jacobian(self, shape):
        cols = self.A.T.reshape(-1, self.M, self.N)
        return td.JacobianResult(self.forward(shape), cols.copy())


def linear_problem(seed=0, Q=8):
    rng = np.random.default_rng(seed)
    J = Q + 2
    A = rng.standard_normal((10, J))
    p0 = np.concatenate([np.ones(Q), [0.0, 0.0]])
    ctx = LinearContext(A, p0)
    target = SplineStarShape(1.0 + 0.1 * rng.standard_normal(Q), np.array([0.05, 0.02]))
    return ctx, target, ctx.forward(target)


# ------------------------------------------------------------------ noise


def test_add_noise_identity_and_level():
    data = td.TimeSignals(0.01, np.random.default_rng(3).standard_normal((3, 50)))
    assert np.array_equal(inverse.add_noise(data, 0.0).values, data.values)
    for delta in (0.01, 0.3, 1.0):
        noisy = inverse.add_noise(data, delta, seed=7)
        assert abs((noisy - data).norm() / data.norm() - delta) <= 1e-14
    a, b = inverse.add_noise(data, 0.3, seed=1), inverse.add_noise(data, 0.3, seed=1)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, inverse.add_noise(data, 0.3, seed=2).values)
    with pytest.raises(ValueError):
        inverse.add_noise(data, -0.1)


@given(st.floats(1e-3, 2.0), st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_noise_level_identity_property(delta, seed):
    data = td.TimeSignals(0.05, np.sin(np.arange(60.0)).reshape(2, 30))
    noisy = inverse.add_noise(data, delta, seed=seed)
    assert abs((noisy - data).norm() / data.norm() - delta) <= 1e-14 * max(1.0, delta)


# ------------------------------------------------------------------ residuals and penalties


def test_relative_residual_definitions():
    ctx = small_context()
    shape = true_shape()
    data = ctx.forward(shape)
    assert inverse.relative_residual(shape, data, ctx) <= 1e-20
    zero = td.TimeSignals(data.tau, np.zeros_like(data.values))
    assert inverse.relative_residual(shape, data, ctx, predicted=zero) == pytest.approx(1.0, rel=1e-15)
    other = data.scaled(0.7)
    f1 = inverse.relative_residual(shape, data, ctx, predicted=other)
    f2 = inverse.relative_residual(shape, data.scaled(3.0), ctx, predicted=other.scaled(3.0))
    assert f1 == pytest.approx(f2, rel=1e-13)
    with pytest.raises(ValueError):
        inverse.relative_residual(shape, zero, ctx, predicted=data)


def test_penalized_objective():
    ctx = small_context()
    circle = SplineStarShape.circle(2.0, Q=40)
    data = ctx.forward(circle)
    f0 = inverse.penalized_objective(circle, data, inverse.GNConfig(alpha1=0.0, alpha2=0.0), ctx, predicted=data)
    assert f0 == 0.0
    val = inverse.penalized_objective(circle, data, inverse.GNConfig(alpha1=0.02, alpha2=0.0), ctx, predicted=data)
    assert val == pytest.approx(0.0004 * np.pi, rel=1e-3)
    shape = true_shape()
    pred = ctx.forward(shape).scaled(0.9)
    vals = [inverse.penalized_objective(shape, data, inverse.GNConfig(alpha1=a), ctx, predicted=pred) for a in (0.0, 0.01, 0.02)]
    assert vals[0] < vals[1] < vals[2]


def test_gn_config_validation():
    for kw in ({"alpha1": -1.0}, {"tol": 0.0}, {"max_iter": 0}, {"damping": -1.0}):
        with pytest.raises(ValueError):
            inverse.GNConfig(**kw)


def test_penalty_jacobian_matches_central_differences():
    x = true_shape().params()
    cfg = inverse.GNConfig()
    base, J = inverse._penalty_jacobian(x, cfg, 128)
    for k in (0, 3, 8, 9):
        e = np.zeros_like(x)
        e[k] = 1e-5
        fd = (inverse._penalty_residuals(x + e, cfg, 128) - inverse._penalty_residuals(x - e, cfg, 128)) / 2e-5
        assert np.abs(fd - J[:, k]).max() <= 1e-4 * max(1.0, np.abs(fd).max())
    assert base @ base == pytest.approx(sum(a**2 * p for a, p in zip((cfg.alpha1, cfg.alpha2), inverse.penalties(true_shape(), 128))), rel=1e-12)


# ------------------------------------------------------------------ Gauss-Newton on a linear model


def test_linear_model_converges_to_target():
    ctx, target, data = linear_problem()
    init = SplineStarShape.circle(1.0, Q=8)
    trace = inverse.gauss_newton(init, data, inverse.GNConfig(alpha1=0.0, alpha2=0.0, tol=1e-10), ctx)
    assert trace.reason == "tolerance"
    assert np.abs(trace.final.params - target.params()).max() < 1e-8
    fr = [r.f_reg for r in trace.records]
    assert np.all(np.diff(fr) <= 0)


def test_max_iter_one_records_one_iteration():
    ctx, target, data = linear_problem()
    init = SplineStarShape.circle(1.0, Q=8)
    trace = inverse.gauss_newton(init, data, inverse.GNConfig(max_iter=1, tol=1e-14), ctx)
    assert trace.iterations == 1 and trace.reason == "max_iterations"


def test_radius_floor_projection():
    rng = np.random.default_rng(5)
    Q = 8
    A = rng.standard_normal((10, Q + 2))
    p0 = np.concatenate([np.ones(Q), [0.0, 0.0]])
    ctx = LinearContext(A, p0)
    # data of a parameter vector with a negative radius: unreachable in the admissible set
    x_bad = p0.copy()
    x_bad[2] = -0.5
    data = td.TimeSignals(ctx.tau, (A @ (x_bad - p0)).reshape(2, 5))
    trace = inverse.gauss_newton(SplineStarShape.circle(1.0, Q=Q), data, inverse.GNConfig(alpha1=0.0, alpha2=0.0, max_iter=5), ctx)
    assert any(r.projected for r in trace.records)
    assert np.all(trace.final.params[:Q] >= 1e-2)


def test_step_invariance_under_joint_scaling():
    ctx, target, data = linear_problem(seed=2)
    big = LinearContext(4.0 * ctx.A, ctx.p0)
    init = SplineStarShape.circle(1.0, Q=8)
    cfg = inverse.GNConfig(max_iter=4)
    a = inverse.gauss_newton(init, data, cfg, ctx)
    b = inverse.gauss_newton(init, data.scaled(4.0), cfg, big)
    assert len(a.records) == len(b.records)
    for ra, rb in zip(a.records, b.records):
        assert np.allclose(ra.params, rb.params, rtol=0, atol=1e-12)


# ------------------------------------------------------------------ Gauss-Newton on the scattering model


def test_true_shape_is_a_local_minimum_of_f():
    ctx = small_context()
    shape = true_shape()
    data = ctx.forward(shape)
    f0 = inverse.relative_residual(shape, data, ctx)
    x = shape.params()
    for k in range(x.size):
        for sgn in (1, -1):
            xp = x.copy()
            xp[k] += sgn * 1e-3
            assert inverse.relative_residual(SplineStarShape.from_params(xp), data, ctx) > f0


def test_gauss_newton_from_true_shape_stops_immediately():
    ctx = small_context()
    shape = true_shape()
    data = ctx.forward(shape)
    trace = inverse.gauss_newton(shape, data, inverse.GNConfig(alpha1=0.0, alpha2=0.0), ctx)
    assert trace.reason == "tolerance" and trace.iterations == 0
    assert trace.final.f <= 1e-20


def test_gauss_newton_recovers_perturbed_shape_and_is_deterministic():
    ctx = small_context()
    shape = true_shape()
    data = ctx.forward(shape)
    init = SplineStarShape(shape.radii * 0.9, shape.center + 0.05)
    cfg = inverse.GNConfig(alpha1=0.0, alpha2=0.0, tol=1e-4, max_iter=30)
    trace = inverse.gauss_newton(init, data, cfg, ctx)
    assert trace.reason == "tolerance"
    assert trace.final.f < 1e-8 * trace.initial_f
    assert np.abs(trace.final.params - shape.params()).max() < 1e-3
    assert np.all(np.diff([r.f_reg for r in trace.records]) < 0)
    again = inverse.gauss_newton(init, data, cfg, ctx)
    assert all(np.array_equal(a.params, b.params) for a, b in zip(trace.records, again.records))


def test_incident_amplitude_scaling_leaves_iterates_unchanged():
    shape = true_shape()
    wave = IncidentWaveSpec("bump-plane", direction=(1 / np.sqrt(2), 1 / np.sqrt(2)), pulses=(Pulse(3.0, 4.0),))
    loud = IncidentWaveSpec("bump-plane", direction=wave.direction, pulses=(Pulse(3.0, 4.0, 5.0),))
    cfg = inverse.GNConfig(max_iter=2)
    init = SplineStarShape(shape.radii * 0.95, shape.center)
    runs = []
    for w in (wave, loud):
        ctx = small_context(w, N=48, n_s=48)
        runs.append(inverse.gauss_newton(init, ctx.forward(shape), cfg, ctx))
    for a, b in zip(*(r.records for r in runs)):
        assert np.allclose(a.params, b.params, rtol=0, atol=1e-10)
