import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from tdscat import rkcq
from tdscat.geometry import circle_curve, kite_curve
from tdscat.incident import (
    IncidentWaveSpec,
    Pulse,
    boundary_trace,
    bump_profile,
    causality_check,
    example1_wave,
    example3_wave,
)


def test_bump_profile_values():
    assert bump_profile(0.0) == pytest.approx(np.exp(-1.0), rel=1e-15)
    assert bump_profile(0.5) == pytest.approx(np.exp(-1 / 0.75), rel=1e-15)
    assert np.all(bump_profile(np.array([-1.0, 1.0, 1.5, -3.0])) == 0.0)
    # no subnormal values near the support edge
    t = 1 - np.logspace(-1, -6, 50)
    vals = bump_profile(t)
    assert np.all((vals == 0) | (vals >= np.finfo(float).tiny))


@given(st.floats(-2, 2, allow_nan=False))
def test_bump_profile_even_and_bounded(t):
    assert bump_profile(t) == bump_profile(-t)
    assert 0.0 <= bump_profile(t) <= np.exp(-1.0)


def test_example1_wave_formula():
    wave = example1_wave()
    x = np.array([[0.3, -0.7], [1.0, 2.0]])
    t = 4.2
    d = np.array([1.0, 1.0]) / np.sqrt(2)
    phase = x @ d - t
    expected = bump_profile(3 * (phase + 4)) - bump_profile(phase + 6)
    assert np.allclose(wave.evaluate(x, t), expected, atol=0, rtol=1e-15)


def test_plane_wave_travels_along_direction():
    wave = example1_wave()
    d = np.array([1.0, 1.0]) / np.sqrt(2)
    x = np.array([0.2, 0.1])
    for shift in (0.5, 1.7):
        assert wave.evaluate(x + shift * d, 5.0 + shift) == pytest.approx(wave.evaluate(x, 5.0), abs=1e-15)


def test_plane_wave_solves_wave_equation():
    wave = IncidentWaveSpec("bump-plane", direction=(0.6, 0.8), pulses=(Pulse(1.0, 3.0),))
    x, t, h = np.array([0.1, -0.2]), 3.3, 1e-3
    u = lambda y, s: wave.evaluate(y, s)  # noqa: E731
    utt = (u(x, t + h) - 2 * u(x, t) + u(x, t - h)) / h**2
    lap = sum(u(x + h * e, t) + u(x - h * e, t) - 2 * u(x, t) for e in np.eye(2)) / h**2
    assert abs(utt - lap) < 1e-5


def test_invalid_specs():
    with pytest.raises(ValueError):
        IncidentWaveSpec("spherical")
    with pytest.raises(ValueError):
        IncidentWaveSpec("bump-plane", direction=(1.0, 1.0))
    with pytest.raises(ValueError):
        IncidentWaveSpec("point-sources", sources=((0, 0),), profile_scale=-1)


def _source_reference(r, t, a=2.0, t0=1.0):
    if t <= r:
        return 0.0
    f = lambda th: bump_profile(a * (t - r * np.cosh(th) - t0))  # noqa: E731
    return quad(f, 0, np.arccosh(t / r), epsabs=1e-13, epsrel=1e-13, limit=400)[0]


@pytest.mark.parametrize("r,t", [(1.0, 2.2), (2.5, 3.9), (0.5, 1.3), (3.0, 2.0)])
def test_point_source_against_quadrature(r, t):
    wave = example3_wave([(0.0, 0.0)])
    assert wave.evaluate(np.array([r, 0.0]), t) == pytest.approx(_source_reference(r, t), abs=1e-10)


def test_point_source_is_causal_and_superposes():
    a = example3_wave([(0.0, 0.0)])
    b = example3_wave([(3.0, 0.0)])
    both = example3_wave([(0.0, 0.0), (3.0, 0.0)])
    x = np.array([[1.0, 1.0], [2.0, -1.0]])
    for t in (0.5, 2.5, 4.0):
        assert np.allclose(both.evaluate(x, t), a.evaluate(x, t) + b.evaluate(x, t), atol=1e-14)
    # nothing arrives before t = r
    assert np.all(a.evaluate(np.array([[4.0, 0.0]]), np.array([3.9])) == 0.0)
    with pytest.raises(ValueError):
        a.evaluate(np.array([0.0, 0.0]), 1.0)


def test_point_source_solves_wave_equation_away_from_source():
    wave = example3_wave([(0.0, 0.0)])
    x, t = np.array([1.5, 0.5]), 3.0
    u = lambda y, s: float(wave.evaluate(y, s))  # noqa: E731

    def residual(h):
        utt = (u(x, t + h) - 2 * u(x, t) + u(x, t - h)) / h**2
        lap = sum(u(x + h * e, t) + u(x - h * e, t) - 2 * u(x, t) for e in np.eye(2)) / h**2
        return utt - lap, abs(utt)

    (r1, scale), (r2, _) = residual(8e-3), residual(4e-3)
    # the residual is pure O(h^2) truncation, so it extrapolates to zero
    assert abs(4 * r2 - r1) / 3 < 1e-3 * scale
    assert 3.5 < r1 / r2 < 4.5


def test_boundary_trace_shape_and_values():
    grid = rkcq.build_grid(rkcq.radau_tableau(2), 0.1, 30)
    wave = example1_wave()
    curve = kite_curve()
    g = boundary_trace(wave, curve, grid, 40)
    assert g.shape == (30, 2, 40)
    smp = curve.sample(40)
    assert np.allclose(g[7, 0], wave.evaluate(smp.points, grid.stage_times()[7, 0]))
    zero = boundary_trace(IncidentWaveSpec("bump-plane"), smp, grid)
    assert zero.shape == (30, 2, 40) and not zero.any()


def test_causality_check():
    assert causality_check(example1_wave(), kite_curve()).passed
    late = IncidentWaveSpec("bump-plane", direction=(1.0, 0.0), pulses=(Pulse(1.0, 0.5),))
    rep = causality_check(late, circle_curve(1.0))
    assert not rep.passed and rep.max_value > 1e-3
    assert rep.point is not None and -1.0 <= rep.time <= 0.0
    assert causality_check(example3_wave([(-3.0, -3.0)]), kite_curve()).passed
