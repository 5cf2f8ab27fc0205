"""Incident waves: traveling bump pulses and causal point-source emissions."""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .geometry import CurveSamples

# exp(x) is subnormal below this; such values are flushed to zero
_LOG_TINY = np.log(np.finfo(float).tiny)


def bump_profile(t):
    """``exp(-1/(1 - t^2))`` on ``|t| < 1`` and zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    expo = -1.0 / (1.0 - t[inside] ** 2)
    vals = np.exp(np.maximum(expo, _LOG_TINY))
    vals[expo < _LOG_TINY] = 0.0
    out[inside] = vals
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Pulse:
    """One term ``sign * f(scale * (x.d - t + delay))``."""

    scale: float
    delay: float
    sign: float = 1.0


@dataclass(frozen=True)
class IncidentWaveSpec:
    """Incident field description.

    ``kind`` is ``"bump-plane"`` (plane pulses along ``direction``) or
    ``"point-sources"`` (emissions from ``sources`` with source profile
    ``f(t) = bump(profile_scale * (t - profile_center))``).
    """

    kind: str
    direction: tuple = (1.0, 0.0)
    pulses: tuple = ()
    sources: tuple = ()
    profile_scale: float = 2.0
    profile_center: float = 1.0
    quad_tol: float = 1e-10
    _dir: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("bump-plane", "point-sources"):
            raise ValueError(f"unknown incident wave kind {self.kind!r}")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (2,) or abs(np.hypot(*d) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector in the plane")
        object.__setattr__(self, "_dir", d)
        object.__setattr__(self, "pulses", tuple(p if isinstance(p, Pulse) else Pulse(*p) for p in self.pulses))
        object.__setattr__(self, "sources", tuple(tuple(map(float, z)) for z in self.sources))
        if self.kind == "point-sources" and self.profile_scale <= 0:
            raise ValueError("profile scale must be positive")

    @property
    def is_zero(self):
        if self.kind == "bump-plane":
            return len(self.pulses) == 0
        return len(self.sources) == 0

    def evaluate(self, x, t):
        if self.kind == "bump-plane":
            return eval_bump_plane(self, x, t)
        return eval_point_sources(self, x, t)


def example1_wave() -> IncidentWaveSpec:
    """``f(3(x.d - t + 4)) - f(x.d - t + 6)`` with ``d = (1, 1)/sqrt(2)``."""
    d = (1 / np.sqrt(2.0), 1 / np.sqrt(2.0))
    return IncidentWaveSpec("bump-plane", direction=d, pulses=(Pulse(3.0, 4.0, 1.0), Pulse(1.0, 6.0, -1.0)))


def example3_wave(sources) -> IncidentWaveSpec:
    """Point sources with profile ``exp(-1/(1 - 4(t-1)^2))``."""
    return IncidentWaveSpec("point-sources", sources=tuple(sources), profile_scale=2.0, profile_center=1.0)


def eval_bump_plane(spec: IncidentWaveSpec, x, t):
    """Plane-pulse field at points ``x`` (shape ``(..., 2)``) and times ``t`` (broadcast)."""
    x = np.asarray(x, dtype=float)
    phase = x @ spec._dir - np.asarray(t, dtype=float)
    out = np.zeros(np.shape(phase))
    for p in spec.pulses:
        out = out + p.sign * bump_profile(p.scale * (phase + p.delay))
    return out


def _source_term(spec, r, t):
    # int_0^{acosh(t/r)} f(t - r cosh th) dth, with the range clipped to supp f
    a, t0 = spec.profile_scale, spec.profile_center
    r = np.asarray(r, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    lo_arg = np.maximum((t - t0 - 1.0 / a) / r, 1.0)
    hi_arg = np.minimum(t / r, (t - t0 + 1.0 / a) / r)
    active = hi_arg > lo_arg
    out = np.zeros(r.shape)
    if not np.any(active):
        return out
    ra, ta = r[active], t[active]
    th_lo = np.arccosh(lo_arg[active])
    th_hi = np.arccosh(hi_arg[active])
    width = th_hi - th_lo

    def integrand(u):
        th = th_lo + u * width
        return width * bump_profile(a * (ta - ra * np.cosh(th) - t0))

    val, _ = quad_vec(integrand, 0.0, 1.0, epsabs=spec.quad_tol, epsrel=spec.quad_tol, norm="max", limit=2000)
    out[active] = val
    return out


def eval_point_sources(spec: IncidentWaveSpec, x, t):
    """Superposed causal 2D emissions ``sum_j H(t - r_j) int f(t - r_j cosh th) dth``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast_shapes(x.shape[:-1], t.shape)
    xb = np.broadcast_to(x, shape + (2,))
    tb = np.broadcast_to(t, shape)
    total = np.zeros(shape)
    for z in spec.sources:
        r = np.hypot(xb[..., 0] - z[0], xb[..., 1] - z[1])
        if np.any(r == 0.0):
            raise ValueError(f"cannot evaluate a point-source field at its source {z}")
        total = total + _source_term(spec, r, tb).reshape(shape)
    return total


def boundary_trace(spec: IncidentWaveSpec, curve, grid, n=None):
    """Incident field on the boundary nodes at all stage times, shape ``(N, m, n)``."""
    smp = curve if isinstance(curve, CurveSamples) else curve.sample(int(n))
    times = grid.stage_times()
    out = np.zeros(times.shape + (smp.n,))
    if spec.is_zero:
        return out
    x = smp.points[None, None, :, :]
    # evaluate in blocks of steps to bound temporary memory
    step = max(1, (1 << 20) // (times.shape[1] * smp.n))
    for i in range(0, len(times), step):
        out[i : i + step] = spec.evaluate(x, times[i : i + step, :, None])
    return out


@dataclass(frozen=True)
class CausalityReport:
    passed: bool
    max_value: float
    point: tuple = None
    time: float = None

    def __bool__(self):
        return self.passed


def causality_check(spec: IncidentWaveSpec, curve, margin: float = 1.0, n: int = 256, times: int = 65):
    """Check that the incident field vanishes on the boundary for ``t`` in ``[-margin, 0]``."""
    smp = curve if isinstance(curve, CurveSamples) else curve.sample(n)
    t = np.linspace(-margin, 0.0, times)
    if spec.is_zero:
        return CausalityReport(True, 0.0)
    vals = np.abs(spec.evaluate(smp.points[None, :, :], t[:, None]))
    k = np.unravel_index(np.argmax(vals), vals.shape)
    vmax = float(vals[k])
    if vmax < 1e-14:
        return CausalityReport(True, vmax)
    return CausalityReport(False, vmax, tuple(smp.points[k[1]]), float(t[k[0]]))
