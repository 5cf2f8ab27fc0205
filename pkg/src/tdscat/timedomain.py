"""Time-domain forward solver and temporal domain derivative.

The scattered wave at receivers is ``u = -S(d_t) V(d_t)^{-1} g`` with ``g`` the
incident trace.  Its derivative in a boundary direction ``h`` is
``S(d_t) V(d_t)^{-1} P V(d_t)^{-1} g`` with ``P phi = -(h.nu) phi``.  Both are
discretized by Radau IIA convolution quadrature; every CQ frequency assembles
and factorizes ``V(s)`` once and serves the forward solve and all derivative
directions.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import helm2d, incident, rkcq
from .geometry import ClosedCurve, PerturbationBasis, SplineCurve, SplineStarShape, perturbation_basis


# relative size below which transformed data are treated as zero (see rkcq.convolve)
FREQUENCY_CUTOFF = 1e-14


def default_workers():
    try:
        return max(1, int(os.environ.get("TDSCAT_WORKERS", "1")))
    except ValueError:
        return 1


@dataclass
class Scene:
    """Obstacle, receivers, incident wave and final time."""

    curve: ClosedCurve
    receivers: np.ndarray
    incident: incident.IncidentWaveSpec
    T: float
    shape: SplineStarShape = None
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.receivers = np.atleast_2d(np.asarray(self.receivers, dtype=float))
        if self.receivers.shape[1] != 2:
            raise ValueError("receivers must have shape (M, 2)")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.check:
            self.validate()

    @classmethod
    def from_shape(cls, shape: SplineStarShape, receivers, inc, T, check=True):
        return cls(SplineCurve(shape), receivers, inc, T, shape=shape, check=check)

    def with_curve(self, curve, shape=None):
        return Scene(curve, self.receivers, self.incident, self.T, shape=shape, check=self.check)

    def validate(self, n=512):
        from shapely.geometry import Point, Polygon

        poly = Polygon(self.curve.polyline(n))
        for z in self.receivers:
            if poly.buffer(0).covers(Point(z)):
                raise ValueError(f"receiver {tuple(z)} lies inside or on the obstacle")
        rep = incident.causality_check(self.incident, self.curve)
        if not rep.passed:
            raise ValueError(
                f"incident wave is already nonzero on the boundary at t={rep.time:.3g} "
                f"near {rep.point} (|u_i| = {rep.max_value:.3g})"
            )


@dataclass(frozen=True)
class TimeSignals:
    """Receiver signals at node times ``t_n = n tau``, ``values`` of shape ``(M, N)``."""

    tau: float
    values: np.ndarray

    @property
    def M(self):
        return self.values.shape[0]

    @property
    def N(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.tau * np.arange(1, self.N + 1)

    def norm(self):
        """Discrete norm ``(tau sum_n sum_j |g_jn|^2)^(1/2)``."""
        return float(np.sqrt(self.tau * np.sum(np.abs(self.values) ** 2)))

    def __sub__(self, other):
        _compatible(self, other)
        return TimeSignals(self.tau, self.values - other.values)

    def __add__(self, other):
        _compatible(self, other)
        return TimeSignals(self.tau, self.values + other.values)

    def scaled(self, c):
        return TimeSignals(self.tau, c * self.values)


def _compatible(a, b):
    if a.values.shape != b.values.shape or a.tau != b.tau:
        raise ValueError("signals live on different time grids")


def make_grid(m, T, N, oversample=1):
    return rkcq.build_grid(rkcq.radau_tableau(m), T / N, N, oversample=oversample)


# exp(-x) is negligible against any O(1) signal beyond this exponent
_NEGLIGIBLE_EXPONENT = 700.0


class _FrequencySolver:
    """Evaluator for the CQ engine: solves the BEM problem at one frequency.

    Returns an array of shape ``(M, 1 + J)``: the scattered field at the
    receivers followed by the derivative columns.

    The discrete operators carry the factors ``exp(+-Re(s) rho_i)`` of the
    ring-regularized diagonal, and ``S(s)`` decays like ``exp(-Re(s) d)`` with
    the receiver distance ``d``.  The outputs are therefore bounded by
    ``exp(-Re(s) (d - 4 rho_max))``; frequencies where this underflows return
    zero without assembling (they only occur for very small time steps).
    """

    def __init__(self, samples, targets, hnu=None):
        self.samples = samples
        self.targets = helm2d._check_targets(samples, targets)
        self.hnu = hnu
        d = np.hypot(
            self.targets[:, None, 0] - samples.points[None, :, 0],
            self.targets[:, None, 1] - samples.points[None, :, 1],
        ).min()
        self.decay = d - 4.0 * helm2d.ring_radius(samples.weights).max()
        self.ncols = 1 if hnu is None else 1 + hnu.shape[1]

    def __call__(self, s, g):
        if s.real * self.decay > _NEGLIGIBLE_EXPONENT:
            return np.zeros((len(self.targets), self.ncols), dtype=complex)
        w = helm2d.assemble_v(s, self.samples)
        psi = w.solve(g)
        S = helm2d.potential_matrix(s, self.samples, self.targets)
        u = -(S @ psi)
        if self.hnu is None:
            return u[:, None]
        phi = psi / self.samples.weights
        rhs = -self.hnu * phi[:, None]
        dpsi = w.solve(rhs)
        return np.concatenate([u[:, None], S @ dpsi], axis=1)


def _run(scene, n_s, grid, targets, hnu=None, workers=None):
    smp = scene.curve.sample(int(n_s))
    g = incident.boundary_trace(scene.incident, smp, grid)
    solver = _FrequencySolver(smp, targets, hnu)
    workers = default_workers() if workers is None else int(workers)
    stages = rkcq.convolve(grid, solver, g, workers=workers, cutoff=FREQUENCY_CUTOFF)
    # (N, M, 1 + J) node values
    return rkcq.extract_nodes(stages)


def forward(scene: Scene, n_s: int, grid: rkcq.CQGrid, workers=None) -> TimeSignals:
    """Scattered-field signals at the receivers."""
    nodes = _run(scene, n_s, grid, scene.receivers, workers=workers)
    return TimeSignals(grid.tau, nodes[:, :, 0].T.copy())


@dataclass(frozen=True)
class JacobianResult:
    """Forward signals plus one derivative signal per direction."""

    forward: TimeSignals
    columns: np.ndarray  # (J, M, N)

    @property
    def J(self):
        return self.columns.shape[0]

    def column(self, j) -> TimeSignals:
        return TimeSignals(self.forward.tau, self.columns[j])

    def matrix(self):
        """Jacobian as an ``(M N, J)`` matrix (channel-major flattening)."""
        return self.columns.reshape(self.J, -1).T

    def apply(self, coeffs) -> TimeSignals:
        return TimeSignals(self.forward.tau, np.tensordot(coeffs, self.columns, axes=(0, 0)))


def jacobian(scene: Scene, basis, n_s: int, grid: rkcq.CQGrid, workers=None) -> JacobianResult:
    """Forward signals and temporal domain derivatives for all basis directions.

    ``basis`` is a :class:`PerturbationBasis` sampled on the same ``n_s`` grid,
    or a raw ``(n_s, J)`` array of ``h.nu`` values.
    """
    hnu = basis.hnu if isinstance(basis, PerturbationBasis) else np.asarray(basis, dtype=float)
    if hnu.ndim == 1:
        hnu = hnu[:, None]
    if hnu.shape[0] != n_s:
        raise ValueError(f"direction samples have {hnu.shape[0]} rows, expected {n_s}")
    nodes = _run(scene, n_s, grid, scene.receivers, hnu=hnu, workers=workers)
    fwd = TimeSignals(grid.tau, nodes[:, :, 0].T.copy())
    cols = np.ascontiguousarray(np.transpose(nodes[:, :, 1:], (2, 1, 0)))
    return JacobianResult(fwd, cols)


def shape_jacobian(scene: Scene, n_s: int, grid: rkcq.CQGrid, workers=None) -> JacobianResult:
    """Jacobian over the radial knot and center-shift directions of ``scene.shape``."""
    if scene.shape is None:
        raise ValueError("scene has no spline shape parameters")
    return jacobian(scene, perturbation_basis(scene.shape, n_s), n_s, grid, workers=workers)


def field_snapshots(scene: Scene, probes, node_indices, n_s: int, grid: rkcq.CQGrid, total=False, workers=None):
    """Scattered (or total) field at probe points and selected node times.

    ``node_indices`` are 1-based node numbers ``n`` (time ``n tau``); ``0`` is
    allowed and returns the zero initial state (plus the incident field when
    ``total``).  Returns an array of shape ``(len(node_indices), P)``.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    idx = np.asarray(node_indices, dtype=int)
    if np.any(idx < 0) or np.any(idx > grid.N):
        raise ValueError("node index out of range")
    nodes = _run(scene, n_s, grid, probes, workers=workers)[:, :, 0]
    out = np.zeros((len(idx), len(probes)))
    pos = idx > 0
    out[pos] = nodes[idx[pos] - 1]
    if total:
        t = grid.tau * idx
        out += scene.incident.evaluate(probes[None, :, :], t[:, None])
    return out
