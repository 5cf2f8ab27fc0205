"""Regularized Gauss-Newton reconstruction of star-shaped obstacles.

The unknowns are the knot radii and the center of a
:class:`~tdscat.geometry.SplineStarShape`.  The objective is

    f_reg = f + alpha1^2 Psi1 + alpha2^2 Psi2,
    f = ||F(p) - g||^2 / ||g||^2,

with ``Psi1`` the curvature penalty and ``Psi2`` the squared distance between
the area centroid and the center parameter.  It is written as a sum of squares
of one stacked residual vector and minimized by Levenberg-damped Gauss-Newton.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from . import timedomain
from .geometry import SplineCurve, SplineStarShape, curvature_penalty, curvature_residuals, center_penalty
from .incident import IncidentWaveSpec
from .rkcq import CQGrid
from .timedomain import Scene, TimeSignals

log = logging.getLogger(__name__)

PENALTY_FD_STEP = 1e-6


@dataclass(frozen=True)
class GNConfig:
    alpha1: float = 0.02
    alpha2: float = 0.5
    tol: float = 1e-3
    max_iter: int = 50
    damping: float = 1e-8
    damping_up: float = 10.0
    damping_down: float = 2.0
    max_damping: float = 1e10
    r_min: float = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.alpha1 < 0 or self.alpha2 < 0:
            raise ValueError("regularization weights must be non-negative")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("need at least one iteration")
        if self.damping < 0:
            raise ValueError("damping must be non-negative")


@dataclass(frozen=True)
class InversionContext:
    """Everything except the shape that the forward map depends on."""

    receivers: np.ndarray
    incident: IncidentWaveSpec
    grid: CQGrid
    n_s: int
    workers: int = None

    def scene(self, shape: SplineStarShape, check=True) -> Scene:
        return Scene.from_shape(shape, self.receivers, self.incident, self.grid.T, check=check)

    def forward(self, shape):
        return timedomain.forward(self.scene(shape), self.n_s, self.grid, workers=self.workers)

    def jacobian(self, shape):
        return timedomain.shape_jacobian(self.scene(shape), self.n_s, self.grid, workers=self.workers)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    params: np.ndarray
    f: float
    psi1: float
    psi2: float
    f_reg: float
    update_norm: float
    damping: float
    projected: bool = False

    def as_dict(self):
        return {
            "iteration": self.iteration,
            "f": self.f,
            "psi1": self.psi1,
            "psi2": self.psi2,
            "f_reg": self.f_reg,
            "update_norm": self.update_norm,
            "damping": self.damping,
            "projected": self.projected,
            "params": [float(v) for v in self.params],
        }


@dataclass
class ReconstructionTrace:
    """Iteration history; record 0 is the initial guess."""

    records: list = field(default_factory=list)
    reason: str = ""
    rejected: int = 0

    @property
    def iterations(self):
        return max(0, len(self.records) - 1)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    @property
    def final_shape(self) -> SplineStarShape:
        return SplineStarShape.from_params(self.final.params)

    @property
    def initial_f(self):
        return self.records[0].f


def _check_data(data: TimeSignals):
    nrm = data.norm()
    if not nrm > 0:
        raise ValueError("measured data have zero norm")
    return nrm


def relative_residual(shape: SplineStarShape, data: TimeSignals, ctx: InversionContext, predicted=None) -> float:
    """``||F(p) - g||^2 / ||g||^2`` in the discrete time norm."""
    nrm = _check_data(data)
    pred = ctx.forward(shape) if predicted is None else predicted
    return (pred - data).norm() ** 2 / nrm**2


def penalties(shape: SplineStarShape, n: int):
    curve = SplineCurve(shape)
    return curvature_penalty(curve, n), center_penalty(curve, shape.center, n)


def penalized_objective(shape, data, cfg: GNConfig, ctx: InversionContext, predicted=None) -> float:
    f = relative_residual(shape, data, ctx, predicted)
    psi1, psi2 = penalties(shape, ctx.n_s)
    return f + cfg.alpha1**2 * psi1 + cfg.alpha2**2 * psi2


def _penalty_residuals(x, cfg, n):
    shape = SplineStarShape.from_params(x)
    curve = SplineCurve(shape)
    r1 = cfg.alpha1 * curvature_residuals(curve, n)
    r2 = cfg.alpha2 * (curve.centroid(n) - shape.center)
    return np.concatenate([r1, r2])


def _penalty_jacobian(x, cfg, n):
    base = _penalty_residuals(x, cfg, n)
    J = np.empty((base.size, x.size))
    for k in range(x.size):
        xp = x.copy()
        xp[k] += PENALTY_FD_STEP
        J[:, k] = (_penalty_residuals(xp, cfg, n) - base) / PENALTY_FD_STEP
    return base, J


class _Linearization:
    """Stacked residual and Jacobian at one parameter vector."""

    def __init__(self, x, data, cfg, ctx):
        self.x = x
        shape = SplineStarShape.from_params(x)
        jac = ctx.jacobian(shape)
        nrm = _check_data(data)
        w = np.sqrt(data.tau) / nrm
        r_data = w * (jac.forward.values - data.values).ravel()
        J_data = w * jac.matrix()
        r_pen, J_pen = _penalty_jacobian(x, cfg, ctx.n_s)
        self.residual = np.concatenate([r_data, r_pen])
        self.matrix = np.vstack([J_data, J_pen])
        self.f = float(r_data @ r_data)
        self.psi1, self.psi2 = penalties(shape, ctx.n_s)
        self.f_reg = self.f + cfg.alpha1**2 * self.psi1 + cfg.alpha2**2 * self.psi2


def _step(lin: _Linearization, lam):
    J, r = lin.matrix, lin.residual
    JTJ = J.T @ J
    D = np.diag(np.diag(JTJ))
    rhs = -J.T @ r
    while True:
        try:
            return np.linalg.solve(JTJ + lam * D, rhs), lam
        except np.linalg.LinAlgError:
            lam = max(10.0 * lam, 1e-12)


def _record(k, lin, update_norm, lam, projected=False):
    return IterationRecord(k, lin.x.copy(), lin.f, lin.psi1, lin.psi2, lin.f_reg, update_norm, lam, projected)


def gauss_newton(initial: SplineStarShape, data: TimeSignals, cfg: GNConfig, ctx: InversionContext, callback=None):
    """Damped Gauss-Newton iteration from ``initial``.

    Each iteration solves ``(J^T J + lam diag(J^T J)) dx = -J^T r``.  A step
    that does not decrease ``f_reg`` (or yields an inadmissible shape) is
    rejected and retried with ``lam`` multiplied by ``cfg.damping_up``;
    accepted steps divide ``lam`` by ``cfg.damping_down``.  The iteration
    stops when ``|dx| < cfg.tol`` or after ``cfg.max_iter`` accepted steps.
    """
    trace = ReconstructionTrace()
    x = initial.params()
    lin = _Linearization(x, data, cfg, ctx)
    trace.records.append(_record(0, lin, float("nan"), cfg.damping))
    lam = cfg.damping
    k = 0
    while True:
        dx, lam = _step(lin, lam)
        nrm = float(np.linalg.norm(dx))
        if nrm < cfg.tol:
            trace.reason = "tolerance"
            break
        if k >= cfg.max_iter:
            trace.reason = "max_iterations"
            break
        x_new = x + dx
        Q = x.size - 2
        projected = bool(np.any(x_new[:Q] < cfg.r_min))
        x_new[:Q] = np.maximum(x_new[:Q], cfg.r_min)
        try:
            trial = _Linearization(x_new, data, cfg, ctx)
            ok = trial.f_reg < lin.f_reg
        except ValueError as exc:
            log.info("trial shape rejected: %s", exc)
            ok = False
        if not ok:
            trace.rejected += 1
            lam = max(lam * cfg.damping_up, 1e-12)
            if lam > cfg.max_damping:
                trace.reason = "stagnation"
                break
            continue
        k += 1
        x, lin = x_new, trial
        rec = _record(k, lin, nrm, lam, projected)
        trace.records.append(rec)
        log.info("iteration %d: f=%.4e f_reg=%.4e |dx|=%.3e lam=%.1e", k, rec.f, rec.f_reg, nrm, lam)
        if callback is not None:
            callback(rec)
        lam = lam / cfg.damping_down
    return trace


def add_noise(data: TimeSignals, delta: float, seed=0) -> TimeSignals:
    """``g + delta * zeta * ||g|| / ||zeta||`` with ``zeta`` uniform on ``[-1, 1]``."""
    if delta < 0:
        raise ValueError("noise level must be non-negative")
    if delta == 0:
        return TimeSignals(data.tau, data.values.copy())
    rng = np.random.default_rng(seed)
    zeta = TimeSignals(data.tau, rng.uniform(-1.0, 1.0, size=data.values.shape))
    return data + zeta.scaled(delta * data.norm() / zeta.norm())
