"""Closed planar curves, star-shaped spline boundaries and shape penalties.

Curves are 2pi-periodic maps ``theta -> p(theta)`` with first and second
derivatives.  Arrays of points use shape ``(n, 2)``.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

TWO_PI = 2.0 * np.pi

# (theta) -> (p, dp, ddp), each of shape (n, 2)
CurveFunction = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class CurveFrame:
    point: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    speed: np.ndarray
    curvature: np.ndarray


@dataclass(frozen=True)
class CurveSamples:
    """A curve sampled on ``n`` equispaced parameters ``theta_k = 2 pi k / n``."""

    theta: np.ndarray
    points: np.ndarray
    derivs: np.ndarray
    normals: np.ndarray
    speeds: np.ndarray
    curvature: np.ndarray

    @property
    def n(self):
        return len(self.theta)

    @property
    def step(self):
        return TWO_PI / self.n

    @property
    def weights(self):
        """Trapezoidal arc-length weights ``h |p'(theta_k)|``."""
        return self.step * self.speeds


def _frame(p, dp, ddp):
    speed = np.hypot(dp[:, 0], dp[:, 1])
    if np.any(speed <= 0.0):
        raise ValueError("degenerate parametrization: |p'| = 0")
    tangent = dp / speed[:, None]
    normal = np.stack([tangent[:, 1], -tangent[:, 0]], axis=1)
    curvature = (dp[:, 0] * ddp[:, 1] - dp[:, 1] * ddp[:, 0]) / speed**3
    return CurveFrame(p, tangent, normal, speed, curvature)


class ClosedCurve:
    """A regular, counterclockwise, 2pi-periodic C^2 curve.

    ``func`` maps a parameter array to ``(p, p', p'')``.  Clockwise input is
    reparametrized by ``theta -> -theta`` rather than rejected.
    """

    def __init__(self, func: CurveFunction, label: str = "curve"):
        self.label = label
        self._func = func
        if _signed_area(*func(_grid(512))[:2]) < 0.0:
            self._func = _reversed(func)
        area = _signed_area(*self._func(_grid(512))[:2])
        if not area > 0.0:
            raise ValueError("curve encloses no positive area")

    def evaluate(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        p, dp, ddp = self._func(theta)
        return np.asarray(p, float), np.asarray(dp, float), np.asarray(ddp, float)

    def frame(self, theta) -> CurveFrame:
        return _frame(*self.evaluate(theta))

    def sample(self, n: int) -> CurveSamples:
        theta = _grid(n)
        p, dp, ddp = self.evaluate(theta)
        fr = _frame(p, dp, ddp)
        return CurveSamples(theta, p, dp, fr.normal, fr.speed, fr.curvature)

    def signed_area(self, n: int = 1024) -> float:
        p, dp, _ = self.evaluate(_grid(n))
        return _signed_area(p, dp)

    def centroid(self, n: int = 1024) -> np.ndarray:
        p, dp, _ = self.evaluate(_grid(n))
        return _centroid(p, dp)

    def translated(self, offset) -> "ClosedCurve":
        offset = np.asarray(offset, dtype=float)

        def func(theta):
            p, dp, ddp = self._func(theta)
            return p + offset, dp, ddp

        return ClosedCurve(func, label=self.label)

    def perturbed(self, field_func: CurveFunction, eps: float) -> "ClosedCurve":
        """The curve ``p + eps * h`` for a vector field ``h`` given with derivatives."""

        def func(theta):
            p, dp, ddp = self._func(theta)
            h, dh, ddh = field_func(theta)
            return p + eps * h, dp + eps * dh, ddp + eps * ddh

        return ClosedCurve(func, label=self.label)

    def polyline(self, n: int = 1024) -> np.ndarray:
        return self.evaluate(_grid(n))[0]


def _grid(n):
    return TWO_PI * np.arange(n) / n


def _reversed(func):
    def rev(theta):
        p, dp, ddp = func(-np.asarray(theta))
        return p, -dp, ddp

    return rev


def _signed_area(p, dp):
    # 1/2 \oint (x dy - y dx), trapezoidal on the periodic grid
    integrand = p[:, 0] * dp[:, 1] - p[:, 1] * dp[:, 0]
    return 0.5 * TWO_PI * integrand.mean()


def _centroid(p, dp):
    area = _signed_area(p, dp)
    if area <= 0.0:
        raise ValueError("non-positive enclosed area")
    cx = TWO_PI * np.mean(0.5 * p[:, 0] ** 2 * dp[:, 1]) / area
    cy = -TWO_PI * np.mean(0.5 * p[:, 1] ** 2 * dp[:, 0]) / area
    return np.array([cx, cy])


# ---------------------------------------------------------------- analytic curves


def kite_curve() -> ClosedCurve:
    """The kite ``(-2.25 sin t, 1.5 (cos t + 0.65 cos 2t - 0.65))``."""

    def func(t):
        s, c = np.sin(t), np.cos(t)
        s2, c2 = np.sin(2 * t), np.cos(2 * t)
        p = np.stack([-2.25 * s, 1.5 * (c + 0.65 * c2 - 0.65)], axis=1)
        dp = np.stack([-2.25 * c, 1.5 * (-s - 1.3 * s2)], axis=1)
        ddp = np.stack([2.25 * s, 1.5 * (-c - 2.6 * c2)], axis=1)
        return p, dp, ddp

    return ClosedCurve(func, label="kite")


def circle_curve(radius: float = 1.0, center=(0.0, 0.0)) -> ClosedCurve:
    if radius <= 0:
        raise ValueError("radius must be positive")
    cx, cy = map(float, center)

    def func(t):
        c, s = np.cos(t), np.sin(t)
        p = np.stack([cx + radius * c, cy + radius * s], axis=1)
        dp = np.stack([-radius * s, radius * c], axis=1)
        return p, dp, -radius * np.stack([c, s], axis=1)

    return ClosedCurve(func, label="circle")


# ---------------------------------------------------------------- spline shapes


@dataclass(frozen=True)
class SplineStarShape:
    """Radii ``r_j`` at knot angles ``q_j = 2 pi (j-1)/Q`` around ``center``."""

    radii: np.ndarray
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float).ravel()
        center = np.asarray(self.center, dtype=float).ravel()
        if radii.size < 4:
            raise ValueError(f"need at least 4 knots, got {radii.size}")
        if np.any(radii <= 0.0):
            raise ValueError("all radii must be positive")
        if center.shape != (2,):
            raise ValueError("center must be a point in the plane")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "center", center)

    @property
    def Q(self):
        return self.radii.size

    @property
    def knots(self):
        return TWO_PI * np.arange(self.Q) / self.Q

    def knot_points(self):
        q = self.knots
        return self.radii[:, None] * np.stack([np.cos(q), np.sin(q)], axis=1) + self.center

    def params(self):
        """Parameter vector ``(r_1..r_Q, z_1, z_2)``."""
        return np.concatenate([self.radii, self.center])

    @classmethod
    def from_params(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x[:-2], x[-2:])

    @classmethod
    def circle(cls, radius, center=(0.0, 0.0), Q=40):
        return cls(np.full(Q, float(radius)), np.asarray(center, dtype=float))


def _periodic_spline(values):
    # values: (Q, ...) samples at the knots; closes the period explicitly
    Q = len(values)
    x = TWO_PI * np.arange(Q + 1) / Q
    y = np.concatenate([values, values[:1]], axis=0)
    return CubicSpline(x, y, bc_type="periodic", axis=0)


class SplineCurve(ClosedCurve):
    """Periodic cubic spline through the knot points of a star shape."""

    def __init__(self, shape: SplineStarShape):
        self.shape = shape
        spline = _periodic_spline(shape.knot_points())

        def func(theta):
            t = np.mod(theta, TWO_PI)
            return spline(t), spline(t, 1), spline(t, 2)

        super().__init__(func, label="spline")


def build_spline(radii, center=(0.0, 0.0)) -> SplineCurve:
    return SplineCurve(SplineStarShape(radii, center))


def cardinal_splines(Q: int, theta) -> np.ndarray:
    """Values ``B_j(theta)`` of the periodic cardinal cubic splines, shape ``(n, Q)``."""
    spline = _periodic_spline(np.eye(Q))
    return spline(np.mod(np.asarray(theta, dtype=float), TWO_PI))


def dove_shape(Q: int = 40) -> SplineStarShape:
    """A dove-like star-shaped test obstacle (stand-in control polygon)."""
    # radius profile in polar angle: beak to the right, tail to the left,
    # raised wing on top
    knots_deg = np.array([0, 20, 45, 70, 95, 120, 150, 175, 185, 200, 230, 260, 290, 320, 345, 360])
    radius = np.array([1.7, 1.1, 1.2, 1.9, 2.2, 1.5, 1.0, 1.8, 1.8, 1.0, 0.8, 0.9, 1.0, 1.1, 1.4, 1.7])
    q = TWO_PI * np.arange(Q) / Q
    radii = np.interp(np.degrees(q), knots_deg, radius)
    return SplineStarShape(radii, np.array([0.0, 0.0]))


# ---------------------------------------------------------------- frames & penalties


def curve_frame(curve: ClosedCurve, theta) -> CurveFrame:
    return curve.frame(theta)


def curvature_penalty(curve: ClosedCurve, n: int = 512) -> float:
    """Trapezoidal approximation of ``int_0^{2pi} kappa^2 |p'| dtheta``."""
    smp = curve.sample(n)
    return float(np.sum(smp.curvature**2 * smp.speeds) * smp.step)


def curvature_residuals(curve: ClosedCurve, n: int = 512) -> np.ndarray:
    """Vector whose squared norm is :func:`curvature_penalty`."""
    smp = curve.sample(n)
    return smp.curvature * np.sqrt(smp.speeds * smp.step)


def center_penalty(curve: ClosedCurve, z, n: int = 1024) -> float:
    """Squared distance between the area centroid of the curve and ``z``."""
    d = curve.centroid(n) - np.asarray(z, dtype=float)
    return float(d @ d)


@dataclass(frozen=True)
class PerturbationBasis:
    """Direction fields on a sampled boundary.

    ``fields`` has shape ``(n, J, 2)``; ``hnu`` holds ``h_j . nu`` with shape
    ``(n, J)``.  The first ``Q`` directions move one knot radially, the last two
    shift the center.
    """

    fields: np.ndarray
    hnu: np.ndarray
    labels: tuple

    @property
    def J(self):
        return self.hnu.shape[1]


def perturbation_basis(shape: SplineStarShape, n: int) -> PerturbationBasis:
    curve = SplineCurve(shape)
    smp = curve.sample(n)
    B = cardinal_splines(shape.Q, smp.theta)
    q = shape.knots
    radial = B[:, :, None] * np.stack([np.cos(q), np.sin(q)], axis=1)[None, :, :]
    shifts = np.broadcast_to(np.eye(2)[None, :, :], (n, 2, 2))
    fields = np.concatenate([radial, shifts], axis=1)
    hnu = np.einsum("njd,nd->nj", fields, smp.normals)
    labels = tuple(f"r{j + 1}" for j in range(shape.Q)) + ("z1", "z2")
    return PerturbationBasis(fields, hnu, labels)


def symmetric_difference_area(a: ClosedCurve, b: ClosedCurve, n: int = 2048) -> float:
    """Area of the symmetric difference of the regions bounded by two curves."""
    from shapely.geometry import Polygon

    pa = Polygon(a.polyline(n)).buffer(0)
    pb = Polygon(b.polyline(n)).buffer(0)
    return float(pa.symmetric_difference(pb).area)
