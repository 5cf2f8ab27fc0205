"""Single-layer boundary integral solver for the modified Helmholtz equation.

For a complex frequency ``s`` with ``Re s > 0`` the Laplace-transformed
scattering problem ``s^2 u - Lap u = 0`` outside a curve with Dirichlet data
``g`` is solved with the ansatz ``u = S(s) phi``, where

    (S(s) phi)(x) = int_Gamma K0(s |x - y|) / (2 pi) phi(y) ds_y.

Discretization is Nystrom on the equispaced parameter grid with unknowns
folded as ``psi_j = h |p'(theta_j)| phi(x_j)``, so the matrix is exactly
complex symmetric.  Off-diagonal entries are plain kernel values.  The
diagonal entry at node ``i`` is

    K0(s rho_i) / I0(s rho_i) / (2 pi),   rho_i = h |p'(theta_i)| / (2 pi).

On the tangent line this reproduces the logarithmic defect of the punctured
trapezoidal rule up to ``O((s h)^2)`` (third order overall).  It also makes
the matrix ``D R D`` with ``D = diag(1 / I0(s rho_i))`` and ``R`` the
interaction matrix of uniform rings of radius ``rho_i`` around the nodes (Graf's
addition theorem).  ``R`` is a Gram matrix of a positive kernel, so
``Re(s psi^H R psi) > 0`` and the discrete operator has no singularities in
``Re s > 0``.  Without this the high-frequency CQ nodes can hit spurious
resonances of the discretization.
"""

from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg as sla

from .geometry import ClosedCurve, CurveSamples
from .specfun import bessel_i0e, bessel_k0, bessel_k0e, k0_scalar

_UNDERFLOW = 745.0


@dataclass(frozen=True)
class BoundaryDensity:
    """Folded single-layer density on the boundary nodes."""

    coefficients: np.ndarray
    weights: np.ndarray

    def values(self):
        """Pointwise density ``phi(x_j)``."""
        return self.coefficients / self.weights


class FrequencyWorkspace:
    """Assembled and factorized single-layer system for one frequency.

    Attributes
    ----------
    s : complex
    samples : CurveSamples
    matrix : ndarray, shape (n, n)
        ``V[i, j]``, complex symmetric.
    """

    def __init__(self, s, samples: CurveSamples, matrix: np.ndarray):
        self.s = complex(s)
        self.samples = samples
        self.matrix = matrix
        self._lu = None
        self.rcond = None

    @property
    def n(self):
        return self.samples.n

    def factorize(self):
        """LU factors of the symmetrically equilibrated matrix.

        At large ``Re s`` the diagonal spans many orders of magnitude, so the
        matrix is scaled by ``|V_ii|^(-1/2)`` on both sides before factorizing
        and checking the condition estimate.
        """
        if self._lu is None:
            d = np.abs(np.diag(self.matrix))
            if not np.all(d > 0.0) or not np.all(np.isfinite(d)):
                raise np.linalg.LinAlgError(f"single-layer diagonal underflows at s={self.s:.6g}")
            scale = 1.0 / np.sqrt(d)
            eq = scale[:, None] * self.matrix * scale[None, :]
            lu, piv = sla.lu_factor(eq, check_finite=False)
            anorm = np.abs(eq).sum(axis=0).max()
            rcond, info = sla.lapack.zgecon(lu, anorm, norm="1")
            self.rcond = float(rcond)
            if info != 0 or not rcond > np.finfo(float).eps:
                raise np.linalg.LinAlgError(
                    f"single-layer matrix is numerically singular at s={self.s:.6g} "
                    f"(reciprocal condition estimate {rcond:.3e})"
                )
            self._lu = (lu, piv, scale)
        return self._lu

    def solve(self, rhs):
        """Solve ``V x = rhs`` for one or several right-hand sides."""
        lu, piv, scale = self.factorize()
        rhs = np.asarray(rhs)
        sc = scale.reshape(scale.shape + (1,) * (rhs.ndim - 1))
        return sc * sla.lu_solve((lu, piv), sc * rhs, check_finite=False)


@numba.njit(cache=True, nogil=True)
def _offdiag(s, pts, out):
    n = pts.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            dx = pts[i, 0] - pts[j, 0]
            dy = pts[i, 1] - pts[j, 1]
            z = s * np.sqrt(dx * dx + dy * dy)
            v = k0_scalar(z) if z.real < _UNDERFLOW else 0.0j
            out[i, j] = v
            out[j, i] = v


@numba.njit(cache=True, nogil=True)
def _kernel_block(s, targets, pts, out):
    for i in range(targets.shape[0]):
        for j in range(pts.shape[0]):
            dx = targets[i, 0] - pts[j, 0]
            dy = targets[i, 1] - pts[j, 1]
            z = s * np.sqrt(dx * dx + dy * dy)
            out[i, j] = k0_scalar(z) if z.real < _UNDERFLOW else 0.0j


def ring_radius(weights):
    """Ring radii ``rho_i = w_i / (2 pi)`` for arc-length weights ``w_i``."""
    return np.asarray(weights, dtype=float) / (2 * np.pi)


def diagonal_value(s, weights):
    """``K0(s rho) / I0(s rho)`` at the ring radii of the nodes (before the ``1/(2 pi)``)."""
    z = complex(s) * ring_radius(weights)
    return bessel_k0e(z) / bessel_i0e(z) * np.exp(-2.0 * z)


def _check_rings(samples: CurveSamples):
    # neighbouring rings must be disjoint for the Gram structure to hold
    rho = ring_radius(samples.weights)
    gap = np.hypot(*(samples.points - np.roll(samples.points, -1, axis=0)).T)
    if np.any(gap <= rho + np.roll(rho, -1)):
        raise ValueError("boundary nodes are too unevenly spaced for the single-layer discretization")


def _samples(curve, n):
    if isinstance(curve, CurveSamples):
        return curve
    if isinstance(curve, ClosedCurve):
        return curve.sample(int(n))
    raise TypeError("expected a ClosedCurve or CurveSamples")


def _check_s(s):
    s = complex(s)
    if not (np.isfinite(s.real) and np.isfinite(s.imag)) or s.real <= 0.0:
        raise ValueError(f"frequency must satisfy Re s > 0, got {s}")
    return s


def assemble_v(s, curve, n=None) -> FrequencyWorkspace:
    """Assemble the Nystrom single-layer matrix on ``n`` nodes.

    ``curve`` may be a :class:`ClosedCurve` (then ``n`` is required) or
    already sampled :class:`CurveSamples`.
    """
    s = _check_s(s)
    smp = _samples(curve, n)
    if smp.n < 8:
        raise ValueError("need at least 8 boundary nodes")
    mat = np.empty((smp.n, smp.n), dtype=complex)
    _offdiag(s, np.ascontiguousarray(smp.points), mat)
    _check_rings(smp)
    mat[np.diag_indices(smp.n)] = diagonal_value(s, smp.weights)
    mat *= 1.0 / (2 * np.pi)
    return FrequencyWorkspace(s, smp, mat)


def solve_dirichlet(workspace: FrequencyWorkspace, g) -> BoundaryDensity:
    """Density ``psi`` with ``V psi = g`` for boundary data sampled at the nodes.

    ``g`` may carry extra trailing dimensions for several right-hand sides.
    """
    g = np.asarray(g, dtype=complex)
    if g.shape[0] != workspace.n:
        raise ValueError(f"boundary data has {g.shape[0]} values, expected {workspace.n}")
    coeffs = workspace.solve(g)
    w = workspace.samples.weights
    return BoundaryDensity(coeffs, w.reshape(w.shape + (1,) * (coeffs.ndim - 1)))


def _check_targets(samples: CurveSamples, targets, min_ratio=2.0):
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[1] != 2:
        raise ValueError("targets must have shape (k, 2)")
    d = np.hypot(
        targets[:, None, 0] - samples.points[None, :, 0],
        targets[:, None, 1] - samples.points[None, :, 1],
    ).min(axis=1)
    limit = min_ratio * samples.weights.max()
    if np.any(d < limit):
        k = int(np.argmin(d))
        raise ValueError(
            f"target {targets[k]} lies {d[k]:.3g} from the boundary, "
            f"inside the near-field exclusion zone ({limit:.3g})"
        )
    return targets


def potential_matrix(s, samples: CurveSamples, targets) -> np.ndarray:
    """Matrix mapping folded densities to single-layer values at targets."""
    s = _check_s(s)
    targets = _check_targets(samples, targets)
    out = np.empty((len(targets), samples.n), dtype=complex)
    _kernel_block(s, targets, np.ascontiguousarray(samples.points), out)
    return out / (2 * np.pi)


def potential_s(workspace: FrequencyWorkspace, density, targets):
    """Evaluate ``S(s) phi`` at targets away from the boundary."""
    coeffs = density.coefficients if isinstance(density, BoundaryDensity) else density
    return potential_matrix(workspace.s, workspace.samples, targets) @ coeffs


def scattered_field_freq(workspace: FrequencyWorkspace, g_inc, targets):
    """Scattered field ``-S V^{-1} g_inc`` at targets."""
    dens = solve_dirichlet(workspace, g_inc)
    return -potential_s(workspace, dens, targets)


def domain_derivative_freq(workspace: FrequencyWorkspace, g_inc, hnu, targets):
    """Domain derivative ``S V^{-1} (-(h.nu) V^{-1} g_inc)`` at targets.

    ``hnu`` is ``h . nu`` at the nodes, shape ``(n,)`` or ``(n, J)`` for ``J``
    directions at once; the result has shape ``(k,)`` or ``(k, J)``.
    The input ``g_inc`` is the trace of the incident field.
    """
    hnu = np.asarray(hnu, dtype=float)
    phi = solve_dirichlet(workspace, g_inc).values()
    rhs = -hnu * (phi if hnu.ndim == 1 else phi[:, None])
    psi = workspace.solve(rhs.astype(complex))
    return potential_matrix(workspace.s, workspace.samples, targets) @ psi


def disk_series_oracle(s, radius, coefficients, target):
    """Exact exterior solution for a disk centered at the origin.

    Dirichlet data ``g(theta) = sum_n c_n exp(i n theta)`` given as a mapping
    ``{n: c_n}``.  Returns ``u(target) = sum_n c_n K_n(s r)/K_n(s a) exp(i n theta)``.
    """
    from scipy.special import kve

    s = _check_s(s)
    x, y = map(float, target)
    r, th = np.hypot(x, y), np.arctan2(y, x)
    if r <= radius:
        raise ValueError("target must lie outside the disk")
    total = 0j
    for n, c in coefficients.items():
        ratio = kve(n, s * r) / kve(n, s * radius) * np.exp(-s * (r - radius))
        total += c * ratio * np.exp(1j * n * th)
    return total


def kernel_values(s, r):
    """``K0(s r) / (2 pi)`` for positive distances ``r``."""
    return bessel_k0(complex(s) * np.asarray(r, dtype=float)) / (2 * np.pi)
