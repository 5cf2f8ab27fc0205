"""Modified Bessel functions of order zero for arguments in the right half-plane.

The 2D kernel for complex frequency ``s`` is ``K0(s r) / (2 pi)``.  Three
evaluation regimes are used for ``K0``:

* ``|z| <= 2``: convergent power series, written as
  ``K0(z) = R(z) - log(z/2) I0(z)`` with ``R`` entire (see
  :func:`bessel_k0_regular`),
* ``2 < |z| <= 17``: trapezoidal rule on a Gaussian-weighted integral
  representation of ``exp(z) K0(z)``,
* ``|z| > 17``: Hankel asymptotic expansion, truncated at its smallest term.

All scalar kernels are compiled with numba and exposed as numpy ufuncs.
"""

import cmath
import math

import numba
import numpy as np

EULER_GAMMA = 0.57721566490153286061

SERIES_RADIUS = 2.0
ASYMPTOTIC_RADIUS = 17.0
_TINY = 1e-17


@numba.njit(cache=True, nogil=True)
def _series_parts(z):
    # returns (I0(z), R(z)) with R = K0 + log(z/2) I0
    q = 0.25 * z * z
    term = 1.0 + 0j
    i0 = term
    harmonic = 0.0
    reg = -EULER_GAMMA * term
    for k in range(1, 200):
        term = term * q / (k * k)
        harmonic += 1.0 / k
        i0 += term
        reg += (harmonic - EULER_GAMMA) * term
        if abs(term) * (harmonic + 1.0) < _TINY * abs(i0):
            break
    return i0, reg


@numba.njit(cache=True, nogil=True)
def _k0e_integral(z):
    # e^z K0(z) = int_R exp(-v^2) / sqrt(v^2 + 2z) dv, trapezoidal rule.
    # Branch points sit at distance d = Re sqrt(2z) >= sqrt(|z|) from the real
    # axis; the step balances exp(a^2 - 2 pi a / h) over the strip width a <= d.
    w = cmath.sqrt(2.0 * z)
    d = w.real
    h = min(0.5, 2.0 * math.pi * d / (37.0 + d * d))
    n = int(math.ceil(6.3 / h))
    total = 0.5 / w
    for k in range(1, n + 1):
        v = k * h
        total += math.exp(-v * v) / cmath.sqrt(v * v + 2.0 * z)
    return 2.0 * h * total


@numba.njit(cache=True, nogil=True)
def _k0e_asymptotic(z):
    # e^z K0(z) ~ sqrt(pi/2z) sum_k (-1)^k ((2k-1)!!)^2 / (k! (8z)^k)
    inv = -1.0 / (8.0 * z)
    term = 1.0 + 0j
    total = term
    last = 1.0
    for k in range(1, 80):
        nxt = term * inv * ((2 * k - 1) ** 2 / k)
        size = nxt.real * nxt.real + nxt.imag * nxt.imag
        if size > last:
            break
        term = nxt
        total += term
        last = size
        if size < _TINY * _TINY:
            break
    return cmath.sqrt(math.pi / (2.0 * z)) * total


@numba.njit(cache=True, nogil=True)
def k0_scalar(z):
    az = abs(z)
    if az <= SERIES_RADIUS:
        i0, reg = _series_parts(z)
        return reg - cmath.log(0.5 * z) * i0
    if z.real > 745.0:
        return 0.0 + 0j
    if az <= ASYMPTOTIC_RADIUS:
        return _k0e_integral(z) * cmath.exp(-z)
    return _k0e_asymptotic(z) * cmath.exp(-z)


@numba.njit(cache=True, nogil=True)
def k0e_scalar(z):
    if abs(z) <= SERIES_RADIUS:
        i0, reg = _series_parts(z)
        return (reg - cmath.log(0.5 * z) * i0) * cmath.exp(z)
    if abs(z) <= ASYMPTOTIC_RADIUS:
        return _k0e_integral(z)
    return _k0e_asymptotic(z)


@numba.njit(cache=True, nogil=True)
def i0e_scalar(z):
    """``exp(-z) I0(z)`` for ``Re z >= 0``."""
    if abs(z) <= ASYMPTOTIC_RADIUS:
        i0, _ = _series_parts(z)
        return i0 * cmath.exp(-z)
    # I0(z) ~ e^z/sqrt(2 pi z) sum c_k / z^k  +/- i e^-z/sqrt(2 pi z) sum (-1)^k c_k / z^k
    # with c_k = ((2k-1)!!)^2 / (k! 8^k)
    # the sign of the recessive term follows the half-plane of Im z
    lead = 1.0 + 0j
    rec = 1.0 + 0j
    term = 1.0 + 0j
    last = 1.0
    for k in range(1, 80):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * z)
        size = abs(nxt)
        if size > last:
            break
        term = nxt
        lead += term
        rec += term * (-1.0) ** k
        last = size
        if size < _TINY:
            break
    pref = 1.0 / cmath.sqrt(2.0 * math.pi * z)
    sign = 1.0 if z.imag >= 0.0 else -1.0
    out = pref * lead
    if z.real < 40.0:
        out += sign * 1j * pref * rec * cmath.exp(-2.0 * z)
    return out


@numba.njit(cache=True, nogil=True)
def k0_regular_scalar(z):
    if abs(z) <= SERIES_RADIUS:
        return _series_parts(z)[1]
    i0, _ = _series_parts(z)
    return k0_scalar(z) + cmath.log(0.5 * z) * i0


_k0_ufunc = numba.vectorize(["complex128(complex128)"], cache=True)(k0_scalar)
_k0e_ufunc = numba.vectorize(["complex128(complex128)"], cache=True)(k0e_scalar)
_i0e_ufunc = numba.vectorize(["complex128(complex128)"], cache=True)(i0e_scalar)
_k0reg_ufunc = numba.vectorize(["complex128(complex128)"], cache=True)(k0_regular_scalar)


def _checked(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("argument must be finite")
    if np.any(z.real <= 0.0):
        raise ValueError("argument must satisfy Re z > 0")
    return z


def _out(values, z):
    return complex(values) if np.ndim(z) == 0 else values


def bessel_k0(z):
    """Modified Bessel function ``K0(z)`` for ``Re z > 0``.

    Accepts scalars or arrays; returns complex values of the same shape.
    Arguments with ``Re z > 745`` underflow to exactly zero.
    """
    z = _checked(z)
    return _out(_k0_ufunc(z), z)


def bessel_k0e(z):
    """Exponentially scaled ``exp(z) K0(z)``."""
    z = _checked(z)
    return _out(_k0e_ufunc(z), z)


def bessel_i0e(z):
    """Exponentially scaled ``exp(-z) I0(z)`` for ``Re z > 0``."""
    z = _checked(z)
    return _out(_i0e_ufunc(z), z)


def bessel_k0_regular(z):
    """Smooth remainder ``K0(z) + log(z/2) I0(z)``.

    The remainder is entire; its value at the origin is ``-EULER_GAMMA``.
    Intended for moderate ``|z|``: ``I0`` grows like ``exp(Re z)``.
    """
    z = _checked(z)
    return _out(_k0reg_ufunc(z), z)


def log_weight(z):
    """The analytic weight ``I0(z)`` multiplying ``-log(z/2)`` in ``K0``."""
    z = _checked(z)
    return _out(_i0e_ufunc(z) * np.exp(z), z)
