"""Independent reference implementations used only by the test-suite."""

import mpmath as mp
import numpy as np

SERIES_LIMIT = 30.0


def k0_series(z, dps=80, scaled=False):
    """K0 by its ascending series in high precision."""
    with mp.workdps(dps):
        z = mp.mpc(z)
        q = z * z / 4
        term = mp.mpf(1)
        i0 = term
        acc = mp.mpf(0)
        harm = mp.mpf(0)
        k = 0
        while True:
            k += 1
            term = term * q / (k * k)
            harm += mp.mpf(1) / k
            i0 += term
            acc += harm * term
            if abs(term) * (harm + 1) < mp.mpf(10) ** (-dps + 5) * abs(i0) and k > 5:
                break
        val = -(mp.log(z / 2) + mp.euler) * i0 + acc
        return complex(val * mp.exp(z) if scaled else val)


def k0_asymptotic(z, dps=40, scaled=False):
    """K0 by the Hankel expansion summed to its smallest term."""
    with mp.workdps(dps):
        z = mp.mpc(z)
        term = mp.mpf(1)
        total = term
        k = 0
        while True:
            k += 1
            nxt = -term * (2 * k - 1) ** 2 / (8 * k * z)
            if abs(nxt) > abs(term) or abs(nxt) < mp.mpf(10) ** (-dps + 5):
                break
            term = nxt
            total += term
        val = mp.sqrt(mp.pi / (2 * z)) * total
        return complex(val if scaled else val * mp.exp(-z))


def k0_oracle(z, scaled=False):
    if abs(z) <= SERIES_LIMIT:
        return k0_series(z, scaled=scaled)
    return k0_asymptotic(z, scaled=scaled)


def i0_series(z, dps=60):
    with mp.workdps(dps):
        z = mp.mpc(z)
        return complex(mp.besseli(0, z))


def log_grid(n=200, rmin=1e-6, rmax=1e3, seed=1):
    """Points with log-spaced modulus and arguments spread over (-pi/2, pi/2)."""
    rng = np.random.default_rng(seed)
    r = np.logspace(np.log10(rmin), np.log10(rmax), n)
    phi = rng.uniform(-0.499 * np.pi, 0.499 * np.pi, n)
    return r * np.exp(1j * phi)


def cq_direct_resolvent(tab, tau, N, a, g):
    """RK convolution quadrature of ``K(s) = 1/(s + a)`` by explicit weights.

    The generating function ``tau (Delta(zeta) + a tau)^{-1}`` with
    ``Delta(zeta) = A^{-1} - zeta/(1 - zeta R_inf) A^{-1} 1 b^T A^{-1}`` and
    ``R_inf = 0`` is ``tau (M0 - zeta D1)^{-1}``; its Taylor coefficients are
    ``W_n = (M0^{-1} D1)^n tau M0^{-1}``.  The convolution is a plain double loop.
    """
    Ainv = np.linalg.inv(tab.A)
    D1 = np.outer(Ainv @ np.ones(tab.m), tab.b @ Ainv)
    M = np.linalg.inv(Ainv + a * tau * np.eye(tab.m))
    W = [tau * M]
    X = M @ D1
    for _ in range(1, N):
        W.append(X @ W[-1])
    u = np.zeros(g.shape, dtype=complex)
    for n in range(N):
        for j in range(n + 1):
            u[n] += W[n - j] @ g[j]
    return u


def disk_scattered_transfer(s, radius, g, targets):
    """Exact scattered field of the unit-speed disk problem in the Laplace domain.

    ``g`` holds boundary data at the uniform angles ``2 pi j / n`` on the
    circle of the given radius (centered at the origin); its discrete Fourier
    modes are propagated with ``K_k(s r) / K_k(s a)`` to the targets.  Returns
    the scattered field ``-sum_k c_k K_k(s r)/K_k(s a) exp(i k theta)``.
    """
    from scipy.special import kve

    n = g.shape[0]
    c = np.fft.fft(g, axis=0) / n
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    if n % 2 == 0:
        # split the Nyquist mode evenly between +-n/2
        c = np.concatenate([c, c[n // 2 : n // 2 + 1]], axis=0)
        c[n // 2] *= 0.5
        c[-1] *= 0.5
        k = np.concatenate([k, [n // 2]])
        k[n // 2] = -n // 2
    targets = np.atleast_2d(targets)
    r = np.hypot(targets[:, 0], targets[:, 1])
    th = np.arctan2(targets[:, 1], targets[:, 0])
    ak = np.abs(k)
    with np.errstate(invalid="ignore", over="ignore", under="ignore"):
        ratio = kve(ak[None, :], s * r[:, None]) / kve(ak, s * radius)[None, :]
        ratio = ratio * np.exp(-s * (r[:, None] - radius))
    ratio[~np.isfinite(ratio)] = 0.0
    return -(ratio * np.exp(1j * np.outer(th, k))) @ c
