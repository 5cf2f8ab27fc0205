"""Runge-Kutta convolution quadrature based on Radau IIA methods.

A sampled causal signal is stored as a *stage sequence* ``g[n, i] =
g(t_n + c_i tau)`` for steps ``n = 0..N-1`` and stages ``i = 0..m-1``, with
optional trailing value dimensions.  For a Laplace-domain symbol ``K(s)`` the
discrete convolution is

    K(d_t^tau) g = sum_j W_{n-j} g_j,   K(Delta(zeta)/tau) = sum_n W_n zeta^n,

and is computed all steps at once: scale by ``rho^n``, FFT over ``n``,
diagonalize each ``Delta(zeta_l)/tau`` in stage space, apply ``K`` at the
eigenvalues, and transform back.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import legendre as L

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RadauTableau:
    m: int
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    @property
    def order(self):
        return 2 * self.m - 1

    @property
    def Ainv(self):
        return np.linalg.inv(self.A)

    def stability(self, z):
        """``R(z) = 1 + z b^T (I - z A)^{-1} 1``."""
        one = np.ones(self.m)
        return 1.0 + z * self.b @ np.linalg.solve(np.eye(self.m) - z * self.A, one)

    @property
    def R_inf(self):
        return 1.0 - self.b @ self.Ainv @ np.ones(self.m)


def radau_tableau(m: int) -> RadauTableau:
    """The ``m``-stage Radau IIA method, ``m`` in {1, 2, 3}.

    Nodes are the zeros of ``P_m(2x-1) - P_{m-1}(2x-1)``; the coefficients
    follow from the collocation conditions ``sum_j a_ij c_j^{k-1} = c_i^k / k``.
    """
    if m not in (1, 2, 3):
        raise ValueError(f"unsupported stage count m={m}; expected 1, 2 or 3")
    coef = np.zeros(m + 1)
    coef[m], coef[m - 1] = 1.0, -1.0
    x = np.sort(np.real(L.legroots(coef)))
    c = 0.5 * (x + 1.0)
    c[-1] = 1.0
    k = np.arange(1, m + 1)
    V = c[None, :] ** (k[:, None] - 1)  # V[k, j] = c_j^(k-1)
    rhs = c[None, :] ** k[:, None] / k[:, None]  # rhs[k, i] = c_i^k / k
    A = np.linalg.solve(V, rhs).T
    b = A[-1].copy()
    return RadauTableau(m, A, b, c)


def diff_symbol(tab: RadauTableau, zeta: complex) -> np.ndarray:
    """``Delta(zeta) = (A + zeta/(1 - zeta) 1 b^T)^{-1}`` in Sherman-Morrison form."""
    zeta = complex(zeta)
    if abs(zeta) >= 1.0:
        raise ValueError("the differentiation symbol requires |zeta| < 1")
    Ainv = tab.Ainv
    u = Ainv @ np.ones(tab.m)
    v = tab.b @ Ainv
    return Ainv - zeta / (1.0 - tab.R_inf * zeta) * np.outer(u, v)


@dataclass(frozen=True)
class CQGrid:
    """Frequency data for all-steps-at-once CQ with ``N`` steps of size ``tau``.

    The transform length is ``L = oversample * (N + 1)`` with nodes
    ``zeta_l = rho exp(-2 pi i l / L)``.  ``eigvals[l]`` holds the eigenvalues of
    ``Delta(zeta_l)/tau``, ``P[l]`` and ``Pinv[l]`` the eigenvector matrices.
    """

    tableau: RadauTableau
    tau: float
    N: int
    rho: float
    zeta: np.ndarray
    eigvals: np.ndarray
    P: np.ndarray
    Pinv: np.ndarray

    @property
    def m(self):
        return self.tableau.m

    @property
    def L(self):
        return len(self.zeta)

    @property
    def T(self):
        return self.N * self.tau

    def stage_times(self):
        """Array of shape ``(N, m)`` with entries ``t_n + c_i tau``."""
        n = np.arange(self.N)
        return self.tau * (n[:, None] + self.tableau.c[None, :])

    def node_times(self):
        """Node times ``t_1..t_N``."""
        return self.tau * np.arange(1, self.N + 1)

    def half_indices(self):
        """Frequency indices evaluated under conjugate symmetry."""
        return np.arange(self.L // 2 + 1)

    def frequencies(self, half=True):
        idx = self.half_indices() if half else np.arange(self.L)
        return self.eigvals[idx]


def build_grid(tab: RadauTableau, tau: float, N: int, oversample: int = 1) -> CQGrid:
    """Eigendecomposed symbols on the contour ``|zeta| = rho``.

    The radius balances the aliasing error ``rho^L`` against the roundoff
    amplification ``eps rho^-N``: ``rho = eps^(1/(L + N + 1))``.  For the
    default ``L = N + 1`` this is ``eps^(1/(2(N+1)))`` and both errors are
    about ``sqrt(eps)`` relative; ``oversample = k`` lowers them to roughly
    ``eps^(k/(k+1))`` at ``k`` times the number of frequencies.
    """
    if oversample < 1:
        raise ValueError("oversample must be a positive integer")
    if not tau > 0:
        raise ValueError("time step must be positive")
    if N < 1:
        raise ValueError("need at least one time step")
    Lk = int(oversample) * (N + 1)
    rho = EPS ** (1.0 / (Lk + N + 1))
    zeta = rho * np.exp(-2j * np.pi * np.arange(Lk) / Lk)
    m = tab.m
    eigvals = np.empty((Lk, m), dtype=complex)
    P = np.empty((Lk, m, m), dtype=complex)
    Pinv = np.empty((Lk, m, m), dtype=complex)
    for l, z in enumerate(zeta):
        D = diff_symbol(tab, z) / tau
        lam, vec = np.linalg.eig(D)
        order = np.lexsort((lam.real, lam.imag))
        lam, vec = lam[order], vec[:, order]
        if np.linalg.cond(vec) > 1e8:
            raise np.linalg.LinAlgError(f"defective differentiation symbol at zeta={z:.6g}")
        inv = np.linalg.inv(vec)
        resid = np.abs(vec @ np.diag(lam) @ inv - D).max()
        if resid > 1e-10 * np.abs(D).max():
            raise np.linalg.LinAlgError(
                f"eigendecomposition residual {resid:.2e} too large at zeta={z:.6g}"
            )
        eigvals[l], P[l], Pinv[l] = lam, vec, inv
    if np.any(eigvals.real <= 0):
        raise np.linalg.LinAlgError("differentiation symbol has eigenvalues with Re s <= 0")
    return CQGrid(tab, float(tau), int(N), rho, zeta, eigvals, P, Pinv)


# Evaluator contract: K_eval(s, x) -> K(s) x, where x is an array of complex
# values (one stage-space eigencomponent) and the result may have any fixed
# shape.  Several right-hand sides can be stacked along trailing axes.
Evaluator = Callable[[complex, np.ndarray], np.ndarray]


_CHUNK = 1 << 22  # transform buffer size in elements


def _forward_transform(grid: CQGrid, g, half):
    """Scaled and zero-padded FFT over the step index, chunked over the other axes.

    Returns the transform at the evaluated frequency indices: the first
    ``L//2 + 1`` when ``half`` (real data), all ``L`` otherwise.
    """
    g = np.asarray(g)
    if g.shape[0] != grid.N or g.shape[1] != grid.m:
        raise ValueError(f"stage sequence must have shape (N={grid.N}, m={grid.m}, ...), got {g.shape}")
    scale = (grid.rho ** np.arange(grid.N))[:, None]
    flat = g.reshape(grid.N, -1)
    nfreq = grid.L // 2 + 1 if half else grid.L
    G = np.empty((nfreq, flat.shape[1]), dtype=complex)
    width = max(1, _CHUNK // grid.L)
    for j in range(0, flat.shape[1], width):
        cols = slice(j, j + width)
        x = np.zeros((grid.L, flat[:, cols].shape[1]), dtype=flat.dtype)
        x[: grid.N] = flat[:, cols] * scale
        G[:, cols] = np.fft.rfft(x, axis=0) if half else np.fft.fft(x, axis=0)
    return G.reshape((nfreq,) + g.shape[1:])


def _eigencomponents(grid, G, l):
    # (m, ...) components of the transformed stage data in the eigenbasis at node l
    return np.tensordot(grid.Pinv[l], G, axes=(1, 0))


def _apply_frequency(grid, K_eval, Y, l, floor):
    out = []
    for k in range(grid.m):
        s = grid.eigvals[l, k]
        if floor > 0.0 and np.abs(Y[k]).max() <= floor:
            out.append(None)
            continue
        try:
            out.append(np.asarray(K_eval(s, Y[k]), dtype=complex))
        except Exception as exc:
            raise RuntimeError(f"symbol evaluation failed at s={s:.6g} (node {l}, stage {k})") from exc
    shape = next((o.shape for o in out if o is not None), None)
    if shape is None:
        return None
    full = np.stack([np.zeros(shape, dtype=complex) if o is None else o for o in out])
    return np.tensordot(grid.P[l], full, axes=(1, 0))


def convolve(grid: CQGrid, K_eval: Evaluator, g, real_symbol=True, workers=1, cutoff=0.0):
    """Discrete convolution ``K(d_t^tau) g`` of a stage sequence.

    With real ``g`` and ``real_symbol`` (``K(conj s) = conj K(s)``), only the
    first ``L//2 + 1`` frequency nodes are evaluated.  ``workers`` threads
    share the frequency loop; results are placed by index, so the output does
    not depend on the worker count.

    ``cutoff > 0`` skips symbol evaluations whose transformed data are below
    ``cutoff`` times the largest transformed value; their contribution is
    taken as zero.  For smooth data this removes most high frequencies.
    """
    if not 0.0 <= cutoff < 1.0:
        raise ValueError("cutoff must lie in [0, 1)")
    half = real_symbol and not np.iscomplexobj(g)
    G = _forward_transform(grid, g, half)
    floor = 0.0
    if cutoff > 0.0:
        peak = 0.0
        for l0 in range(0, len(G), 1024):
            Gb = G[l0 : l0 + 1024]
            blk = np.einsum("lij,lj...->li...", grid.Pinv[l0 : l0 + len(Gb)], Gb)
            peak = max(peak, float(np.abs(blk).max()))
        floor = cutoff * peak

    def job(l):
        return _apply_frequency(grid, K_eval, _eigencomponents(grid, G[l], l), l, floor)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, range(len(G))))
    else:
        results = [job(l) for l in range(len(G))]
    del G
    ref = next(r for r in results if r is not None)
    U = np.stack([np.zeros_like(ref) if r is None else r for r in results])
    if half:
        x = np.fft.irfft(U, n=grid.L, axis=0)
    else:
        x = np.fft.ifft(U, axis=0)
    x = x[: grid.N]
    scale = grid.rho ** (-np.arange(grid.N))
    return x * scale.reshape((-1,) + (1,) * (x.ndim - 1))


def solve_convolution(grid: CQGrid, A_eval: Callable[[complex], np.ndarray], rhs, real_symbol=True, workers=1):
    """Solve ``A(d_t^tau) phi = rhs`` for a matrix-valued symbol ``A(s)``."""

    def inv_eval(s, x):
        return np.linalg.solve(np.atleast_2d(A_eval(s)), x)

    return convolve(grid, inv_eval, rhs, real_symbol=real_symbol, workers=workers)


def scalar_symbol(K: Callable[[complex], complex]) -> Evaluator:
    """Wrap a scalar function ``K(s)`` as an evaluator."""
    return lambda s, x: K(s) * x


def sample_stages(grid: CQGrid, func):
    """Stage sequence ``func(t_n + c_i tau)`` for a vectorized function of time."""
    return np.asarray(func(grid.stage_times()))


def extract_nodes(x):
    """Node values ``u(t_n), n = 1..N``: the last stage of step ``n - 1``."""
    x = np.asarray(x)
    return x[:, -1]
