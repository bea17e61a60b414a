"""The reduced 2K x 2K operator T, its spectrum, and constrained solves.

T acts on q = (f_1..f_K, g_1..g_K) as

    [ c1 A1 + c4 I    c2 A2 ] [f]
    [ -c2 A2          c3 A1 ] [g]

with the cyclic stencils (A1 x)_j = x_{j+1} - 2x_j + x_{j-1} and
(A2 x)_j = x_{j+1} - x_{j-1}. Both stencils are circulant, so a discrete
Fourier transform reduces T to one Hermitian 2x2 block per frequency. In
numpy's rfft convention the symbols are 2cos(ω) - 2 for A1 and 2i sin(ω) for
A2, ω = 2πk/K; the 2x2 block at k and its conjugate at K - k carry the same
real eigenvalues, which is the cos/sin pairing written in complex form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import kernels
from .configuration import SpikeConfig, cyclic_shift
from .errors import DhatTooSmall, SingularBlock, ValidationError

__all__ = [
    "ReducedOperator",
    "SpectralData",
    "build_T",
    "spectrum",
    "solve_constrained",
    "solve_constrained_q1",
    "rotation_kernel",
    "gram_matrix",
    "pair_gradient_tensor",
    "DIRECT_DFT_BELOW",
]

DIRECT_DFT_BELOW = 512


def rotation_kernel(K):
    """q0 = (0,...,0, 1,...,1): a rigid rotation moves every spike tangentially."""
    return np.concatenate([np.zeros(K), np.ones(K)])


@dataclass(frozen=True)
class ReducedOperator:
    K: int
    dhat: float
    m: float

    @property
    def c1(self):
        return self.K ** 2 / (4.0 * math.pi ** 2)

    @property
    def c2(self):
        return (self.dhat - 1.0) * self.K / (4.0 * math.pi)

    @property
    def c3(self):
        return -self.dhat * self.K ** 2 / (4.0 * math.pi ** 2)

    @property
    def c4(self):
        return self.dhat - self.m - 1.0

    def matvec(self, q):
        """T q in O(K) without forming T."""
        q = np.asarray(q, dtype=np.float64)
        K = self.K
        f, g = q[:K], q[K:]
        a1f = cyclic_shift(f, 1) - 2.0 * f + cyclic_shift(f, -1)
        a1g = cyclic_shift(g, 1) - 2.0 * g + cyclic_shift(g, -1)
        a2f = cyclic_shift(f, 1) - cyclic_shift(f, -1)
        a2g = cyclic_shift(g, 1) - cyclic_shift(g, -1)
        top = self.c1 * a1f + self.c4 * f + self.c2 * a2g
        bottom = -self.c2 * a2f + self.c3 * a1g
        return np.concatenate([top, bottom])

    __matmul__ = matvec

    @cached_property
    def dense(self):
        K = self.K
        eye = np.eye(K)
        A1 = -2.0 * eye + np.roll(eye, 1, axis=1) + np.roll(eye, -1, axis=1)
        A2 = np.roll(eye, 1, axis=1) - np.roll(eye, -1, axis=1)
        T = np.empty((2 * K, 2 * K))
        T[:K, :K] = self.c1 * A1 + self.c4 * eye
        T[:K, K:] = self.c2 * A2
        T[K:, :K] = T[:K, K:].T  # -c2 A2 = c2 A2^T; mirror to keep T exactly symmetric
        T[K:, K:] = self.c3 * A1
        return T

    def norm_inf(self):
        return 4.0 * abs(self.c1) + abs(self.c4) + 2.0 * abs(self.c2) + max(4.0 * abs(self.c3), 0.0)


def build_T(K, dhat, m, min_K=8):
    """Reduced operator for K spikes with log-derivative scale d̂ and exponent m."""
    if K < min_K or int(K) != K:
        raise ValidationError(f"K must be an integer >= {min_K}, got {K}")
    if not dhat > m + 1.0:
        raise DhatTooSmall(f"d̂ = {dhat} must exceed m + 1 = {m + 1.0}")
    return ReducedOperator(int(K), float(dhat), float(m))


@dataclass(frozen=True, eq=False)
class SpectralData:
    lambda1: np.ndarray
    lambda2sq: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    Lambda1: np.ndarray
    Lambda2: np.ndarray
    n_zero: int
    n_neg: int
    n_pos: int

    @property
    def inertia(self):
        return self.n_zero, self.n_neg, self.n_pos

    def rows(self):
        return [
            {"l": l + 1, "lambda1": self.lambda1[l], "lambda2sq": self.lambda2sq[l],
             "Lambda1": self.Lambda1[l], "Lambda2": self.Lambda2[l]}
            for l in range(self.lambda1.shape[0])
        ]


def spectrum(op: ReducedOperator, zero_tol=1e-12):
    """Closed-form eigenvalues Λ1_l <= Λ2_l, l = 1..K, and the inertia of T."""
    K = op.K
    l = np.arange(K)
    lam1 = -4.0 * np.sin(l * math.pi / K) ** 2
    lam2sq = -4.0 * np.sin(2.0 * l * math.pi / K) ** 2
    diag_f = op.c1 * lam1 + op.c4
    diag_g = op.c3 * lam1
    alpha = diag_f + diag_g
    beta = diag_f * diag_g + op.c2 ** 2 * lam2sq
    # α² - 4β written as a sum of squares so it never goes negative
    disc = np.sqrt((diag_f - diag_g) ** 2 - 4.0 * op.c2 ** 2 * lam2sq)
    big = 0.5 * (alpha + np.copysign(disc, alpha))
    small = np.where(big != 0.0, beta / np.where(big != 0.0, big, 1.0), 0.0)
    Lam1 = np.minimum(big, small)
    Lam2 = np.maximum(big, small)
    eig = np.concatenate([Lam1, Lam2])
    scale = zero_tol * op.norm_inf()
    n_zero = int(np.count_nonzero(np.abs(eig) <= scale))
    n_neg = int(np.count_nonzero(eig < -scale))
    n_pos = int(np.count_nonzero(eig > scale))
    return SpectralData(lam1, lam2sq, alpha, beta, Lam1, Lam2, n_zero, n_neg, n_pos)


# -------------------------------------------------------------- transforms

def _rfft(x):
    if x.shape[0] < DIRECT_DFT_BELOW:
        return kernels.dft_direct(x)
    return np.fft.rfft(x)


def _irfft_direct(X, n):
    k = np.arange(X.shape[0])
    weight = np.full(X.shape[0], 2.0)
    weight[0] = 1.0
    if n % 2 == 0:
        weight[-1] = 1.0
    j = np.arange(n)[:, None]
    a = 2.0 * math.pi * ((j * k[None, :]) % n) / n
    return (np.cos(a) @ (weight * X.real) - np.sin(a) @ (weight * X.imag)) / n


def _irfft(X, n):
    if n < DIRECT_DFT_BELOW:
        return _irfft_direct(X, n)
    return np.fft.irfft(X, n)


def _symbols(K):
    k = np.arange(K // 2 + 1)
    omega = 2.0 * math.pi * k / K
    a1 = -4.0 * np.sin(0.5 * omega) ** 2
    s2 = 2.0 * np.sin(omega)
    if K % 2 == 0:
        s2[-1] = 0.0  # sin(π) is exactly zero for the Nyquist mode
    return a1, s2


def solve_constrained(op: ReducedOperator, b, block_tol=1e-13):
    """Solve T q = b + γ q0 with q ⊥ q0.

    Returns ``(q, gamma)``. At frequency zero the f row reads c4 f̂ = b̂_f and
    the g row reads 0 = b̂_g + γK, which fixes γ = -mean(b_g); orthogonality
    to q0 sets the g mean to zero. Every other frequency is a 2x2 solve.
    """
    b = np.asarray(b, dtype=np.float64)
    K = op.K
    if b.shape != (2 * K,):
        raise ValidationError(f"b must have length {2 * K}")
    Bf, Bg = _rfft(b[:K]), _rfft(b[K:])
    a1, s2 = _symbols(K)
    p = op.c1 * a1 + op.c4
    r = op.c3 * a1
    off = op.c2 * s2  # upper-right entry is i*off, lower-left -i*off
    det = p * r - off ** 2
    size = np.abs(p * r) + off ** 2
    bad = np.abs(det[1:]) <= block_tol * size[1:]
    if np.any(bad) or not np.all(np.isfinite(det)):
        k = 1 + int(np.argmax(bad))
        raise SingularBlock(f"2x2 block at frequency {k} is singular (det = {det[k]:.3e})")
    F = np.empty_like(Bf)
    G = np.empty_like(Bg)
    F[0] = Bf[0] / op.c4
    G[0] = 0.0
    gamma = -Bg[0].real / K
    F[1:] = (r[1:] * Bf[1:] - 1j * off[1:] * Bg[1:]) / det[1:]
    G[1:] = (p[1:] * Bg[1:] + 1j * off[1:] * Bf[1:]) / det[1:]
    q = np.concatenate([_irfft(F, K), _irfft(G, K)])
    return q, float(gamma)


def perp_vector(q):
    """q^⊥ = (-g, f)."""
    q = np.asarray(q, dtype=np.float64)
    K = q.shape[0] // 2
    return np.concatenate([-q[K:], q[:K]])


def kernel_vector_q1(R, q, c0):
    """q1 = c0 (R q0 + q^⊥), the leading form of M(R q0 + q^⊥)."""
    q = np.asarray(q, dtype=np.float64)
    return c0 * (R * rotation_kernel(q.shape[0] // 2) + perp_vector(q))


def solve_constrained_q1(op: ReducedOperator, b, R, q, c0):
    """Solve T x = b + γ q1 with x ⊥ q0, q1 = c0 (R q0 + q^⊥).

    Two calls of :func:`solve_constrained` (for b and for q1) combined by the
    rank-one update that cancels the q0 multiplier; the resulting
    γ equals -(b·q0)/(q1·q0).
    """
    if hasattr(q, "as_vector"):
        q = q.as_vector()
    q1 = kernel_vector_q1(R, q, c0)
    x_b, gam_b = solve_constrained(op, b)
    x_1, gam_1 = solve_constrained(op, q1)
    if gam_1 == 0.0:
        raise SingularBlock("q1 has no component along q0")
    mu = -gam_b / gam_1
    return x_b + mu * x_1, float(mu)


# -------------------------------------------------------------- Gram matrix

def pair_gradient_tensor(profile, s, order=12):
    """(G_par, G_perp) for G(Δ) = ∫ ∇w(x) ∇w(x + Δ)ᵀ dx, |Δ| = s.

    G is diagonal in the frame (Δ/|Δ|, ⊥): G_par along Δ, G_perp across.
    """
    from .groundstate import _cylinder_grid, _CUT

    reach = 0.5 * _CUT + 2.0
    X1, RHO, W = _cylinder_grid((-reach - s, reach), reach, profile.dim, order)
    r1 = np.hypot(X1, RHO)
    r2 = np.hypot(X1 + s, RHO)
    _, d1 = profile.eval(r1)
    _, d2 = profile.eval(r2)
    safe1 = np.where(r1 > 0, r1, 1.0)
    safe2 = np.where(r2 > 0, r2, 1.0)
    common = W * d1 * d2 / (safe1 * safe2)
    common = np.where((r1 > 0) & (r2 > 0), common, 0.0)
    g_par = float(np.sum(common * X1 * (X1 + s)))
    g_perp = float(np.sum(common * RHO ** 2)) / (profile.dim - 1)
    return g_par, g_perp


def gram_matrix(config: SpikeConfig, profile=None, mode="asymptotic", c0=None, order=12):
    """M_{jk} = ∫ ∂U/∂q_j ∂U/∂q_k in the (f, g) ordering.

    ``asymptotic`` returns c0 I (the diagonal value, off-diagonals dropped);
    ``quadrature`` integrates every pair for K <= 16.
    """
    K = config.K
    if mode == "asymptotic":
        if c0 is None:
            raise ValidationError("asymptotic Gram matrix needs c0")
        return c0 * np.eye(2 * K)
    if mode != "quadrature":
        raise ValidationError(f"unknown mode {mode!r}")
    if K > 16:
        raise ValidationError("quadrature Gram matrix is limited to K <= 16")
    if profile is None:
        raise ValidationError("quadrature Gram matrix needs the profile")
    frames = np.concatenate([config.normals, config.tangents])  # row i: direction of coordinate i
    owner = np.concatenate([np.arange(K), np.arange(K)])
    cache = {}
    M = np.empty((2 * K, 2 * K))
    for i in range(2 * K):
        for j in range(i, 2 * K):
            delta = config.points[owner[j]] - config.points[owner[i]]
            s = float(np.hypot(*delta))
            key = round(s, 12)
            if key not in cache:
                cache[key] = pair_gradient_tensor(profile, s, order)
            g_par, g_perp = cache[key]
            if s > 0:
                u = delta / s
                G = g_par * np.outer(u, u) + g_perp * (np.eye(2) - np.outer(u, u))
            else:
                G = 0.5 * (g_par + g_perp) * np.eye(2)
            M[i, j] = M[j, i] = frames[i] @ G @ frames[j]
    return M
