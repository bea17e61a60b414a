"""The periodic limit system of the reduced operator.

    -(m+1) f + (f'' - g') + d̂ (f + g') = φ
    g + (f' - g) - d̂ (f' + g'')        = ϕ,     f, g 2π-periodic,

solved constructively: with h = d̂(f + g') the second equation integrates to
h = f - ∫_0^θ ϕ - c_h, the first becomes f'' - c² f = RHS with
c² = m - 1 + 1/d̂, and g is recovered from g' = h/d̂ - f with ∫g = 0.
Antiderivatives and the f solve are spectral on a uniform periodic grid.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DhatTooSmall, NonZeroMeanForcing, ValidationError
from .reduced_linear import build_T, solve_constrained

__all__ = [
    "ContinuumSolution",
    "solve_continuum",
    "green_G0",
    "solve_f_green",
    "compare_discrete",
    "continuum_residual",
    "parse_forcing",
]

TWO_PI = 2.0 * math.pi


def _wavenumbers(M):
    return np.fft.rfftfreq(M, d=1.0 / M)


def _antiderivative(values):
    """∫_0^θ of a mean-zero periodic sample, spectrally; returns samples at the grid."""
    M = values.shape[0]
    F = np.fft.rfft(values)
    k = _wavenumbers(M)
    A = np.zeros_like(F)
    A[1:] = F[1:] / (1j * k[1:])
    if M % 2 == 0:
        A[-1] = 0.0  # the Nyquist mode has no well-defined odd derivative
    out = np.fft.irfft(A, M)
    return out - out[0]


def _derivative(values, order=1):
    M = values.shape[0]
    F = np.fft.rfft(values)
    k = _wavenumbers(M)
    D = (1j * k) ** order * F
    if M % 2 == 0 and order % 2 == 1:
        D[-1] = 0.0
    return np.fft.irfft(D, M)


def _trig_eval(values, theta):
    """Evaluate the trigonometric interpolant of periodic samples at arbitrary θ."""
    M = values.shape[0]
    F = np.fft.rfft(values) / M
    k = _wavenumbers(M)
    w = np.full(k.shape, 2.0)
    w[0] = 1.0
    if M % 2 == 0:
        w[-1] = 1.0
    theta = np.asarray(theta, dtype=np.float64)
    phase = np.outer(theta.ravel(), k)
    out = np.cos(phase) @ (w * F.real) - np.sin(phase) @ (w * F.imag)
    return out.reshape(theta.shape)


@dataclass(frozen=True, eq=False)
class ContinuumSolution:
    theta: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    c: float
    c_h: float
    c_g: float
    m: float
    dhat: float
    phi: np.ndarray
    varphi: np.ndarray

    @property
    def M(self):
        return self.theta.shape[0]

    def f_at(self, theta):
        return _trig_eval(self.f, theta)

    def g_at(self, theta):
        return _trig_eval(self.g, theta)

    def derivative(self, which="f", order=1):
        return _derivative(getattr(self, which), order)

    def mean_f(self):
        return float(np.mean(self.f))

    def rows(self):
        return [{"theta": t, "f": a, "g": b} for t, a, b in zip(self.theta, self.f, self.g)]


def _sample(func, theta):
    if callable(func):
        return np.asarray(func(theta), dtype=np.float64) * np.ones_like(theta)
    arr = np.asarray(func, dtype=np.float64)
    if arr.shape != theta.shape:
        raise ValidationError("sampled forcing must match the grid")
    return arr


def solve_continuum(phi, varphi, m, dhat, M=1024, mean_tol=1e-12):
    """Solve the periodic system for (f, g) with ∫g = 0 on an M-point uniform grid.

    ``phi`` and ``varphi`` are vectorized callables of θ (or arrays of M samples).
    """
    if M < 16:
        raise ValidationError("M must be at least 16")
    if not dhat > m + 1.0:
        raise DhatTooSmall(f"d̂ = {dhat} must exceed m + 1")
    theta = TWO_PI * np.arange(M) / M
    ph = _sample(phi, theta)
    vp = _sample(varphi, theta)
    scale = max(1.0, float(np.max(np.abs(vp))))
    if abs(np.mean(vp)) > mean_tol * scale:
        raise NonZeroMeanForcing(f"∫ϕ = {TWO_PI * np.mean(vp):.3e} is not zero")
    vp = vp - np.mean(vp)

    c2 = m - 1.0 + 1.0 / dhat
    c = math.sqrt(c2)
    int_phi = TWO_PI * np.mean(ph)
    int_f = int_phi / (dhat - 1.0 - m)

    Vp = _antiderivative(vp)  # ∫_0^θ ϕ
    int_Vp = TWO_PI * np.mean(Vp)
    rhs = (ph - (dhat - 1.0) ** 2 / (dhat * (dhat - 1.0 - m)) * int_phi / TWO_PI
           + (dhat - 1.0) / dhat * (Vp - int_Vp / TWO_PI))

    k = _wavenumbers(M)
    f = np.fft.irfft(-np.fft.rfft(rhs) / (k ** 2 + c2), M)

    c_h = (1.0 - dhat) / TWO_PI * int_f - int_Vp / TWO_PI
    h = f - Vp - c_h
    gp = h / dhat - f
    G = _antiderivative(gp - np.mean(gp))
    c_g = -np.mean(G)
    g = G + c_g
    return ContinuumSolution(theta, f, g, h, c, float(c_h), float(c_g), float(m), float(dhat), ph, vp)


def continuum_residual(sol: ContinuumSolution):
    """Sup norm of both equations evaluated by spectral differentiation."""
    f, g = sol.f, sol.g
    fp, fpp = _derivative(f, 1), _derivative(f, 2)
    gp, gpp = _derivative(g, 1), _derivative(g, 2)
    r1 = -(sol.m + 1.0) * f + (fpp - gp) + sol.dhat * (f + gp) - sol.phi
    r2 = g + (fp - g) - sol.dhat * (fp + gpp) - sol.varphi
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


def green_G0(theta, s, c):
    """Periodic Green's function of -d²/dθ² + c² on [0, 2π]."""
    theta = np.asarray(theta, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if not c > 0:
        raise ValidationError("c must be positive")
    e = math.exp(TWO_PI * c)
    pre = 1.0 / (2.0 * c * (e - 1.0))
    x = theta - s
    below = pre * (e * np.exp(c * x) + np.exp(-c * x))
    above = pre * (np.exp(c * x) + e * np.exp(-c * x))
    out = np.where(theta <= s, below, above)
    return out if out.ndim else float(out)


def solve_f_green(rhs_samples, c, theta_out=None, order=48):
    """f = -∫ G0(θ, s) RHS(s) ds, the solution of f'' - c² f = RHS.

    The integral is split at s = θ where G0 has its kink and each side is
    integrated by Gauss-Legendre on the trigonometric interpolant of RHS.
    """
    M = rhs_samples.shape[0]
    if theta_out is None:
        theta_out = TWO_PI * np.arange(M) / M
    x, w = np.polynomial.legendre.leggauss(order)
    out = np.empty(len(theta_out))
    for i, th in enumerate(theta_out):
        total = 0.0
        for a, b in ((0.0, th), (th, TWO_PI)):
            if b - a <= 0:
                continue
            for lo, hi in zip(np.linspace(a, b, 5)[:-1], np.linspace(a, b, 5)[1:]):
                s = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
                total += 0.5 * (hi - lo) * np.sum(w * green_G0(th, s, c) * _trig_eval(rhs_samples, s))
        out[i] = -total
    return out


def compare_discrete(K, phi, varphi, m, dhat, M=None):
    """Sup errors between the discrete constrained solve and the continuum solution at θ_j.

    b = (φ(θ_j), ϕ(θ_j)) with θ_j = 2π(j-1)/K; the discrete g is projected to
    mean zero to match ∫g = 0.
    """
    K = int(K)
    if M is None:
        M = K * max(4, int(math.ceil(1024 / K)))
    if M % K:
        raise ValidationError("M must be a multiple of K")
    theta_j = TWO_PI * np.arange(K) / K
    bf = _sample(phi, theta_j)
    bg = _sample(varphi, theta_j)
    q, _gamma = solve_constrained(build_T(K, dhat, m), np.concatenate([bf, bg]))
    f_d, g_d = q[:K], q[K:] - np.mean(q[K:])
    sol = solve_continuum(phi, varphi, m, dhat, M)
    stride = M // K
    return (float(np.max(np.abs(f_d - sol.f[::stride]))),
            float(np.max(np.abs(g_d - sol.g[::stride]))))


_ALLOWED = {"cos": np.cos, "sin": np.sin}


def parse_forcing(spec):
    """Parse a forcing such as ``"cos 3 + 0.5 sin 1"`` or ``"0"`` into a callable.

    Terms are ``[coef] (cos|sin) k`` or a constant, joined by ``+``/``-``.
    """
    if isinstance(spec, (int, float)):
        if spec != 0:
            raise ValidationError("a numeric forcing must be 0")
        return lambda t: np.zeros_like(np.asarray(t, dtype=np.float64))
    text = re.sub(r"-\s+", "-", str(spec)).replace("-", "+-").strip()
    terms = []
    for raw in filter(None, (t.strip() for t in text.split("+"))):
        parts = raw.split()
        if len(parts) == 1:
            try:
                terms.append((float(parts[0]), _ALLOWED["cos"], 0))  # constant term
                continue
            except ValueError as exc:
                raise ValidationError(f"cannot parse forcing term {raw!r}") from exc
        if len(parts) == 2:
            coef, (fn, k) = (-1.0 if parts[0].startswith("-") else 1.0), (parts[0].lstrip("-"), parts[1])
        elif len(parts) == 3:
            coef, fn, k = parts
        else:
            raise ValidationError(f"cannot parse forcing term {raw!r}")
        try:
            coef = -1.0 if coef == "-" else float(coef)
            k = int(k)
        except ValueError as exc:
            raise ValidationError(f"cannot parse forcing term {raw!r}") from exc
        if fn not in _ALLOWED:
            raise ValidationError(f"unknown function {fn!r} in forcing")
        terms.append((coef, _ALLOWED[fn], k))

    def forcing(t):
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros_like(t)
        for coef, fn, k in terms:
            out = out + coef * fn(k * t)
        return out

    forcing.terms = terms
    return forcing
