"""Balancing of the potential's outward force against neighbour attraction.

For a ring of K spikes at spacing d the balance reads

    d^{m+1} Ψ(d) = a0 m (2 sin(π/K))^m,     R = d / (2 sin(π/K)),

and is solved in log form for d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import NoBracket, ValidationError
from .groundstate import psi_and_derivative

__all__ = ["BalanceResult", "solve_balance", "asymptotic_d", "balance_sweep", "default_psi_mode"]

ASYMPTOTIC_ABOVE_K = 500


@dataclass(frozen=True)
class BalanceResult:
    K: int
    m: float
    d: float
    R: float
    dhat: float
    residual: float
    rel_residual: float
    psi_mode: str
    iterations: int = 0

    def to_dict(self):
        return asdict(self)


def default_psi_mode(K):
    return "asymptotic" if K > ASYMPTOTIC_ABOVE_K else "quadrature"


def asymptotic_d(K, m, N=2):
    """Leading two terms m ln K + (m - (N-3)/2) ln(m ln K) of the balanced spacing."""
    if K < 8:
        raise ValidationError(f"K must be >= 8, got {K}")
    lk = m * math.log(K)
    return lk + (m - 0.5 * (N - 3)) * math.log(lk)


def _psi_model(profile, constants, mode):
    """Return s -> (log Ψ(s), Ψ'(s)/Ψ(s))."""
    if mode == "asymptotic":
        half = 0.5 * (profile.dim - 1)
        log_amp = math.log(constants.gamma0 * profile.c_np)

        def model(s):
            return log_amp - half * math.log(s) - s, -1.0 - half / s
    elif mode == "quadrature":
        def model(s):
            val, der = psi_and_derivative(profile, s, check=False)
            if not val > 0:
                raise NoBracket(f"Ψ({s}) is not positive")
            return math.log(val), der / val
    else:
        raise ValidationError(f"unknown psi_mode {mode!r}")
    return model


def _safeguarded_newton(fun, lo, hi, xtol=1e-14, ftol=1e-14, max_iter=200):
    """Newton steps kept inside a shrinking sign-change bracket, bisecting when they leave it."""
    f_lo, _ = fun(lo)
    f_hi, _ = fun(hi)
    if f_lo == 0:
        return lo, 0
    if f_hi == 0:
        return hi, 0
    if f_lo * f_hi > 0:
        raise NoBracket(f"no sign change of the balance function on [{lo:.4g}, {hi:.4g}]")
    if f_lo > 0:
        lo, hi = hi, lo  # keep fun(lo) < 0
    x = 0.5 * (lo + hi)
    for it in range(1, max_iter + 1):
        fx, dfx = fun(x)
        if abs(fx) <= ftol:
            return x, it
        if fx < 0:
            lo = x
        else:
            hi = x
        step = fx / dfx if dfx != 0 else np.inf
        x_new = x - step
        if not (min(lo, hi) < x_new < max(lo, hi)):
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= xtol * abs(x_new):
            return x_new, it
        x = x_new
    raise NoBracket("balance root finder did not converge")


def solve_balance(K, m, constants, profile, psi_mode=None):
    """Solve the balancing condition for d, R and d̂.

    ``psi_mode`` is ``"quadrature"`` (tensor quadrature of Ψ), ``"asymptotic"``
    (γ0 c_Np s^{-(N-1)/2} e^{-s}) or None for the K-dependent default.
    """
    if K < 8 or int(K) != K:
        raise ValidationError(f"K must be an integer >= 8, got {K}")
    if not m > 0:
        raise ValidationError(f"m must be positive, got {m}")
    K = int(K)
    mode = psi_mode or default_psi_mode(K)
    model = _psi_model(profile, constants, mode)
    chord = 2.0 * math.sin(math.pi / K)
    log_rhs = math.log(constants.a0 * m) + m * math.log(chord)

    def g(d):
        lp, dlp = model(d)
        return (m + 1.0) * math.log(d) + lp - log_rhs, (m + 1.0) / d + dlp

    lo, hi = math.log(K), 10.0 * m * math.log(K)
    if mode == "quadrature":
        hi = min(hi, 2.0 * profile.r_max - 10.0)
    if hi <= lo:
        raise NoBracket(f"empty search interval [{lo:.4g}, {hi:.4g}]")
    d, iters = _safeguarded_newton(g, lo, hi)

    lp, dlp = model(d)
    rhs = math.exp(log_rhs)
    lhs = math.exp((m + 1.0) * math.log(d) + lp)
    return BalanceResult(
        K=K, m=float(m), d=d, R=d / chord, dhat=-dlp * d,
        residual=lhs - rhs, rel_residual=(lhs - rhs) / rhs, psi_mode=mode, iterations=iters,
    )


def balance_sweep(Ks, m, constants, profile, psi_mode=None):
    """Rows of (K, d, R, dhat, residual, asymptotic_d) for each K."""
    rows = []
    for K in Ks:
        res = solve_balance(K, m, constants, profile, psi_mode)
        rows.append({
            "K": res.K, "d": res.d, "R": res.R, "dhat": res.dhat,
            "residual": res.rel_residual, "asymptotic_d": asymptotic_d(K, m, profile.dim),
            "psi_mode": res.psi_mode,
        })
    return rows
