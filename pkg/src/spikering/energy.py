"""Reduced energy of a spike ring, its projections and the F(α) landscape.

Sign conventions used throughout:

* ``reduced_gradient`` is the exact gradient of J in the (f, g) coordinates.
* ``projected_error_leading`` returns P_k = ∫ E Z_k at leading order, the
  force on spike k; for the exact energy P ≈ -∇J.
* Near a balanced ring P(q) ≈ P(0) + a0 m R^{-m-2} T q, so the fixed point
  solves T q = -(a0 m)^{-1} R^{m+2} Φ(q) + γ' q1 with Φ(q) = P(q) - a0 m R^{-m-2} T q.
  The reported multiplier is γ = -a0 m R^{-m-2} γ', normalized so that
  ∇J ≈ γ q1 and sign(γ) = sign(dF/dα).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .configuration import PerturbationVector, SpikeConfig, build_config, min_separation
from .errors import (
    GridTooCoarse,
    NotContracting,
    RegimeViolated,
    SeparationTooSmall,
    SpikeRingError,
    ValidationError,
)
from .groundstate import InteractionFunction
from .potential import PotentialModel, cond_m
from .reduced_linear import build_T, solve_constrained_q1

__all__ = [
    "EnergyReport",
    "reduced_energy",
    "reduced_gradient",
    "projected_error_leading",
    "projected_error_frame",
    "direct_energy",
    "energy_error_scale",
    "solve_reduced_q",
    "ReducedQ",
    "scan_F",
    "ScanResult",
]


@dataclass(frozen=True)
class EnergyReport:
    J_total: float
    term_const: float
    term_potential: float
    term_interaction: float
    direct_quadrature: float | None = None

    @property
    def remainder(self):
        if self.direct_quadrature is None:
            return None
        return self.direct_quadrature - self.J_total

    @property
    def J_excess(self):
        """J - K I0, free of the large constant."""
        return self.term_potential + self.term_interaction


def _pair_geometry(points):
    diff = points[:, None, :] - points[None, :, :]  # Q_i - Q_j
    dist = np.hypot(diff[..., 0], diff[..., 1])
    return diff, dist


def _check_separation(config):
    if config.K > 1:
        rho = min_separation(config)
        if rho < 1.0:
            raise SeparationTooSmall(f"ρ = {rho:.4g} < 1")


def _potential_terms(config, m, constants, potential):
    """(Σ potential energy, per-spike gradient of it) as used by J."""
    P = config.points
    if potential is None:
        r = np.hypot(P[:, 0], P[:, 1])
        energy = constants.a0 * np.sum(r ** (-m))
        grad = (-m * constants.a0 * r ** (-m - 2.0))[:, None] * P
    else:
        half_mass = 0.5 * constants.mass2
        energy = half_mass * np.sum(potential.excess(P[:, 0], P[:, 1]))
        gx, gy = potential.gradient(P[:, 0], P[:, 1])
        grad = half_mass * np.column_stack([gx, gy])
    return float(energy), grad


def reduced_energy(config: SpikeConfig, m, constants, profile, potential: PotentialModel | None = None,
                   with_direct=False, grid_step=0.1, padding=15.0):
    """J = K I0 + potential term - (γ0/2) Σ_{i≠j} w(|Q_i - Q_j|).

    The potential term is a0 Σ|Q_j|^{-m} for ``potential=None`` and
    (∫w²/2) Σ (V(Q_j) - V_inf) otherwise. ``with_direct`` also evaluates the
    full functional on a grid (N = 2); when no potential is given the
    direct evaluation uses V = 1 + a/|x|^m.
    """
    _check_separation(config)
    K = config.K
    term_const = K * constants.I0
    term_pot, _ = _potential_terms(config, m, constants, potential)
    _, dist = _pair_geometry(config.points)
    iu = np.triu_indices(K, 1)
    wvals = profile(dist[iu]) if K > 1 else np.zeros(0)
    term_int = -constants.gamma0 * float(np.sum(wvals))  # each unordered pair counted twice, halved
    direct = None
    if with_direct:
        pot = potential if potential is not None else PotentialModel.radial(a=constants.a, m=m)
        direct = direct_energy(config, pot, profile, grid_step=grid_step, padding=padding)
    total = term_const + term_pot + term_int
    return EnergyReport(float(total), float(term_const), term_pot, term_int, direct)


def reduced_gradient(config: SpikeConfig, m, constants, profile, potential=None):
    """∂J/∂(f_1..f_K, g_1..g_K) by the chain rule through Q_j(f_j, g_j)."""
    _check_separation(config)
    _, grad = _potential_terms(config, m, constants, potential)
    K = config.K
    if K > 1:
        diff, dist = _pair_geometry(config.points)
        np.fill_diagonal(dist, np.inf)
        _, dw = profile.eval(np.where(np.isfinite(dist), dist, 0.0))
        coef = np.where(np.isfinite(dist), dw / dist, 0.0)
        # d/dQ_k of -(γ0/2) Σ_{i≠j} w(|Q_i - Q_j|) = -γ0 Σ_j w'(|Q_k - Q_j|) (Q_k - Q_j)/|Q_k - Q_j|
        grad = grad - constants.gamma0 * np.einsum("kj,kjc->kc", coef, diff)
    gf = np.sum(grad * config.normals, axis=1)
    gg = np.sum(grad * config.tangents, axis=1)
    return np.concatenate([gf, gg])


def _interaction(profile, constants, psi):
    if isinstance(psi, InteractionFunction):
        return psi
    return InteractionFunction(profile, constants, mode=psi or "quadrature")


def projected_error_leading(config: SpikeConfig, m, constants, profile, potential=None, psi=None):
    """Leading projected error per spike as a (K, 2) array of (n_k, t_k) components.

    P_k = a0 m |Q_k|^{-m-1} Q_k/|Q_k| + Σ_{j≠k} Ψ(|Q_j - Q_k|)(Q_j - Q_k)/|Q_j - Q_k|,
    with the first term replaced by -(∫w²/2) ∇V(Q_k) when a potential is given.
    ``psi`` is an :class:`InteractionFunction` or a mode name.
    """
    P = config.points
    if potential is None:
        r = np.hypot(P[:, 0], P[:, 1])
        force = (constants.a0 * m * r ** (-m - 2.0))[:, None] * P
    else:
        gx, gy = potential.gradient(P[:, 0], P[:, 1])
        force = -0.5 * constants.mass2 * np.column_stack([gx, gy])
    K = config.K
    if K > 1:
        model = _interaction(profile, constants, psi)
        diff, dist = _pair_geometry(P)  # diff[k, j] = Q_k - Q_j
        iu = np.triu_indices(K, 1)
        vals = np.zeros((K, K))
        vals[iu] = model(dist[iu])
        vals = vals + vals.T
        np.fill_diagonal(dist, 1.0)
        force = force - np.einsum("kj,kjc->kc", vals / dist, diff)
    return np.column_stack([np.sum(force * config.normals, axis=1), np.sum(force * config.tangents, axis=1)])


def projected_error_frame(config: SpikeConfig, m, constants, dhat, R):
    """Linearized projected error -a0 R^{-m-2} {bracket} per spike, (K, 2) array.

    The bracket is written with the difference quotients of q:
    normal   -(m+1) f + (f̈ - ḡ/2) + d̂ (f + ḡ/2)
    tangent  g + (f̄/2 - g) - d̂ (f̄/2 + g̈)
    """
    q = config.q
    f, g = q.f, q.g
    normal = -(m + 1.0) * f + (q.fddot - 0.5 * q.gbar) + dhat * (f + 0.5 * q.gbar)
    tangent = g + (0.5 * q.fbar - g) - dhat * (0.5 * q.fbar + q.gddot)
    scale = -constants.a0 * R ** (-m - 2.0)
    return scale * np.column_stack([normal, tangent])


# -------------------------------------------------------------- direct energy

def energy_error_scale(K, d, R, m, p):
    """K e^{-min(2, (p+1)/2) d} + K R^{-2m}."""
    return K * math.exp(-min(2.0, 0.5 * (p + 1.0)) * d) + K * R ** (-2.0 * m)


def _grid_energy(config, potential, profile, step, padding, gradient, chunk=200_000):
    P = config.points
    lo = P.min(axis=0) - padding
    hi = P.max(axis=0) + padding
    nx = int(math.ceil((hi[0] - lo[0]) / step)) + 1
    ny = int(math.ceil((hi[1] - lo[1]) / step)) + 1
    xs = lo[0] + step * np.arange(nx)
    ys = lo[1] + step * np.arange(ny)
    p = profile.p
    table = profile.table()
    cutoff = padding + 10.0
    grad2 = pot = nonlin = 0.0
    if gradient == "fd":
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        U, _, _ = kernels.spike_field(P[:, 0], P[:, 1], X.ravel(), Y.ravel(), *table, cutoff=cutoff)
        U = U.reshape(X.shape)
        Ux, Uy = np.gradient(U, step, step)
        V = potential(X, Y)
        grad2 = float(np.sum(Ux ** 2 + Uy ** 2))
        pot = float(np.sum(V * U ** 2))
        nonlin = float(np.sum(np.maximum(U, 0.0) ** (p + 1)))
    elif gradient == "analytic":
        rows = max(1, chunk // ny)
        for start in range(0, nx, rows):
            X, Y = np.meshgrid(xs[start:start + rows], ys, indexing="ij")
            x, y = X.ravel(), Y.ravel()
            U, Ux, Uy = kernels.spike_field(P[:, 0], P[:, 1], x, y, *table, cutoff=cutoff)
            grad2 += float(np.sum(Ux * Ux + Uy * Uy))
            pot += float(np.sum(potential(x, y) * U * U))
            nonlin += float(np.sum(np.maximum(U, 0.0) ** (p + 1)))
    else:
        raise ValidationError(f"unknown gradient mode {gradient!r}")
    area = step * step
    return area * (0.5 * (grad2 + pot) - nonlin / (p + 1.0))


def direct_energy(config: SpikeConfig, potential, profile, grid_step=0.1, padding=15.0,
                  gradient="analytic", check=True, rtol=1e-4):
    """E(U) = ½∫(|∇U|² + V U²) - ∫U_+^{p+1}/(p+1) for U = Σ w(· - Q_j), N = 2.

    The default takes ∇U from w' (the uniform-grid sum is then spectrally
    accurate); ``gradient="fd"`` uses second-order central differences.
    ``potential=None`` means V ≡ 1. With ``check`` the step is halved and
    :class:`GridTooCoarse` raised if the two values differ by more than rtol;
    the finer value is returned.
    """
    if profile.dim != 2:
        raise ValidationError("direct energy is implemented for N = 2 only")
    if padding < 15.0:
        raise ValidationError("padding must be at least 15")
    if potential is None:
        potential = lambda x, y: np.ones_like(x)  # noqa: E731
    e1 = _grid_energy(config, potential, profile, grid_step, padding, gradient)
    if not check:
        return e1
    e2 = _grid_energy(config, potential, profile, 0.5 * grid_step, padding, gradient)
    if abs(e1 - e2) > rtol * abs(e2):
        raise GridTooCoarse(f"halving the step changed E by {abs(e1 - e2) / abs(e2):.2e} relative")
    return e2


# -------------------------------------------------------- secondary reduction

@dataclass
class ReducedQ:
    q: PerturbationVector
    gamma: float
    iterations: int
    converged: bool = True
    contraction: float = 0.0
    steps: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.q, self.gamma, self.iterations))

    @property
    def in_Lambda_K(self):
        return self.q.norm_star() <= 1.0


def solve_reduced_q(alpha, K, m, potential, balance, constants, profile, max_iter=50, tol=1e-10,
                    psi=None, force=False):
    """Fixed point of q -> T^{-1}[-(a0 m)^{-1} R^{m+2} Φ(q)] with the q1 multiplier.

    Starts from q = 0; converged when the step's ‖·‖* falls below ``tol``.
    Raises :class:`NotContracting` after 5 consecutive non-decreasing steps.
    """
    if potential is not None and not force and not cond_m(profile.p, potential.m, potential.sigma):
        raise RegimeViolated("min{1,(p-1)/2} m > 2 and σ > 2 fail; pass force=True to iterate anyway")
    R = balance.R
    op = build_T(K, balance.dhat, m)
    model = _interaction(profile, constants, psi or balance.psi_mode)
    lin = constants.a0 * m * R ** (-m - 2.0)
    q = np.zeros(2 * K)
    steps = []
    gamma_prime = 0.0
    rising = 0
    for it in range(1, max_iter + 1):
        cfg = build_config(K, R, alpha, q, allow_outside=True)
        P = projected_error_leading(cfg, m, constants, profile, potential, model)
        Pvec = np.concatenate([P[:, 0], P[:, 1]])
        phi = Pvec - lin * op.matvec(q)
        q_new, gamma_prime = solve_constrained_q1(op, -phi / lin, R, q, constants.c0)
        step = PerturbationVector.from_vector(q_new - q).norm_star()
        steps.append(step)
        q = q_new
        if step <= tol:
            ratios = [b / a for a, b in zip(steps[:-1], steps[1:]) if a > 0]
            return ReducedQ(PerturbationVector.from_vector(q), -lin * gamma_prime, it, True,
                            max(ratios) if ratios else 0.0, steps)
        if len(steps) > 1 and step >= steps[-2]:
            rising += 1
            if rising >= 5:
                raise NotContracting(f"step norms did not decrease for 5 iterations (last {step:.3e})")
        else:
            rising = 0
    raise NotContracting(f"no convergence within {max_iter} iterations (last step {steps[-1]:.3e})")


@dataclass
class ScanResult:
    alpha: np.ndarray
    F: np.ndarray
    F_excess: np.ndarray
    gamma: np.ndarray
    iterations: np.ndarray
    q_norm_star: np.ndarray
    converged: np.ndarray
    extrema: list
    flat: bool

    def rows(self):
        return [
            {"alpha": a, "F": f, "gamma": g, "iterations": int(i), "q_norm_star": n, "converged": bool(c)}
            for a, f, g, i, n, c in zip(self.alpha, self.F, self.gamma, self.iterations,
                                        self.q_norm_star, self.converged)
        ]

    def gamma_sign_changes(self):
        """α positions (linear interpolation) where γ changes sign, cyclically."""
        ok = self.converged
        a, g = self.alpha[ok], self.gamma[ok]
        out = []
        n = a.shape[0]
        period = 2.0 * math.pi
        for i in range(n):
            j = (i + 1) % n
            if g[i] == 0.0:
                out.append(float(a[i]))
            elif g[i] * g[j] < 0:
                aj = a[j] + (period if j == 0 else 0.0)
                out.append(float((a[i] - g[i] * (aj - a[i]) / (g[j] - g[i])) % period))
        return out


def _find_extrema(alpha, values):
    """Cyclic 3-point extrema with parabolic refinement."""
    n = values.shape[0]
    step = alpha[1] - alpha[0]
    out = []
    for i in range(n):
        a, b, c = values[i - 1], values[i], values[(i + 1) % n]
        if b > a and b >= c:
            kind = "max"
        elif b < a and b <= c:
            kind = "min"
        else:
            continue
        denom = a - 2.0 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
        peak = b - 0.25 * (a - c) * shift
        out.append({"kind": kind, "alpha": float((alpha[i] + shift * step) % (2.0 * math.pi)),
                    "index": i, "F_excess": float(peak)})
    return out


def scan_F(K, m, potential, balance, constants, profile, n_alpha=64, psi=None, tol=1e-10,
           max_iter=50, workers=1, flat_rtol=1e-10, force=False):
    """F(α) = J(Q(α, q(α))) on a uniform α grid of [0, 2π).

    Extrema are located on F - K I0 so the constant does not swamp the
    variation. Failed α's are marked and excluded.
    """
    if n_alpha < 16:
        raise ValidationError("n_alpha must be at least 16")
    alphas = 2.0 * math.pi * np.arange(n_alpha) / n_alpha
    model = _interaction(profile, constants, psi or balance.psi_mode)

    def one(alpha):
        try:
            res = solve_reduced_q(alpha, K, m, potential, balance, constants, profile, max_iter, tol,
                                  model, force)
        except SpikeRingError:
            return alpha, np.nan, np.nan, np.nan, max_iter, np.nan, False
        cfg = build_config(K, balance.R, alpha, res.q, allow_outside=True)
        rep = reduced_energy(cfg, m, constants, profile, potential)
        return alpha, rep.J_total, rep.J_excess, res.gamma, res.iterations, res.q.norm_star(), True

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, alphas))
    else:
        rows = [one(a) for a in alphas]
    cols = list(zip(*rows))
    F = np.array(cols[1], dtype=float)
    Fx = np.array(cols[2], dtype=float)
    ok = np.array(cols[6], dtype=bool)
    finite = Fx[ok]
    # flatness is judged on F - K I0, the part that can vary with α
    spread = float(np.max(finite) - np.min(finite)) if ok.any() else np.nan
    flat = bool(ok.any() and spread <= flat_rtol * np.max(np.abs(finite)))
    if flat or not ok.any():
        extrema = []
        if ok.any():
            idx = np.flatnonzero(ok)
            for kind, i in (("max", idx[np.argmax(finite)]), ("min", idx[np.argmin(finite)])):
                extrema.append({"kind": kind, "alpha": float(alphas[i]), "index": int(i),
                                "F_excess": float(Fx[i])})
    else:
        extrema = _find_extrema(alphas[ok], finite)
    return ScanResult(alphas, F, Fx, np.array(cols[3], dtype=float), np.array(cols[4]),
                      np.array(cols[5], dtype=float), ok, extrema, flat)
