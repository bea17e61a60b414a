"""Radial ground state of -Δw + w - w^p = 0 and the constants derived from it.

The profile is found by shooting on w(0): bisection brackets the value that
separates solutions crossing zero from solutions turning back up, then a
two-sided match (forward from the origin, inward from ``r_max`` starting on
the decaying modified-Bessel solution) polishes it past the point where the
forward integration loses the decaying branch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy import integrate, optimize, special
from scipy.interpolate import CubicHermiteSpline

from . import kernels
from .errors import (
    NonSubcriticalExponent,
    OutOfTabulatedRange,
    QuadratureNotConverged,
    ShootingFailed,
    ValidationError,
)

__all__ = [
    "GroundStateProfile",
    "ModelConstants",
    "InteractionFunction",
    "solve_ground_state",
    "derive_constants",
    "psi",
    "psi_and_derivative",
    "psi_log_derivative",
    "sphere_area",
]

_ODE_RTOL = 1e-13
_ODE_ATOL = 1e-15
# log of the relative size below which integrands are dropped
_CUT = 40.0


def sphere_area(dim):
    """Surface measure of the unit sphere S^{dim-1}."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def composite_gauss(a, b, order, panel=1.0):
    """Nodes and weights of composite Gauss-Legendre on [a, b]."""
    n_panels = max(1, int(math.ceil((b - a) / panel - 1e-12)))
    edges = np.linspace(a, b, n_panels + 1)
    x, wt = np.polynomial.legendre.leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


def _cylinder_grid(x1_range, rho_max, dim, order):
    """Tensor nodes in (x1, rho) with the transverse measure folded into the weights."""
    x1, w1 = composite_gauss(x1_range[0], x1_range[1], order)
    rho, w2 = composite_gauss(0.0, rho_max, order)
    w2 = w2 * sphere_area(dim - 1) * rho ** (dim - 2) if dim > 2 else 2.0 * w2
    X1, RHO = np.meshgrid(x1, rho, indexing="ij")
    W = np.outer(w1, w2)
    return X1.ravel(), RHO.ravel(), W.ravel()


@dataclass(frozen=True, eq=False)
class GroundStateProfile:
    """Tabulated radial ground state on a uniform grid ``r = i*h``.

    Beyond ``r_max`` the profile continues as ``tail_amp * r**-nu * K_nu(r)``
    with ``nu = (N-2)/2``, the decaying solution of the linearized equation.
    """

    dim: int
    p: float
    r: np.ndarray
    w: np.ndarray
    dw: np.ndarray
    d2w: np.ndarray
    c_np: float
    tail_amp: float
    tol: float = 1e-12

    @property
    def h(self):
        return float(self.r[1] - self.r[0])

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def w0(self):
        return float(self.w[0])

    @property
    def nu(self):
        return 0.5 * (self.dim - 2)

    def table(self):
        return self.h, self.w, self.dw, self.d2w, self.tail_amp, self.nu

    def eval(self, r):
        """Return (w(r), w'(r)) for scalar or array r >= 0."""
        r_arr = np.asarray(r, dtype=np.float64)
        vw, vdw = kernels.radial_eval(r_arr.ravel(), *self.table())
        if r_arr.ndim == 0:
            return float(vw[0]), float(vdw[0])
        return vw.reshape(r_arr.shape), vdw.reshape(r_arr.shape)

    def __call__(self, r):
        return self.eval(r)[0]

    def second_derivative(self, r):
        """w'' from the equation itself, using the interpolated w and w'."""
        r_arr = np.asarray(r, dtype=np.float64)
        vw, vdw = self.eval(r_arr)
        safe = np.where(r_arr > 0, r_arr, 1.0)
        out = -(self.dim - 1) * vdw / safe + vw - np.abs(vw) ** self.p
        return np.where(r_arr > 0, out, self.d2w[0])

    def ode_residual(self):
        """|-w'' - (N-1)/r w' + w - w^p| at interior nodes.

        w'' is a fourth-order central difference of the tabulated w', so the
        residual tests that the stored pair (w, w') is consistent with the
        equation rather than restating it.
        """
        h = self.h
        dw = self.dw
        d2 = (-dw[4:] + 8.0 * dw[3:-1] - 8.0 * dw[1:-3] + dw[:-4]) / (12.0 * h)
        r = self.r[2:-2]
        w = self.w[2:-2]
        return np.abs(-d2 - (self.dim - 1) / r * dw[2:-2] + w - w ** self.p)

    def asymptotic_ratio(self, r):
        """r^{(N-1)/2} e^r w(r), which tends to c_np."""
        r = np.asarray(r, dtype=np.float64)
        return r ** (0.5 * (self.dim - 1)) * np.exp(r) * self(r)

    # -- serialization -----------------------------------------------------
    def save(self, csv_path, constants: "ModelConstants | None" = None):
        """Write ``r,w,dw`` as CSV plus a JSON header next to it (``.json``)."""
        csv_path = Path(csv_path)
        data = np.column_stack([self.r, self.w, self.dw])
        tmp = csv_path.with_suffix(csv_path.suffix + ".tmp")
        np.savetxt(tmp, data, delimiter=",", header="r,w,dw", comments="", fmt="%.17g")
        tmp.replace(csv_path)
        header = {
            "N": self.dim,
            "p": self.p,
            "c_Np": self.c_np,
            "tail_amp": self.tail_amp,
            "tol": self.tol,
            "constants": None if constants is None else constants.to_dict(),
        }
        json_path = csv_path.with_suffix(".json")
        tmp = json_path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(header, indent=2))
        tmp.replace(json_path)
        return csv_path, json_path

    @classmethod
    def load(cls, csv_path):
        """Inverse of :meth:`save`; returns ``(profile, constants_or_None)``."""
        csv_path = Path(csv_path)
        header = json.loads(csv_path.with_suffix(".json").read_text())
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
        r, w, dw = data[:, 0], data[:, 1], data[:, 2]
        dim, p = int(header["N"]), float(header["p"])
        prof = cls(dim, p, r, w, dw, _second_derivative_nodes(r, w, dw, dim, p),
                   float(header["c_Np"]), float(header["tail_amp"]), float(header.get("tol", 1e-12)))
        consts = header.get("constants")
        return prof, (None if consts is None else ModelConstants(**consts))


@dataclass(frozen=True)
class ModelConstants:
    """Integral constants of the ground state entering the reduced energy."""

    I0: float
    a0: float
    mass2: float
    gamma0: float
    c0: float
    a: float = 1.0
    checks: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return asdict(self)


def _second_derivative_nodes(r, w, dw, dim, p):
    out = np.empty_like(w)
    out[0] = (w[0] - w[0] ** p) / dim
    out[1:] = -(dim - 1) / r[1:] * dw[1:] + w[1:] - np.abs(w[1:]) ** p
    return out


def _validate_exponent(dim, p):
    if dim < 2 or int(dim) != dim:
        raise ValidationError(f"dimension must be an integer >= 2, got {dim}")
    if not p > 1:
        raise NonSubcriticalExponent(f"p must exceed 1, got {p}")
    if dim >= 3 and not p < (dim + 2) / (dim - 2):
        raise NonSubcriticalExponent(f"p={p} is not below the critical exponent {(dim + 2) / (dim - 2)}")


def _rhs(dim, p):
    def f(r, y):
        return [y[1], -(dim - 1) / r * y[1] + y[0] - abs(y[0]) ** p]
    return f


def _series_start(w0, dim, p, r):
    a = (w0 - w0 ** p) / (2.0 * dim)
    b = a * (1.0 - p * w0 ** (p - 1.0)) / (4.0 * (dim + 2.0))
    return [w0 + a * r * r + b * r ** 4, 2.0 * a * r + 4.0 * b * r ** 3]


_R_START = 1e-6


def _classify(w0, dim, p, r_max):
    """+1 if the trajectory crosses zero, -1 if it turns upward, 0 if neither."""
    def crosses(r, y):
        return y[0]
    crosses.terminal = True
    crosses.direction = -1

    def turns(r, y):
        return y[1]
    turns.terminal = True
    turns.direction = 1

    sol = integrate.solve_ivp(_rhs(dim, p), (_R_START, r_max), _series_start(w0, dim, p, _R_START),
                              method="DOP853", rtol=1e-12, atol=1e-14, events=(crosses, turns))
    if sol.t_events[0].size:
        return 1
    if sol.t_events[1].size:
        return -1
    return 0


def _bisect_w0(dim, p, r_max, tol):
    lo, hi = 1.0 + 1e-8, 2.0
    if _classify(lo, dim, p, r_max) != -1:
        raise ShootingFailed("lower shooting bound does not undershoot")
    while _classify(hi, dim, p, r_max) != 1:
        hi *= 2.0
        if hi > 1e6:
            raise ShootingFailed("could not find an overshooting initial value")
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            raise ShootingFailed(f"bisection interval collapsed at width {hi - lo:.3e} > tol")
        c = _classify(mid, dim, p, r_max)
        if c == 0:
            return mid
        if c > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _decaying(r, dim):
    """Decaying solution r^-nu K_nu(r) of the linearized equation and its derivative."""
    nu = 0.5 * (dim - 2)
    return r ** (-nu) * special.kv(nu, r), -r ** (-nu) * special.kv(nu + 1.0, r)


def solve_ground_state(N=2, p=3.0, r_max=40.0, tol=1e-12, step=0.0025, r_match=4.0):
    """Compute the positive radial ground state on ``[0, r_max]``.

    Parameters
    ----------
    N, p : dimension and exponent (subcritical).
    r_max : end of the tabulated grid, at least 40.
    tol : relative width at which the bisection on w(0) stops.
    step : radial grid spacing of the table.
    r_match : radius where the forward and inward integrations are joined.
    """
    _validate_exponent(N, p)
    if r_max < 40:
        raise ValidationError(f"r_max must be >= 40, got {r_max}")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    dim = int(N)
    rhs = _rhs(dim, p)

    w0_bis = _bisect_w0(dim, p, r_max, tol)

    def forward(w0, t_eval=None):
        return integrate.solve_ivp(rhs, (_R_START, r_match), _series_start(w0, dim, p, _R_START),
                                   method="DOP853", rtol=_ODE_RTOL, atol=_ODE_ATOL, t_eval=t_eval)

    k_end, dk_end = _decaying(r_max, dim)

    def inward(amp, t_eval=None):
        return integrate.solve_ivp(rhs, (r_max, r_match), [amp * k_end, amp * dk_end],
                                   method="DOP853", rtol=_ODE_RTOL, atol=1e-30, t_eval=t_eval)

    def mismatch(x):
        f = forward(x[0]).y[:, -1]
        b = inward(x[1]).y[:, -1]
        return [f[0] - b[0], (f[1] - b[1])]

    f_guess = forward(w0_bis).y[:, -1]
    k_m, _ = _decaying(r_match, dim)
    res = optimize.root(mismatch, [w0_bis, f_guess[0] / k_m], method="hybr", options={"xtol": 1e-15})
    if not res.success and np.max(np.abs(res.fun)) > 1e-11:
        raise ShootingFailed(f"matching did not converge: {res.message}")
    w0, amp = float(res.x[0]), float(res.x[1])
    if abs(w0 - w0_bis) > max(1e-6, 1e3 * tol) * w0:
        raise ShootingFailed(f"matched w(0)={w0} strays from bisection value {w0_bis}")

    n = int(round(r_max / step))
    r = np.linspace(0.0, r_max, n + 1)
    w = np.empty(n + 1)
    dw = np.empty(n + 1)
    w[0], dw[0] = w0, 0.0
    left = (r > 0) & (r <= r_match)
    sol = forward(w0, t_eval=r[left])
    w[left], dw[left] = sol.y
    right = r > r_match
    sol = inward(amp, t_eval=r[right][::-1])
    w[right], dw[right] = sol.y[0][::-1], sol.y[1][::-1]
    d2w = _second_derivative_nodes(r, w, dw, dim, p)

    if np.any(w <= 0) or np.any(dw[1:] >= 0):
        raise ShootingFailed("tabulated profile is not positive and decreasing")

    # c_{N,p}: least squares of log w + r + (N-1)/2 log r ~ log c + b/r on the last decade
    sel = r >= r_max - 10.0
    y = np.log(w[sel]) + r[sel] + 0.5 * (dim - 1) * np.log(r[sel])
    A = np.column_stack([np.ones(sel.sum()), 1.0 / r[sel]])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c_np = float(math.exp(coef[0]))

    return GroundStateProfile(dim, float(p), r, w, dw, d2w, c_np, amp, tol)


# ------------------------------------------------------------------ constants

def _radial_integral(profile, values):
    """∫_{R^N} f(|x|) dx by Simpson's rule on the profile grid."""
    r = profile.r
    return sphere_area(profile.dim) * integrate.simpson(values * r ** (profile.dim - 1), x=r)


def _radial_integral_gauss(profile, func, order=10):
    """Same integral by composite Gauss-Legendre on the interpolant (independent route)."""
    r, wt = composite_gauss(0.0, profile.r_max, order)
    return sphere_area(profile.dim) * float(np.sum(wt * func(r) * r ** (profile.dim - 1)))


def _rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _cylinder_integral(profile, integrand, x1_range, rho_max, rtol):
    """2-D tensor Gauss-Legendre in (x1, rho) refined until two orders agree."""
    values = []
    for order in (12, 24):
        X1, RHO, W = _cylinder_grid(x1_range, rho_max, profile.dim, order)
        values.append(float(np.sum(W * integrand(X1, RHO))))
    if _rel(*values) > rtol:
        raise QuadratureNotConverged(f"tensor quadrature refinements differ by {_rel(*values):.2e}")
    return values[-1]


def derive_constants(profile: GroundStateProfile, a=1.0, rtol=1e-6):
    """Compute I0, a0, ∫w², γ0 and c0 = ∫(∂_{x1} w)² for the given profile."""
    if not a > 0:
        raise ValidationError("potential coefficient a must be positive")
    dim, p = profile.dim, profile.p
    w, dw = profile.w, profile.dw

    wp1 = _radial_integral(profile, w ** (p + 1))
    wp1_g = _radial_integral_gauss(profile, lambda r: profile(r) ** (p + 1))
    mass2 = _radial_integral(profile, w ** 2)
    mass2_g = _radial_integral_gauss(profile, lambda r: profile(r) ** 2)
    grad2 = _radial_integral(profile, dw ** 2)

    # γ0 = ∫ w^p e^{-x1}: slowest decay e^{-(p-1)|x|} along -x1
    big = _CUT / (p - 1.0) + 2.0

    def gamma_integrand(x1, rho):
        return profile(np.hypot(x1, rho)) ** p * np.exp(-x1)

    gamma0 = _cylinder_integral(profile, gamma_integrand, (-big, _CUT / (p + 1.0) + 2.0), big, rtol)

    def c0_integrand(x1, rho):
        rr = np.hypot(x1, rho)
        _, d = profile.eval(rr)
        cos2 = np.where(rr > 0, (x1 / np.where(rr > 0, rr, 1.0)) ** 2, 0.0)
        return d * d * cos2

    reach = _CUT / 2.0 + 2.0
    c0 = _cylinder_integral(profile, c0_integrand, (-reach, reach), reach, rtol)

    # radial cross-checks
    nu = 0.5 * dim - 1.0
    r = profile.r[1:]
    sph = (2.0 * math.pi) ** (0.5 * dim) * r ** (-nu) * special.ive(nu, r)  # times e^{r}
    gamma0_radial = integrate.simpson(
        np.concatenate([[0.0], w[1:] ** p * np.exp(r) * sph * r ** (dim - 1)]), x=profile.r)
    if dim == 2:
        gamma0_radial = integrate.simpson(
            2 * math.pi * w ** p * special.ive(0, profile.r) * np.exp(profile.r) * profile.r, x=profile.r)
    checks = {
        "wp1_simpson": wp1, "wp1_gauss": wp1_g,
        "mass2_simpson": mass2, "mass2_gauss": mass2_g,
        "gamma0_radial": float(gamma0_radial),
        "c0_radial": grad2 / dim,
        "pohozaev_gap": _rel(grad2 + mass2, wp1),
    }
    for name, x, y in (("∫w^{p+1}", wp1, wp1_g), ("∫w^2", mass2, mass2_g),
                       ("gamma0", gamma0, gamma0_radial), ("c0", c0, grad2 / dim)):
        if _rel(x, y) > rtol:
            raise QuadratureNotConverged(f"{name}: independent quadratures differ by {_rel(x, y):.2e}")
    I0 = (0.5 - 1.0 / (p + 1.0)) * wp1
    checks = {k: float(v) for k, v in checks.items()}
    return ModelConstants(I0=float(I0), a0=float(0.5 * a * mass2), mass2=float(mass2),
                          gamma0=float(gamma0), c0=float(c0), a=float(a), checks=checks)


# --------------------------------------------------------- interaction function

def _psi_box(profile, s):
    p = profile.p
    reach = _CUT / (p - 1.0) + 1.0
    x1_lo = -(_CUT / (p + 1.0) + 1.0)
    x1_hi = min(reach, (2.0 * s + _CUT) / (p + 1.0) + 1.0)
    rho_hi = min(reach, (_CUT + s) / (p + 1.0) + 1.0)
    return (x1_lo, x1_hi), rho_hi


def _check_range(profile, s):
    if not s > 0:
        raise ValidationError(f"separation must be positive, got {s}")
    if s + 10.0 > 2.0 * profile.r_max:
        raise OutOfTabulatedRange(f"s={s} needs the profile beyond 2*r_max - 10 = {2 * profile.r_max - 10}")
    if math.log(max(profile.c_np, 1e-300)) - s - 0.5 * (profile.dim - 1) * math.log(s) < math.log(1e-300):
        raise OutOfTabulatedRange(f"interaction at s={s} underflows")


def psi_and_derivative(profile: GroundStateProfile, s, order=16, check=True, rtol=1e-8):
    """Return (Ψ(s), Ψ'(s)) by tensor quadrature.

    Ψ' differentiates under the integral sign, so only w, w' and the equation
    for w'' are needed.
    """
    s = float(s)
    _check_range(profile, s)
    x1_range, rho_hi = _psi_box(profile, s)
    orders = (order // 2, order) if check else (order,)
    out = []
    for o in orders:
        X1, RHO, W = _cylinder_grid(x1_range, rho_hi, profile.dim, o)
        out.append(kernels.psi_sums(X1, RHO, W, s, profile.p, profile.dim, *profile.table()))
    if check:
        (p1, d1), (p2, d2) = out
        if _rel(p1, p2) > rtol or _rel(d1, d2) > rtol:
            raise QuadratureNotConverged(f"Ψ({s}) quadrature refinements differ by {max(_rel(p1, p2), _rel(d1, d2)):.2e}")
    return out[-1]


def psi(profile: GroundStateProfile, s, **kw):
    """Interaction function Ψ(s) = ∫ ∂_e w(x - s e) w^p(x) dx."""
    return psi_and_derivative(profile, s, **kw)[0]


def psi_log_derivative(profile: GroundStateProfile, s, **kw):
    """-Ψ'(s) s / Ψ(s), the scale d̂ entering the reduced operator."""
    if not s > 1:
        raise ValidationError("psi_log_derivative needs s > 1")
    val, der = psi_and_derivative(profile, s, **kw)
    return -der * s / val


class InteractionFunction:
    """Ψ and Ψ' as cheap vectorized callables.

    ``mode="asymptotic"`` uses γ0 c_Np s^{-(N-1)/2} e^{-s}. ``mode="quadrature"``
    interpolates g(s) = log Ψ + s + (N-1)/2 log s between quadrature nodes
    spaced ``ds`` apart (filled lazily); g is smooth and slowly varying, so a
    cubic Hermite interpolant with exact slopes is accurate to ~1e-10.
    """

    def __init__(self, profile, constants, mode="quadrature", ds=0.25, s_min=2.0):
        if mode not in ("quadrature", "asymptotic"):
            raise ValidationError(f"unknown psi mode {mode!r}")
        self.profile = profile
        self.constants = constants
        self.mode = mode
        self.ds = ds
        self.s_min = s_min
        self.s_max = 2.0 * profile.r_max - 10.0
        self.half = 0.5 * (profile.dim - 1)
        self.amplitude = constants.gamma0 * profile.c_np
        self._nodes = {}

    def _node(self, i):
        if i not in self._nodes:
            s = self.s_min + i * self.ds
            val, der = psi_and_derivative(self.profile, s, check=False)
            g = math.log(val) + s + self.half * math.log(s)
            dg = der / val + 1.0 + self.half / s
            self._nodes[i] = (g, dg)
        return self._nodes[i]

    def _g(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        if np.any(s < self.s_min):
            raise OutOfTabulatedRange(f"interaction table starts at s={self.s_min}")
        clipped = np.minimum(s, self.s_max)
        idx = np.minimum(((clipped - self.s_min) / self.ds).astype(np.int64),
                         int((self.s_max - self.s_min) / self.ds) - 1)
        g = np.empty_like(s)
        dg = np.empty_like(s)
        for i in np.unique(idx):
            sel = idx == i
            g0, d0 = self._node(i)
            g1, d1 = self._node(i + 1)
            x0 = self.s_min + i * self.ds
            spline = CubicHermiteSpline([x0, x0 + self.ds], [g0, g1], [d0, d1])
            g[sel] = spline(clipped[sel])
            dg[sel] = spline(clipped[sel], 1)
        beyond = s > self.s_max
        # past the table Ψ is already below e^{-60}; freeze the slowly varying prefactor
        dg[beyond] = 0.0
        return g, dg

    def __call__(self, s):
        return self.values(s)[0]

    def values(self, s):
        """Return (Ψ(s), Ψ'(s)) arrays shaped like ``s``."""
        s_arr = np.asarray(s, dtype=np.float64)
        flat = s_arr.ravel()
        if self.mode == "asymptotic":
            val = self.amplitude * flat ** (-self.half) * np.exp(-flat)
            der = -val * (1.0 + self.half / flat)
        else:
            g, dg = self._g(flat)
            val = np.exp(g - flat - self.half * np.log(flat))
            der = val * (dg - 1.0 - self.half / flat)
        return val.reshape(s_arr.shape), der.reshape(s_arr.shape)

    def log_derivative(self, s):
        val, der = self.values(s)
        return -der * np.asarray(s) / val
