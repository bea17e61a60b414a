"""Trapping potentials V = V_inf + a/|x|^m + eps cos(kθ)/|x|^{m+σ}.

Inside the core radius r0 the closed form is replaced by a bounded smooth
continuation: the radial part is frozen at r0 and the angular term uses
Re((z/r0)^k) / r0^{m+σ}, a harmonic polynomial that matches the outer
formula on |x| = r0.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DecayViolated, InfimumViolated, ValidationError

__all__ = ["PotentialModel", "check_decay", "cond_m", "DecayReport"]


@dataclass(frozen=True)
class PotentialModel:
    V_inf: float = 1.0
    a: float = 1.0
    m: float = 4.0
    sigma: float = 3.0
    eps: float = 0.0
    frequency: int = 0
    r0: float = 1.0

    def __post_init__(self):
        if not self.V_inf > 0:
            raise ValidationError("V_inf must be positive")
        if not self.a > 0:
            raise ValidationError("a must be positive")
        if not self.m > 0 or not self.sigma > 0:
            raise ValidationError("m and sigma must be positive")
        if not self.r0 > 0:
            raise ValidationError("core radius must be positive")
        if self.frequency < 0 or int(self.frequency) != self.frequency:
            raise ValidationError("frequency must be a nonnegative integer")

    @property
    def is_radial(self):
        return self.eps == 0.0 or self.frequency == 0

    @classmethod
    def radial(cls, a=1.0, m=4.0, sigma=3.0, V_inf=1.0):
        return cls(V_inf=V_inf, a=a, m=m, sigma=sigma)

    @classmethod
    def angular(cls, eps, frequency, a=1.0, m=4.0, sigma=3.0, V_inf=1.0):
        return cls(V_inf=V_inf, a=a, m=m, sigma=sigma, eps=eps, frequency=int(frequency))

    # -- evaluation ------------------------------------------------------
    def _parts(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        r = np.hypot(x, y)
        outer = r >= self.r0
        rs = np.where(outer, r, self.r0)
        k, ms = self.frequency, self.m + self.sigma
        theta = np.arctan2(y, x)
        # radial part and its gradient
        rad = self.a * rs ** (-self.m)
        drad = np.where(outer, -self.m * self.a * rs ** (-self.m - 1.0), 0.0)
        safe_r = np.where(r > 0, r, 1.0)
        ux, uy = x / safe_r, y / safe_r
        vx, vy = drad * ux, drad * uy
        ang = np.zeros_like(r)
        if self.eps != 0.0:
            cos_k, sin_k = np.cos(k * theta), np.sin(k * theta)
            out_val = self.eps * cos_k * rs ** (-ms)
            # ∂_r and (1/r)∂_θ of eps cos(kθ) r^{-ms}
            out_dr = -ms * out_val / rs
            out_dt = -k * self.eps * sin_k * rs ** (-ms) / rs
            # inside: eps Re(z^k) r0^{-k-ms}; ∇Re(z^k) = k (Re z^{k-1}, -Im z^{k-1})
            z = x + 1j * y
            scale = self.eps * self.r0 ** (-k - ms)
            in_val = scale * np.real(z ** k) if k > 0 else scale * np.ones_like(r)
            zk1 = z ** (k - 1) if k > 0 else np.zeros_like(z)
            in_gx = scale * k * np.real(zk1)
            in_gy = -scale * k * np.imag(zk1)
            ang = np.where(outer, out_val, in_val)
            tx, ty = -uy, ux
            vx = vx + np.where(outer, out_dr * ux + out_dt * tx, in_gx)
            vy = vy + np.where(outer, out_dr * uy + out_dt * ty, in_gy)
        return rad + ang, vx, vy

    def __call__(self, x, y):
        return self.V_inf + self._parts(x, y)[0]

    def value(self, x, y):
        """V at points (x, y); arrays broadcast."""
        return self.V_inf + self._parts(x, y)[0]

    def excess(self, x, y):
        """V - V_inf, formed without the cancellation of subtracting V_inf."""
        return self._parts(x, y)[0]

    def gradient(self, x, y):
        """(∂V/∂x, ∂V/∂y)."""
        _, gx, gy = self._parts(x, y)
        return gx, gy

    def eval_point(self, point):
        return float(self.value(point[0], point[1]))

    # -- serialization ---------------------------------------------------
    def to_dict(self):
        d = {"V_inf": self.V_inf, "a": self.a, "m": self.m, "sigma": self.sigma, "r0": self.r0}
        if self.eps != 0.0:
            d["perturbation"] = {"kind": "angular", "eps": self.eps, "frequency": self.frequency}
        else:
            d["perturbation"] = {"kind": "none"}
        return d

    @classmethod
    def from_dict(cls, d):
        allowed = {"V_inf", "a", "m", "sigma", "r0", "perturbation"}
        extra = set(d) - allowed
        if extra:
            raise ValidationError(f"unknown potential keys: {sorted(extra)}")
        pert = d.get("perturbation") or {"kind": "none"}
        kind = pert.get("kind", "none")
        kw = {k: float(d[k]) for k in ("V_inf", "a", "m", "sigma", "r0") if k in d}
        if kind == "none":
            return cls(**kw)
        if kind == "angular":
            extra = set(pert) - {"kind", "eps", "frequency"}
            if extra:
                raise ValidationError(f"unknown perturbation keys: {sorted(extra)}")
            return cls(eps=float(pert["eps"]), frequency=int(pert["frequency"]), **kw)
        raise ValidationError(f"unknown perturbation kind {kind!r}")

    def to_json(self):
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class DecayReport:
    worst_ratio: float
    worst_radius: float
    inf_V: float
    passed: bool


def check_decay(model: PotentialModel, radii=None, tol=1e-12, n_angles=720, sigma=None):
    """Check inf V > 0 and |V - V_inf - a/r^m| <= (|eps| + tol) r^{-m-σ} on |x| >= 2 r0.

    ``sigma`` is the declared decay exponent to test against (default: the model's own).
    """
    sigma = model.sigma if sigma is None else float(sigma)
    if radii is None:
        radii = np.geomspace(2.0 * model.r0, 200.0 * model.r0, 60)
    radii = np.asarray(radii, dtype=np.float64)
    theta = np.linspace(0.0, 2.0 * math.pi, n_angles, endpoint=False)

    # infimum over a disc grid including the core
    rr = np.concatenate([np.linspace(0.0, 2.0 * model.r0, 41), radii])
    R_, T_ = np.meshgrid(rr, theta, indexing="ij")
    inf_V = float(np.min(model(R_ * np.cos(T_), R_ * np.sin(T_))))
    if not inf_V > 0:
        raise InfimumViolated(f"inf V = {inf_V:.4g} is not positive")

    worst, worst_r = 0.0, float("nan")
    for r in radii[radii >= 2.0 * model.r0]:
        v = model.excess(r * np.cos(theta), r * np.sin(theta))
        dev = np.max(np.abs(v - model.a * r ** (-model.m)))
        # the subtraction itself carries rounding of order ulp(V - V_inf)
        dev = max(0.0, dev - 8.0 * np.finfo(float).eps * float(np.max(np.abs(v))))
        ratio = dev / ((abs(model.eps) + tol) * r ** (-model.m - sigma))
        if ratio > worst:
            worst, worst_r = float(ratio), float(r)
    if worst > 1.0 + 1e-9:
        raise DecayViolated(f"decay bound exceeded by factor {worst:.4g} at r = {worst_r:.4g}")
    return DecayReport(worst, worst_r, inf_V, True)


def cond_m(p, m, sigma):
    """Growth condition min{1, (p-1)/2} m > 2 and σ > 2."""
    return min(1.0, 0.5 * (p - 1.0)) * m > 2.0 and sigma > 2.0
