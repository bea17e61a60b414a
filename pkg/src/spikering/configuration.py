"""Ring configurations Q_j = (R + f_j) n_j + g_j t_j and their diagnostics."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SeparationTooSmall, ValidationError, ZeroSeparation

__all__ = [
    "PerturbationVector",
    "SpikeConfig",
    "build_config",
    "cyclic_shift",
    "min_separation",
    "annulus_count",
    "exp_sum_ratio",
    "norm_star",
]

RHO0 = 5.0


def cyclic_shift(x, k):
    """x_{j+k} with cyclic wraparound (0-based storage)."""
    return np.roll(np.asarray(x), -k)


@dataclass(frozen=True, eq=False)
class PerturbationVector:
    f: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        g = np.asarray(self.g, dtype=np.float64)
        if f.shape != g.shape or f.ndim != 1:
            raise ValidationError("f and g must be 1-d arrays of equal length")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    @property
    def K(self):
        return self.f.shape[0]

    @classmethod
    def zeros(cls, K):
        return cls(np.zeros(K), np.zeros(K))

    @classmethod
    def from_vector(cls, q):
        q = np.asarray(q, dtype=np.float64)
        K = q.shape[0] // 2
        return cls(q[:K].copy(), q[K:].copy())

    def as_vector(self):
        return np.concatenate([self.f, self.g])

    def _dq(self, x):
        return (cyclic_shift(x, 1) - x) * (self.K / (2.0 * math.pi))

    def _ddq(self, x):
        return (cyclic_shift(x, 1) - 2.0 * x + cyclic_shift(x, -1)) * (self.K / (2.0 * math.pi)) ** 2

    @property
    def fdot(self):
        return self._dq(self.f)

    @property
    def gdot(self):
        return self._dq(self.g)

    @property
    def fddot(self):
        return self._ddq(self.f)

    @property
    def gddot(self):
        return self._ddq(self.g)

    @property
    def gbar(self):
        """Centered difference (g_{j+1} - g_{j-1}) K/(2π)."""
        return (cyclic_shift(self.g, 1) - cyclic_shift(self.g, -1)) * (self.K / (2.0 * math.pi))

    @property
    def fbar(self):
        return (cyclic_shift(self.f, 1) - cyclic_shift(self.f, -1)) * (self.K / (2.0 * math.pi))

    def norm_star(self):
        """‖q‖∞ + ‖q̇‖∞ + ‖q̈‖∞."""
        sup = lambda a, b: max(np.max(np.abs(a)), np.max(np.abs(b)))
        return sup(self.f, self.g) + sup(self.fdot, self.gdot) + sup(self.fddot, self.gddot)


def norm_star(q):
    if not isinstance(q, PerturbationVector):
        q = PerturbationVector.from_vector(q)
    return q.norm_star()


@dataclass(frozen=True, eq=False)
class SpikeConfig:
    K: int
    R: float
    alpha: float
    q: PerturbationVector
    theta: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    normals: np.ndarray = field(repr=False)
    tangents: np.ndarray = field(repr=False)
    in_Lambda_K: bool = True

    def to_dict(self):
        return {"K": self.K, "R": self.R, "alpha": self.alpha,
                "f": self.q.f.tolist(), "g": self.q.g.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        extra = set(d) - {"K", "R", "alpha", "f", "g"}
        if extra:
            raise ValidationError(f"unknown configuration keys: {sorted(extra)}")
        q = PerturbationVector(d["f"], d["g"])
        if q.K != int(d["K"]):
            raise ValidationError("length of f, g does not match K")
        return build_config(int(d["K"]), float(d["R"]), float(d["alpha"]), q, allow_outside=True)

    def points_csv(self):
        lines = ["j,x,y"] + [f"{j + 1},{x!r},{y!r}" for j, (x, y) in enumerate(self.points)]
        return "\n".join(lines) + "\n"


def build_config(K, R, alpha=0.0, q=None, allow_outside=False, min_K=8):
    """Points, frames and membership flag for the perturbed ring.

    ``allow_outside`` admits ‖q‖* > 1 (used for derivative tests); the result
    is then flagged as outside Λ_K. ``min_K`` can be lowered for toy rings.
    """
    if K < min_K or int(K) != K:
        raise ValidationError(f"K must be an integer >= {min_K}, got {K}")
    if not R > 0:
        raise ValidationError(f"R must be positive, got {R}")
    K = int(K)
    if q is None:
        q = PerturbationVector.zeros(K)
    elif not isinstance(q, PerturbationVector):
        q = PerturbationVector.from_vector(q)
    if q.K != K:
        raise ValidationError(f"perturbation has length {q.K}, expected {K}")
    member = bool(q.norm_star() <= 1.0)
    if not member and not allow_outside:
        raise ValidationError(f"‖q‖* = {q.norm_star():.4g} > 1; pass allow_outside=True")
    theta = alpha + 2.0 * math.pi * np.arange(K) / K
    normals = np.column_stack([np.cos(theta), np.sin(theta)])
    tangents = np.column_stack([-np.sin(theta), np.cos(theta)])
    points = (R + q.f)[:, None] * normals + q.g[:, None] * tangents
    return SpikeConfig(K, float(R), float(alpha), q, theta, points, normals, tangents, member)


def _pair_distances(points):
    diff = points[:, None, :] - points[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def min_separation(config):
    """Exact minimum pairwise distance (O(K^2))."""
    dist = _pair_distances(config.points)
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def annulus_count(config, x, ell):
    """#{Q_j : ℓρ/2 <= |Q_j - x| < (ℓ+1)ρ/2}."""
    rho = min_separation(config)
    if rho == 0:
        raise ZeroSeparation("configuration has coincident points")
    dist = np.hypot(config.points[:, 0] - x[0], config.points[:, 1] - x[1])
    return int(np.count_nonzero((dist >= ell * rho / 2.0) & (dist < (ell + 1) * rho / 2.0)))


def exp_sum_ratio(config, j0, eta):
    """Σ_{j≠j0} e^{-η|Q_j - Q_j0|} divided by e^{-ηρ}."""
    if not 0 < eta < 1:
        raise ValidationError("eta must lie in (0, 1)")
    rho = min_separation(config)
    if rho < RHO0:
        raise SeparationTooSmall(f"ρ = {rho:.4g} < {RHO0}")
    diff = config.points - config.points[j0]
    dist = np.delete(np.hypot(diff[:, 0], diff[:, 1]), j0)
    return float(np.sum(np.exp(-eta * (dist - rho))))
