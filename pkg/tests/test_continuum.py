import math

import numpy as np
import pytest

from oracles import collocation_oracle
from spikering import continuum as ct
from spikering.errors import DhatTooSmall, NonZeroMeanForcing, ValidationError

M_EXP = 4.0
DHAT = 30.5  # balanced d̂ at K ≈ 300 for m = 4
# sup error · K² for φ = cos 3θ + 0.5 sin θ, ϕ = sin 2θ, measured ≈ 33.5
MIXED_CONST = 50.0


def zero(t):
    return np.zeros_like(t)


def test_homogeneous():
    sol = ct.solve_continuum(zero, zero, M_EXP, DHAT, 256)
    assert np.max(np.abs(sol.f)) == 0 and np.max(np.abs(sol.g)) == 0


def test_single_mode_closed_form():
    sol = ct.solve_continuum(np.cos, zero, M_EXP, DHAT, 512)
    c2 = M_EXP - 1 + 1 / DHAT
    assert sol.c == pytest.approx(math.sqrt(c2), rel=1e-15)
    assert np.max(np.abs(sol.f + np.cos(sol.theta) / (1 + c2))) <= 1e-8
    assert np.max(np.abs(sol.g - (1 / DHAT - 1) * (-np.sin(sol.theta)) / (1 + c2))) <= 1e-8


def test_residual_mean_identity_and_periodicity():
    phi = ct.parse_forcing("cos 3 + 0.5 sin 1 + 0.2")
    vp = ct.parse_forcing("sin 2 - 0.3 cos 5")
    sol = ct.solve_continuum(phi, vp, M_EXP, DHAT, 512)
    r1, r2 = ct.continuum_residual(sol)
    scale = np.max(np.abs(sol.phi)) + np.max(np.abs(sol.varphi))
    assert max(r1, r2) <= 1e-8 * scale
    assert np.mean(sol.f) == pytest.approx(np.mean(sol.phi) / (DHAT - 1 - M_EXP), rel=1e-9)
    assert abs(np.mean(sol.g)) <= 1e-14
    for v in (sol.f, sol.g, sol.derivative("f"), sol.derivative("g")):
        ends = ct._trig_eval(v, np.array([0.0, 2 * math.pi]))
        assert abs(ends[0] - ends[1]) <= 1e-9


def test_against_collocation():
    theta, f, g = collocation_oracle.solve(zero, np.sin, M_EXP, DHAT)
    sol = ct.solve_continuum(zero, np.sin, M_EXP, DHAT, 1024)
    assert np.max(np.abs(sol.f_at(theta[::8]) - f[::8])) <= 1e-6
    assert np.max(np.abs(sol.g_at(theta[::8]) - g[::8])) <= 1e-6


def test_linearity():
    a = ct.solve_continuum(np.cos, zero, M_EXP, DHAT, 256)
    b = ct.solve_continuum(lambda t: np.sin(3 * t), zero, M_EXP, DHAT, 256)
    ab = ct.solve_continuum(lambda t: 2 * np.cos(t) - 0.5 * np.sin(3 * t), zero, M_EXP, DHAT, 256)
    assert np.max(np.abs(ab.f - (2 * a.f - 0.5 * b.f))) <= 1e-10
    assert np.max(np.abs(ab.g - (2 * a.g - 0.5 * b.g))) <= 1e-10


def test_nonzero_mean_rejected():
    with pytest.raises(NonZeroMeanForcing):
        ct.solve_continuum(zero, lambda t: 1 + np.sin(t), M_EXP, DHAT)
    with pytest.raises(DhatTooSmall):
        ct.solve_continuum(np.cos, zero, M_EXP, 4.5)


def test_green_symmetry_and_diagonal():
    c = 1.7
    rng = np.random.default_rng(0)
    for th, s in rng.uniform(0, 2 * math.pi, size=(20, 2)):
        assert ct.green_G0(th, s, c) == pytest.approx(ct.green_G0(s, th, c), rel=1e-13)
    e = math.exp(2 * math.pi * c)
    diag = (e + 1) / (2 * c * (e - 1))
    assert ct.green_G0(1.0, 1.0, c) == pytest.approx(diag, rel=1e-14)
    assert ct.green_G0(1.0 + 1e-12, 1.0, c) == pytest.approx(diag, rel=1e-10)


def test_green_path_matches_fourier():
    c = math.sqrt(M_EXP - 1 + 1 / DHAT)
    theta = 2 * math.pi * np.arange(256) / 256
    rhs = np.cos(2 * theta) + 0.3 * np.sin(5 * theta)
    out = theta[::16]
    f = ct.solve_f_green(rhs, c, out)
    exact = -np.cos(2 * out) / (4 + c * c) - 0.3 * np.sin(5 * out) / (25 + c * c)
    assert np.max(np.abs(f - exact)) <= 1e-8


def test_green_inverts_operator():
    c = 1.3
    M = 400
    theta = 2 * math.pi * np.arange(M) / M
    u = -ct.solve_f_green(np.cos(2 * theta), c, theta)  # ∫G0 φ
    h = theta[1]
    d2 = (np.roll(u, -1) - 2 * u + np.roll(u, 1)) / h ** 2
    assert np.max(np.abs(-d2 + c * c * u - np.cos(2 * theta))) <= 1e-3
    # second differences carry an O(h²) error; halve it to confirm the order
    assert np.max(np.abs(-d2 + c * c * u - np.cos(2 * theta))) <= 4 * h ** 2 / 12 * 16 / (4 + c * c) + 1e-6


def test_discrete_convergence_order():
    errs = [ct.compare_discrete(K, np.cos, zero, M_EXP, DHAT)[0] for K in (32, 64, 128, 256)]
    ratios = [b / a for a, b in zip(errs[:-1], errs[1:])]
    assert all(0.2 <= r <= 0.32 for r in ratios[-2:])


def test_discrete_zero_forcing():
    assert ct.compare_discrete(32, zero, zero, M_EXP, DHAT) == (0.0, 0.0)


@pytest.mark.parametrize("K", [32, 64, 128])
def test_discrete_mixed_forcing(K):
    phi = ct.parse_forcing("cos 3 + 0.5 sin 1")
    vp = ct.parse_forcing("sin 2")
    ef, eg = ct.compare_discrete(K, phi, vp, M_EXP, DHAT)
    assert max(ef, eg) <= MIXED_CONST / K ** 2


def test_parse_forcing():
    f = ct.parse_forcing("cos 3 - sin 1 + 0.5 sin 2")
    t = np.linspace(0, 1, 5)
    assert np.allclose(f(t), np.cos(3 * t) - np.sin(t) + 0.5 * np.sin(2 * t))
    assert np.all(ct.parse_forcing("0")(t) == 0)
    with pytest.raises(ValidationError):
        ct.parse_forcing("tan 2")
    with pytest.raises(ValidationError):
        ct.parse_forcing("cos x")
