import math

import numpy as np
import pytest

from spikering import balance as bl
from spikering.errors import ValidationError
from spikering.groundstate import psi_and_derivative

# frozen from the sweep K = 50..6400, m = 4: d - asymptotic_d ranges over [-5.16, -3.97]
D_GAP_BOUND = 5.5


@pytest.mark.parametrize("K", [8, 16, 64, 200])
def test_balance_equation_holds(K, profile, consts, balanced):
    b = balanced(K, mode="quadrature")
    chord = 2 * math.sin(math.pi / K)
    val, der = psi_and_derivative(profile, b.d)
    assert val * b.d ** 5 == pytest.approx(consts.a0 * 4 * chord ** 4, rel=1e-10)
    assert b.dhat == pytest.approx(-der * b.d / val, rel=1e-10)
    assert b.R == pytest.approx(b.d / chord, rel=1e-14)
    assert abs(b.rel_residual) <= 1e-10


def test_asymptotic_mode_closed_form(consts, profile, balanced):
    b = balanced(1600, mode="asymptotic")
    lhs = consts.gamma0 * profile.c_np * b.d ** -0.5 * math.exp(-b.d) * b.d ** 5
    assert lhs == pytest.approx(consts.a0 * 4 * (2 * math.sin(math.pi / 1600)) ** 4, rel=1e-12)
    assert b.dhat == pytest.approx(b.d + 0.5, rel=1e-14)


def test_modes_agree(balanced):
    q = balanced(200, mode="quadrature")
    a = balanced(200, mode="asymptotic")
    assert abs(q.d - a.d) < 0.5


def test_default_mode_switch():
    assert bl.default_psi_mode(500) == "quadrature"
    assert bl.default_psi_mode(501) == "asymptotic"


def test_gap_to_asymptotic_d_bounded(balanced):
    gaps = [balanced(K).d - bl.asymptotic_d(K, 4.0) for K in (50, 100, 200, 400, 800, 1600, 3200, 6400)]
    assert max(abs(g) for g in gaps) <= D_GAP_BOUND


def test_spacing_grows_with_K(balanced):
    ds = [balanced(K).d for K in (16, 64, 256, 1024)]
    assert np.all(np.diff(ds) > 0)
    for K in (16, 64, 256):
        assert 0.4 < balanced(K).dhat - balanced(K).d < 0.6


def test_newton_bracket():
    root, it = bl._safeguarded_newton(lambda x: (x * x - 2.0, 2 * x), 0.0, 5.0)
    assert root == pytest.approx(math.sqrt(2), rel=1e-14)
    assert it < 20


def test_sweep_rows(profile, consts):
    rows = bl.balance_sweep([64, 128], 4.0, consts, profile)
    assert [r["K"] for r in rows] == [64, 128]
    assert set(rows[0]) >= {"K", "d", "R", "dhat", "residual", "asymptotic_d"}


def test_rejects_small_K(profile, consts):
    with pytest.raises(ValidationError):
        bl.solve_balance(4, 4.0, consts, profile)
    with pytest.raises(ValidationError):
        bl.asymptotic_d(4, 4.0)
