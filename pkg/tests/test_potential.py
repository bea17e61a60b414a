import json
import math

import numpy as np
import pytest

from spikering.errors import DecayViolated, InfimumViolated, ValidationError
from spikering.potential import PotentialModel, check_decay, cond_m


def test_radial_closed_form():
    V = PotentialModel.radial(a=1.0, m=4.0)
    for r in (2.0, 10.0, 1e3):
        assert V.value(r, 0.0) == 1.0 + r ** -4
        assert V.excess(0.0, r) == pytest.approx(r ** -4, rel=1e-15)


def test_core_is_bounded_and_continuous():
    V = PotentialModel.radial()
    assert V.value(0.0, 0.0) == V.value(1.0, 0.0) == 2.0
    A = PotentialModel.angular(0.3, 3)
    for t in np.linspace(0, 2 * math.pi, 13):
        c, s = math.cos(t), math.sin(t)
        inside = A.value((1 - 1e-15) * c, (1 - 1e-15) * s)
        outside = A.value(c, s)
        assert abs(inside - outside) < 1e-14


def test_angular_periodicity():
    A = PotentialModel.angular(1e-2, 5)
    r, t = 7.0, 0.37
    v1 = A.value(r * math.cos(t), r * math.sin(t))
    t2 = t + 2 * math.pi / 5
    assert A.value(r * math.cos(t2), r * math.sin(t2)) == pytest.approx(v1, rel=1e-15)


@pytest.mark.parametrize("model", [PotentialModel.radial(), PotentialModel.angular(0.2, 2),
                                   PotentialModel(eps=0.05, frequency=1, r0=0.5)])
def test_gradient_matches_differences(model):
    rng = np.random.default_rng(2)
    pts = rng.uniform(-4, 4, size=(40, 2))
    h = 1e-6
    gx, gy = model.gradient(pts[:, 0], pts[:, 1])
    fx = (model.excess(pts[:, 0] + h, pts[:, 1]) - model.excess(pts[:, 0] - h, pts[:, 1])) / (2 * h)
    fy = (model.excess(pts[:, 0], pts[:, 1] + h) - model.excess(pts[:, 0], pts[:, 1] - h)) / (2 * h)
    # skip points within h of the core circle where V is only C^0
    ok = np.abs(np.hypot(pts[:, 0], pts[:, 1]) - model.r0) > 1e-3
    assert np.allclose(gx[ok], fx[ok], rtol=1e-6, atol=1e-8)
    assert np.allclose(gy[ok], fy[ok], rtol=1e-6, atol=1e-8)


def test_decay_canonical_passes():
    rep = check_decay(PotentialModel.radial())
    assert rep.passed and rep.inf_V > 0
    rep = check_decay(PotentialModel.angular(1e-3, 16))
    assert rep.worst_ratio <= 1.0


def test_decay_misdeclared_sigma_smaller_passes():
    assert check_decay(PotentialModel.angular(0.01, 2, sigma=3.0), sigma=2.0).passed


def test_decay_sigma_too_large_fails():
    with pytest.raises(DecayViolated):
        check_decay(PotentialModel.angular(0.01, 2, sigma=3.0), sigma=4.0)


def test_large_eps_breaks_positivity():
    # eps = 3 at frequency 1: V(r0, θ = π) = 1 + 1 - 3 < 0
    with pytest.raises((DecayViolated, InfimumViolated)):
        check_decay(PotentialModel.angular(3.0, 1))


def test_json_roundtrip():
    A = PotentialModel.angular(1e-3, 16, m=5.0)
    assert PotentialModel.from_dict(json.loads(A.to_json())) == A
    assert PotentialModel.from_dict({"m": 4}) == PotentialModel.radial()
    with pytest.raises(ValidationError):
        PotentialModel.from_dict({"m": 4, "colour": 1})
    with pytest.raises(ValidationError):
        PotentialModel.from_dict({"perturbation": {"kind": "angular", "eps": 1, "frequency": 1, "x": 0}})


def test_validation():
    with pytest.raises(ValidationError):
        PotentialModel(V_inf=0.0)
    with pytest.raises(ValidationError):
        PotentialModel(frequency=-1)


def test_growth_condition():
    assert cond_m(3.0, 4.0, 3.0)
    assert not cond_m(3.0, 2.0, 3.0)
    assert not cond_m(2.0, 4.0, 3.0)  # (p-1)/2 m = 2
    assert not cond_m(3.0, 4.0, 2.0)
