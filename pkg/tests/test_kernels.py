import numpy as np
import pytest

from spikering import _accel, kernels
from spikering.groundstate import psi_and_derivative


def run_both(fn):
    prev = _accel.set_backend("numba")
    try:
        a = fn()
        _accel.set_backend("numpy")
        b = fn()
    finally:
        _accel.set_backend(prev)
    return a, b


def test_radial_eval_backends_agree(profile):
    r = np.linspace(0, 60, 5001)
    (w1, d1), (w2, d2) = run_both(lambda: kernels.radial_eval(r, *profile.table()))
    assert np.max(np.abs(w1 - w2)) <= 1e-15
    assert np.max(np.abs(d1 - d2)) <= 1e-15


def test_psi_backends_agree(profile):
    (a, da), (b, db) = run_both(lambda: psi_and_derivative(profile, 14.0))
    assert a == pytest.approx(b, rel=1e-12)
    assert da == pytest.approx(db, rel=1e-12)


def test_spike_field_backends_agree(profile):
    rng = np.random.default_rng(0)
    px, py = rng.uniform(-20, 20, (2, 6))
    x, y = rng.uniform(-30, 30, (2, 2000))
    (u1, ux1, uy1), (u2, ux2, uy2) = run_both(lambda: kernels.spike_field(px, py, x, y, *profile.table()))
    for a, b in ((u1, u2), (ux1, ux2), (uy1, uy2)):
        assert np.max(np.abs(a - b)) <= 1e-14


def test_dft_backends_agree():
    x = np.random.default_rng(1).standard_normal(200)
    a, b = run_both(lambda: kernels.dft_direct(x))
    assert np.max(np.abs(a - b)) <= 1e-11
    assert np.max(np.abs(a - np.fft.rfft(x))) <= 1e-11


def test_backend_switch():
    prev = _accel.set_backend("numpy")
    assert _accel.backend() == "numpy"
    _accel.set_backend(prev)
    with pytest.raises(ValueError):
        _accel.set_backend("cuda")


def test_env_var_selects_numpy():
    import os
    import subprocess
    import sys

    env = {**os.environ, "SPIKERING_NUMBA": "0"}
    out = subprocess.run([sys.executable, "-c", "import spikering; print(spikering.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
