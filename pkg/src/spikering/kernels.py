"""Hot numerical kernels, each with a numba and a pure-numpy implementation.

The public functions dispatch on :func:`spikering._accel.backend`. Both paths
use the same arithmetic and summation order per output element, so results
agree to rounding; the test suite checks that.

Profile tables are passed as plain arrays so the kernels stay nopython:
``h`` is the uniform radial step, ``w``/``dw``/``d2w`` the nodal values of
w, w', w'' and ``(amp, nu)`` describe the tail ``amp * r**-nu * K_nu(r)``
used beyond the last node.
"""
import math

import numpy as np

from . import _accel
from ._accel import njit

_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


# ---------------------------------------------------------------- radial table

def _bessel_k_series(mu, r):
    """exp(r) * sqrt(2r/pi) * K_mu(r) from the large-argument expansion."""
    four_mu2 = 4.0 * mu * mu
    total = 1.0
    term = 1.0
    for k in range(1, 40):
        nxt = term * (four_mu2 - (2 * k - 1) ** 2) / (k * 8.0 * r)
        if abs(nxt) > abs(term):
            break
        term = nxt
        total += term
        if abs(term) < 1e-18 * abs(total):
            break
    return total


_bessel_k_series_nb = njit(_bessel_k_series)


def _bessel_k_series_vec(mu, r):
    """Array version of :func:`_bessel_k_series` with the same per-element stopping rule."""
    four_mu2 = 4.0 * mu * mu
    total = np.ones_like(r)
    term = np.ones_like(r)
    active = np.ones(r.shape, dtype=bool)
    for k in range(1, 40):
        nxt = term * (four_mu2 - (2 * k - 1) ** 2) / (k * 8.0 * r)
        active &= np.abs(nxt) <= np.abs(term)
        term = np.where(active, nxt, term)
        total = np.where(active, total + term, total)
        active &= np.abs(term) >= 1e-18 * np.abs(total)
        if not active.any():
            break
    return total


@njit
def _radial_eval_nb(r, h, w, dw, d2w, amp, nu):
    n = w.shape[0]
    r_end = h * (n - 1)
    out_w = np.empty(r.shape[0])
    out_dw = np.empty(r.shape[0])
    for k in range(r.shape[0]):
        x = r[k]
        if x > r_end:
            pref = amp * x ** (-nu) * _SQRT_HALF_PI * math.exp(-x) / math.sqrt(x)
            out_w[k] = pref * _bessel_k_series_nb(nu, x)
            out_dw[k] = -pref * _bessel_k_series_nb(nu + 1.0, x)
            continue
        i = int(x / h)
        if i > n - 2:
            i = n - 2
        t = x / h - i
        t2 = t * t
        t3 = t2 * t
        h00 = 2.0 * t3 - 3.0 * t2 + 1.0
        h10 = t3 - 2.0 * t2 + t
        h01 = -2.0 * t3 + 3.0 * t2
        h11 = t3 - t2
        out_w[k] = h00 * w[i] + h10 * h * dw[i] + h01 * w[i + 1] + h11 * h * dw[i + 1]
        out_dw[k] = h00 * dw[i] + h10 * h * d2w[i] + h01 * dw[i + 1] + h11 * h * d2w[i + 1]
    return out_w, out_dw


def _radial_eval_np(r, h, w, dw, d2w, amp, nu):
    n = w.shape[0]
    r_end = h * (n - 1)
    out_w = np.empty(r.shape[0])
    out_dw = np.empty(r.shape[0])
    inside = r <= r_end
    x = r[inside]
    i = np.minimum((x / h).astype(np.int64), n - 2)
    t = x / h - i
    t2 = t * t
    t3 = t2 * t
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + t
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    out_w[inside] = h00 * w[i] + h10 * h * dw[i] + h01 * w[i + 1] + h11 * h * dw[i + 1]
    out_dw[inside] = h00 * dw[i] + h10 * h * d2w[i] + h01 * dw[i + 1] + h11 * h * d2w[i + 1]
    x = r[~inside]
    if x.size:
        pref = amp * x ** (-nu) * _SQRT_HALF_PI * np.exp(-x) / np.sqrt(x)
        out_w[~inside] = pref * _bessel_k_series_vec(nu, x)
        out_dw[~inside] = -pref * _bessel_k_series_vec(nu + 1.0, x)
    return out_w, out_dw


def radial_eval(r, h, w, dw, d2w, amp, nu):
    """Evaluate (w(r), w'(r)) for a 1-D float array of radii."""
    r = np.ascontiguousarray(r, dtype=np.float64)
    if _accel.backend() == "numba":
        return _radial_eval_nb(r, h, w, dw, d2w, amp, nu)
    return _radial_eval_np(r, h, w, dw, d2w, amp, nu)


# ------------------------------------------------------- interaction quadrature

@njit
def _psi_sums_nb(x1, rho, wts, s, p, dim, h, w, dw, d2w, amp, nu):
    n = w.shape[0]
    r_end = h * (n - 1)
    psi = 0.0
    dpsi = 0.0
    for k in range(x1.shape[0]):
        rx = math.sqrt(x1[k] * x1[k] + rho[k] * rho[k])
        y1 = x1[k] - s
        ry = math.sqrt(y1 * y1 + rho[k] * rho[k])
        # w(|x|)^p and (w, w') at |x - s e|
        for which in range(2):
            x = rx if which == 0 else ry
            if x > r_end:
                pref = amp * x ** (-nu) * _SQRT_HALF_PI * math.exp(-x) / math.sqrt(x)
                vw = pref * _bessel_k_series_nb(nu, x)
                vdw = -pref * _bessel_k_series_nb(nu + 1.0, x)
            else:
                i = int(x / h)
                if i > n - 2:
                    i = n - 2
                t = x / h - i
                t2 = t * t
                t3 = t2 * t
                h00 = 2.0 * t3 - 3.0 * t2 + 1.0
                h10 = t3 - 2.0 * t2 + t
                h01 = -2.0 * t3 + 3.0 * t2
                h11 = t3 - t2
                vw = h00 * w[i] + h10 * h * dw[i] + h01 * w[i + 1] + h11 * h * dw[i + 1]
                vdw = h00 * dw[i] + h10 * h * d2w[i] + h01 * dw[i + 1] + h11 * h * d2w[i + 1]
            if which == 0:
                wxp = vw ** p if vw > 0.0 else 0.0
            else:
                wy = vw
                dwy = vdw
        if ry > 1e-9:
            c = y1 / ry
            d2wy = -(dim - 1) * dwy / ry + wy - (wy ** p if wy > 0.0 else 0.0)
            first = dwy * c
            second = d2wy * c * c + dwy / ry * (1.0 - c * c)
        else:
            first = 0.0
            second = d2w[0]
        psi += wts[k] * first * wxp
        dpsi -= wts[k] * second * wxp
    return psi, dpsi


def _psi_sums_np(x1, rho, wts, s, p, dim, h, w, dw, d2w, amp, nu):
    rx = np.sqrt(x1 * x1 + rho * rho)
    y1 = x1 - s
    ry = np.sqrt(y1 * y1 + rho * rho)
    wx, _ = _radial_eval_np(rx, h, w, dw, d2w, amp, nu)
    wy, dwy = _radial_eval_np(ry, h, w, dw, d2w, amp, nu)
    wxp = np.where(wx > 0.0, np.abs(wx) ** p, 0.0)
    small = ry <= 1e-9
    ry_safe = np.where(small, 1.0, ry)
    c = np.where(small, 0.0, y1 / ry_safe)
    wyp = np.where(wy > 0.0, np.abs(wy) ** p, 0.0)
    d2wy = -(dim - 1) * dwy / ry_safe + wy - wyp
    first = np.where(small, 0.0, dwy * c)
    second = np.where(small, d2w[0], d2wy * c * c + dwy / ry_safe * (1.0 - c * c))
    # sequential accumulation keeps the summation order of the compiled path
    psi = 0.0
    dpsi = 0.0
    for a, b in zip((wts * first * wxp).tolist(), (wts * second * wxp).tolist()):
        psi += a
        dpsi -= b
    return psi, dpsi


def psi_sums(x1, rho, wts, s, p, dim, h, w, dw, d2w, amp, nu):
    """Quadrature sums for the interaction function and its s-derivative.

    Nodes are given in cylindrical coordinates (x1 along the spike axis, rho
    transverse) and ``wts`` already carries the transverse measure.
    """
    args = (np.ascontiguousarray(x1), np.ascontiguousarray(rho), np.ascontiguousarray(wts),
            float(s), float(p), int(dim), float(h), w, dw, d2w, float(amp), float(nu))
    if _accel.backend() == "numba":
        return _psi_sums_nb(*args)
    return _psi_sums_np(*args)


# --------------------------------------------------------- superposed spikes

@njit
def _spike_field_nb(px, py, xs, ys, h, w, dw, d2w, amp, nu, cutoff):
    n = w.shape[0]
    r_end = h * (n - 1)
    m = xs.shape[0]
    u = np.zeros(m)
    ux = np.zeros(m)
    uy = np.zeros(m)
    for k in range(m):
        for j in range(px.shape[0]):
            dx = xs[k] - px[j]
            dy = ys[k] - py[j]
            r = math.sqrt(dx * dx + dy * dy)
            if r > cutoff:
                continue
            if r > r_end:
                pref = amp * r ** (-nu) * _SQRT_HALF_PI * math.exp(-r) / math.sqrt(r)
                vw = pref * _bessel_k_series_nb(nu, r)
                vdw = -pref * _bessel_k_series_nb(nu + 1.0, r)
            else:
                i = int(r / h)
                if i > n - 2:
                    i = n - 2
                t = r / h - i
                t2 = t * t
                t3 = t2 * t
                h00 = 2.0 * t3 - 3.0 * t2 + 1.0
                h10 = t3 - 2.0 * t2 + t
                h01 = -2.0 * t3 + 3.0 * t2
                h11 = t3 - t2
                vw = h00 * w[i] + h10 * h * dw[i] + h01 * w[i + 1] + h11 * h * dw[i + 1]
                vdw = h00 * dw[i] + h10 * h * d2w[i] + h01 * dw[i + 1] + h11 * h * d2w[i + 1]
            u[k] += vw
            if r > 0.0:
                ux[k] += vdw * dx / r
                uy[k] += vdw * dy / r
    return u, ux, uy


def _spike_field_np(px, py, xs, ys, h, w, dw, d2w, amp, nu, cutoff):
    m = xs.shape[0]
    u = np.zeros(m)
    ux = np.zeros(m)
    uy = np.zeros(m)
    for j in range(px.shape[0]):
        dx = xs - px[j]
        dy = ys - py[j]
        r = np.sqrt(dx * dx + dy * dy)
        near = r <= cutoff
        vw, vdw = _radial_eval_np(r[near], h, w, dw, d2w, amp, nu)
        rn = r[near]
        safe = np.where(rn > 0.0, rn, 1.0)
        u[near] += vw
        ux[near] += np.where(rn > 0.0, vdw * dx[near] / safe, 0.0)
        uy[near] += np.where(rn > 0.0, vdw * dy[near] / safe, 0.0)
    return u, ux, uy


def spike_field(px, py, xs, ys, h, w, dw, d2w, amp, nu, cutoff=np.inf):
    """U = sum_j w(|x - Q_j|) and its gradient at the points (xs, ys).

    Spikes farther than ``cutoff`` from a point are skipped.
    """
    args = (np.ascontiguousarray(px, dtype=np.float64), np.ascontiguousarray(py, dtype=np.float64),
            np.ascontiguousarray(xs, dtype=np.float64), np.ascontiguousarray(ys, dtype=np.float64),
            float(h), w, dw, d2w, float(amp), float(nu), float(cutoff))
    if _accel.backend() == "numba":
        return _spike_field_nb(*args)
    return _spike_field_np(*args)


# ------------------------------------------------------------- discrete Fourier

@njit
def _dft_direct_nb(x):
    n = x.shape[0]
    nh = n // 2 + 1
    re = np.zeros(nh)
    im = np.zeros(nh)
    for l in range(nh):
        sr = 0.0
        si = 0.0
        for j in range(n):
            # reduce the phase index exactly before scaling
            a = 2.0 * math.pi * ((l * j) % n) / n
            sr += x[j] * math.cos(a)
            si -= x[j] * math.sin(a)
        re[l] = sr
        im[l] = si
    return re, im


def _dft_direct_np(x):
    n = x.shape[0]
    l = np.arange(n // 2 + 1)[:, None]
    j = np.arange(n)[None, :]
    a = 2.0 * np.pi * ((l * j) % n) / n
    return np.cos(a) @ x, -(np.sin(a) @ x)


def dft_direct(x):
    """O(n^2) real-input DFT with numpy.fft.rfft's sign and index convention."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if _accel.backend() == "numba":
        re, im = _dft_direct_nb(x)
    else:
        re, im = _dft_direct_np(x)
    return re + 1j * im
