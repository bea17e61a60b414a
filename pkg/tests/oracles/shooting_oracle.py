"""Fixed-step RK4 shooting for w(0), kept independent of the package solver.

Run once to produce the frozen value used in test_groundstate.py:

    python tests/oracles/shooting_oracle.py
"""
import math
import sys

from numba import njit


@njit
def classify(w0, dim, p, h, r_stop):
    # two-term series w0 + a r^2 + b r^4 to leave the origin at r = 100 h
    a = (w0 - w0 ** p) / (2.0 * dim)
    b = a * (1.0 - p * w0 ** (p - 1.0)) / (4.0 * (dim + 2.0))
    r = 100.0 * h
    w = w0 + a * r * r + b * r ** 4
    v = 2.0 * a * r + 4.0 * b * r ** 3
    while r < r_stop:
        k1w = v
        k1v = -(dim - 1) / r * v + w - abs(w) ** p
        rm = r + 0.5 * h
        w2 = w + 0.5 * h * k1w
        v2 = v + 0.5 * h * k1v
        k2w = v2
        k2v = -(dim - 1) / rm * v2 + w2 - abs(w2) ** p
        w3 = w + 0.5 * h * k2w
        v3 = v + 0.5 * h * k2v
        k3w = v3
        k3v = -(dim - 1) / rm * v3 + w3 - abs(w3) ** p
        w4 = w + h * k3w
        v4 = v + h * k3v
        k4w = v4
        k4v = -(dim - 1) / (r + h) * v4 + w4 - abs(w4) ** p
        w += h * (k1w + 2 * k2w + 2 * k3w + k4w) / 6.0
        v += h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        r += h
        if w < 0.0:
            return 1  # overshoot: w0 too large
        if v > 0.0:
            return -1  # turned up: w0 too small
    return 0


def shoot(dim=2, p=3.0, h=1e-4, lo=1.0 + 1e-9, hi=10.0):
    assert classify(lo, dim, p, h, 30.0) == -1 and classify(hi, dim, p, h, 30.0) == 1
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        c = classify(mid, dim, p, h, 30.0)
        if c == 1:
            hi = mid
        elif c == -1:
            lo = mid
        else:
            break
        if hi - lo < 1e-15:
            break
    return 0.5 * (lo + hi)


if __name__ == "__main__":
    dim = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    p = float(sys.argv[2]) if len(sys.argv) > 2 else 3.0
    print(repr(shoot(dim, p)))
