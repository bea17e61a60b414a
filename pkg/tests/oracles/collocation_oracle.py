"""Second-order finite-difference collocation of the periodic limit system.

Unknowns (f, g) on a uniform grid plus one multiplier λ added to the second
equation; the extra row imposes Σ g = 0. The g-shift kernel and the
compatibility condition ∫ϕ = 0 are handled by the bordering.
"""
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


def solve(phi, varphi, m, dhat, M=8192):
    h = 2 * np.pi / M
    theta = h * np.arange(M)
    eye = sp.identity(M, format="csr")
    up = sp.diags([np.ones(M - 1), [1.0]], [1, -(M - 1)], format="csr")
    down = up.T.tocsr()
    D1 = (up - down) / (2 * h)
    D2 = (up - 2 * eye + down) / h ** 2
    row1 = sp.hstack([-(m + 1) * eye + D2 + dhat * eye, -D1 + dhat * D1])
    row2 = sp.hstack([D1 - dhat * D1, -dhat * D2])
    ones = np.ones((M, 1))
    A = sp.vstack([
        sp.hstack([row1, sp.csr_matrix((M, 1))]),
        sp.hstack([row2, sp.csr_matrix(ones)]),
        sp.hstack([sp.csr_matrix((1, M)), sp.csr_matrix(ones.T), sp.csr_matrix((1, 1))]),
    ]).tocsc()
    rhs = np.concatenate([phi(theta), varphi(theta), [0.0]])
    x = spla.spsolve(A, rhs)
    return theta, x[:M], x[M:2 * M]
