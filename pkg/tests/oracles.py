"""Independent brute-force implementations used as test oracles.

Everything here is written as literal loops straight from the discrete
definitions, deliberately sharing no code with the package internals.
"""
import numpy as np


def coag2d_brute(f, kap, dr, da):
    """Literal quadruple-loop evaluation of the 2D cell operator (1-based sums)."""
    I_r, I_a = f.shape
    out = np.zeros((I_r, I_a))
    for i in range(1, I_r + 1):
        for j in range(1, I_a + 1):
            gain = 0.0
            for k in range(1, i + 1):
                for m in range(1, j + 1):
                    gain += kap[k - 1, i - k] * f[k - 1, m - 1] * f[i - k, j - m]
            loss = 0.0
            for k in range(1, I_r - i + 2):
                for m in range(1, I_a - j + 2):
                    loss += kap[i - 1, k - 1] * f[k - 1, m - 1]
            out[i - 1, j - 1] = dr * da * (0.5 * gain - f[i - 1, j - 1] * loss)
    return out


def coag1d_q_brute(f, kap, dr):
    n = f.shape[0]
    q = np.zeros(n)
    for i in range(1, n + 1):
        gain = 0.0
        for k in range(1, i + 1):
            gain += kap[k - 1, i - k] * f[k - 1] * f[i - k]
        loss = 0.0
        for k in range(1, n - i + 2):
            loss += kap[i - 1, k - 1] * f[k - 1]
        q[i - 1] = dr * (0.5 * gain - f[i - 1] * loss)
    return q


def coag1d_flux_brute(f, kap, dr, r_edges):
    """Edge fluxes as the double sum over the triangle strip of cell pairs.

    Pairs (k, k') with k <= i, k + k' >= i + 2 and k + k' <= n + 1
    contribute r_{k-1/2} kappa_{k,k'} f_k f_{k'} dr^2 to the flux through
    edge r_{i+1/2} (1-based indices).
    """
    n = f.shape[0]
    J = np.zeros(n + 1)
    for i in range(0, n + 1):
        acc = 0.0
        for k in range(1, i + 1):
            for kp in range(i - k + 2, n - k + 2):
                acc += r_edges[k - 1] * kap[k - 1, kp - 1] * f[k - 1] * f[kp - 1]
        J[i] = dr * dr * acc
    return J


def tensor_gauss_cell_means(g, r_edges, a_edges, n=64):
    """Reference cell averages via dense tensor Gauss-Legendre quadrature."""
    x, w = np.polynomial.legendre.leggauss(n)
    I_r, I_a = len(r_edges) - 1, len(a_edges) - 1
    out = np.zeros((I_r, I_a))
    for i in range(I_r):
        rl, rh = r_edges[i], r_edges[i + 1]
        rn = 0.5 * (rl + rh) + 0.5 * (rh - rl) * x
        for j in range(I_a):
            al, ah = a_edges[j], a_edges[j + 1]
            an = 0.5 * (al + ah) + 0.5 * (ah - al) * x
            vals = g(rn[:, None], an[None, :])
            out[i, j] = (w[:, None] * w[None, :] * vals).sum() / 4.0
    return out
