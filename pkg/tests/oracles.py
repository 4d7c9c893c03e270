"""Independent reference evaluations used by the unit and acceptance tests.

Everything here is written from the defining sums with explicit loops and
shares no code with the package beyond the data containers.
"""

import math

import numpy as np

KAPPA = {"l": 1, "r": -1}
BRANCHES = ("ll", "lr", "rl", "rr")


def kk(name):
    return KAPPA[name[0]] * KAPPA[name[1]]


def trapezoid_weights(n, step):
    w = np.full(n, step)
    w[0] = w[-1] = step / 2
    return w


def xi_block(g, d, lam, step):
    """``i k_a k_b sum lam[l1,i] lam[l2,j] int dw'/2pi D_ab^{l1 l2}(w') G_ab^ij(w - w')``.

    ``g``/``d`` map branch names to ``(n, d, d)`` arrays; returns the same.
    """
    n_p, n_e = lam.shape
    n = next(iter(g.values())).shape[0]
    c = (n - 1) // 2
    wts = trapezoid_weights(n, step)
    out = {}
    for name in BRANCHES:
        G, D = g[name], d[name]
        # kernel K_ij(w') = sum lam[l1,i] lam[l2,j] D^{l1 l2}(w')
        K = np.zeros((n, n_e, n_e), dtype=complex)
        for i in range(n_e):
            for j in range(n_e):
                for l1 in range(n_p):
                    for l2 in range(n_p):
                        K[:, i, j] += lam[l1, i] * lam[l2, j] * D[:, l1, l2]
        res = np.zeros((n, n_e, n_e), dtype=complex)
        for k in range(n):
            # w' = w_jp, w - w' = w_m with m = k - jp + c inside the grid
            jp = np.arange(max(0, k + c - n + 1), min(n, k + c + 1))
            m = k - jp + c
            for i in range(n_e):
                for j in range(n_e):
                    res[k, i, j] = np.sum(wts[jp] * K[jp, i, j] * G[m, i, j])
        out[name] = 1j * kk(name) * res / (2 * math.pi)
    return out


def lambda_block(g, lam, step):
    """``-i k_a k_b sum lam[l,i] lam[l',j] int dw'/2pi G_ab^ij(w') G_ba^ji(w' - w)``."""
    n_p, n_e = lam.shape
    n = next(iter(g.values())).shape[0]
    c = (n - 1) // 2
    wts = trapezoid_weights(n, step)
    out = {}
    for name in BRANCHES:
        A, B = g[name], g[name[::-1]]
        res = np.zeros((n, n_p, n_p), dtype=complex)
        for k in range(n):
            # w' = w_jp, w' - w = w_m with m = jp - k + c inside the grid
            jp = np.arange(max(0, k - c), min(n, n + k - c))
            m = jp - k + c
            for l in range(n_p):
                for lp in range(n_p):
                    for i in range(n_e):
                        for j in range(n_e):
                            res[k, l, lp] += lam[l, i] * lam[lp, j] * np.sum(wts[jp] * A[jp, i, j] * B[m, j, i])
        out[name] = -1j * kk(name) * res / (2 * math.pi)
    return out


def hartree(d, lam, occ, center):
    """``delta_ij sum_{a'} k_{a'} lam[l1,i] lam[l2,i1] n[i1] D_{L a'}^{l1 l2}(0)`` (real part)."""
    n_p, n_e = lam.shape
    dl = d["ll"][center] - d["lr"][center]
    h = np.zeros((n_e, n_e))
    for i in range(n_e):
        for i1 in range(n_e):
            for l1 in range(n_p):
                for l2 in range(n_p):
                    h[i, i] += lam[l1, i] * lam[l2, i1] * occ[i1] * dl[l1, l2].real
    return h


def landauer_arctan(gamma_a, gamma_b, eps, mu_a, mu_b):
    """Zero-temperature Landauer current of a single Lorentzian level, spin included."""
    g = gamma_a + gamma_b
    return (2 / (2 * math.pi)) * gamma_a * gamma_b * (2 / g) * (
        math.atan(2 * (mu_a - eps) / g) - math.atan(2 * (mu_b - eps) / g))


def random_keldysh_arrays(rng, n, d, scale=1.0):
    """Random complex branch arrays (no identity assumed)."""
    return {b: scale * (rng.normal(size=(n, d, d)) + 1j * rng.normal(size=(n, d, d))) for b in BRANCHES}
