"""Shared random test-matrix builders and oracle helpers.

The exponent-law tests compare measured residuals against mat_pow(B, e)
with e up to a few thousand, so the corpora control rho(B) tightly: the
comparison is only meaningful while ||B**e|| sits well above float noise.
"""

import numpy as np

from seriesinv import fro_norm, inf_norm, mat_pow, square_matrix


def random_spd(dim, rng, shift=0.5):
    """Generic well-conditioned SPD matrix."""
    m = rng.standard_normal((dim, dim))
    return square_matrix(m @ m.T / dim + shift * np.eye(dim))


def random_sdd(dim, rng, margin=0.2):
    """Generic symmetric strictly diagonally dominant matrix (positive diag)."""
    off = rng.uniform(0.2, 1.0, (dim, dim))
    off = (off + off.T) / 2.0
    np.fill_diagonal(off, 0.0)
    row = off.sum(axis=1)
    diag = row / (1.0 - margin)
    return square_matrix(np.diag(diag) - off)


def sdd_system(dim, rho, rng, jitter=0.0):
    """SDD matrix whose diagonal splitting has rho(B) ~= rho (exact for
    jitter == 0).

    Built as A = D - W with W symmetric positive and every row sum balanced
    to rho (symmetric Sinkhorn-style scaling), so the Perron root of W is
    exactly rho.  A diagonal jitter makes B = S^-1 W slightly nonsymmetric
    and perturbs rho downward by at most the jitter.
    """
    w = rng.uniform(0.5, 1.5, (dim, dim))
    w = (w + w.T) / 2.0
    np.fill_diagonal(w, 0.0)
    for _ in range(200):
        scale = np.sqrt(w.sum(axis=1) / rho)
        w = w / np.outer(scale, scale)
    diag = 1.0 + jitter * rng.uniform(0.0, 1.0, dim)
    return square_matrix(np.diag(diag) - w)


def contractive_scalar_system(dim, rho, rng):
    """(A, eps) such that split_scalar(A, eps) yields a symmetric residual
    B with spectral radius exactly rho and alpha == 1."""
    for _ in range(100):
        m = rng.standard_normal((dim, dim))
        q, _ = np.linalg.qr(m)
        eigs = rng.uniform(-0.6 * rho, 0.6 * rho, dim)
        eigs[0] = rho
        b = (q * eigs) @ q.T
        b = (b + b.T) / 2.0
        a = np.eye(dim) - b
        eps = 1.0 - inf_norm(a) / 2.0
        if eps > 1e-6:
            return square_matrix(a), float(eps)
    raise RuntimeError("could not build a contractive system")


def assert_power_law(f_mat, b_mat, exponent, rel=1e-8):
    """Check F == B**exponent with the underflow guard.

    While ||B**e||_F stays above 1e-250 the comparison is relative at
    ``rel``; below that the model is unfalsifiable in floats and the check
    degrades to plain convergence of F.
    """
    target = mat_pow(b_mat, exponent)
    scale = fro_norm(target)
    if scale < 1e-250:
        assert fro_norm(f_mat) <= 1e-200
    else:
        assert fro_norm(f_mat - target) <= rel * scale
