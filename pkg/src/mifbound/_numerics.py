"""Small numeric helpers: exactly-rounded sums and overflow-safe atom terms."""

import math

import numpy as np


def fsum(values):
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


def csum(values):
    """Exactly rounded sum of a complex vector (real and imaginary parts separately)."""
    v = np.asarray(values, dtype=complex).ravel()
    return complex(math.fsum(v.real.tolist()), math.fsum(v.imag.tolist()))


def row_fsum(matrix):
    m = np.asarray(matrix, dtype=float)
    return np.array([math.fsum(r) for r in m.tolist()], dtype=float).reshape(m.shape[:-1])


def row_csum(matrix):
    m = np.asarray(matrix, dtype=complex)
    re = [math.fsum(r) for r in m.real.tolist()]
    im = [math.fsum(r) for r in m.imag.tolist()]
    return (np.array(re) + 1j * np.array(im)).reshape(m.shape[:-1])


def compensator(a, w):
    """w*a/(1+a^2), evaluated without forming a^2 for |a| >= 1."""
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    big = np.abs(a) >= 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.where(big, w / (a + 1.0 / np.where(big, a, 1.0)), w * a / (1.0 + a * a))
    return out


def poisson_terms(a, w):
    """w/(1+a^2) without overflow."""
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    big = np.abs(a) >= 1.0
    safe = np.where(big, a, 1.0)
    with np.errstate(over="ignore"):
        return np.where(big, (w / safe) / (safe + 1.0 / safe), w / (1.0 + a * a))


def cauchy_terms(a, w, z):
    """Per-atom summand w/(a-z) - w*a/(1+a^2) in the cancellation-free form.

    The two pieces nearly cancel for distant atoms, so the combined numerator
    w*(1 + a*z)/((a - z)(1 + a^2)) is used; for |a| >= 1 it is rewritten as
    w*((z + 1/a)/(a - z))/(a + 1/a) so nothing overflows for huge atoms.
    ``a``/``w`` broadcast against ``z``.
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    z = np.asarray(z)
    big = np.abs(a) >= 1.0
    safe = np.where(big, a, 1.0)
    inv = 1.0 / safe
    with np.errstate(over="ignore", invalid="ignore"):
        t_big = w * ((z + inv) / (a - z)) / (safe + inv)
        t_small = w * (1.0 + a * z) / ((a - z) * (1.0 + a * a))
    return np.where(big, t_big, t_small)
