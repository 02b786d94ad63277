"""One-dimensional transfer matrices: ``M = T exp(-i int H dx)`` with
``H(x) = v(x)/(2k) e^{-ikx s3} K e^{ikx s3}``."""

import numpy as np

from .errors import SpectralSingularity1D, ValidationError

K_MATRIX = np.array([[1.0, 1.0], [-1.0, -1.0]], dtype=complex)
SIGMA3 = np.diag([1.0, -1.0]).astype(complex)


def hamiltonian_1d(v, k, x):
    ph = np.exp(2j * k * x)
    return (v / (2 * k)) * np.array([[1.0, 1.0 / ph], [-ph, -1.0]])


def tm1d_delta(z, k, a=0.0):
    """Exact transfer matrix of ``z delta(x - a)``; one Dyson term since K^2 = 0."""
    if k <= 0:
        raise ValidationError("k must be positive")
    ph = np.exp(2j * k * a)
    return np.eye(2, dtype=complex) - (1j * z / (2 * k)) * np.array([[1.0, 1.0 / ph], [-ph, -1.0]])


def tm1d_evolve(v, k, support=None, n_steps=2000):
    """Transfer matrix of a short-range 1D potential by fixed-step RK4.

    ``v`` is either a callable (then ``support=(a_minus, a_plus)`` is required) or a pair
    ``(xs, vs)`` of uniform samples with an odd count, in which case RK4 steps over pairs
    of intervals so that every stage lands on a sample.
    """
    if k <= 0:
        raise ValidationError("k must be positive")
    if callable(v):
        if support is None:
            raise ValidationError("callable potentials need a support interval")
        a, b = support
        xs = np.linspace(a, b, 2 * n_steps + 1)
        vs = v(xs)
    else:
        xs, vs = (np.asarray(t) for t in v)
        if len(xs) % 2 == 0 or len(xs) < 3:
            raise ValidationError("sampled potentials need an odd number (>= 3) of samples")
        h = np.diff(xs)
        if np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]):
            raise ValidationError("samples must be uniform")
    U = np.eye(2, dtype=complex)
    for i in range(0, len(xs) - 2, 2):
        x0, xm, x1 = xs[i], xs[i + 1], xs[i + 2]
        h = x1 - x0
        H0 = hamiltonian_1d(vs[i], k, x0)
        Hm = hamiltonian_1d(vs[i + 1], k, xm)
        H1 = hamiltonian_1d(vs[i + 2], k, x1)
        k1 = -1j * H0 @ U
        k2 = -1j * Hm @ (U + h / 2 * k1)
        k3 = -1j * Hm @ (U + h / 2 * k2)
        k4 = -1j * H1 @ (U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return U


def rt_1d(M, tol=1e-12):
    """Reflection and transmission amplitudes ``(R_l, R_r, T_l, T_r)`` from a transfer matrix."""
    M = np.asarray(M)
    if abs(M[1, 1]) < tol * np.max(np.abs(M)):
        raise SpectralSingularity1D("M22 vanishes: spectral singularity", condition=abs(M[1, 1]))
    T = 1.0 / M[1, 1]
    return -M[1, 0] / M[1, 1], M[0, 1] / M[1, 1], T, T
