"""Hankel functions of the first kind, orders 0 and 1, for real positive argument.

Three regimes:

* ``x <= 8``: ascending power series,
* ``8 < x <= 25``: Miller backward recurrence for J_n with Neumann series for Y_0, Y_1,
* ``x > 25``: Hankel asymptotic expansion.

The asymptotic series stalls near ``exp(-2x)`` relative accuracy, which is why it only
takes over at 25 rather than at 8.
"""

import numpy as np

EULER_GAMMA = 0.57721566490153286061
SERIES_MAX = 8.0
ASYMPTOTIC_MIN = 25.0


def _series(x):
    q = x * x / 4.0
    lg = np.log(x / 2.0) + EULER_GAMMA
    j0 = np.zeros_like(x)
    j1 = np.zeros_like(x)
    s0 = np.zeros_like(x)
    s1 = np.zeros_like(x)
    t0 = np.ones_like(x)           # q^m / (m!)^2
    t1 = np.ones_like(x)           # q^m / (m! (m+1)!)
    harm = 0.0
    for m in range(60):
        h_next = harm + 1.0 / (m + 1)
        sign = -1.0 if m % 2 else 1.0
        j0 += sign * t0
        j1 += sign * t1
        if m:
            s0 += -sign * harm * t0
        s1 += sign * (harm + h_next) * t1
        harm = h_next
        t0 = t0 * q / ((m + 1) ** 2)
        t1 = t1 * q / ((m + 1) * (m + 2))
        if np.all(np.abs(t0) < 1e-18 * np.maximum(np.abs(j0), 1e-300)):
            break
    j1 = j1 * x / 2.0
    y0 = (2.0 / np.pi) * (lg * j0 + s0)
    y1 = (2.0 / np.pi) * lg * j1 - 2.0 / (np.pi * x) - (1.0 / np.pi) * (x / 2.0) * s1
    return j0, j1, y0, y1


def _miller(x):
    n_start = int(np.max(x) + 30 + 2 * np.max(x) ** (1.0 / 3.0))
    n_start += n_start % 2
    jn = np.zeros((n_start + 2,) + x.shape)
    jn[n_start] = 1e-30
    for n in range(n_start, 0, -1):
        jn[n - 1] = (2.0 * n / x) * jn[n] - jn[n + 1]
    norm = jn[0] + 2.0 * np.sum(jn[2:n_start + 1:2], axis=0)
    jn /= norm
    lg = np.log(x / 2.0) + EULER_GAMMA
    ks = np.arange(1, n_start // 2)
    signs = np.where(ks % 2, -1.0, 1.0)[:, None] if x.ndim else np.where(ks % 2, -1.0, 1.0)
    signs = signs.reshape((-1,) + (1,) * x.ndim)
    kk = ks.reshape((-1,) + (1,) * x.ndim)
    y0 = (2.0 / np.pi) * (lg * jn[0] - 2.0 * np.sum(signs * jn[2 * ks] / kk, axis=0))
    y1 = (-(2.0 / np.pi) * jn[0] / x + (2.0 / np.pi) * lg * jn[1]
          + (2.0 / np.pi) * np.sum(signs * (jn[2 * ks - 1] - jn[2 * ks + 1]) / kk, axis=0))
    return jn[0], jn[1], y0, y1


def _asymptotic(x, order):
    mu = 4.0 * order * order
    total = np.ones(x.shape, dtype=complex)
    term = np.ones(x.shape, dtype=complex)
    for m in range(1, 40):
        term = term * 1j * (mu - (2 * m - 1) ** 2) / (m * 8.0 * x)
        total += term
        if np.all(np.abs(term) < 1e-17):
            break
    phase = x - order * np.pi / 2.0 - np.pi / 4.0
    return np.sqrt(2.0 / (np.pi * x)) * np.exp(1j * phase) * total


def _hankel(x, order):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Hankel functions are evaluated for x > 0 only")
    out = np.empty(x.shape, dtype=complex)
    small = x <= SERIES_MAX
    large = x > ASYMPTOTIC_MIN
    mid = ~small & ~large
    if np.any(small):
        j0, j1, y0, y1 = _series(x[small])
        out[small] = (j0 + 1j * y0) if order == 0 else (j1 + 1j * y1)
    if np.any(mid):
        j0, j1, y0, y1 = _miller(x[mid])
        out[mid] = (j0 + 1j * y0) if order == 0 else (j1 + 1j * y1)
    if np.any(large):
        out[large] = _asymptotic(x[large], order)
    return out


def hankel1_0(x):
    """H_0^(1)(x) = J_0(x) + i Y_0(x) for real x > 0 (scalar or array)."""
    out = _hankel(x, 0)
    return out[()] if out.ndim == 0 else out


def hankel1_1(x):
    """H_1^(1)(x) = J_1(x) + i Y_1(x) for real x > 0 (scalar or array)."""
    out = _hankel(x, 1)
    return out[()] if out.ndim == 0 else out
