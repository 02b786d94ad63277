"""Position-space Lippmann-Schwinger iteration, an engine-independent check.

``psi = psi_inc + G * (v psi)`` with ``G(r) = -(i/4) H0(k r)`` is discretized on a uniform
cell-centred grid covering the potential support and iterated as a Born (Picard) series.
The far field is

    f(theta) = -(1 / sqrt(8 pi)) * integral exp(-i k rhat . r) v(r) psi(r) d^2 r,

the normalization that makes a point scatterer reproduce ``-z psi(r0) / (2 sqrt(2 pi))``.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import NonContractive, ValidationError
from .special import hankel1_0, hankel1_1

MIN_POINTS_PER_WAVELENGTH = 8


@dataclass(frozen=True, eq=False)
class SpatialGrid:
    """Uniform cell-centred grid ``x_i, y_j`` with spacing ``h`` and samples ``v[i, j]``."""

    x: np.ndarray
    y: np.ndarray
    h: float
    v: np.ndarray
    k: float

    def __post_init__(self):
        if self.v.shape != (len(self.x), len(self.y)):
            raise ValidationError("potential samples do not match the grid")
        if 2 * np.pi / self.k / self.h < MIN_POINTS_PER_WAVELENGTH:
            raise ValidationError("spatial grid needs at least 8 points per wavelength")

    @classmethod
    def from_potential(cls, pot, k, h, x_range=None, y_range=None):
        x_range = x_range or pot.support
        if y_range is None:
            raise ValidationError("a y-range covering the potential is required")
        nx = max(1, int(np.ceil((x_range[1] - x_range[0]) / h)))
        ny = max(1, int(np.ceil((y_range[1] - y_range[0]) / h)))
        x = x_range[0] + (np.arange(nx) + 0.5) * h
        y = y_range[0] + (np.arange(ny) + 0.5) * h
        v = np.asarray(pot.v_xy(x[:, None], y[None, :]), dtype=complex)
        return cls(x, y, float(h), np.broadcast_to(v, (nx, ny)).copy(), float(k))

    @property
    def shape(self):
        return self.v.shape


def self_cell_weight(k, h):
    """Integral of G over a disk of area h^2 centred on the singularity."""
    R = h / np.sqrt(np.pi)
    radial = (k * R * hankel1_1(k * R) + 2j / np.pi) / k ** 2
    return -0.25j * 2 * np.pi * radial


class GreenOperator:
    """``phi -> integral G(r - r') phi(r') d^2 r'`` on a SpatialGrid via zero-padded FFT."""

    def __init__(self, grid):
        self.grid = grid
        nx, ny = grid.shape
        h, k = grid.h, grid.k
        dx = np.arange(-(nx - 1), nx) * h
        dy = np.arange(-(ny - 1), ny) * h
        r = np.hypot(dx[:, None], dy[None, :])
        ker = np.empty(r.shape, dtype=complex)
        nz = r > 0
        ker[nz] = -0.25j * hankel1_0(k * r[nz]) * h * h
        ker[~nz] = self_cell_weight(k, h)
        self.shape = (sfft.next_fast_len(3 * nx - 2), sfft.next_fast_len(3 * ny - 2))
        self.kernel_hat = sfft.fft2(ker, self.shape)

    def __call__(self, phi):
        nx, ny = self.grid.shape
        full = sfft.ifft2(sfft.fft2(phi, self.shape) * self.kernel_hat)
        return full[nx - 1: 2 * nx - 1, ny - 1: 2 * ny - 1]


def incident_wave(grid, inc):
    kx, ky = inc.k0
    return np.exp(1j * (kx * grid.x[:, None] + ky * grid.y[None, :]))


def contraction_estimate(grid, green=None, n_iter=60, seed=0):
    """Spectral-radius estimate of ``phi -> G (v phi)`` by power iteration."""
    green = green or GreenOperator(grid)
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    ratio = 0.0
    for _ in range(n_iter):
        nxt = green(grid.v * phi)
        norm = np.linalg.norm(nxt)
        if norm == 0:
            return 0.0
        ratio = norm / np.linalg.norm(phi)
        phi = nxt / norm
    return float(ratio)


@dataclass
class BornSeriesResult:
    psi: np.ndarray
    increments: list
    contraction: float

    @property
    def measured_ratio(self):
        inc = self.increments
        if len(inc) < 3 or inc[-2] == 0:
            return 0.0
        return float(inc[-1] / inc[-2])


def born_series_solve(grid, inc, n_terms=40, tol=0.0, max_ratio=1.0):
    """Partial sum of ``n_terms`` Born terms (``n_terms = 1`` gives the incident wave).

    Refuses with :class:`NonContractive` when the power-iteration estimate of the kernel
    norm is ``>= max_ratio``.  ``increments`` holds the norm of each added term.
    """
    if n_terms < 1:
        raise ValidationError("n_terms must be at least 1")
    green = GreenOperator(grid)
    psi0 = incident_wave(grid, inc)
    if not np.any(grid.v):
        return BornSeriesResult(psi0, [], 0.0)
    rho = contraction_estimate(grid, green)
    if rho >= max_ratio:
        raise NonContractive(f"Born series kernel estimate {rho:.3f} >= {max_ratio}", ratio=rho)
    psi = psi0.copy()
    term = psi0
    increments = []
    for _ in range(n_terms - 1):
        term = green(grid.v * term)
        psi = psi + term
        increments.append(float(np.linalg.norm(term)))
        if tol and increments[-1] <= tol * np.linalg.norm(psi):
            break
    return BornSeriesResult(psi, increments, rho)


def far_field(grid, psi, theta):
    """Amplitude samples from the source density ``v psi`` at detector angles ``theta``."""
    theta = np.asarray(theta, dtype=float)
    src = grid.v * psi * grid.h ** 2
    ex = np.exp(-1j * grid.k * np.cos(theta)[:, None] * grid.x[None, :])
    ey = np.exp(-1j * grid.k * np.sin(theta)[:, None] * grid.y[None, :])
    return -np.einsum("ti,ij,tj->t", ex, src, ey) / np.sqrt(8 * np.pi)
