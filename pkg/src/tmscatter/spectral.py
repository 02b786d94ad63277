"""Transverse-momentum discretization: dispersion, quadrature grids, fields, Fourier maps.

Two grid flavours share one interface (``p``, ``w``, ``mu``, ``prop``, ``varpi``):

``MomentumGrid``
    Gauss-Legendre quadrature for smooth fields.  On the propagating band the nodes are
    ``p = k sin(theta)``, so ``dp / varpi(p) = d theta``; on the evanescent band they are
    ``p = +-k cosh(t)``, so ``dp / |varpi(p)| = dt``.  Both inverse-square-root endpoint
    singularities are absorbed by the change of variables.
``ChannelGrid``
    A comb ``p_n = p0 + n * spacing``.  Fields on it are the weights of Dirac terms
    ``sum_n c_n delta(p - p_n)``; this is the exact representation for potentials with a
    line spectrum in ``y`` (gratings), where every momentum transfer is a multiple of the
    spacing.

For both, ``w`` integrates ``int dp f(p)`` and ``mu`` integrates ``int dp f(p) / varpi(p)``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, ValidationError


def varpi(p, k):
    """Axial wavenumber: sqrt(k^2 - p^2) inside the disk |p| < k, i sqrt(p^2 - k^2) outside."""
    p = np.asarray(p, dtype=float)
    d = k * k - p * p
    out = np.where(d > 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    return out[()] if out.ndim == 0 else out


def varpi_im(p, k):
    """Imaginary part of :func:`varpi`: zero on the propagating band."""
    p = np.asarray(p, dtype=float)
    d = p * p - k * k
    out = np.where(d > 0, np.sqrt(np.abs(d)), 0.0)
    return out[()] if out.ndim == 0 else out


def _check_k(k):
    if not np.isfinite(k) or k <= 0:
        raise ValidationError(f"wavenumber must be positive, got {k!r}")
    return float(k)


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    """Quadrature nodes over the propagating band and a truncated evanescent band.

    Nodes are stored propagating first (ascending in p), then the evanescent nodes
    (negative side ascending, positive side ascending).
    """

    k: float
    p: np.ndarray
    w: np.ndarray
    mu: np.ndarray
    n_prop: int
    p_max: float
    theta: np.ndarray
    theta_weights: np.ndarray

    kind = "continuous"

    @property
    def size(self):
        return len(self.p)

    @property
    def prop(self):
        mask = np.zeros(self.size, dtype=bool)
        mask[: self.n_prop] = True
        return mask

    @property
    def prop_index(self):
        return np.arange(self.n_prop)

    @property
    def evan_index(self):
        return np.arange(self.n_prop, self.size)

    @property
    def n_evan(self):
        return (self.size - self.n_prop) // 2

    @property
    def varpi(self):
        return varpi(self.p, self.k)

    @property
    def prop_nodes(self):
        return list(zip(self.p[: self.n_prop], self.w[: self.n_prop]))

    @property
    def evan_nodes(self):
        return list(zip(self.p[self.n_prop:], self.w[self.n_prop:]))

    def integrate(self, values, over="all"):
        """Quadrature of ``int dp f(p)`` from node values."""
        sel = self._select(over)
        return np.sum(self.w[sel] * np.asarray(values)[sel])

    def integrate_over_varpi(self, values, over="all"):
        """Quadrature of ``int dp f(p) / varpi(p)`` with the singular weight absorbed."""
        sel = self._select(over)
        return np.sum(self.mu[sel] * np.asarray(values)[sel])

    def _select(self, over):
        if over == "all":
            return slice(None)
        if over == "prop":
            return slice(0, self.n_prop)
        if over == "evan":
            return slice(self.n_prop, None)
        raise ValueError(over)

    def interpolate_prop(self, values, p):
        """Barycentric interpolation of propagating-band values to momenta |p| < k.

        Interpolation runs in the angle variable ``theta = asin(p/k)``, where the nodes are
        Legendre points and the barycentric weights are known in closed form.
        """
        theta = np.arcsin(np.clip(np.asarray(p, dtype=float) / self.k, -1.0, 1.0))
        return barycentric(self.theta, self.theta_weights, values, theta)

    def same_as(self, other):
        return other is self or (
            getattr(other, "kind", None) == self.kind
            and other.k == self.k
            and other.size == self.size
            and np.array_equal(other.p, self.p)
        )


def _legendre_bary_weights(x, w):
    lam = np.sqrt((1.0 - x * x) * w)
    lam[1::2] *= -1.0
    return lam


def barycentric(nodes, weights, values, targets):
    """Second-form barycentric interpolation; exact at the nodes."""
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    values = np.asarray(values)
    diff = targets[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    c = weights[None, :] / diff
    out = (c @ values) / c.sum(axis=1)
    hit_rows, hit_cols = np.nonzero(exact)
    out[hit_rows] = values[hit_cols]
    return out


def build_grid(k, n_prop, n_evan, p_max=None):
    """Build a :class:`MomentumGrid` for wavenumber ``k``.

    ``p_max`` defaults to ``4k``.  ``n_evan`` nodes are placed on each side of the
    propagating band, so the grid has ``n_prop + 2 n_evan`` nodes.
    """
    k = _check_k(k)
    if n_prop < 2:
        raise ValidationError(f"n_prop must be at least 2, got {n_prop}")
    if n_evan < 0:
        raise ValidationError(f"n_evan must be non-negative, got {n_evan}")
    if p_max is None:
        p_max = 4.0 * k
    if p_max <= k:
        raise ValidationError(f"p_max must exceed k ({p_max} <= {k})")

    x, wx = np.polynomial.legendre.leggauss(n_prop)
    theta = 0.5 * np.pi * x
    wtheta = 0.5 * np.pi * wx
    p_prop = k * np.sin(theta)
    w_prop = wtheta * k * np.cos(theta)
    mu_prop = wtheta.astype(complex)

    if n_evan:
        t_max = np.arccosh(p_max / k)
        xe, we = np.polynomial.legendre.leggauss(n_evan)
        t = 0.5 * t_max * (xe + 1.0)
        wt = 0.5 * t_max * we
        pe = k * np.cosh(t)
        w_e = wt * k * np.sinh(t)
        p_evan = np.concatenate([-pe[::-1], pe])
        w_evan = np.concatenate([w_e[::-1], w_e])
        mu_evan = -1j * np.concatenate([wt[::-1], wt])
    else:
        p_evan = w_evan = np.zeros(0)
        mu_evan = np.zeros(0, dtype=complex)

    return MomentumGrid(
        k=k,
        p=np.concatenate([p_prop, p_evan]),
        w=np.concatenate([w_prop, w_evan]),
        mu=np.concatenate([mu_prop, mu_evan]),
        n_prop=n_prop,
        p_max=float(p_max),
        theta=theta,
        theta_weights=_legendre_bary_weights(x, wx),
    )


@dataclass(frozen=True, eq=False)
class ChannelGrid:
    """Diffraction channels ``p_n = p0 + n * spacing`` for ``n_min <= n <= n_max``."""

    k: float
    p0: float
    spacing: float
    n_min: int
    n_max: int

    kind = "channel"

    def __post_init__(self):
        _check_k(self.k)
        if self.spacing <= 0:
            raise ValidationError("channel spacing must be positive")
        if self.n_min > 0 or self.n_max < 0:
            raise ValidationError("channel range must contain the incident channel n = 0")
        if np.any(np.abs(self.varpi) < 1e-8 * self.k):
            raise ValidationError("a diffraction channel is grazing (|p_n| = k); "
                                  "the channel problem is degenerate at this k")

    @property
    def orders(self):
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def p(self):
        return self.p0 + self.orders * self.spacing

    @property
    def size(self):
        return self.n_max - self.n_min + 1

    @property
    def prop(self):
        return np.abs(self.p) < self.k

    @property
    def prop_index(self):
        return np.flatnonzero(self.prop)

    @property
    def evan_index(self):
        return np.flatnonzero(~self.prop)

    @property
    def n_prop(self):
        return int(np.count_nonzero(self.prop))

    @property
    def incident_index(self):
        return -self.n_min

    @property
    def varpi(self):
        return varpi(self.p, self.k)

    @property
    def w(self):
        return np.ones(self.size)

    @property
    def mu(self):
        return 1.0 / self.varpi

    def index_of(self, p, atol=1e-12):
        hit = np.flatnonzero(np.abs(self.p - p) <= atol * max(1.0, abs(p)))
        return int(hit[0]) if len(hit) else None

    def same_as(self, other):
        return other is self or (
            getattr(other, "kind", None) == self.kind
            and (other.k, other.p0, other.spacing, other.n_min, other.n_max)
            == (self.k, self.p0, self.spacing, self.n_min, self.n_max)
        )


def channel_grid(k, p0, spacing, n_orders):
    """Symmetric channel comb with ``n_orders`` channels on each side of ``p0``."""
    return ChannelGrid(k=float(k), p0=float(p0), spacing=float(spacing),
                       n_min=-int(n_orders), n_max=int(n_orders))


def _check_same(a, b):
    if not a.same_as(b):
        raise GridMismatch("fields live on different momentum grids")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficient vector on a grid plus symbolic Dirac terms ``weight * delta(p - p0)``."""

    grid: object
    coeffs: np.ndarray
    delta_part: tuple = field(default_factory=tuple)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (self.grid.size,):
            raise GridMismatch(f"expected {self.grid.size} coefficients, got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "delta_part",
                           tuple((float(p0), complex(c)) for p0, c in self.delta_part))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.size, dtype=complex))

    @classmethod
    def delta(cls, grid, p0, weight=1.0):
        return cls(grid, np.zeros(grid.size, dtype=complex), ((p0, weight),))

    @property
    def smooth(self):
        return SpectralField(self.grid, self.coeffs)

    def is_propagating_only(self):
        return (not np.any(self.coeffs[self.grid.evan_index])
                and all(abs(p0) < self.grid.k for p0, _ in self.delta_part))

    def __add__(self, other):
        _check_same(self.grid, other.grid)
        merged = {}
        for p0, c in self.delta_part + other.delta_part:
            merged[p0] = merged.get(p0, 0) + c
        return SpectralField(self.grid, self.coeffs + other.coeffs, tuple(merged.items()))

    def __mul__(self, scalar):
        return SpectralField(self.grid, scalar * self.coeffs,
                             tuple((p0, scalar * c) for p0, c in self.delta_part))

    __rmul__ = __mul__

    def __sub__(self, other):
        return self + (-1.0) * other

    def allclose(self, other, atol=1e-12):
        _check_same(self.grid, other.grid)
        if not np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=0):
            return False
        a = dict(self.delta_part)
        b = dict(other.delta_part)
        return all(abs(a.get(p, 0) - b.get(p, 0)) <= atol for p in set(a) | set(b))


@dataclass(frozen=True, eq=False)
class TwoComponentField:
    """Column vector ``[minus; plus]`` of spectral fields on one grid."""

    minus: SpectralField
    plus: SpectralField

    def __post_init__(self):
        _check_same(self.minus.grid, self.plus.grid)

    @property
    def grid(self):
        return self.minus.grid


def project_pk(f):
    """Projection onto the propagating band: evanescent coefficients are zeroed."""
    coeffs = f.coeffs.copy()
    coeffs[f.grid.evan_index] = 0.0
    kept = tuple((p0, c) for p0, c in f.delta_part if abs(p0) < f.grid.k)
    return SpectralField(f.grid, coeffs, kept)


def _uniform_step(y):
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or len(y) < 2:
        raise ValidationError("need a one-dimensional grid with at least two samples")
    h = np.diff(y)
    if np.max(np.abs(h - h[0])) > 1e-9 * abs(h[0]) or h[0] <= 0:
        raise ValidationError("y grid must be uniform and increasing")
    return h[0]


def fourier_y_to_p(y, f):
    """Sampled transform ``F(p) = int dy exp(-i p y) f(y)`` (rectangle rule, any length).

    Returns ``(p, F)`` with ``p`` ascending on the reciprocal grid ``2 pi m / (N h)``.
    """
    h = _uniform_step(y)
    n = len(y)
    p = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, d=h))
    vals = h * np.fft.fftshift(np.fft.fft(np.asarray(f, dtype=complex)))
    return p, vals * np.exp(-1j * p * y[0])


def fourier_p_to_y(p, F, y0):
    """Inverse of :func:`fourier_y_to_p`: ``f(y) = (1/2pi) int dp exp(i p y) F(p)``.

    ``p`` must be the (ascending) output of :func:`fourier_y_to_p`; ``y0`` is the first
    sample position of the target y grid.
    """
    dp = _uniform_step(p)
    n = len(p)
    h = 2.0 * np.pi / (n * dp)
    F = np.asarray(F, dtype=complex) * np.exp(1j * np.asarray(p) * y0)
    f = np.fft.ifft(np.fft.ifftshift(F)) / h
    return y0 + h * np.arange(n), f
