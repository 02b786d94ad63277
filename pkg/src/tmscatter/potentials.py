"""Potentials v(x, y) with compact axial support, and the convolution operator they induce.

Every model exposes ``support`` and a list of separable *terms*
``v(x, y) = sum_r g_r(x) h_r(y)``.  A term's transverse factor is either smooth
(``hat(K)`` gives its Fourier transform) or a line spectrum ``h(y) = sum_m c_m exp(i K_m y)``.
The engine only ever needs these terms, so a new potential family is a new term list.
"""

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import GridMismatch, ValidationError
from .spectral import SpectralField

PROFILE_SHAPES = ("gaussian", "box", "cosine-window", "exp-shifted")


def _sinc(u):
    return np.sinc(np.asarray(u) / np.pi)


# ---------------------------------------------------------------------------
# axial profiles g(x)


@dataclass(frozen=True)
class AxialProfile:
    """Closed-form axial profile from the fixed catalog, or linear interpolation of samples."""

    shape: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.shape not in PROFILE_SHAPES + ("sampled",):
            raise ValidationError(f"unknown axial profile {self.shape!r}")
        if self.support[0] >= self.support[1]:
            raise ValidationError("axial support must satisfy a_minus < a_plus")

    @property
    def support(self):
        q = self.params
        if self.shape == "gaussian":
            c, s, n = q.get("center", 0.0), q["width"], q.get("nsig", 6.0)
            return (c - n * s, c + n * s)
        if self.shape == "sampled":
            return (float(q["x"][0]), float(q["x"][-1]))
        return (float(q["a_minus"]), float(q["a_plus"]))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        q = self.params
        lo, hi = self.support
        inside = (x >= lo) & (x <= hi)
        amp = complex(q.get("amp", 1.0))
        if self.shape == "gaussian":
            c, s = q.get("center", 0.0), q["width"]
            val = amp * np.exp(-((x - c) ** 2) / (2 * s * s))
        elif self.shape == "box":
            val = amp * np.ones_like(x)
        elif self.shape == "cosine-window":
            c, L = 0.5 * (lo + hi), hi - lo
            val = amp * np.cos(np.pi * (x - c) / L) ** 2
        elif self.shape == "exp-shifted":
            val = amp * np.exp(1j * q.get("kappa", 0.0) * x)
        else:
            val = np.interp(x, q["x"], np.real(q["values"])) + 1j * np.interp(
                x, q["x"], np.imag(q["values"]))
        out = np.where(inside, val, 0.0).astype(complex)
        return out[()] if out.ndim == 0 else out

    def sup_norm(self, n=2001):
        lo, hi = self.support
        return float(np.max(np.abs(self(np.linspace(lo, hi, n)))))


# ---------------------------------------------------------------------------
# transverse profiles h(y)


@dataclass(frozen=True)
class TransverseProfile:
    """Smooth transverse factor with closed-form ``h(y)`` and ``hat(K) = int dy e^{-iKy} h(y)``."""

    shape: str
    params: dict = field(default_factory=dict)
    lines = None

    def __post_init__(self):
        if self.shape not in PROFILE_SHAPES:
            raise ValidationError(f"unknown transverse profile {self.shape!r}")

    def y(self, y):
        y = np.asarray(y, dtype=float)
        q = self.params
        amp = complex(q.get("amp", 1.0))
        c = q.get("center", 0.0)
        if self.shape == "gaussian":
            return amp * np.exp(-((y - c) ** 2) / (2 * q["width"] ** 2))
        if self.shape == "box":
            return amp * (np.abs(y - c) <= q["width"] / 2).astype(complex)
        if self.shape == "cosine-window":
            w = q["width"]
            return amp * np.where(np.abs(y - c) <= w / 2, np.cos(np.pi * (y - c) / w) ** 2, 0.0)
        s = q["width"]
        return amp * np.exp(1j * q["beta_prime"] * y - ((y - c) ** 2) / (2 * s * s))

    def hat(self, K):
        K = np.asarray(K, dtype=float)
        q = self.params
        amp = complex(q.get("amp", 1.0))
        c = q.get("center", 0.0)
        shift = np.exp(-1j * K * c)
        if self.shape == "gaussian":
            s = q["width"]
            return amp * np.sqrt(2 * np.pi) * s * np.exp(-0.5 * (K * s) ** 2) * shift
        if self.shape == "box":
            w = q["width"]
            return amp * w * _sinc(K * w / 2) * shift
        if self.shape == "cosine-window":
            w = q["width"]
            k1 = 2 * np.pi / w
            val = 0.5 * w * _sinc(K * w / 2) + 0.25 * w * (
                _sinc((K - k1) * w / 2) + _sinc((K + k1) * w / 2))
            return amp * val * shift
        s = q["width"]
        return amp * np.sqrt(2 * np.pi) * s * np.exp(-0.5 * ((K - q["beta_prime"]) * s) ** 2) * shift

    def sup_norm(self):
        q = self.params
        return abs(complex(q.get("amp", 1.0)))


@dataclass(frozen=True)
class LineProfile:
    """Line-spectrum transverse factor ``h(y) = sum_m c_m exp(i K_m y)``."""

    lines: tuple

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple((float(K), complex(c)) for K, c in self.lines))
        if not self.lines:
            raise ValidationError("a line profile needs at least one line")

    def y(self, y):
        y = np.asarray(y, dtype=float)
        return sum(c * np.exp(1j * K * y) for K, c in self.lines)

    def hat(self, K):
        raise ValidationError("a line spectrum has no pointwise Fourier transform")

    def sup_norm(self):
        return float(sum(abs(c) for _, c in self.lines))

    @property
    def spacing(self):
        """Largest common spacing of the line positions (all K_m are multiples of it)."""
        Ks = np.array([abs(K) for K, _ in self.lines if K != 0.0])
        if not len(Ks):
            return None
        base = Ks.min()
        for K in Ks:
            ratio = K / base
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValidationError("line positions must be commensurate")
        return float(base)


class Term(NamedTuple):
    axial: Callable
    transverse: object


# ---------------------------------------------------------------------------
# potential models


class PotentialModel:
    """Common interface; subclasses define ``terms()`` and ``support``."""

    line_spectrum = False

    def terms(self):
        raise NotImplementedError

    def vtilde(self, x, K):
        x = np.asarray(x, dtype=float)
        K = np.asarray(K, dtype=float)
        out = sum(t.axial(x) * t.transverse.hat(K) for t in self.terms())
        return np.asarray(out, dtype=complex)

    def v_xy(self, x, y):
        return sum(t.axial(x) * t.transverse.y(y) for t in self.terms())

    def sup_norm(self):
        lo, hi = self.support
        xs = np.linspace(lo, hi, 801)
        return float(max(np.max(np.abs(t.axial(xs))) * t.transverse.sup_norm() for t in self.terms()))

    @property
    def width(self):
        lo, hi = self.support
        return hi - lo

    def is_zero(self):
        return False


@dataclass(frozen=True, eq=False)
class SeparableY(PotentialModel):
    """``v(x, y) = g(x) h(y)`` with smooth ``h``; ``vtilde(x, K) = g(x) hat_h(K)``."""

    axial: AxialProfile
    transverse: TransverseProfile

    @property
    def support(self):
        return self.axial.support

    def terms(self):
        return [Term(self.axial, self.transverse)]

    def is_zero(self):
        return complex(self.axial.params.get("amp", 1.0)) == 0


@dataclass(frozen=True, eq=False)
class HarmonicY(PotentialModel):
    """``v(x, y) = g(x) sum_m c_m exp(i K_m y)``: a grating with a pure line spectrum."""

    axial: AxialProfile
    transverse: LineProfile
    line_spectrum = True

    @property
    def support(self):
        return self.axial.support

    def terms(self):
        return [Term(self.axial, self.transverse)]

    def vtilde(self, x, K):
        raise ValidationError("line-spectrum potential: vtilde is a sum of Dirac terms; "
                              "use .lines_at(x)")

    def lines_at(self, x):
        """``[(K_m, weight)]`` with ``vtilde(x, K) = 2 pi sum weight * delta(K - K_m)``."""
        g = self.axial(x)
        return [(K, g * c) for K, c in self.transverse.lines]

    def is_zero(self):
        return all(c == 0 for _, c in self.transverse.lines) or complex(
            self.axial.params.get("amp", 1.0)) == 0


@dataclass(frozen=True, eq=False)
class ZeroPotential(PotentialModel):
    """``v = 0``; kept as a model so that the zero-potential shortcuts are explicit."""

    support: tuple = (0.0, 1.0)

    def terms(self):
        return []

    def vtilde(self, x, K):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(K)).shape, dtype=complex)

    def v_xy(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape, dtype=complex)

    def sup_norm(self):
        return 0.0

    def is_zero(self):
        return True


class _HatX:
    """Piecewise-linear hat basis function in x centred at ``xs[r]``."""

    def __init__(self, xs, r):
        self.xs, self.r = xs, r

    def __call__(self, x):
        e = np.zeros(len(self.xs))
        e[self.r] = 1.0
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.xs, e, left=0.0, right=0.0).astype(complex)
        return out[()] if out.ndim == 0 else out


class _TabulatedHat:
    def __init__(self, Ks, row, policy):
        self.Ks, self.row, self.policy = Ks, row, policy

    def hat(self, K):
        K = np.asarray(K, dtype=float)
        if self.policy == "error" and (np.any(K < self.Ks[0]) or np.any(K > self.Ks[-1])):
            raise ValidationError("vtilde queried outside the tabulated K range")
        re = np.interp(K, self.Ks, self.row.real, left=0.0, right=0.0)
        im = np.interp(K, self.Ks, self.row.imag, left=0.0, right=0.0)
        return re + 1j * im

    def y(self, y):
        # trapezoid inverse transform of the tabulated spectrum
        y = np.asarray(y, dtype=float)
        ph = np.exp(1j * np.multiply.outer(y, self.Ks))
        return np.trapezoid(ph * self.row, self.Ks, axis=-1) / (2 * np.pi)

    def sup_norm(self):
        return float(np.max(np.abs(self.y(np.linspace(-20, 20, 401)))))


@dataclass(frozen=True, eq=False)
class GridSampled(PotentialModel):
    """``vtilde(x_j, K_m)`` tabulated on a rectangular grid, bilinear in (x, K).

    ``policy`` controls K queries outside the table: ``"zero"`` fills with zero,
    ``"error"`` raises.
    """

    xs: np.ndarray
    Ks: np.ndarray
    table: np.ndarray
    policy: str = "zero"

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        Ks = np.asarray(self.Ks, dtype=float)
        table = np.asarray(self.table, dtype=complex)
        if table.shape != (len(xs), len(Ks)):
            raise ValidationError("table shape must be (len(xs), len(Ks))")
        if np.any(np.diff(xs) <= 0) or np.any(np.diff(Ks) <= 0):
            raise ValidationError("xs and Ks must be strictly increasing")
        if self.policy not in ("zero", "error"):
            raise ValidationError("policy must be 'zero' or 'error'")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "Ks", Ks)
        object.__setattr__(self, "table", table)

    @property
    def support(self):
        return (float(self.xs[0]), float(self.xs[-1]))

    def terms(self):
        return [Term(_HatX(self.xs, r), _TabulatedHat(self.Ks, self.table[r], self.policy))
                for r in range(len(self.xs))]


class SumPotential(PotentialModel):
    """Sum of smooth models, e.g. several slabs along x."""

    def __init__(self, *parts):
        if not parts:
            raise ValidationError("a sum needs at least one part")
        if any(p.line_spectrum != parts[0].line_spectrum for p in parts):
            raise ValidationError("cannot mix line-spectrum and smooth potentials")
        self.parts = parts
        self.line_spectrum = parts[0].line_spectrum

    @property
    def support(self):
        return (min(p.support[0] for p in self.parts), max(p.support[1] for p in self.parts))

    def terms(self):
        return [t for p in self.parts if not p.is_zero() for t in p.terms()]

    def is_zero(self):
        return all(p.is_zero() for p in self.parts)


class AxialDelta(NamedTuple):
    """Marker for ``delta(x - position) * transverse``; only the delta engine consumes it."""

    position: float
    transverse: complex


@dataclass(frozen=True, eq=False)
class Delta2D(PotentialModel):
    """``v = z delta(x - a) delta(y - b)``."""

    z: complex
    a: float = 0.0
    b: float = 0.0

    @property
    def support(self):
        return (self.a, self.a)

    def terms(self):
        raise ValidationError("Delta2D has no smooth term representation; use delta2d")

    def vtilde(self, x, K):
        K = np.asarray(K, dtype=float)
        return AxialDelta(self.a, self.z * np.exp(-1j * K * self.b))

    def v_xy(self, x, y):
        raise ValidationError("Delta2D cannot be sampled on a grid")

    def is_zero(self):
        return self.z == 0


@dataclass(frozen=True, eq=False)
class FourierShifted(PotentialModel):
    """``v(x, y) = g(x) h(y)`` with ``hat_h(K) = 0`` for ``K <= beta``.

    ``window=None`` gives the single harmonic ``h(y) = exp(i beta' y)``; a positive
    ``window`` width gives the Gaussian packet ``exp(i beta' y - y^2 / 2 window^2)``.
    The spectral gap is checked numerically on construction.
    """

    axial: AxialProfile
    beta: float
    beta_prime: float
    window: Optional[float] = None
    leakage_tol: float = 1e-12

    def __post_init__(self):
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if self.window is None:
            if self.beta_prime <= self.beta:
                raise ValidationError("harmonic line must lie strictly above beta")
        else:
            leak = spectral_leakage(self.transverse, self.beta)
            if leak > self.leakage_tol:
                raise ValidationError(
                    f"envelope leaks {leak:.2e} of its peak below beta (tol {self.leakage_tol:.0e})")

    @property
    def transverse(self):
        if self.window is None:
            return LineProfile(((self.beta_prime, 1.0),))
        return TransverseProfile("exp-shifted", {"beta_prime": self.beta_prime,
                                                 "width": self.window})

    @property
    def line_spectrum(self):
        return self.window is None

    @property
    def support(self):
        return self.axial.support

    def terms(self):
        return [Term(self.axial, self.transverse)]

    def vtilde(self, x, K):
        if self.window is None:
            raise ValidationError("single-harmonic potential: vtilde is 2 pi g(x) delta(K - beta')")
        return super().vtilde(x, K)

    def lines_at(self, x):
        return [(self.beta_prime, self.axial(x))]


def spectral_leakage(transverse, beta, n=2 ** 16, span=None):
    """Largest ``|hat_h(K)|`` for ``K <= beta`` relative to the peak, from a sampled FFT of h(y)."""
    from .spectral import fourier_y_to_p

    s = transverse.params["width"]
    span = span or 40.0 * s
    y = np.linspace(-span, span, n, endpoint=False)
    p, F = fourier_y_to_p(y, transverse.y(y))
    peak = np.max(np.abs(F))
    below = np.abs(F[p <= beta])
    return float(below.max() / peak) if len(below) else 0.0


# ---------------------------------------------------------------------------
# operator action


def vtilde(pot, x, K):
    """Transverse Fourier transform of ``v(x, .)`` at ``K``; exactly zero off the support."""
    return pot.vtilde(x, K)


def transverse_kernel(term, p_out, q_in):
    """``hat_h(p - q) / 2pi`` for every (p, q) pair."""
    return term.transverse.hat(np.subtract.outer(p_out, q_in)) / (2 * np.pi)


def line_kernel(term, grid):
    """Channel-grid matrix ``S[i, j] = sum_m c_m [p_i = p_j + K_m]`` for a line term."""
    n = grid.size
    S = np.zeros((n, n), dtype=complex)
    for K, c in term.transverse.lines:
        shift = K / grid.spacing
        if abs(shift - round(shift)) > 1e-9:
            raise GridMismatch("line position is not a multiple of the channel spacing")
        s = int(round(shift))
        for j in range(n):
            i = j + s
            if 0 <= i < n:
                S[i, j] += c
    return S


def apply_V(pot, x, f):
    """``(V(x) f)(p) = (1/2pi) int dq vtilde(x, p - q) f(q)``, Dirac terms included exactly."""
    grid = f.grid
    if isinstance(pot, Delta2D):
        raise ValidationError("Delta2D potentials are handled by tmscatter.delta2d")
    lo, hi = pot.support
    if pot.is_zero() or x < lo or x > hi:
        return SpectralField.zeros(grid)
    if grid.kind == "channel":
        if not pot.line_spectrum:
            raise GridMismatch("channel grids carry line-spectrum potentials only")
        out = np.zeros(grid.size, dtype=complex)
        for t in pot.terms():
            out += t.axial(x) * (line_kernel(t, grid) @ f.coeffs)
        return SpectralField(grid, out)
    if pot.line_spectrum:
        if np.any(f.coeffs):
            raise GridMismatch("line-spectrum potentials shift smooth fields off the quadrature grid")
        deltas = {}
        for t in pot.terms():
            g = t.axial(x)
            for K, c in t.transverse.lines:
                for p0, wgt in f.delta_part:
                    deltas[p0 + K] = deltas.get(p0 + K, 0) + g * c * wgt
        return SpectralField(grid, np.zeros(grid.size), tuple(deltas.items()))
    out = np.zeros(grid.size, dtype=complex)
    for t in pot.terms():
        g = t.axial(x)
        if g == 0:
            continue
        out += g * (transverse_kernel(t, grid.p, grid.p) @ (grid.w * f.coeffs))
        for p0, wgt in f.delta_part:
            out += g * wgt * t.transverse.hat(grid.p - p0) / (2 * np.pi)
    return SpectralField(grid, out)
