"""Boundary-coefficient solve and scattering amplitudes.

With ``M`` the fundamental transfer operator, a left-incident wave has
``A_- = 2 pi varpi(p0) delta_{p0}``, ``B_+ = 0`` and a right-incident one
``A_- = 0``, ``B_+ = 2 pi varpi(p0) delta_{p0}``.  The Dirac term is carried symbolically;
the linear systems below act on smooth node values only.

Angles: the detector direction is ``r = (cos theta, sin theta)`` with ``x`` the axial
coordinate, so ``p = k sin theta`` and forward (``x . r > 0``) means ``|theta| < pi/2``.
"""

from dataclasses import dataclass, field

import numpy as np

from .engine import fundamental_from_aux
from .errors import SpectralSingularity, ValidationError
from .spectral import SpectralField

SINGULAR_COND = 1e12
AMPLITUDE_PREFACTOR = -1j / np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class IncidenceSpec:
    side: str
    k: float
    p0: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ValidationError("side must be 'left' or 'right'")
        if self.k <= 0:
            raise ValidationError("k must be positive")
        if not abs(self.p0) < self.k:
            raise ValidationError("incident transverse momentum must satisfy |p0| < k")

    @classmethod
    def from_angle(cls, side, k, theta0):
        """``theta0`` is the incidence angle from the axis, ``p0 = k sin(theta0)``."""
        return cls(side, float(k), float(k * np.sin(theta0)))

    @property
    def varpi0(self):
        return float(np.sqrt(self.k ** 2 - self.p0 ** 2))

    @property
    def k0(self):
        """Incident wave vector (k_x, k_y)."""
        sgn = 1.0 if self.side == "left" else -1.0
        return np.array([sgn * self.varpi0, self.p0])

    @property
    def forward_angle(self):
        theta = np.arcsin(self.p0 / self.k)
        return theta if self.side == "left" else np.pi - theta if theta >= 0 else -np.pi - theta


@dataclass
class ScatteringResult:
    incidence: IncidenceSpec
    B_minus: SpectralField
    A_plus: SpectralField
    forward_delta_weight: complex
    theta: np.ndarray = None
    f: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    @property
    def sigma(self):
        return np.abs(self.f) ** 2


def _field_on_rows(M, values):
    grid = M.grid
    coeffs = np.zeros(grid.size, dtype=complex)
    coeffs[M.index] = values
    return coeffs


def solve_boundary(M, inc, cond_limit=SINGULAR_COND):
    """Solve for ``B_-`` and ``A_+`` given the fundamental operator and the incident wave.

    Returns ``(B_minus, A_plus)`` as :class:`SpectralField`; the incident Dirac term sits in
    ``delta_part`` (in ``A_plus`` for left incidence, in ``B_minus`` for right incidence).
    """
    if M.scope != "fundamental":
        raise ValidationError("solve_boundary needs the fundamental (propagating) operator")
    grid = M.grid
    if abs(grid.k - inc.k) > 1e-14 * inc.k:
        raise ValidationError("operator grid and incidence disagree on k")
    d11, d21, d12, d22 = M.delta_response(inc.p0)
    M22 = M.M22
    cond = np.linalg.cond(M22) if M22.size else 1.0
    if not np.isfinite(cond) or cond > cond_limit:
        raise SpectralSingularity(f"M22 is singular (condition {cond:.2e}) at k={inc.k}",
                                  k=inc.k, condition=cond)
    src = 2 * np.pi * inc.varpi0
    if inc.side == "left":
        b = np.linalg.solve(M22, -src * d21)
        a = src * d11 + M.M12 @ b
        B_delta, A_delta = (), ((inc.p0, src),)
    else:
        b = np.linalg.solve(M22, -src * d22)
        a = src * d12 + M.M12 @ b
        B_delta, A_delta = ((inc.p0, src),), ()
    if grid.kind == "channel":
        # the incident channel is a node: its Dirac weight lives in the coefficient vector
        j = grid.index_of(inc.p0)
        B = _field_on_rows(M, b)
        A = _field_on_rows(M, a)
        (A if inc.side == "left" else B)[j] += src
        B_minus, A_plus = SpectralField(grid, B), SpectralField(grid, A)
    else:
        B_minus = SpectralField(grid, _field_on_rows(M, b), B_delta)
        A_plus = SpectralField(grid, _field_on_rows(M, a), A_delta)
    return B_minus, A_plus


def solve_boundary_evanescent(aux, inc, cond_limit=SINGULAR_COND):
    """Boundary solve on the full auxiliary operator, keeping the evanescent feedback.

    The unknown ``B_-`` is extended by the evanescent tail ``C_-`` and the condition
    ``B_+ = 0`` is imposed on every node, propagating and evanescent.  This is the
    physical outgoing-wave closure of the slab problem; the projected solve drops the
    ``C_-`` coupling.  Only the propagating parts of the solution are returned.
    """
    if aux.scope != "aux" or not aux.complete:
        raise ValidationError("the evanescent closure needs a complete auxiliary operator")
    grid = aux.grid
    if grid.kind != "continuous":
        raise ValidationError("the evanescent closure is defined on continuous grids")
    d11, d21, d12, d22 = aux.delta_response(inc.p0)
    M22 = aux.M22
    cond = np.linalg.cond(M22)
    if not np.isfinite(cond) or cond > cond_limit:
        raise SpectralSingularity(f"auxiliary M22 is singular (condition {cond:.2e})",
                                  k=inc.k, condition=cond)
    src = 2 * np.pi * inc.varpi0
    rhs, first = (d21, d11) if inc.side == "left" else (d22, d12)
    b = np.linalg.solve(M22, -src * rhs)
    a = src * first + aux.M12 @ b
    keep = np.zeros(grid.size)
    keep[grid.prop_index] = 1.0
    B_delta, A_delta = ((), ((inc.p0, src),)) if inc.side == "left" else (((inc.p0, src),), ())
    return SpectralField(grid, b * keep, B_delta), SpectralField(grid, a * keep, A_delta)


def detector_angles(n=721):
    """Uniform angles on (-pi, pi] without the grazing directions theta = +-pi/2."""
    theta = np.linspace(-np.pi, np.pi, n)[1:]
    return theta[np.abs(np.cos(theta)) > 1e-12]


def amplitude(B_minus, A_plus, inc, theta=None):
    """Scattering amplitude ``f(theta) = -i / sqrt(2 pi) * (outgoing smooth coefficient)``.

    On a continuous grid the coefficient is interpolated to ``p = k sin(theta)``; Dirac
    terms are stored apart and never enter.  On a channel grid the amplitude is itself a
    sum of Dirac terms in angle; the returned pairs are the diffraction orders with the
    incident wave removed from its own channel.
    """
    grid = A_plus.grid
    if grid.kind == "channel":
        return _channel_amplitude(B_minus, A_plus, inc)
    theta = detector_angles() if theta is None else np.asarray(theta, dtype=float)
    p = inc.k * np.sin(theta)
    fwd = np.cos(theta) > 0
    idx = grid.prop_index
    f = np.empty(theta.shape, dtype=complex)
    if np.any(fwd):
        f[fwd] = grid.interpolate_prop(A_plus.coeffs[idx], p[fwd])
    if np.any(~fwd):
        f[~fwd] = grid.interpolate_prop(B_minus.coeffs[idx], p[~fwd])
    return theta, AMPLITUDE_PREFACTOR * f


def _channel_amplitude(B_minus, A_plus, inc):
    grid = A_plus.grid
    src = 2 * np.pi * inc.varpi0
    j0 = grid.index_of(inc.p0)
    thetas, fs = [], []
    for j in grid.prop_index:
        t = float(np.arcsin(grid.p[j] / inc.k))
        a = A_plus.coeffs[j] - (src if (j == j0 and inc.side == "left") else 0.0)
        b = B_minus.coeffs[j] - (src if (j == j0 and inc.side == "right") else 0.0)
        thetas += [t, np.pi - t if t >= 0 else -np.pi - t]
        fs += [a, b]
    order = np.argsort(thetas)
    return np.asarray(thetas)[order], AMPLITUDE_PREFACTOR * np.asarray(fs, dtype=complex)[order]


def solve(M, inc, theta=None, closure="projected", cond_limit=SINGULAR_COND):
    """Boundary solve plus amplitude assembly.

    ``closure="projected"`` uses the fundamental operator (an auxiliary one is projected
    first); ``closure="evanescent"`` needs the auxiliary operator and keeps the evanescent
    feedback, see :func:`solve_boundary_evanescent`.
    """
    if closure == "evanescent":
        B_minus, A_plus = solve_boundary_evanescent(M, inc, cond_limit)
    elif closure == "projected":
        if M.scope == "aux":
            M = fundamental_from_aux(M)
        B_minus, A_plus = solve_boundary(M, inc, cond_limit)
    else:
        raise ValidationError(f"unknown closure {closure!r}")
    th, f = amplitude(B_minus, A_plus, inc, theta)
    fwd_weight = dict((A_plus if inc.side == "left" else B_minus).delta_part).get(
        inc.p0, 2 * np.pi * inc.varpi0)
    meta = {"forward_angle": float(inc.forward_angle), "grid": M.grid.kind, "closure": closure,
            "note": "smooth amplitude sampled at the forward direction is flagged, not removed"}
    return ScatteringResult(inc, B_minus, A_plus, complex(fwd_weight), th, f, meta)
