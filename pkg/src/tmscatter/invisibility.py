"""Potentials with one-sided transverse spectrum: invisibility and exact first Born.

If ``vtilde(x, K)`` vanishes for ``K <= 2 alpha`` the fundamental transfer operator is the
identity for every ``k <= alpha``.  A gap at ``beta < 2 alpha`` leaves a finite Dyson sum
with ``n_max = ceil(2 alpha / beta - 1)`` terms; for ``beta > alpha`` that is the first-order
term alone, so the first Born amplitude is exact.
"""

import math
from dataclasses import dataclass

import numpy as np

from .engine import evolve_aux, fundamental_from_aux, hamiltonian, identity_operator
from .errors import ValidationError
from .potentials import AxialProfile, FourierShifted, HarmonicY, LineProfile
from .solver import AMPLITUDE_PREFACTOR, IncidenceSpec, amplitude, solve_boundary
from .spectral import SpectralField, build_grid, channel_grid

# hat of a unit Gaussian window falls below 1e-12 of its peak 7.5 widths from the centre
WINDOW_GAP = 7.5


@dataclass(frozen=True, eq=False)
class InvisibilityDesign:
    alpha: float
    beta: float
    potential: object
    margin: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValidationError("alpha and beta must be positive")

    @property
    def line_spectrum(self):
        return self.potential.line_spectrum

    @property
    def scale(self):
        return self.potential.sup_norm() * self.potential.width


def box_profile(width=1.0, amp=1.0):
    return AxialProfile("box", {"a_minus": -width / 2, "a_plus": width / 2, "amp": amp})


def make_design(alpha, beta, beta_prime=None, axial=None, envelope="harmonic", window=None,
                margin=0.0):
    """Potential ``g(x) h(y)`` with ``hat_h(K) = 0`` for ``K <= beta``.

    ``envelope="harmonic"`` puts a single line at ``beta_prime`` (default ``beta``
    itself is not allowed, pass something larger).  ``envelope="gaussian"`` uses a packet of
    transverse width ``window`` whose spectrum is centred ``WINDOW_GAP / window`` above
    ``beta_prime``.
    """
    axial = axial or box_profile()
    if beta_prime is None:
        raise ValidationError("beta_prime is required")
    if envelope == "harmonic":
        pot = FourierShifted(axial, beta, beta_prime)
    elif envelope == "gaussian":
        if not window or window <= 0:
            raise ValidationError("gaussian envelope needs a positive window width")
        pot = FourierShifted(axial, beta, beta_prime + WINDOW_GAP / window, window=window)
    else:
        raise ValidationError(f"unknown envelope {envelope!r}")
    return InvisibilityDesign(alpha, beta, pot, margin)


def make_invisible(alpha, margin, axial=None, envelope="harmonic", window=None):
    """Design invisible for all ``k <= alpha``; the spectrum starts at ``2 alpha (1 + margin)``."""
    if not margin > 0:
        raise ValidationError("margin must be strictly positive")
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    return make_design(alpha, 2 * alpha, 2 * alpha * (1 + margin), axial, envelope, window, margin)


def dyson_order(alpha, beta):
    """``ceil(2 alpha / beta - 1)``, zero once ``beta >= 2 alpha``."""
    if beta <= 0:
        raise ValidationError("beta must be positive")
    if beta >= 2 * alpha:
        return 0
    return max(1, math.ceil(2 * alpha / beta - 1 - 1e-12))


# ---------------------------------------------------------------------------
# grids and operators


def design_grid(design, k, p0=0.0, n_prop=64, n_evan=64, p_max=None, n_orders=None):
    """Channel comb through ``p0`` for line spectra, quadrature grid otherwise."""
    pot = design.potential if isinstance(design, InvisibilityDesign) else design
    p_max = p_max or 4.0 * k
    if pot.line_spectrum:
        spacing = (pot.transverse.spacing if hasattr(pot.transverse, "spacing")
                   else LineProfile(pot.transverse.lines).spacing)
        n_orders = n_orders or max(2, int(np.ceil((p_max + abs(p0)) / spacing)))
        return channel_grid(k, p0, spacing, n_orders)
    return build_grid(k, n_prop, n_evan, p_max)


def _operators(pot, k, p0, grid_kw, evolve_kw):
    grid = design_grid(pot, k, p0, **grid_kw)
    sources = () if grid.kind == "channel" else (p0,)
    ham = hamiltonian(pot, grid, sources)
    lo, hi = pot.support
    aux = evolve_aux(ham, lo, hi, **evolve_kw)
    return grid, aux, fundamental_from_aux(aux)


def truncated_M(design, k, alpha=None, beta=None, p0=0.0, grid_kw=None, evolve_kw=None):
    """Dyson partial sum with ``n_max = ceil(2 alpha/beta - 1)`` terms, projected.

    For ``beta >= 2 alpha`` the identity is returned without any evolution.
    """
    alpha = design.alpha if alpha is None else alpha
    beta = design.beta if beta is None else beta
    if k > alpha:
        raise ValidationError("the truncated series is only claimed for k <= alpha")
    n_max = dyson_order(alpha, beta)
    grid = design_grid(design, k, p0, **(grid_kw or {}))
    sources = () if grid.kind == "channel" else (p0,)
    if n_max == 0:
        op = fundamental_from_aux(identity_operator(grid, "aux", sources))
        op.diagnostics["n_max"] = 0
        return op
    ham = hamiltonian(design.potential, grid, sources)
    lo, hi = design.potential.support
    kw = dict(evolve_kw or {})
    kw.update(scheme="dyson", n_max=n_max)
    op = fundamental_from_aux(evolve_aux(ham, lo, hi, **kw))
    op.diagnostics["n_max"] = n_max
    return op


def incidence_angles(n=13, limit_deg=80.0):
    """``n`` equally spaced angles strictly inside ``(-limit, limit)`` degrees."""
    return np.deg2rad(np.linspace(-limit_deg, limit_deg, n + 2)[1:-1])


def _max_amplitude(M, inc):
    B, A = solve_boundary(M, inc)
    _, f = amplitude(B, A, inc)
    return float(np.max(np.abs(f))) if f.size else 0.0


def certify_invisibility(design, k, angles=None, tol=1e-8, grid_kw=None, evolve_kw=None):
    """Worst ``max|M - I|`` and ``max|f|`` over incidence angles and both sides.

    PASS iff the worst operator deviation is at most ``tol * scale`` with
    ``scale = sup|v| * (a_+ - a_-)``.
    """
    angles = incidence_angles() if angles is None else np.asarray(angles, dtype=float)
    grid_kw, evolve_kw = grid_kw or {}, evolve_kw or {}
    scale = design.scale if isinstance(design, InvisibilityDesign) else 1.0
    pot = design.potential if isinstance(design, InvisibilityDesign) else design
    rows = []
    for th in angles:
        p0 = float(k * np.sin(th))
        _, aux, M = _operators(pot, k, p0, grid_kw, evolve_kw)
        dev = M.deviation_from_identity()
        fmax = max(_max_amplitude(M, IncidenceSpec(side, k, p0)) for side in ("left", "right"))
        rows.append({"theta0": float(th), "p0": p0, "deviation": dev, "max_abs_f": fmax,
                     "growth": aux.diagnostics.get("measured_growth", 1.0)})
    worst = max(r["deviation"] for r in rows)
    return {
        "k": float(k),
        "scale": float(scale),
        "tol": float(tol * scale),
        "worst_deviation": float(worst),
        "max_abs_f": float(max(r["max_abs_f"] for r in rows)),
        "passed": bool(worst <= tol * scale),
        "rows": rows,
    }


def onset_scan(design, ks, angles=None, **kw):
    """Certification report per ``k``; grazing diffraction channels are skipped."""
    out = []
    for k in ks:
        try:
            rep = certify_invisibility(design, k, angles, **kw)
        except ValidationError as exc:
            rep = {"k": float(k), "skipped": str(exc)}
        out.append(rep)
    return out


# ---------------------------------------------------------------------------
# first Born amplitude


def first_order_operator(pot, grid, sources=(), **evolve_kw):
    """``I - i int dx Pi H Pi``: the single-integral Dyson term, projected."""
    ham = hamiltonian(pot, grid, sources)
    lo, hi = pot.support
    kw = dict(evolve_kw)
    kw.update(scheme="dyson", n_max=1)
    return fundamental_from_aux(evolve_aux(ham, lo, hi, **kw))


def born_boundary(M1, inc):
    """Boundary coefficients linear in the potential: ``B_- = -2 pi w0 N21 d`` etc."""
    grid = M1.grid
    d11, d21, d12, d22 = M1.delta_response(inc.p0)
    src = 2 * np.pi * inc.varpi0
    b, a = (-src * d21, src * d11) if inc.side == "left" else (-src * d22, src * d12)
    B = np.zeros(grid.size, dtype=complex)
    A = np.zeros(grid.size, dtype=complex)
    B[M1.index] = b
    A[M1.index] = a
    return SpectralField(grid, B), SpectralField(grid, A)


def _smooth_amplitude(B, A, inc, theta):
    """Amplitude from fields without incident terms (channel grids included)."""
    grid = A.grid
    if grid.kind == "channel":
        thetas, fs = [], []
        for j in grid.prop_index:
            t = float(np.arcsin(grid.p[j] / inc.k))
            thetas += [t, np.pi - t if t >= 0 else -np.pi - t]
            fs += [A.coeffs[j], B.coeffs[j]]
        order = np.argsort(thetas)
        return np.asarray(thetas)[order], AMPLITUDE_PREFACTOR * np.asarray(fs)[order]
    return amplitude(B, A, inc, theta)


def born_amplitude(pot, inc, grid=None, theta=None, **evolve_kw):
    """First Born amplitude through the single-integral Dyson term."""
    grid = grid or design_grid(pot, inc.k, inc.p0)
    sources = () if grid.kind == "channel" else (inc.p0,)
    if pot.is_zero():
        M1 = fundamental_from_aux(identity_operator(grid, "aux", sources))
    else:
        M1 = first_order_operator(pot, grid, sources, **evolve_kw)
    B, A = born_boundary(M1, inc)
    return _smooth_amplitude(B, A, inc, theta)


def full_amplitude(pot, inc, grid=None, theta=None, **evolve_kw):
    """Engine amplitude with the incident wave removed from its own channel."""
    grid = grid or design_grid(pot, inc.k, inc.p0)
    sources = () if grid.kind == "channel" else (inc.p0,)
    ham = hamiltonian(pot, grid, sources)
    lo, hi = pot.support
    M = fundamental_from_aux(evolve_aux(ham, lo, hi, **evolve_kw))
    B, A = solve_boundary(M, inc)
    if grid.kind == "channel":
        j = grid.index_of(inc.p0)
        src = 2 * np.pi * inc.varpi0
        (A if inc.side == "left" else B).coeffs[j] -= src
    return _smooth_amplitude(B, A, inc, theta)


def born_deviation(pot, k, angles, sides=("left", "right"), grid_kw=None, evolve_kw=None):
    """Max over incidences of ``max|f - f_born| / max|f|`` and of the absolute gap."""
    grid_kw, evolve_kw = grid_kw or {}, evolve_kw or {}
    rel, absolute, peak = 0.0, 0.0, 0.0
    for th in np.atleast_1d(angles):
        for side in sides:
            inc = IncidenceSpec.from_angle(side, k, th)
            grid = design_grid(pot, k, inc.p0, **grid_kw)
            _, f = full_amplitude(pot, inc, grid, **evolve_kw)
            _, fb = born_amplitude(pot, inc, grid, **evolve_kw)
            gap = float(np.max(np.abs(f - fb))) if f.size else 0.0
            top = float(np.max(np.abs(f))) if f.size else 0.0
            absolute = max(absolute, gap)
            peak = max(peak, top)
            if top > 0:
                rel = max(rel, gap / top)
    return {"max_rel_deviation": rel, "max_abs_deviation": absolute, "max_abs_f": peak}


def born_exactness_check(design, k, angles=None, **kw):
    """Compare the full engine amplitude with first Born for a design with ``beta > alpha``."""
    if not design.alpha < design.beta < 2 * design.alpha:
        raise ValidationError("the check needs alpha < beta < 2 alpha")
    if k > design.alpha:
        raise ValidationError("the check needs k <= alpha")
    angles = incidence_angles() if angles is None else angles
    rep = born_deviation(design.potential, k, angles, **kw)
    rep.update({"k": float(k), "n_max": dyson_order(design.alpha, design.beta)})
    return rep


def control_potential(design, strength=1.0):
    """Same axial profile with a two-sided spectrum ``strength * cos(beta' y)``: no gap."""
    pot = design.potential
    K = pot.beta_prime
    return HarmonicY(pot.axial, LineProfile(((K, 0.5 * strength), (-K, 0.5 * strength))))


def strength_scaling(design, k, strengths, angles, **kw):
    """Born gap of the control potential over a strength sweep and its log-log slope."""
    gaps = []
    for s in strengths:
        rep = born_deviation(control_potential(design, s), k, angles, **kw)
        gaps.append(rep["max_abs_deviation"])
    gaps = np.asarray(gaps)
    slope = float(np.polyfit(np.log(strengths), np.log(gaps), 1)[0])
    return {"strengths": list(map(float, strengths)), "gaps": gaps.tolist(), "exponent": slope}
