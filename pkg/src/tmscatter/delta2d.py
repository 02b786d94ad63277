"""Point scatterer ``v = z delta(x - a) delta(y - b)`` in two dimensions.

Two routes to the amplitude:

* Lippmann-Schwinger.  ``z psi(r0) = exp(i k0.r0) / (1/z - G(0))`` needs a regularized
  ``G(0)``; after renormalization only ``z_tilde(k)`` appears.
* Transfer matrix.  The Dyson series stops after one term, the fundamental operator is
  rank-structured and finite with no cutoff, and ``z`` is the physical coupling.

With ``z_tilde = z`` both give ``f = -sqrt(2/pi) exp(-i (k rhat - k0).r0) / (4/z + i)``.
"""

import numpy as np

from .engine import DeltaHamiltonian, fundamental_from_aux
from .errors import DivergentGreen, RunawayCoupling, SpectralSingularity, ValidationError
from .potentials import Delta2D
from .solver import AMPLITUDE_PREFACTOR, IncidenceSpec, detector_angles, solve_boundary
from .special import hankel1_0

SINGULAR_TOL = 1e-14


def green2d(r, k):
    """Outgoing Green's function ``G(r) = -(i/4) H0(k r)`` of ``laplacian + k^2``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DivergentGreen("G(r) diverges logarithmically at r = 0; use a regularized value")
    return -0.25j * hankel1_0(k * r)


def green2d_reg0(cutoff, k):
    """Cutoff-regularized ``G(0) = -(1/4pi) ln(cutoff^2/k^2 - 1) - i/4``."""
    if not cutoff > k:
        raise ValidationError("the cutoff must exceed k")
    return -np.log(cutoff ** 2 / k ** 2 - 1) / (4 * np.pi) - 0.25j


def green_sharp_cutoff0(cutoff, k):
    """``G(0)`` with the transverse momentum restricted to ``|p| < cutoff``.

    This is the value implied by keeping evanescent channels up to ``cutoff`` in the
    transfer-matrix boundary problem (see ``solve_boundary_evanescent``).
    """
    if not cutoff > k:
        raise ValidationError("the cutoff must exceed k")
    return -np.arccosh(cutoff / k) / (2 * np.pi) - 0.25j


def renormalized_from_bare(z_bare, cutoff, k):
    """``z_tilde = [1/z + (1/4pi) ln(cutoff^2/k^2 - 1)]^-1``."""
    inv = 1.0 / z_bare + np.log(cutoff ** 2 / k ** 2 - 1) / (4 * np.pi)
    if inv == 0:
        raise RunawayCoupling("renormalized coupling diverges")
    return 1.0 / inv


def bare_from_renormalized(z_tilde, cutoff, k):
    inv = 1.0 / z_tilde - np.log(cutoff ** 2 / k ** 2 - 1) / (4 * np.pi)
    if inv == 0:
        raise RunawayCoupling("bare coupling diverges at this cutoff")
    return 1.0 / inv


def coupling_run(z_ref, k_ref, k):
    """Running coupling ``[1/z_ref - (1/2pi) ln(k/k_ref)]^-1``; exact identity at ``k_ref``."""
    if k <= 0 or k_ref <= 0:
        raise ValidationError("wavenumbers must be positive")
    if z_ref == 0:
        raise ValidationError("z_ref must be nonzero")
    if k == k_ref:
        return z_ref
    inv = 1.0 / z_ref - np.log(k / k_ref) / (2 * np.pi)
    if abs(inv) <= SINGULAR_TOL * abs(1.0 / z_ref):
        raise RunawayCoupling(f"running coupling has a pole at k={k}")
    return 1.0 / inv


def _directions(theta, k):
    theta = np.asarray(theta, dtype=float)
    return k * np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def ls_amplitude(z_tilde, k, k0, r0=(0.0, 0.0), theta=None):
    """Renormalized Lippmann-Schwinger amplitude.  Returns ``(theta, f)``."""
    k0 = np.asarray(k0, dtype=float)
    if abs(np.hypot(*k0) - k) > 1e-12 * k:
        raise ValidationError("|k0| must equal k")
    theta = detector_angles() if theta is None else np.asarray(theta, dtype=float)
    if z_tilde == 0:
        return theta, np.zeros(theta.shape, dtype=complex)
    den = 4.0 / z_tilde + 1j
    if abs(den) <= SINGULAR_TOL * max(1.0, abs(4.0 / z_tilde)):
        raise SpectralSingularity("4/z + i vanishes", k=k, condition=np.inf)
    r0 = np.asarray(r0, dtype=float)
    phase = np.exp(-1j * (_directions(theta, k) - k0) @ r0)
    return theta, -np.sqrt(2 / np.pi) * phase / den


def ls_amplitude_bare(z_bare, cutoff, k, k0, r0=(0.0, 0.0), theta=None, green0=None):
    """Unrenormalized route: ``z psi(r0)`` from a regularized ``G(0)``, then the far field.

    ``green0`` overrides the regularized value (default :func:`green2d_reg0`).
    """
    theta = detector_angles() if theta is None else np.asarray(theta, dtype=float)
    k0 = np.asarray(k0, dtype=float)
    r0 = np.asarray(r0, dtype=float)
    g0 = green2d_reg0(cutoff, k) if green0 is None else green0
    z_psi = np.exp(1j * k0 @ r0) / (1.0 / z_bare - g0)
    f = -z_psi * np.exp(-1j * _directions(theta, k) @ r0) / (2 * np.sqrt(2 * np.pi))
    return theta, f


def frak_c(z, inc, r0=(0.0, 0.0)):
    """``(1 + iz/4)^-1 exp(i k0.r0)``."""
    den = 1 + 0.25j * z
    if abs(den) <= SINGULAR_TOL:
        raise SpectralSingularity("1 + iz/4 vanishes", k=inc.k, condition=np.inf)
    return np.exp(1j * inc.k0 @ np.asarray(r0, dtype=float)) / den


def tm_delta_fundamental(z, a, b, grid, sources=()):
    """Materialized fundamental operator of the point scatterer on ``grid``."""
    ham = DeltaHamiltonian(Delta2D(z, a, b), grid, sources)
    return fundamental_from_aux(ham.transfer(a - 1.0, a))


def tm_delta_amplitude(z, inc, r0=(0.0, 0.0), theta=None):
    """Closed-form transfer-matrix amplitude ``-(iz/2) c exp(-i k.r0) * (-i/sqrt(2pi))``."""
    theta = detector_angles() if theta is None else np.asarray(theta, dtype=float)
    if z == 0:
        return theta, np.zeros(theta.shape, dtype=complex)
    c = frak_c(z, inc, r0)
    coef = -0.5j * z * c * np.exp(-1j * _directions(theta, inc.k) @ np.asarray(r0, dtype=float))
    return theta, AMPLITUDE_PREFACTOR * coef


def frak_c_from_grid(z, inc, r0, grid):
    """Recover ``c`` from a linear solve with the materialized operator.

    Every outgoing smooth coefficient equals ``-(iz/2) c exp(-i k_out.r0)``; the function
    returns the mean estimate and the largest spread over nodes.
    """
    a, b = r0
    M = tm_delta_fundamental(z, a, b, grid, sources=(inc.p0,))
    B_minus, A_plus = solve_boundary(M, inc)
    idx = grid.prop_index
    p, w = grid.p[idx], np.real(grid.varpi[idx])
    est = []
    for coeffs, sgn in ((A_plus.coeffs[idx], 1.0), (B_minus.coeffs[idx], -1.0)):
        est.append(coeffs * np.exp(1j * (sgn * w * a + p * b)) / (-0.5j * z))
    est = np.concatenate(est)
    c = est.mean()
    return c, float(np.max(np.abs(est - c)))


def delta_compare(z, k, r0=(0.0, 0.0), theta0=0.0, side="left", theta=None):
    """Transfer-matrix vs renormalized Lippmann-Schwinger amplitudes with ``z_tilde = z``."""
    inc = IncidenceSpec.from_angle(side, k, theta0)
    th, f_tm = tm_delta_amplitude(z, inc, r0, theta)
    _, f_ls = ls_amplitude(z, k, inc.k0, r0, th)
    scale = np.max(np.abs(f_ls)) or 1.0
    mod = np.abs(f_tm)
    return {
        "theta": th,
        "f_tm": f_tm,
        "f_ls": f_ls,
        "max_rel_diff": float(np.max(np.abs(f_tm - f_ls)) / scale),
        "abs_f": float(mod.mean()) if mod.size else 0.0,
        "flatness": float(np.ptp(mod) / scale) if mod.size else 0.0,
        "expected_abs_f": float(np.sqrt(2 / np.pi) / abs(4.0 / z + 1j)) if z != 0 else 0.0,
    }
