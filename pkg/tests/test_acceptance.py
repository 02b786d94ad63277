"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

Tolerances and runtime budgets are asserted as stated; nothing here is relaxed to make a
criterion pass.
"""

import time

import numpy as np

from conftest import record_acceptance
from tmscatter import (AxialProfile, IncidenceSpec, SeparableY, SumPotential, TransverseProfile,
                       build_grid, solve)
from tmscatter.delta2d import delta_compare, frak_c, frak_c_from_grid
from tmscatter.engine import compose, evolve_aux, hamiltonian, transfer_operators
from tmscatter.invisibility import (born_deviation, born_exactness_check, certify_invisibility,
                                    control_potential, incidence_angles, make_design,
                                    make_invisible, onset_scan, strength_scaling)
from tmscatter.oracle import (SpatialGrid, born_series_solve, contraction_estimate, far_field)
from tmscatter.potentials import ZeroPotential
from tmscatter.solver import detector_angles
from tmscatter.spectral import (SpectralField, fourier_p_to_y, fourier_y_to_p, project_pk, varpi,
                                varpi_im)
from tmscatter.tm1d import rt_1d, tm1d_delta, tm1d_evolve


def _report(number, name, checks, elapsed, budget):
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {budget}s"] = elapsed < budget
    passed = all(checks.values())
    failed = [k for k, ok in checks.items() if not ok]
    detail = "; ".join(checks) if passed else "failed: " + "; ".join(failed)
    record_acceptance(number, name, passed, detail)
    assert passed, detail


def test_criterion_1_delta_closed_form_chain():
    t0 = time.perf_counter()
    z, k = 4.0, 1.0
    theta = detector_angles()
    expected = np.sqrt(2 / np.pi) / abs(4 / z + 1j)
    worst_tm_ls = worst_flat = 0.0
    for side in ("left", "right"):
        for th0 in np.deg2rad([-60.0, 0.0, 35.0]):
            for r0 in ((0.0, 0.0), (0.7, -0.3)):
                rep = delta_compare(z, k, r0, th0, side, theta)
                worst_tm_ls = max(worst_tm_ls, rep["max_rel_diff"])
                worst_flat = max(worst_flat, np.max(np.abs(np.abs(rep["f_tm"]) - expected)) / expected)
    elapsed = time.perf_counter() - t0
    _report(1, "delta closed-form chain", {
        f"TM vs LS max rel diff {worst_tm_ls:.1e} <= 1e-12": worst_tm_ls <= 1e-12,
        f"|f| = {expected:.6f} uniform in angle to {worst_flat:.1e}": worst_flat <= 1e-12,
    }, elapsed, 1.0)


def test_criterion_2_grid_solve_recovers_c():
    t0 = time.perf_counter()
    grid = build_grid(1.0, 64, 16)
    quad = abs(grid.integrate_over_varpi(np.ones(grid.size), over="prop") - np.pi)
    worst = 0.0
    for z in (4.0, 1.5 - 0.8j, -2.0 + 0.3j):
        for side in ("left", "right"):
            for th0 in (-0.9, 0.0, 0.4):
                inc = IncidenceSpec.from_angle(side, 1.0, th0)
                c, _ = frak_c_from_grid(z, inc, (0.3, -0.5), grid)
                exact = frak_c(z, inc, (0.3, -0.5))
                worst = max(worst, abs(c - exact) / abs(exact))
    elapsed = time.perf_counter() - t0
    _report(2, "grid solve recovers c for the delta", {
        f"quadrature of 1/varpi error {quad:.1e}": quad <= 1e-12,
        f"c relative error {worst:.1e} <= 1e-8": worst <= 1e-8,
    }, elapsed, 5.0)


def test_criterion_3_invisibility_certification():
    t0 = time.perf_counter()
    design = make_invisible(1.0, 0.05)
    rep = certify_invisibility(design, 0.9, incidence_angles(13), tol=1e-8,
                               grid_kw={"n_prop": 64, "n_evan": 64})
    scan = onset_scan(design, np.linspace(1.1, 1.9, 9), tol=1e-8,
                      grid_kw={"n_prop": 64, "n_evan": 64})
    onset = [s["k"] for s in scan if s.get("worst_deviation", 0) > 1e-5 * rep["scale"]]
    elapsed = time.perf_counter() - t0
    _report(3, "invisibility certification", {
        f"worst |M-I| {rep['worst_deviation']:.1e} <= 1e-8*scale": rep["worst_deviation"] <= 1e-8 * rep["scale"],
        f"max |f| {rep['max_abs_f']:.1e} <= 1e-8 over {len(rep['rows'])} angles":
            rep["max_abs_f"] <= 1e-8 and len(rep["rows"]) == 13,
        f"onset found at k in {onset[:1]}": bool(onset),
    }, elapsed, 300.0)


def test_criterion_4_born_exactness():
    t0 = time.perf_counter()
    design = make_design(1.0, 1.5, 1.575)
    k = 0.8
    angles = np.concatenate([np.deg2rad([-80.0, -78.0, -75.0]), incidence_angles(13)])
    rep = born_exactness_check(design, k, angles)
    ctrl = born_deviation(control_potential(design, 1.0), k, angles)
    scaling = strength_scaling(design, k, [0.02, 0.04, 0.08], angles)
    elapsed = time.perf_counter() - t0
    _report(4, "Born exactness", {
        f"n_max {rep['n_max']} == 1": rep["n_max"] == 1,
        f"design full vs Born {rep['max_rel_deviation']:.1e} <= 1e-5 (max|f| {rep['max_abs_f']:.2f})":
            rep["max_rel_deviation"] <= 1e-5 and rep["max_abs_f"] > 0,
        f"control deviation {ctrl['max_rel_deviation']:.2f} >= 1e-2": ctrl["max_rel_deviation"] >= 1e-2,
        f"control exponent {scaling['exponent']:.3f} in 2.0 +- 0.1": abs(scaling["exponent"] - 2) <= 0.1,
    }, elapsed, 600.0)


def _slab(a, b, amp):
    return SeparableY(AxialProfile("cosine-window", {"amp": amp, "a_minus": a, "a_plus": b}),
                      TransverseProfile("gaussian", {"width": 0.5}))


def test_criterion_5_composition_and_semigroup():
    t0 = time.perf_counter()
    grid = build_grid(1.0, 16, 16)
    p1, p2 = _slab(-1.6, -0.4, 0.5), _slab(0.4, 1.6, 0.3 + 0.5j)
    both = SumPotential(p1, p2)
    full = evolve_aux(hamiltonian(both, grid), *both.support, dx=0.002)
    m1 = evolve_aux(hamiltonian(p1, grid), -2.0, 0.0, dx=0.002)
    m2 = evolve_aux(hamiltonian(p2, grid), 0.0, 2.0, dx=0.002)
    comp = np.max(np.abs(compose(m2, m1).matrix - full.matrix))
    ham = hamiltonian(p1, grid)
    u_ab = evolve_aux(ham, -1.6, -1.1, dx=0.002)
    u_bc = evolve_aux(ham, -1.1, -0.4, dx=0.002)
    u_ac = evolve_aux(ham, -1.6, -0.4, dx=0.002)
    semi = np.max(np.abs(u_bc.matrix @ u_ab.matrix - u_ac.matrix))
    elapsed = time.perf_counter() - t0
    _report(5, "composition and semigroup", {
        f"two-slab product error {comp:.1e} <= 1e-8": comp <= 1e-8,
        f"interior split error {semi:.1e} <= 1e-8": semi <= 1e-8,
    }, elapsed, 60.0)


def _matching(z, k):
    # psi = e^{ikx} + R e^{-ikx} (x<0), T e^{ikx} (x>0); continuity and psi' jump z psi(0)
    T = 2j * k / (2j * k - z)
    return T - 1, T


def _smooth(rng, complex_valued):
    c = rng.standard_normal(4) + (1j * rng.standard_normal(4) if complex_valued else 0)
    w, s = rng.uniform(0.5, 2.0, 4), rng.uniform(-1, 1, 4)
    return lambda x: sum(ci * np.exp(-((x - si) * wi) ** 2) for ci, wi, si in zip(c, w, s))


def test_criterion_6_one_dimensional_suite():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    rt_err = 0.0
    for z in (0.5, -1.3, 2.0 + 0.7j):
        for k in (0.4, 1.0, 2.2):
            Rl, _, Tl, _ = rt_1d(tm1d_delta(z, k, 0.0))
            R, T = _matching(z, k)
            rt_err = max(rt_err, abs(Rl - R), abs(Tl - T))
    dets = []
    for _ in range(20):
        M = tm1d_evolve(_smooth(rng, True), rng.uniform(0.3, 3.0), (-6, 6), 1500)
        dets.append(abs(np.linalg.det(M) - 1))
    flux = []
    for _ in range(10):
        Rl, Rr, T, _ = rt_1d(tm1d_evolve(_smooth(rng, False), rng.uniform(0.5, 2.5), (-6, 6), 1500))
        flux += [abs(abs(Rl) ** 2 + abs(T) ** 2 - 1), abs(abs(Rr) ** 2 + abs(T) ** 2 - 1)]
    elapsed = time.perf_counter() - t0
    _report(6, "1D suite", {
        f"delta R/T vs matching {rt_err:.1e}": rt_err <= 1e-14,
        f"|det M - 1| {max(dets):.1e} <= 1e-10 (20 potentials)": max(dets) <= 1e-10,
        f"||R|^2+|T|^2-1| {max(flux):.1e} <= 1e-8": max(flux) <= 1e-8,
    }, elapsed, 30.0)


def test_criterion_7_oracle_cross_check():
    t0 = time.perf_counter()
    k, sigma, h = 1.0, 0.4, 0.04

    def bump(amp):
        return SeparableY(AxialProfile("gaussian", {"amp": amp, "width": sigma, "nsig": 6}),
                          TransverseProfile("gaussian", {"width": sigma}))

    yr = (-6 * sigma, 6 * sigma)
    amp = 0.3 / contraction_estimate(SpatialGrid.from_potential(bump(1.0), k, h, y_range=yr))
    pot = bump(amp)
    sgrid = SpatialGrid.from_potential(pot, k, h, y_range=yr)
    theta = detector_angles(181)
    incs = [IncidenceSpec.from_angle("left", k, np.deg2rad(a)) for a in (0.0, 30.0)]
    grid = build_grid(k, 128, 128, 4.0)
    aux, M = transfer_operators(pot, grid, sources=tuple(i.p0 for i in incs), max_growth=1e30)
    worst = worst_closure = 0.0
    ratio = None
    for inc in incs:
        ser = born_series_solve(sgrid, inc, n_terms=80, tol=1e-13)
        ratio = ser.measured_ratio
        fo = far_field(sgrid, ser.psi, theta)
        scale = np.max(np.abs(fo))
        worst = max(worst, np.max(np.abs(solve(M, inc, theta).f - fo)) / scale)
        fe = solve(aux, inc, theta, closure="evanescent").f
        worst_closure = max(worst_closure, np.max(np.abs(fe - fo)) / scale)
    elapsed = time.perf_counter() - t0
    print(f"criterion 7 diagnostic: Born ratio {ratio:.3f}; projected engine {worst:.3e}; "
          f"evanescent closure {worst_closure:.3e}")
    _report(7, "oracle cross-check", {
        f"projected engine vs oracle {worst:.3e} <= 5% (closure diagnostic {worst_closure:.1e})":
            worst <= 0.05,
    }, elapsed, 600.0)


def test_criterion_8_structural_invariants():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    grid = build_grid(1.3, 24, 20)
    f = SpectralField(grid, rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size))
    idem = project_pk(project_pk(f)).allclose(project_pk(f), atol=0)
    ham = hamiltonian(ZeroPotential((-1, 1)), grid)
    aux = evolve_aux(ham, -1.0, 1.0)
    _, M = transfer_operators(ZeroPotential((-1, 1)), grid)
    ident = (np.array_equal(aux.matrix, np.eye(2 * grid.size))
             and np.array_equal(M.matrix, np.eye(2 * grid.n_prop)))
    p = rng.uniform(-10, 10, 200)
    k = 1.3
    w = varpi(p, k)
    vp = (np.array_equal(varpi(-p, k), w) and np.array_equal(varpi_im(p, k), np.imag(w))
          and np.max(np.abs(w * w - (k * k - p * p))) <= 1e-12 * 100)
    quad = max(abs(build_grid(kk, 32, 8).integrate_over_varpi(np.ones(40), over="prop") - np.pi)
               for kk in (0.3, 1.0, 2.5))
    y = np.linspace(-4, 4, 256, endpoint=False)
    sig = rng.standard_normal(256) + 1j * rng.standard_normal(256)
    pp, F = fourier_y_to_p(y, sig)
    _, back = fourier_p_to_y(pp, F, y[0])
    rt = np.max(np.abs(back - sig)) / np.max(np.abs(sig))
    elapsed = time.perf_counter() - t0
    _report(8, "structural invariants", {
        "projection idempotent": idem,
        "v=0 gives bit-exact identity": ident,
        "varpi identities": vp,
        f"quadrature to pi {quad:.1e} <= 1e-12": quad <= 1e-12,
        f"Fourier round trip {rt:.1e} <= 1e-10": rt <= 1e-10,
    }, elapsed, 10.0)
