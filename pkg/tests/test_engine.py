import numpy as np
import pytest

from tmscatter.engine import (EffectiveHamiltonian, TransferOperator, apply_H, compose,
                              evolve_aux, evolve_bH, fundamental_from_aux, hamiltonian,
                              identity_operator)
from tmscatter.errors import ConditioningRefusal, NonConvergence, ValidationError
from tmscatter.potentials import (AxialProfile, HarmonicY, LineProfile, SeparableY,
                                  SumPotential, TransverseProfile, ZeroPotential)
from tmscatter.spectral import ChannelGrid, SpectralField, TwoComponentField, build_grid


def slab(a, b, amp=0.5, sy=0.5):
    return SeparableY(AxialProfile("cosine-window", {"amp": amp, "a_minus": a, "a_plus": b}),
                      TransverseProfile("gaussian", {"width": sy}))


def bump(amp=0.4, sx=0.25, sy=0.5):
    return SeparableY(AxialProfile("gaussian", {"amp": amp, "width": sx}),
                      TransverseProfile("gaussian", {"width": sy}))


GRID = build_grid(1.0, 16, 16)


def test_apply_H_zero_and_outside_support(rng):
    phi = TwoComponentField(SpectralField(GRID, rng.standard_normal(GRID.size)),
                            SpectralField(GRID, rng.standard_normal(GRID.size)))
    for pot, x in ((ZeroPotential((-1, 1)), 0.0), (bump(), 5.0)):
        out = apply_H(EffectiveHamiltonian(pot, GRID), x, phi)
        assert not np.any(out.minus.coeffs) and not np.any(out.plus.coeffs)


def test_apply_H_single_channel_block_signs():
    # one channel, potential constant in y: V acts as multiplication by g(x)
    k, x = 1.0, 0.3
    grid = ChannelGrid(k, 0.0, 1.0, 0, 0)
    pot = HarmonicY(AxialProfile("box", {"a_minus": -1, "a_plus": 1, "amp": 0.8}),
                    LineProfile(((0.0, 1.0),)))
    fm, fp = 0.3 + 0.1j, -0.7 + 0.2j
    phi = TwoComponentField(SpectralField(grid, [fm]), SpectralField(grid, [fp]))
    out = apply_H(EffectiveHamiltonian(pot, grid), x, phi)
    s = 0.8 * (np.exp(1j * x * k) * fm + np.exp(-1j * x * k) * fp) / k
    assert abs(out.minus.coeffs[0] - 0.5 * np.exp(-1j * x * k) * s) < 1e-15
    assert abs(out.plus.coeffs[0] + 0.5 * np.exp(1j * x * k) * s) < 1e-15


def test_zero_potential_gives_exact_identity():
    ham = hamiltonian(ZeroPotential((-1, 1)), GRID, sources=(0.3,))
    aux = evolve_aux(ham, -1.0, 1.0)
    assert np.array_equal(aux.matrix, np.eye(2 * GRID.size))
    assert not np.any(aux.sources[0.3])
    M = fundamental_from_aux(aux)
    assert np.array_equal(M.matrix, np.eye(2 * GRID.n_prop))


def test_evolve_rejects_reversed_interval():
    with pytest.raises(ValidationError):
        evolve_aux(hamiltonian(bump(), GRID), 1.0, -1.0)


def test_slab_composition():
    p1, p2 = slab(-1.6, -0.4), slab(0.4, 1.6, amp=0.3 + 0.5j)
    both = SumPotential(p1, p2)
    full = evolve_aux(hamiltonian(both, GRID), *both.support, dx=0.002)
    m1 = evolve_aux(hamiltonian(p1, GRID), -2.0, 0.0, dx=0.002)
    m2 = evolve_aux(hamiltonian(p2, GRID), 0.0, 2.0, dx=0.002)
    assert np.max(np.abs(compose(m2, m1).matrix - full.matrix)) <= 1e-8


def test_interior_semigroup():
    ham = hamiltonian(bump(), GRID)
    a, b, c = -1.5, 0.1, 1.5
    u_ab = evolve_aux(ham, a, b, dx=0.004)
    u_bc = evolve_aux(ham, b, c, dx=0.004)
    u_ac = evolve_aux(ham, a, c, dx=0.004)
    assert np.max(np.abs(u_bc.matrix @ u_ab.matrix - u_ac.matrix)) <= 1e-8


def test_step_halving_is_stable():
    ham = hamiltonian(bump(), GRID)
    aux = evolve_aux(ham, -1.5, 1.5, check=True, tol=1e-6)
    assert aux.diagnostics["refinement_change"] <= 1e-6


def test_non_convergence_reported():
    ham = hamiltonian(bump(amp=3.0), GRID)
    with pytest.raises(NonConvergence):
        evolve_aux(ham, -1.5, 1.5, dx=0.5, check=True, tol=1e-12)


def test_dyson_matches_rk4():
    ham = hamiltonian(bump(amp=0.2), GRID, sources=(0.25,))
    rk = evolve_aux(ham, -1.5, 1.5, dx=0.004)
    dy = evolve_aux(ham, -1.5, 1.5, scheme="dyson", n_max=10)
    assert np.max(np.abs(rk.matrix - dy.matrix)) <= 1e-6
    assert np.max(np.abs(rk.sources[0.25] - dy.sources[0.25])) <= 1e-6


def test_first_order_dyson_residual_is_quadratic():
    res = []
    amps = np.array([0.01, 0.02, 0.04])
    for a in amps:
        ham = hamiltonian(bump(amp=a), GRID)
        rk = evolve_aux(ham, -1.5, 1.5, dx=0.004)
        d1 = evolve_aux(ham, -1.5, 1.5, scheme="dyson", n_max=1)
        res.append(np.max(np.abs(rk.matrix - d1.matrix)))
    slope = np.polyfit(np.log(amps), np.log(res), 1)[0]
    assert abs(slope - 2.0) < 0.1


def test_fundamental_from_aux_examples(rng):
    g = build_grid(1.0, 6, 5)
    n = g.size
    M = fundamental_from_aux(identity_operator(g))
    assert np.array_equal(M.matrix, np.eye(2 * g.n_prop))
    # only evanescent rows/columns coupled: the propagating block stays the identity
    mat = np.eye(2 * n, dtype=complex)
    ev = np.concatenate([g.evan_index, n + g.evan_index])
    mat[np.ix_(ev, ev)] += rng.standard_normal((len(ev), len(ev)))
    assert np.array_equal(fundamental_from_aux(TransferOperator(g, mat)).matrix, np.eye(2 * g.n_prop))
    mat = rng.standard_normal((2 * n, 2 * n)) + 1j * rng.standard_normal((2 * n, 2 * n))
    F = fundamental_from_aux(TransferOperator(g, mat))
    idx = g.prop_index
    rows = np.concatenate([idx, n + idx])
    assert np.array_equal(F.matrix, mat[np.ix_(rows, rows)])
    assert F.M11.shape == (g.n_prop, g.n_prop)


def test_compose_identity_and_scope_guard(rng):
    g = build_grid(1.0, 6, 5)
    mat = rng.standard_normal((2 * g.size,) * 2)
    M = TransferOperator(g, mat)
    assert np.array_equal(compose(identity_operator(g), M).matrix, mat)
    with pytest.raises(ValidationError):
        compose(fundamental_from_aux(M), M)


def test_conditioning_refusal():
    g = build_grid(1.0, 8, 8, p_max=20.0)
    with pytest.raises(ConditioningRefusal) as err:
        evolve_aux(hamiltonian(bump(sx=0.5), g), -3.0, 3.0)
    assert err.value.exit_code == 3
    assert err.value.growth > 1e12


def test_psi_picture_equivalence_on_narrow_slab():
    g = build_grid(1.0, 8, 8)
    ham = hamiltonian(slab(-0.15, 0.15, amp=0.6), g)
    x0, x1 = -0.15, 0.15
    U = evolve_aux(ham, x0, x1, dx=1e-4).matrix
    V = evolve_bH(ham, x0, x1, 3000)
    s3wi = np.concatenate([np.imag(g.varpi), -np.imag(g.varpi)])
    expected = np.exp(-s3wi * x1)[:, None] * U * np.exp(s3wi * x0)[None, :]
    assert np.max(np.abs(V - expected)) <= 1e-8 * np.max(np.abs(expected))
