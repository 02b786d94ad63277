import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tmscatter.errors import SpectralSingularity1D
from tmscatter.tm1d import rt_1d, tm1d_delta, tm1d_evolve


def matching_transfer(deltas, k):
    """Transfer matrix of point scatterers by matching psi and the jump of psi'.

    Coefficients are those of exp(+ikx) and exp(-ikx); at a delta z at a the matching
    conditions are psi continuous and psi'(a+) - psi'(a-) = z psi(a).
    """
    M = np.eye(2, dtype=complex)
    for z, a in sorted(deltas, key=lambda d: d[1]):
        e, ei = np.exp(1j * k * a), np.exp(-1j * k * a)
        W = np.array([[e, ei], [1j * k * e, -1j * k * ei]])
        J = np.array([[1, 0], [z, 1]], dtype=complex)
        M = np.linalg.solve(W, J @ W) @ M
    return M


def test_delta_zero_is_identity():
    assert np.array_equal(tm1d_delta(0.0, 1.3, 0.4), np.eye(2))


@pytest.mark.parametrize("z", [0.5, -1.2, 2.0 + 0.7j])
def test_delta_entries_at_origin(z):
    k = 0.8
    M = tm1d_delta(z, k, 0.0)
    assert abs(M[1, 1] - (1 + 1j * z / (2 * k))) < 1e-15
    assert abs(M[1, 0] - 1j * z / (2 * k)) < 1e-15


@settings(max_examples=50)
@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
       st.floats(min_value=0.1, max_value=5), st.floats(min_value=-3, max_value=3))
def test_delta_matches_wavefunction_matching(z, k, a):
    np.testing.assert_allclose(tm1d_delta(z, k, a), matching_transfer([(z, a)], k),
                               atol=1e-12 * (1 + abs(z) / k))


def test_delta_rt_textbook():
    z, k = 1.7, 0.9
    Rl, Rr, Tl, Tr = rt_1d(tm1d_delta(z, k, 0.0))
    b = 1j * z / (2 * k)
    assert abs(Tl - 1 / (1 + b)) < 1e-15 and Tl == Tr
    assert abs(Rl + b / (1 + b)) < 1e-15


def test_two_delta_composition_matches_matching():
    k = 1.1
    d = [(0.8 - 0.3j, -0.4), (1.5, 0.9)]
    product = tm1d_delta(d[1][0], k, d[1][1]) @ tm1d_delta(d[0][0], k, d[0][1])
    assert np.max(np.abs(product - matching_transfer(d, k))) <= 1e-10


def test_rt_identity_and_singularity():
    Rl, Rr, Tl, Tr = rt_1d(np.eye(2))
    assert (Rl, Rr, Tl, Tr) == (0, 0, 1, 1)
    with pytest.raises(SpectralSingularity1D):
        rt_1d(np.array([[1.0, 1.0], [1.0, 1e-14]]))


def random_potential(rng, complex_valued=True):
    c = rng.standard_normal(4) + (1j * rng.standard_normal(4) if complex_valued else 0)
    w = rng.uniform(0.5, 2.0, 4)
    s = rng.uniform(-1, 1, 4)
    return lambda x: sum(ci * np.exp(-((x - si) * wi) ** 2) for ci, wi, si in zip(c, w, s))


def test_unimodular_for_random_complex_potentials(rng):
    for _ in range(20):
        k = rng.uniform(0.3, 3.0)
        M = tm1d_evolve(random_potential(rng), k, (-6, 6), 1500)
        assert abs(np.linalg.det(M) - 1) <= 1e-10


def test_unitarity_for_real_potentials(rng):
    for _ in range(5):
        k = rng.uniform(0.5, 2.5)
        M = tm1d_evolve(random_potential(rng, complex_valued=False), k, (-6, 6), 1500)
        Rl, Rr, T, _ = rt_1d(M)
        assert abs(abs(Rl) ** 2 + abs(T) ** 2 - 1) <= 1e-8
        assert abs(abs(Rr) ** 2 + abs(T) ** 2 - 1) <= 1e-8


def test_sampled_input_matches_callable(rng):
    v = random_potential(rng)
    xs = np.linspace(-6, 6, 3001)
    np.testing.assert_allclose(tm1d_evolve((xs, v(xs)), 1.2), tm1d_evolve(v, 1.2, (-6, 6), 1500),
                               atol=1e-13)


def test_real_potential_vs_numerov_free_integration():
    # independent check: integrate psi'' = (v - k^2) psi from the right with a pure
    # transmitted wave and read off T and R on the left
    k = 1.3
    v = lambda x: 1.2 * np.exp(-x ** 2) - 0.4 * np.exp(-(x - 1) ** 2 * 3)
    from scipy.integrate import solve_ivp

    def rhs(x, y):
        return [y[1], (v(x) - k * k) * y[0]]

    L = 7.0
    sol = solve_ivp(rhs, (L, -L), [np.exp(1j * k * L), 1j * k * np.exp(1j * k * L)],
                    rtol=1e-12, atol=1e-14, method="DOP853")
    psi, dpsi = sol.y[0, -1], sol.y[1, -1]
    x = -L
    A = (psi + dpsi / (1j * k)) / 2 * np.exp(-1j * k * x)
    B = (psi - dpsi / (1j * k)) / 2 * np.exp(1j * k * x)
    Rl, _, T, _ = rt_1d(tm1d_evolve(v, k, (-L, L), 4000))
    assert abs(T - 1 / A) < 1e-8 and abs(Rl - B / A) < 1e-8
