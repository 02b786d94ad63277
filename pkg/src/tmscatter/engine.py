"""Auxiliary and fundamental transfer operators.

State vectors are node values of the two-component field ``Phi = [Phi_-; Phi_+]`` stacked
into one array of length ``2N``.  The effective Hamiltonian acts as

    (H Phi)_- =  1/2 e^{-i x varpi} u,    (H Phi)_+ = -1/2 e^{+i x varpi} u,
    u = V(x) [e^{i x varpi} Phi_- + e^{-i x varpi} Phi_+] / varpi,

where ``V(x)`` is the transverse convolution and ``1/varpi`` enters only through the grid
weights ``mu``.  Incident plane waves are Dirac terms that are never sampled: an operator
``M`` acting on ``delta(p - p0)`` is stored as ``delta(p - p0) + s(p)`` and only the smooth
response ``s`` is evolved, driven by ``H delta``.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningRefusal, GridMismatch, NonConvergence, ValidationError
from .potentials import Delta2D, line_kernel, transverse_kernel
from .spectral import SpectralField, TwoComponentField, barycentric

MAX_GROWTH = 1e12


class EffectiveHamiltonian:
    """Discretized effective Hamiltonian for a potential on a momentum grid.

    ``sources`` lists incident transverse momenta whose Dirac columns are evolved along
    with the basis; on a channel grid the incident channel is a node and needs no source.
    """

    def __init__(self, pot, grid, sources=()):
        if isinstance(pot, Delta2D):
            raise ValidationError("Delta2D has a distributional Hamiltonian; see evolve_aux")
        self.pot = pot
        self.grid = grid
        self.k = grid.k
        self.varpi = grid.varpi
        self.mu = grid.mu
        self.sources = tuple(float(p0) for p0 in sources)
        if grid.kind == "channel" and self.sources:
            raise ValidationError("channel grids carry the incident wave as a node")
        for p0 in self.sources:
            if abs(p0) >= self.k:
                raise ValidationError(f"incident momentum {p0} is not propagating")
        self.src_varpi = np.sqrt(self.k ** 2 - np.square(self.sources)) + 0j
        self.axial = []
        self.kernels = []
        self.src_kernels = []
        if pot.is_zero():
            return
        for term in pot.terms():
            if grid.kind == "channel":
                if not pot.line_spectrum:
                    raise GridMismatch("channel grids carry line-spectrum potentials only")
                self.kernels.append(line_kernel(term, grid))
                self.src_kernels.append(np.zeros((grid.size, 0), dtype=complex))
            else:
                if pot.line_spectrum:
                    raise GridMismatch("line-spectrum potentials need a ChannelGrid")
                self.kernels.append(transverse_kernel(term, grid.p, grid.p))
                self.src_kernels.append(transverse_kernel(term, grid.p, np.array(self.sources)))
            self.axial.append(term.axial)

    @property
    def n(self):
        return self.grid.size

    @property
    def support(self):
        return self.pot.support

    def is_zero(self):
        return not self.kernels

    def coupling(self, x):
        """``V(x)`` on the grid and its columns at the source momenta."""
        V = np.zeros((self.n, self.n), dtype=complex)
        Vs = np.zeros((self.n, len(self.sources)), dtype=complex)
        lo, hi = self.support
        if x < lo or x > hi:
            return V, Vs
        for a, K, Ks in zip(self.axial, self.kernels, self.src_kernels):
            g = a(x)
            if g != 0:
                V += g * K
                Vs += g * Ks
        return V, Vs

    def rhs(self, x, Y, n_src_cols=0):
        """``-i (H Y + H delta)`` for a state block whose last ``n_src_cols`` columns are
        smooth responses to the source Dirac terms (minus slot then plus slot)."""
        V, Vs = self.coupling(x)
        n = self.n
        ep = np.exp(1j * x * self.varpi)
        em = np.exp(-1j * x * self.varpi)
        W = (ep * self.mu)[:, None] * Y[:n] + (em * self.mu)[:, None] * Y[n:]
        u = V @ W
        if n_src_cols:
            S = len(self.sources)
            e0p = np.exp(1j * x * self.src_varpi) / self.src_varpi
            e0m = np.exp(-1j * x * self.src_varpi) / self.src_varpi
            u[:, -2 * S:-S] += Vs * e0p[None, :]
            u[:, -S:] += Vs * e0m[None, :]
        return -1j * np.concatenate([0.5 * em[:, None] * u, -0.5 * ep[:, None] * u])

    def max_decay_rate(self):
        ev = self.grid.evan_index
        return float(np.max(np.abs(self.varpi[ev]))) if len(ev) else 0.0


def apply_H(ham, x, phi):
    """Action of the effective Hamiltonian on a two-component field (Dirac terms included)."""
    grid = ham.grid
    if not phi.grid.same_as(grid):
        raise GridMismatch("field and Hamiltonian live on different grids")
    n = grid.size
    Y = np.concatenate([phi.minus.coeffs, phi.plus.coeffs])[:, None]
    out = 1j * ham.rhs(x, Y)[:, 0]
    for slot, comp in enumerate((phi.minus, phi.plus)):
        for p0, wgt in comp.delta_part:
            if grid.kind == "channel":
                raise ValidationError("channel fields carry no separate Dirac terms")
            extra = EffectiveHamiltonian(ham.pot, grid, sources=(p0,))
            Z = np.zeros((2 * n, 2), dtype=complex)
            rhs = 1j * extra.rhs(x, Z, n_src_cols=2)
            out += wgt * rhs[:, slot]
    return TwoComponentField(SpectralField(grid, out[:n]), SpectralField(grid, out[n:]))


# ---------------------------------------------------------------------------


@dataclass
class TransferOperator:
    """2x2 block operator on a grid.

    ``matrix`` acts on stacked node values ``[f_-; f_+]``.  ``scope`` is ``"aux"`` for the
    full-grid auxiliary operator and ``"fundamental"`` for its propagating block.
    ``sources`` maps an incident momentum ``p0`` to the smooth parts of the operator
    applied to ``delta_{p0}`` placed in the minus slot (column 0) and plus slot (column 1).
    """

    grid: object
    matrix: np.ndarray
    scope: str = "aux"
    sources: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    complete: bool = True

    @property
    def n(self):
        return self.matrix.shape[0] // 2

    def block(self, i, j):
        n = self.n
        return self.matrix[(i - 1) * n: i * n, (j - 1) * n: j * n]

    @property
    def M11(self):
        return self.block(1, 1)

    @property
    def M12(self):
        return self.block(1, 2)

    @property
    def M21(self):
        return self.block(2, 1)

    @property
    def M22(self):
        return self.block(2, 2)

    @property
    def index(self):
        """Grid node indices that the rows of each block refer to."""
        if self.scope == "fundamental":
            return self.grid.prop_index
        return np.arange(self.grid.size)

    def delta_response(self, p0):
        """Smooth parts ``(M11 d, M21 d, M12 d, M22 d)`` for ``d = delta(p - p0)``.

        On a channel grid ``p0`` must be a channel; on a continuous grid it must have been
        registered as a source, otherwise the kernel is interpolated from the basis columns.
        """
        n = self.n
        if self.grid.kind == "channel":
            j = self.grid.index_of(p0)
            pos = np.flatnonzero(self.index == j) if j is not None else []
            if not len(pos):
                raise ValidationError(f"p0={p0} is not a channel of this operator")
            j = int(pos[0])
            cm = self.matrix[:, j].copy()
            cp = self.matrix[:, n + j].copy()
            cm[j] -= 1.0
            cp[n + j] -= 1.0
        elif p0 in self.sources:
            cm, cp = self.sources[p0][:, 0], self.sources[p0][:, 1]
        else:
            cm, cp = self._interpolated_columns(p0)
        return cm[:n], cm[n:], cp[:n], cp[n:]

    def _interpolated_columns(self, p0):
        # kernel(p, q) = (M - I)[p, q] / mu(q) is smooth in theta = asin(q/k)
        if self.scope != "fundamental" and not self.complete:
            raise ValidationError("cannot interpolate from an incomplete operator")
        grid = self.grid
        n = self.n
        pos = np.searchsorted(self.index, grid.prop_index)
        kernel = (self.matrix - np.eye(2 * n)) / np.concatenate([grid.mu[self.index]] * 2)[None, :]
        theta = np.arcsin(p0 / grid.k)
        w0 = np.sqrt(grid.k ** 2 - p0 ** 2)
        out = []
        for off in (0, n):
            cols = kernel[:, off + pos]
            out.append(barycentric(grid.theta, grid.theta_weights, cols.T, theta)[0] / w0)
        return out[0], out[1]

    def deviation_from_identity(self):
        """Largest entry of ``M - I`` including the Dirac-column responses."""
        dev = np.max(np.abs(self.matrix - np.eye(self.matrix.shape[0]))) if self.matrix.size else 0.0
        for cols in self.sources.values():
            dev = max(dev, float(np.max(np.abs(cols))) if cols.size else 0.0)
        return float(dev)


def identity_operator(grid, scope="aux", sources=()):
    n = grid.size if scope == "aux" else len(grid.prop_index)
    return TransferOperator(grid, np.eye(2 * n, dtype=complex), scope,
                            {float(p0): np.zeros((2 * n, 2), dtype=complex) for p0 in sources},
                            {"identity": True})


def _columns(grid, columns):
    n = grid.size
    if columns == "all":
        return np.arange(2 * n)
    if columns == "prop":
        idx = grid.prop_index
        return np.concatenate([idx, n + idx])
    raise ValueError(columns)


def growth_estimate(ham, x0, x1):
    """A-priori amplification bound ``exp(kappa_max * (|x0| + |x1|))`` for evanescent channels.

    For a slab centred on the origin this is ``exp(kappa_max * width)``; off-centre slabs
    pick up the gauge factors ``exp(+-x varpi)`` of the two-component field as well.
    """
    return float(np.exp(ham.max_decay_rate() * (abs(x0) + abs(x1))))


def default_step(ham):
    scale = 2.0 * ham.k + 2.0 * ham.max_decay_rate()
    return 0.05 / scale


def _rk4(ham, x0, x1, Y, n_src, n_steps):
    h = (x1 - x0) / n_steps
    for s in range(n_steps):
        x = x0 + s * h
        k1 = ham.rhs(x, Y, n_src)
        k2 = ham.rhs(x + h / 2, Y + (h / 2) * k1, n_src)
        k3 = ham.rhs(x + h / 2, Y + (h / 2) * k2, n_src)
        k4 = ham.rhs(x + h, Y + h * k3, n_src)
        Y = Y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return Y


def _cumulative_matrix(m):
    """Spectral integration matrix on m Gauss-Legendre nodes of [-1, 1]."""
    xi, wi = np.polynomial.legendre.leggauss(m)
    L = np.polynomial.legendre
    V = L.legvander(xi, m - 1)
    coef = np.linalg.inv(V)           # column j: Legendre coefficients of the j-th cardinal
    C = np.empty((m, m))
    for j in range(m):
        C[:, j] = L.legval(xi, L.legint(coef[:, j], lbnd=-1))
    return xi, wi, C


def _dyson(ham, x0, x1, Y0, n_src, n_max, n_panels, m_nodes):
    """Partial sums of the Dyson series by nested Gauss-Legendre panel integration."""
    xi, wi, C = _cumulative_matrix(m_nodes)
    edges = np.linspace(x0, x1, n_panels + 1)
    nodes = []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append((a + b) / 2 + (b - a) / 2 * xi)
    half = np.diff(edges) / 2

    def integrate(term_at, forcing):
        # term_at[p][i]: previous order at node i of panel p; returns new order at nodes + end value
        start = np.zeros_like(Y0)
        out = []
        for p, xs in enumerate(nodes):
            G = np.stack([ham.rhs(x, term_at[p][i] if term_at is not None else np.zeros_like(Y0),
                                   n_src if forcing else 0) for i, x in enumerate(xs)])
            vals = start[None] + half[p] * np.einsum("ij,j...->i...", C, G)
            out.append(vals)
            start = start + half[p] * np.einsum("j,j...->...", wi, G)
        return out, start

    total = Y0.copy()
    prev = [[Y0] * m_nodes for _ in nodes]
    for order in range(1, n_max + 1):
        # only the first order is driven by the Dirac terms
        cur, end = integrate(prev, forcing=(order == 1))
        total = total + end
        prev = cur
    return total


def evolve_aux(ham, x0, x1, scheme="rk4", dx=None, n_max=None, columns="all",
               check=False, tol=1e-6, max_growth=MAX_GROWTH, n_panels=None, m_nodes=12):
    """Evolution operator ``U(x1, x0)`` of the effective Hamiltonian.

    Parameters
    ----------
    ham : EffectiveHamiltonian or Delta2D-backed ham from :func:`delta_hamiltonian`
    scheme : ``"rk4"`` (fixed step ``dx``) or ``"dyson"`` (series truncated at ``n_max``)
    columns : ``"all"`` for the full auxiliary operator, ``"prop"`` to evolve only the
        propagating basis columns (enough for the fundamental operator)
    check : rerun with half the step (rk4) or twice the panels (dyson) and raise
        :class:`NonConvergence` if the operator moves by more than ``tol``

    Returns
    -------
    TransferOperator
        scope ``"aux"``; ``complete`` is False when only propagating columns were evolved.
    """
    if not x0 < x1:
        raise ValidationError("evolution needs x0 < x1")
    if isinstance(ham, DeltaHamiltonian):
        return ham.transfer(x0, x1)
    grid = ham.grid
    n = grid.size
    cols = _columns(grid, columns)
    S = len(ham.sources)
    lo, hi = ham.support
    a, b = max(x0, lo), min(x1, hi)
    if ham.is_zero() or a >= b:
        op = identity_operator(grid, "aux", ham.sources)
        op.matrix = op.matrix[:, cols] if columns != "all" else op.matrix
        op.complete = columns == "all"
        op.diagnostics.update({"steps": 0, "growth_estimate": 1.0})
        return op

    growth = growth_estimate(ham, a, b)
    if max_growth is not None and growth > max_growth:
        raise ConditioningRefusal(
            f"evanescent amplification estimate {growth:.2e} exceeds {max_growth:.0e}; "
            "lower p_max or split the slab", growth=growth)

    Y0 = np.zeros((2 * n, len(cols) + 2 * S), dtype=complex)
    Y0[cols, np.arange(len(cols))] = 1.0

    def run(refine):
        if scheme == "rk4":
            step = (dx or default_step(ham)) / refine
            steps = max(1, int(np.ceil((b - a) / step)))
            return (_rk4(ham, a, b, Y0, 2 * S, steps),
                    {"scheme": "rk4", "steps": steps, "dx": (b - a) / steps})
        if scheme == "dyson":
            if n_max is None:
                raise ValidationError("dyson scheme needs n_max")
            panels = (n_panels or max(1, int(np.ceil((b - a) / (8 * default_step(ham)))))) * refine
            return (_dyson(ham, a, b, Y0, 2 * S, n_max, panels, m_nodes),
                    {"scheme": "dyson", "n_max": n_max, "panels": panels})
        raise ValidationError(f"unknown scheme {scheme!r}")

    Y, info = run(1)
    if check:
        Y2, _ = run(2)
        change = float(np.max(np.abs(Y2 - Y)) / max(1.0, np.max(np.abs(Y2))))
        info["refinement_change"] = change
        if change > tol:
            raise NonConvergence(f"step halving changed the operator by {change:.2e} > {tol:.0e}",
                                 growth=change)
        Y = Y2
    info["growth_estimate"] = growth
    info["measured_growth"] = float(np.max(np.abs(Y)))
    sources = {p0: Y[:, len(cols) + np.array([s, S + s])] for s, p0 in enumerate(ham.sources)}
    return TransferOperator(grid, Y[:, : len(cols)], "aux", sources, info, complete=columns == "all")


def fundamental_from_aux(aux):
    """Propagating block ``Pi_k M_aux Pi_k``: rows and columns restricted to ``|p| < k``."""
    if aux.scope != "aux":
        raise ValidationError("expected an auxiliary (full-grid) operator")
    grid = aux.grid
    n = grid.size
    idx = grid.prop_index
    rows = np.concatenate([idx, n + idx])
    if aux.complete:
        mat = aux.matrix[np.ix_(rows, rows)]
    else:
        if aux.matrix.shape[1] != len(rows):
            raise ValidationError("incomplete operator lacks propagating columns")
        mat = aux.matrix[rows, :]
    sources = {p0: cols[rows] for p0, cols in aux.sources.items()}
    diag = dict(aux.diagnostics)
    if diag.get("identity"):
        mat = np.eye(len(rows), dtype=complex)
    return TransferOperator(grid, mat, "fundamental", sources, diag)


def compose(M2, M1):
    """Auxiliary operator of two adjacent slabs: ``M2 @ M1`` (M1 acts first)."""
    for M in (M1, M2):
        if M.scope != "aux":
            raise ValidationError("composition is only defined for auxiliary operators; the "
                                  "fundamental blocks do not compose")
        if not M.complete:
            raise ValidationError("composition needs complete auxiliary operators")
    if not M1.grid.same_as(M2.grid):
        raise GridMismatch("operators live on different grids")
    sources = {}
    for p0 in set(M1.sources) & set(M2.sources):
        sources[p0] = M2.sources[p0] + M2.matrix @ M1.sources[p0]
    diag = {"composed": True}
    if M1.diagnostics.get("identity") and M2.diagnostics.get("identity"):
        diag["identity"] = True
    return TransferOperator(M1.grid, M2.matrix @ M1.matrix, "aux", sources, diag)


# ---------------------------------------------------------------------------
# delta potential: the Dyson series stops after one term


class DeltaHamiltonian:
    """Effective Hamiltonian ``(z/2) delta(x-a) e^{-ia varpi s3} V_b K e^{ia varpi s3} / varpi``."""

    def __init__(self, pot, grid, sources=()):
        if grid.kind != "continuous":
            raise GridMismatch("the delta potential needs a continuous momentum grid")
        self.pot = pot
        self.grid = grid
        self.k = grid.k
        self.sources = tuple(float(p0) for p0 in sources)

    def transfer(self, x0, x1):
        grid, pot = self.grid, self.pot
        n = grid.size
        S = len(self.sources)
        if pot.z == 0 or not (x0 < pot.a <= x1):
            return identity_operator(grid, "aux", self.sources)
        w = grid.varpi
        E = np.exp(1j * pot.a * w)
        Ei = 1.0 / E
        left = (pot.z / 2) / (2 * np.pi) * np.exp(-1j * pot.b * grid.p)
        R = left[:, None] * (grid.mu * np.exp(1j * pot.b * grid.p))[None, :]
        H = np.block([[Ei[:, None] * R * E[None, :], Ei[:, None] * R * Ei[None, :]],
                      [-E[:, None] * R * E[None, :], -E[:, None] * R * Ei[None, :]]])
        mat = np.eye(2 * n, dtype=complex) - 1j * H
        sources = {}
        for p0 in self.sources:
            w0 = np.sqrt(self.k ** 2 - p0 ** 2)
            col = left * np.exp(1j * pot.b * p0) / w0
            e0 = np.exp(1j * pot.a * w0)
            minus = -1j * np.concatenate([Ei * col * e0, -E * col * e0])
            plus = -1j * np.concatenate([Ei * col / e0, -E * col / e0])
            sources[p0] = np.stack([minus, plus], axis=1)
        return TransferOperator(grid, mat, "aux", sources, {"scheme": "exact-delta"})


def hamiltonian(pot, grid, sources=()):
    """Effective Hamiltonian ham for any potential model, routing deltas to the exact path."""
    if isinstance(pot, Delta2D):
        return DeltaHamiltonian(pot, grid, sources)
    return EffectiveHamiltonian(pot, grid, sources)


def transfer_operators(pot, grid, sources=(), **kw):
    """Convenience: auxiliary operator over the support and its fundamental block."""
    ham = hamiltonian(pot, grid, sources)
    lo, hi = pot.support
    if isinstance(pot, Delta2D):
        aux = ham.transfer(lo - 1.0, hi)
    else:
        aux = evolve_aux(ham, lo, hi, **kw)
    return aux, fundamental_from_aux(aux)


# ---------------------------------------------------------------------------
# equivalence check with the Psi-picture Hamiltonian


def evolve_bH(ham, x0, x1, n_steps):
    """Evolve with ``H_Psi(x) = e^{-wi s3 x} H(x) e^{wi s3 x} - i wi s3`` (rk4, full columns).

    Only meant for narrow slabs: the ``wi s3`` term is stiff.  The result should equal
    ``e^{-wi s3 x1} U(x1, x0) e^{wi s3 x0}``.
    """
    grid = ham.grid
    n = grid.size
    wi = np.imag(grid.varpi)
    s3wi = np.concatenate([wi, -wi])

    def f(x, Y):
        D = np.exp(s3wi * x)
        return (np.exp(-s3wi * x)[:, None] * ham.rhs(x, D[:, None] * Y)) - s3wi[:, None] * Y

    Y = np.eye(2 * n, dtype=complex)
    h = (x1 - x0) / n_steps
    for s in range(n_steps):
        x = x0 + s * h
        k1 = f(x, Y)
        k2 = f(x + h / 2, Y + h / 2 * k1)
        k3 = f(x + h / 2, Y + h / 2 * k2)
        k4 = f(x + h, Y + h * k3)
        Y = Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return Y
