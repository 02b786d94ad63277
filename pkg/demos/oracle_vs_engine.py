"""Weak Gaussian bump: engine amplitudes against a position-space Born series.

The projected fundamental operator drops the evanescent feedback between channels; the
evanescent closure keeps it.  Only the latter tracks the oracle once p_max is large enough.

Run:  python3 demos/oracle_vs_engine.py      (about 30 s)
"""

import numpy as np

from tmscatter import AxialProfile, IncidenceSpec, SeparableY, TransverseProfile, build_grid, solve
from tmscatter.engine import transfer_operators
from tmscatter.oracle import SpatialGrid, born_series_solve, contraction_estimate, far_field

k, sigma, h = 1.0, 0.4, 0.04
yr = (-6 * sigma, 6 * sigma)


def bump(amp):
    return SeparableY(AxialProfile("gaussian", {"amp": amp, "width": sigma, "nsig": 6}),
                      TransverseProfile("gaussian", {"width": sigma}))


amp = 0.3 / contraction_estimate(SpatialGrid.from_potential(bump(1.0), k, h, y_range=yr))
pot = bump(amp)
inc = IncidenceSpec.from_angle("left", k, 0.3)
theta = np.linspace(-3.0, 3.0, 121)

sgrid = SpatialGrid.from_potential(pot, k, h, y_range=yr)
ser = born_series_solve(sgrid, inc, n_terms=80, tol=1e-13)
f_oracle = far_field(sgrid, ser.psi, theta)
scale = np.max(np.abs(f_oracle))
print(f"amplitude {amp:.4f}, Born ratio {ser.measured_ratio:.3f}, max|f| {scale:.4f}")

print("p_max   projected   evanescent closure")
for p_max in (2.0, 3.0, 4.0, 5.0):
    aux, M = transfer_operators(pot, build_grid(k, 48, 48, p_max), sources=(inc.p0,),
                                max_growth=1e30)
    e_proj = np.max(np.abs(solve(M, inc, theta).f - f_oracle)) / scale
    e_clos = np.max(np.abs(solve(aux, inc, theta, closure="evanescent").f - f_oracle)) / scale
    print(f"{p_max:4.1f}    {e_proj:.3e}   {e_clos:.3e}")
