"""Transfer-matrix scattering in two dimensions with a transverse momentum basis."""

from .errors import (ConditioningRefusal, DivergentGreen, GridMismatch, NonContractive,
                     NonConvergence, RunawayCoupling, ScatterError, SpectralSingularity,
                     SpectralSingularity1D, ValidationError)
from .spectral import (ChannelGrid, MomentumGrid, SpectralField, TwoComponentField,
                       build_grid, channel_grid, fourier_p_to_y, fourier_y_to_p, varpi)
from .potentials import (AxialProfile, Delta2D, FourierShifted, GridSampled, HarmonicY,
                         LineProfile, PotentialModel, SeparableY, SumPotential,
                         TransverseProfile, ZeroPotential)
from .engine import (TransferOperator, apply_H, compose, evolve_aux, fundamental_from_aux,
                     hamiltonian, transfer_operators)
from .solver import IncidenceSpec, ScatteringResult, amplitude, solve, solve_boundary

__version__ = "0.1.0"
