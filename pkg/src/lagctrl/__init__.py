"""lagctrl: remote-forcing synthesis for particle paths of a 1D compressible flow.

Pipeline: spectral mode kernels -> adjoint control fields -> Gram matrix of
the windowed fields -> nonlinear solve + particle advection -> Newton
shooting for the forcing amplitudes.
"""

__version__ = "0.1.0"

from .adjoint import AdjointField, Cutoff
from .control import ControlProblem
from .pde import GasModel, Grid

__all__ = [
    "AdjointField",
    "ControlProblem",
    "Cutoff",
    "GasModel",
    "Grid",
    "__version__",
]
