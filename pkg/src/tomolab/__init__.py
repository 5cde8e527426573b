"""Single-copy quantum state tomography: hard ensembles, estimators and bound checks."""

__version__ = "0.1.0"

from .linalg import DensityMatrix, DimensionMismatch, InvalidStateError, Projector, TomolabError
from .measurements import Povm, SimulatedState
from .randomness import RngStream, haar_unitaries, haar_unitary

__all__ = [
    "DensityMatrix",
    "DimensionMismatch",
    "InvalidStateError",
    "Povm",
    "Projector",
    "RngStream",
    "SimulatedState",
    "TomolabError",
    "haar_unitaries",
    "haar_unitary",
    "__version__",
]
