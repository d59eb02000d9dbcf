"""Robust low-rank + sparse decomposition with MDL atom selection."""
from .baselines import RpcaConfig, rpca_ialm
from .codelength import CodelengthModel
from .core import load_matrix, nrmse
from .solver import DecompositionResult, SolverConfig, decompose

__version__ = "0.1.0"

__all__ = [
    "CodelengthModel",
    "DecompositionResult",
    "RpcaConfig",
    "SolverConfig",
    "decompose",
    "load_matrix",
    "nrmse",
    "rpca_ialm",
    "__version__",
]
