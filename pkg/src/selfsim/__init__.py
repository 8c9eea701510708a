"""Exact frequency responses and transfer functions of self-similar networks."""

from .analysis import approx_constants, build_H, convergence_sweep, disturbance, zeros_poles
from .errors import (
    CoefficientOverflow,
    ConfigError,
    InvalidArgument,
    NoSolutionError,
    PoleEvaluationError,
    SelfSimError,
    SingularFrequencyError,
    UnsupportedBasis,
    UnsupportedReduction,
)
from .models import (
    ELECTRICAL_LADDER,
    MECHANICAL_LADDER,
    MODELS,
    TREE,
    ELadderConstants,
    MLadderConstants,
    TreeConstants,
    get_model,
)
from .netcore import EMPTY, ComponentId, DamageCase, NetworkModel, OpCounter, freq_fin, freq_inf, tran_fin, tran_inf
from .oracle import direct_freq
from .polyalg import BasisSet, CoeffTensor, MonomialPower, SqrtPoly, TransferFunction, evaluate, normalize

__version__ = "0.1.0"
