"""Provable training of ReLU gates and shallow leaky-ReLU networks.

Modules
-------
linalg
    Leaky ReLU, symmetric smallest eigenvalue, spectral norm.
data
    Labeled datasets, CSV round trips, symmetrization.
distributions
    Input laws and Monte Carlo moment constants.
adversary
    Label oracle with probabilistic bounded corruption.
glm_tron
    GLM-Tron for a single monotone activation.
relu_tron
    Robust mini-batch training of a ReLU gate and its schedules.
neurotron
    Neuro-Tron for shared-weight shallow nets.
recursion
    Step sizes and horizons for scalar error recursions.
experiment, cli
    TOML experiments and the ``trontrain`` command.
"""
from .adversary import ConstantBeta, HalfspaceBeta, OracleConfig, make_realization_attack, query, respond
from .data import Dataset, LabeledSample, is_symmetric, symmetrize
from .distributions import (
    IsotropicGaussian,
    MomentEstimates,
    UniformBox,
    UnitBall,
    estimate_moments,
    example1_analytic,
    sample,
)
from .errors import (
    AlreadyConverged,
    AsymmetryError,
    DimensionError,
    HypothesisError,
    SupportRadiusError,
    TronError,
)
from .linalg import lambda_min_symmetric, leaky_relu, spectral_norm

__version__ = "0.1.0"
