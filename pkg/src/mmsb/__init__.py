"""Spectral estimation for mixed-membership stochastic block models.

Submodules
----------
model        memberships, connection matrices, probability operators, samplers
eigen        top-k eigendecomposition (dense and thick-restart Lanczos)
spa          successive projections vertex hunting
estimators   SPOC and SPOC++ estimators, rank estimation, covariance plug-ins
metrics      permutation-minimized losses and log-log slope fits
lowerbound   hard-instance family and its numerical certificate
experiments  Monte Carlo harness behind the ``mmsb`` command
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConstructionWarning,
    ConvergenceError,
    DegenerateSpectrumError,
    DomainError,
    MMSBError,
    ParameterError,
    RankDeficiencyError,
    RankEstimationError,
    RegularizationError,
    SizeError,
    VertexDegeneracyError,
)
from .estimators import EstimateBundle, estimate_k, spoc, spocpp  # noqa: E402
from .model import (  # noqa: E402
    CommunityMatrix,
    MembershipMatrix,
    ProbabilityOperator,
    SparseGraph,
    make_membership,
    sample_graph,
    sample_graph_coupled,
)
