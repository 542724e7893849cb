"""Spectral sparsification of hypergraphs by group leverage score sampling."""

from .certify import (
    CertReport,
    QualityStats,
    brute_force_group_leverage,
    generate_random,
    generate_random_matrix,
    group_contribution_check,
    measure_quality,
)
from .errors import FormatError, InternalError, InvalidArgument, SolverFailure
from .hypergraph import (
    EnergyProfile,
    GraphicalHypergraph,
    MatrixHypergraph,
    clique_expand,
    energy,
    energy_graphical,
    star_expand,
    unitize,
)
from .leverage import LeverageEstimate, SolverConfig, leverage_exact, leverage_sketched, make_overestimator
from .overestimates import (
    GroupOverestimates,
    certify_overestimates,
    default_iterations,
    graphical_overestimates,
    group_leverage_overestimate,
)
from .sampler import SamplingPlan, SparsifierOutput, SparsifyConfig, compact, make_plan, sparsify, subsample

__version__ = "0.1.0"
