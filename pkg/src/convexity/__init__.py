"""Quantify convexity and lack of convexity of smooth scalar functions.

The pointwise indices come from the Hessian's eigenvalues: the negative
parts sum to the nuclear distance from the Hessian to the positive
semidefinite cone. Global indices integrate those pieces over boxes.
"""
__version__ = "0.1.0"

from .errors import (
    BoundaryError,
    ConvexityError,
    DomainError,
    InputError,
    ParseError,
    PreconditionError,
    UnsupportedError,
)
from .symcore import (
    CanonicalSplit,
    EigenDecomposition,
    PsdIndexReport,
    SymmetricMatrix,
    canonical_split,
    eigendecompose,
    nuclear_distance_to_psd_oracle,
    nuclear_norm,
    psd_indices,
    trace_bound_check,
)
from .field import ScalarField, builtin, evaluate, from_expression, parse_expression
from .hessian import FdConfig, analytic_hessian, hessian_fd
from .indices import ConvexityReport, index_of_increase_1d, pointwise_indices
from .quadrature import HyperRect, Square, global_convexity_index, region_map, sweep_conv_a
from .risk import (
    UNIFORM01,
    AggregateSpec,
    LineSpec,
    LossDistribution,
    aggregate_field,
    average_value_at_risk,
    expected_shortfall,
    generalized_mean,
    two_line_spec,
    line_total_loss,
    value_at_risk,
)
