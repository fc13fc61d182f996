"""Disentangled translation joint space for concentric tube robots.

The nesting inequalities between tube translations become independent box
constraints under a lower-triangular linear map.  This package builds that map
and uses it for sampling, workspace estimation and control.
"""

from ._backend import NAME as BACKEND
from .errors import BetaSpaceError
from .sampling import (
    SampleBatch,
    SamplerMethod,
    SamplingStats,
    marginal_cdf_oracle,
    sample,
    sample_direct,
    sample_direct_batch,
    sample_rejection,
    theoretical_success_rate,
)
from .transform import (
    BetaTransform,
    ConstraintReport,
    TubeSet,
    beta_to_sym,
    beta_to_unit,
    build_beta_transform,
    check_constraints,
    descending_pattern_counterexample,
    inverse_beta_transform,
    sym_to_beta,
    unit_to_beta,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BetaSpaceError",
    "BetaTransform",
    "ConstraintReport",
    "SampleBatch",
    "SamplerMethod",
    "SamplingStats",
    "TubeSet",
    "beta_to_sym",
    "beta_to_unit",
    "build_beta_transform",
    "check_constraints",
    "descending_pattern_counterexample",
    "inverse_beta_transform",
    "marginal_cdf_oracle",
    "sample",
    "sample_direct",
    "sample_direct_batch",
    "sample_rejection",
    "sym_to_beta",
    "theoretical_success_rate",
    "unit_to_beta",
]
