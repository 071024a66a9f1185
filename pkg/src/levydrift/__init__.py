"""Jump-filtered drift estimation for Levy-driven SDEs.

Simulate solutions of ``dX = b(theta, X) dt + sigma(X) dW + gamma(X-) dL``,
recover the continuous part of discretely observed paths by threshold jump
filtering, and estimate the drift parameter by filtered maximum likelihood
with CLT-based confidence intervals.
"""

from ._rng import derive_seed, make_rng
from .estimators import (
    DegenerateDataError,
    EstimateReport,
    estimate,
    fmle_cir,
    fmle_generic,
    fmle_hyperbolic,
    fmle_ou,
    functional_In,
)
from .harness import (
    ExperimentConfig,
    ExperimentFailedError,
    ExperimentResult,
    TableReport,
    TableRow,
    reproduce_table,
    run_experiment,
    table_row_definitions,
)
from .inference import (
    FisherEstimate,
    RateCondition,
    RateConditionReport,
    confidence_intervals,
    fisher_ergodic,
    norm_ppf,
    rate_condition_check,
)
from .jumpfilter import (
    FilterConfig,
    FilterResult,
    JumpFilterDiagnostics,
    apply_filter,
    cutoff_value,
    filter_diagnostics,
    filtered_integral,
    riemann_sum,
)
from .likelihood import (
    LikelihoodContext,
    filtered_hessian,
    filtered_loglik,
    filtered_score,
    oracle_continuous_loglik,
)
from .model import (
    AlphaStable,
    CompoundPoisson,
    ConstantJumps,
    DiffusionSpec,
    DriftSpec,
    ExponentialJumps,
    GaussianJumps,
    ModelCheckReport,
    ParametricModel,
    TemperedStable,
    check_model,
    cir_model,
    get_model,
    hyperbolic_model,
    model_from_json,
    model_to_json,
    ou_model,
    stable_unit_scale,
    validate_theta,
)
from .simulate import (
    Observations,
    SamplePath,
    SimulationDivergedError,
    discard_initial,
    euler_drive,
    read_observations_csv,
    read_path_csv,
    sample_compound_poisson_segment,
    sample_stable_increment,
    sample_tempered_stable_increment,
    simulate_path,
    subsample,
    tempered_floor,
    write_observations_csv,
    write_path_csv,
)

__version__ = "0.1.0"

__all__ = [
    "derive_seed",
    "make_rng",
    "DegenerateDataError",
    "EstimateReport",
    "estimate",
    "fmle_cir",
    "fmle_generic",
    "fmle_hyperbolic",
    "fmle_ou",
    "functional_In",
    "ExperimentConfig",
    "ExperimentFailedError",
    "ExperimentResult",
    "TableReport",
    "TableRow",
    "reproduce_table",
    "run_experiment",
    "table_row_definitions",
    "FisherEstimate",
    "RateCondition",
    "RateConditionReport",
    "confidence_intervals",
    "fisher_ergodic",
    "norm_ppf",
    "rate_condition_check",
    "FilterConfig",
    "FilterResult",
    "JumpFilterDiagnostics",
    "apply_filter",
    "cutoff_value",
    "filter_diagnostics",
    "filtered_integral",
    "riemann_sum",
    "LikelihoodContext",
    "filtered_hessian",
    "filtered_loglik",
    "filtered_score",
    "oracle_continuous_loglik",
    "AlphaStable",
    "CompoundPoisson",
    "ConstantJumps",
    "DiffusionSpec",
    "DriftSpec",
    "ExponentialJumps",
    "GaussianJumps",
    "ModelCheckReport",
    "ParametricModel",
    "TemperedStable",
    "check_model",
    "cir_model",
    "get_model",
    "hyperbolic_model",
    "model_from_json",
    "model_to_json",
    "ou_model",
    "stable_unit_scale",
    "validate_theta",
    "Observations",
    "SamplePath",
    "SimulationDivergedError",
    "discard_initial",
    "euler_drive",
    "read_observations_csv",
    "read_path_csv",
    "sample_compound_poisson_segment",
    "sample_stable_increment",
    "sample_tempered_stable_increment",
    "simulate_path",
    "subsample",
    "tempered_floor",
    "write_observations_csv",
    "write_path_csv",
    "__version__",
]
