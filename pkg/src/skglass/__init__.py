"""Numerical laboratory for the Sherrington-Kirkpatrick model at high temperature.

Scalar fixed points (the overlap q, the AT condition, the Delta-map
orbit), three coupled iterations (AMP, the TAP iteration started from the
overlap, and a subset-indexed cavity recursion), their Gaussian state
evolution, an exact small-n Gibbs oracle, and seeded Monte Carlo
experiment harnesses with deterministic CSV/JSON reports.
"""

from ._version import __version__
from .denoisers import (
    BolthausenPreset,
    ConstantSeq,
    FunctionSeq,
    TanhSeq,
    ZeroSeq,
    check_derivative,
)
from .disorder import (
    DisorderMatrix,
    derive_seed,
    load_matrix,
    pair_normal,
    restricted_row,
    sample_matrix,
    save_matrix,
)
from .errors import NumericalError, ResourceError, SkglassError, ValidationError
from .experiments import (
    ExperimentConfig,
    MagnetizationReport,
    MomentReport,
    OverlapReport,
    OverlapTriple,
    ScalingReport,
    fit_loglog_slope,
    proposition6_experiment,
    stability_experiment,
    tap_residual_diagnostic,
    theorem2_experiment,
    theorem3_experiment,
    theorem4_experiment,
)
from .gibbs import (
    ENUMERATION_CAP,
    GibbsSummary,
    OverlapMoments,
    cavity_residual,
    exact_gibbs,
    free_energy_check,
    overlap_moments,
)
from .iterations import (
    CavityTable,
    IterTrace,
    amp_run,
    bolthausen_run,
    cavity_run,
    cavity_subset_value,
)
from .quadrature import (
    Quadrature,
    default_rule,
    expect_bivariate,
    expect_gaussian,
    gauss_hermite_rule,
)
from .scalars import (
    ModelParams,
    ScalarSolution,
    big_q,
    delta_map,
    delta_orbit,
    gamma_map,
    rs_free_energy,
    solve_q,
)
from .state_evolution import CovarianceTable, expect_test_function, state_evolution

__all__ = [
    "__version__",
    "BolthausenPreset",
    "CavityTable",
    "ConstantSeq",
    "CovarianceTable",
    "DisorderMatrix",
    "ENUMERATION_CAP",
    "ExperimentConfig",
    "FunctionSeq",
    "GibbsSummary",
    "IterTrace",
    "MagnetizationReport",
    "ModelParams",
    "MomentReport",
    "NumericalError",
    "OverlapMoments",
    "OverlapReport",
    "OverlapTriple",
    "Quadrature",
    "ResourceError",
    "ScalarSolution",
    "ScalingReport",
    "SkglassError",
    "TanhSeq",
    "ValidationError",
    "ZeroSeq",
    "amp_run",
    "big_q",
    "bolthausen_run",
    "cavity_residual",
    "cavity_run",
    "cavity_subset_value",
    "check_derivative",
    "default_rule",
    "delta_map",
    "delta_orbit",
    "derive_seed",
    "exact_gibbs",
    "expect_bivariate",
    "expect_gaussian",
    "expect_test_function",
    "fit_loglog_slope",
    "free_energy_check",
    "gamma_map",
    "gauss_hermite_rule",
    "load_matrix",
    "overlap_moments",
    "pair_normal",
    "proposition6_experiment",
    "restricted_row",
    "rs_free_energy",
    "sample_matrix",
    "save_matrix",
    "solve_q",
    "stability_experiment",
    "state_evolution",
    "tap_residual_diagnostic",
    "theorem2_experiment",
    "theorem3_experiment",
    "theorem4_experiment",
]
