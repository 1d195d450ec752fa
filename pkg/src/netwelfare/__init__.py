"""Policy learning under network interference.

Estimate welfare from a network experiment (plug-in, IPW, and doubly
robust AIPW estimators with exact joint exposure propensities), then
maximize it over a constrained policy class with exact or heuristic
backends.  ``NetworkPolicyLearner`` wraps the pipeline behind one
estimator-style object; ``netwelfare.cli`` exposes it as a command
line tool; ``netwelfare.simbench`` holds the simulation benchmark.
"""

from .errors import (
    BackendUnavailableError,
    ConfigError,
    DataIntegrityError,
    NetwelfareError,
    NumericalError,
    SeparationError,
)
from .graph import (
    Graph,
    greedy_coloring,
    max_degree_stats,
    power_graph,
    read_edge_csv,
    second_degree,
    write_edge_csv,
)
from .data import (
    Dataset,
    ExperimentConfig,
    UnitRecord,
    exposure_bucket,
    load_dataset,
    validate_tau,
    write_nodes_csv,
)
from .nuisance import (
    ExposureFeatures,
    OutcomeRegression,
    PooledNuisance,
    PropensityTable,
    TreatmentPropensity,
    bucketize_exposures,
    build_propensity_table,
    feature_exposures,
    fit_pooled_nuisance,
    joint_propensity,
    joint_propensity_two_degree,
    neighborhood_sizes,
    nuisance_diagnostics,
    observed_exposures,
    poisson_binomial_pmf,
    weighted_bernoulli_pmf,
)
from .crossfit import (
    CrossfitNuisance,
    FoldAssignment,
    crossfit_nuisance,
    make_folds,
    write_folds_csv,
)
from .welfare import (
    EffectTable,
    WelfareEstimate,
    build_effect_table,
    policy_assignments,
    policy_exposure,
    policy_exposures,
    welfare_aipw,
    welfare_ipw,
    welfare_plugin,
)
from .policyopt import (
    EPS_STRICT,
    ExplicitAssignmentPolicy,
    LinearThresholdPolicy,
    MilpProgram,
    PolicyClass,
    SolveResult,
    capacity_diagnostic,
    check_feasibility,
    construct_solution,
    encode_milp,
    encoded_objective,
    enumerate_cells,
    evaluate_policy,
    export_lp,
    lp_text,
    maximize_welfare,
    parse_lp,
    solve_branch_bound,
    solve_exact_cells,
    solve_heuristic,
)
from .simbench import (
    DEFAULT_TRIM,
    BenchmarkConfig,
    BenchResult,
    DgpSpec,
    baseline_degree_centrality,
    baseline_ewm,
    baseline_random,
    gen_barabasi_albert,
    gen_geometric,
    run_benchmark,
    simulate_dataset,
    simulate_outcomes,
    true_effect_table,
    true_welfare,
)
from .learner import NetworkPolicyLearner

__version__ = "0.1.0"

__all__ = [
    "BackendUnavailableError",
    "BenchResult",
    "BenchmarkConfig",
    "ConfigError",
    "CrossfitNuisance",
    "DEFAULT_TRIM",
    "DataIntegrityError",
    "Dataset",
    "DgpSpec",
    "EPS_STRICT",
    "EffectTable",
    "ExperimentConfig",
    "ExplicitAssignmentPolicy",
    "ExposureFeatures",
    "FoldAssignment",
    "Graph",
    "LinearThresholdPolicy",
    "MilpProgram",
    "NetwelfareError",
    "NetworkPolicyLearner",
    "NumericalError",
    "OutcomeRegression",
    "PolicyClass",
    "PooledNuisance",
    "PropensityTable",
    "SeparationError",
    "SolveResult",
    "TreatmentPropensity",
    "UnitRecord",
    "WelfareEstimate",
    "baseline_degree_centrality",
    "baseline_ewm",
    "baseline_random",
    "bucketize_exposures",
    "build_effect_table",
    "build_propensity_table",
    "capacity_diagnostic",
    "check_feasibility",
    "construct_solution",
    "crossfit_nuisance",
    "encode_milp",
    "encoded_objective",
    "enumerate_cells",
    "evaluate_policy",
    "export_lp",
    "exposure_bucket",
    "feature_exposures",
    "fit_pooled_nuisance",
    "gen_barabasi_albert",
    "gen_geometric",
    "greedy_coloring",
    "joint_propensity",
    "joint_propensity_two_degree",
    "load_dataset",
    "lp_text",
    "make_folds",
    "max_degree_stats",
    "maximize_welfare",
    "neighborhood_sizes",
    "nuisance_diagnostics",
    "observed_exposures",
    "parse_lp",
    "poisson_binomial_pmf",
    "policy_assignments",
    "policy_exposure",
    "policy_exposures",
    "power_graph",
    "read_edge_csv",
    "run_benchmark",
    "second_degree",
    "simulate_dataset",
    "simulate_outcomes",
    "solve_branch_bound",
    "solve_exact_cells",
    "solve_heuristic",
    "true_effect_table",
    "true_welfare",
    "validate_tau",
    "welfare_aipw",
    "welfare_ipw",
    "welfare_plugin",
    "write_edge_csv",
    "write_folds_csv",
    "write_nodes_csv",
]
