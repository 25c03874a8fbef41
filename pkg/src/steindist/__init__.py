"""Stein operators, compound-distribution recursions and TV bounds for integer laws."""

from .distributions import (
    DEFAULT_TOL,
    PanjerCounting,
    Pmf,
    SeverityLaw,
    convolve,
    first_diff_l1,
    moments,
    pmf_bcp,
    pmf_binomial,
    pmf_compound_explicit,
    pmf_compound_panjer,
    pmf_negative_binomial,
    pmf_point,
    pmf_poisson,
    pmf_poisson_binomial,
    pmf_pseudo_binomial,
    second_diff_l1,
    tv_norm,
    tv_norm_interval,
    w1_distance,
)
from .operators import (
    AffineOperator,
    TabularOperator,
    TestFunction,
    characterization_defect,
    max_indicator_defect,
    op_bcp_binomial_perturbation,
    op_bcp_poisson_perturbation,
    op_bi_cp,
    op_binb,
    op_compound_geometric,
    op_compound_panjer,
    op_compound_poisson,
    op_generic_ratio,
    op_nb_cp,
    op_negative_binomial,
    op_poisson,
    op_pseudo_binomial,
)
from .solver import (
    BirthDeathOperator,
    PerturbationConstants,
    delta_bound_check,
    delta_sup_bound,
    lemma31_bound,
    perturbation_constants,
    solve_stein,
    stationary_pmf,
    stein_residuals,
)
from .bcp import (
    BcpParams,
    BoundReport,
    IndependentModel,
    JointModel,
    SmoothnessStats,
    bound_cor42,
    bound_cor45,
    bound_thm41,
    bound_thm44,
    d1_bound_independent,
    d_bound_independent,
    eta1,
    fit_bcp,
    smoothness_exact,
    tail_bound_psi,
)
from .runs import (
    RunsConstants,
    RunsModel,
    bound_cor48,
    exact_runs_law,
    fit_runs_bcp,
    lemma47_check,
    runs_constants,
    runs_constants_from_a,
    runs_law_without,
    runs_moments,
    waiting_time_moments,
    waiting_time_pgf,
)

__version__ = "0.1.0"
