"""Budgeted best-arm identification for combinatorial bandits with
subset-dependent semi-bandit feedback."""

from .core import (
    BanditError,
    BudgetExhaustedError,
    DomainError,
    EliminationPolicy,
    HorizonExceededError,
    InvalidDimensionError,
    InvalidProfileError,
    LimitProfile,
    NoDataError,
    ParameterError,
    QuerySet,
    RateFunction,
    Schedule,
    UnsupportedEnvironmentError,
    all_query_sets_up_to,
    enumerate_query_sets,
    rate_inverse,
)
from .stats import StatisticKind, StatisticState, Transform, empirical_borda
from .env import (
    EnvironmentSpec,
    PullLedger,
    build_environment,
    check_instance_membership,
    make_borda_boundary_instance,
    make_environment_spec,
    make_gcw_lowerbound_instance,
    make_necessity_instance,
    necessity_ladder_spec,
    seeded_necessity_ladder,
)
from .algo import (
    RunConfig,
    RunRecord,
    arm_elimination,
    partition_trace,
    run_cse,
    run_round_robin,
    run_sh_baseline,
    schedule_for,
)
from .budget import (
    BudgetReport,
    budget_report,
    lower_bound_gbw_gcopew,
    lower_bound_gcw,
    max_query_sets,
    round_robin_budget_z,
    stochastic_sufficiency,
    stochastic_sufficient_budget,
    sufficient_budget_table,
    sufficient_budget_z,
)
from .oracle import WinnerReport, find_gbw_gcopew, find_gcw
from .harness import ExperimentGrid, ResultRow, run_grid, run_single, summarize, wilson_interval

__version__ = "0.1.0"
