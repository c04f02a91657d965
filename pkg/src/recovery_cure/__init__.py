"""Promotion-time cure model for the recovery of non-performing loans."""
from .distributions import (
    PoissonParam,
    WeibullParams,
    poisson_pmf,
    poisson_sample,
    weibull_cdf,
    weibull_pdf,
    weibull_quantile,
    weibull_sample,
)
from .errors import (
    DomainError,
    InitializationError,
    ParseError,
    PreconditionError,
    RecoveryCureError,
    SegmentationError,
    UnidentifiableError,
)
from .estimation import (
    FitOptions,
    FitResult,
    Optimizer,
    StratifiedFitResult,
    fit_mle,
    fit_stratified,
    initial_params,
    risk_ranking,
    standard_errors,
)
from .km import StepFunction, kaplan_meier, sup_distance
from .portfolio import (
    ContractRecord,
    PartitionSpec,
    Portfolio,
    SummaryRow,
    load_portfolio,
    segment,
    summarize,
    write_portfolio,
)
from .promotion import (
    ModelParams,
    Observation,
    SurvivalData,
    cure_fraction,
    log_likelihood,
    log_likelihood_gradient,
    population_density,
    population_hazard,
    population_survival,
)
from .simulation import SimulationSpec, simulate_contract, simulate_observations, simulate_portfolio

__version__ = "0.1.0"
