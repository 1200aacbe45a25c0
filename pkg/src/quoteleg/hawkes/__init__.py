"""Multivariate Hawkes modelling: fitting, simulation, and forecasts."""
from .fit import NonMonotoneEM, fit_em_nonparametric, fit_exponential_mle, fit_sum_exponential_mle
from .forecast import (
    ArrivalForecast,
    HawkesFitConfig,
    UndefinedRatio,
    all_event_times,
    arrival_ratio,
    hawkes_decision,
    kernel_norms,
    ref_event_times,
    shift_to_horizon_frame,
)
from .model import (
    DiscretizedKernel,
    Diverged,
    EventTypeIndex,
    ExponentialKernel,
    HawkesError,
    HawkesModel,
    LABELS,
    NoEvents,
    REF_INDEX,
    SIDE_INDEX,
    SumExpKernel,
    exp_log_likelihood,
    model_from_text,
    model_log_likelihood,
    model_to_text,
    sumexp_log_likelihood,
)
from .simulate import ExplosionCap, SimResult, simulate_counts, simulate_thinning, time_rescaling_residuals

__all__ = [
    "ArrivalForecast",
    "DiscretizedKernel",
    "Diverged",
    "EventTypeIndex",
    "ExplosionCap",
    "ExponentialKernel",
    "HawkesError",
    "HawkesFitConfig",
    "HawkesModel",
    "LABELS",
    "NoEvents",
    "NonMonotoneEM",
    "REF_INDEX",
    "SIDE_INDEX",
    "SimResult",
    "SumExpKernel",
    "UndefinedRatio",
    "all_event_times",
    "arrival_ratio",
    "exp_log_likelihood",
    "fit_em_nonparametric",
    "fit_exponential_mle",
    "fit_sum_exponential_mle",
    "hawkes_decision",
    "kernel_norms",
    "model_from_text",
    "model_log_likelihood",
    "model_to_text",
    "ref_event_times",
    "shift_to_horizon_frame",
    "simulate_counts",
    "simulate_thinning",
    "sumexp_log_likelihood",
    "time_rescaling_residuals",
]
