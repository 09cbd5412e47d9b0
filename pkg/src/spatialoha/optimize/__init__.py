"""MAP-selection algorithms: proportional fair, maximum throughput,
max-min fair, each in aggregate-interference and closest-interferer form."""

from .common import CoolingSchedule, DualState, OptimizerReport, StepSchedule
from .maxmin import connected_components, max_min_global, max_min_nearest
from .propfair import (prop_fair_global, prop_fair_linear_closed_form,
                       prop_fair_nearest, prop_fair_singleton_closed_form,
                       solve_weighted_fixed_points)
from .throughput import (forced_on_mask, max_throughput_best_response,
                         max_throughput_bruteforce, max_throughput_gibbs,
                         max_throughput_nearest)

__all__ = [
    "CoolingSchedule", "DualState", "OptimizerReport", "StepSchedule",
    "connected_components", "max_min_global", "max_min_nearest",
    "prop_fair_global", "prop_fair_linear_closed_form", "prop_fair_nearest",
    "prop_fair_singleton_closed_form", "solve_weighted_fixed_points",
    "forced_on_mask", "max_throughput_best_response",
    "max_throughput_bruteforce", "max_throughput_gibbs",
    "max_throughput_nearest",
]
