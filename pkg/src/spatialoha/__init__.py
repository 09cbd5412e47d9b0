"""Adaptive spatial Aloha: MAP optimization and stochastic-geometry analytics.

The library covers three layers:

* topology and exact rate formulas (``network``, ``rates``),
* the MAP-selection schemes — proportional fair, maximum throughput, and
  max-min fair, each against aggregate interference or the closest
  interferer only (``optimize``),
* the analytic law of the proportional-fair MAP under a Poisson field and
  the mean utility derived from it, cross-validated against Monte-Carlo
  experiments (``stochgeo``, ``experiments``).
"""

from .errors import (DegenerateGeometryError, NumericalError, ParameterError,
                     QuadratureError)
from .network import (Bipole, ChannelParams, InterferenceMatrix,
                      NeighborStructure, NetworkRealization,
                      generate_realization, interference_coefficients,
                      nearest_interferer_structure)
from .optimize import (CoolingSchedule, DualState, OptimizerReport,
                       StepSchedule, max_min_global, max_min_nearest,
                       max_throughput_best_response, max_throughput_bruteforce,
                       max_throughput_gibbs, max_throughput_nearest,
                       prop_fair_global, prop_fair_linear_closed_form,
                       prop_fair_nearest, prop_fair_singleton_closed_form)
from .rates import (RateReport, SlotSimulation, nearest_success_probability,
                    rate_report, simulate_slots, success_probability)
from .stochgeo import (AnalyticModel, CdfCurve, DiscreteMeasure, MeanUtility,
                       QuadratureSettings, ShotNoiseLaw, conditional_map_ccdf,
                       laplace_shotnoise, laplace_shotnoise_alpha4, map_ccdf,
                       map_ccdf_curve, map_pdf_on_grid, mean_utility)

__version__ = "0.1.0"
