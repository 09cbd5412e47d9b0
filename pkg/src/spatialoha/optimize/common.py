"""Shared types for the MAP-selection algorithms."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ParameterError
from ..serialize import canonical_json, write_csv


@dataclass(frozen=True)
class CoolingSchedule:
    """Temperature schedule for the Gibbs samplers.

    kind "log_cooling" gives tau(t) = tau0 / log(1 + t) over sweep index t
    (infinite at t = 0, i.e. the first sweep resamples uniformly); kind
    "fixed_temperature" holds tau = tau0 (tau0 = inf keeps every node at a
    fair coin forever).
    """

    kind: str = "log_cooling"
    tau0: float = 1.0

    def __post_init__(self):
        if self.kind not in ("log_cooling", "fixed_temperature"):
            raise ParameterError(f"unknown cooling kind {self.kind!r}")
        if not self.tau0 > 0:
            raise ParameterError("tau0 must be > 0")

    def temperatures(self, n_sweeps: int) -> np.ndarray:
        t = np.arange(n_sweeps, dtype=float)
        if self.kind == "fixed_temperature":
            return np.full(n_sweeps, self.tau0)
        with np.errstate(divide="ignore"):
            return self.tau0 / np.log1p(t)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "tau0": self.tau0}


@dataclass(frozen=True)
class StepSchedule:
    """Dual step-size rule beta(n) for the max-min gradient projection."""

    kind: str = "inv_sqrt"       # beta0 / sqrt(n)
    beta0: float = 0.1

    def __post_init__(self):
        if self.kind not in ("inv_sqrt", "constant"):
            raise ParameterError(f"unknown step kind {self.kind!r}")
        if not self.beta0 > 0:
            raise ParameterError("beta0 must be > 0")

    def __call__(self, n: int) -> float:
        if self.kind == "constant":
            return self.beta0
        return self.beta0 / np.sqrt(n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "beta0": self.beta0}


@dataclass(frozen=True)
class DualState:
    """Multipliers and log-rate variables of a max-min solve."""

    lam: np.ndarray                       # per-node multipliers, >= 0
    theta: np.ndarray                     # scalar (shape ()) or per-node
    mu: Optional[dict] = None             # (i, j) -> multiplier, >= 0
    step_schedule: Optional[StepSchedule] = None
    log_rates: Optional[np.ndarray] = None  # achieved log rates at returned p

    def to_dict(self) -> dict:
        d = {"lambda": self.lam, "theta": self.theta}
        if self.mu is not None:
            d["mu"] = {f"{i}->{j}": v for (i, j), v in sorted(self.mu.items())}
        if self.step_schedule is not None:
            d["step_schedule"] = self.step_schedule.to_dict()
        if self.log_rates is not None:
            d["log_rates"] = self.log_rates
        return d


@dataclass(frozen=True)
class OptimizerReport:
    """Outcome of one MAP-selection run.

    ``p`` is the MAP vector (binary for the throughput schemes),
    ``objective_value`` the scheme's own objective at ``p``, and ``residual``
    a scheme-specific accuracy measure; ``converged`` implies the residual is
    within the configured tolerance.  ``config`` echoes the full run
    configuration so a serialized report reproduces the run.
    """

    p: np.ndarray
    objective_value: float
    iterations: int
    converged: bool
    residual: float
    trace: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)
    dual: Optional[DualState] = None

    def to_dict(self) -> dict:
        d = {
            "p": self.p,
            "objective_value": self.objective_value,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
            "config": self.config,
        }
        if self.trace is not None:
            d["trace"] = self.trace
        if self.dual is not None:
            d["dual"] = self.dual.to_dict()
        return d

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def write_trace_csv(self, path):
        if self.trace is None:
            raise ParameterError("report has no trace")
        write_csv(path, ["iteration", "objective"],
                  [(k, float(v)) for k, v in enumerate(self.trace)])
