"""Monte-Carlo harnesses: MAP-distribution validation and throughput sweeps.

Realizations are independent work units.  Realization k always derives its
seed as a pure function of (master_seed, k), so partial or parallel reruns
reproduce exactly and aggregate outputs are independent of scheduling.
Samples are collected only from transmitters inside the centered
observation window (default half the region side); boundary nodes still
contribute interference.  Every scheme in a sweep is scored with the same
exact success probabilities, never with its own interference approximation.
"""

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NumericalError, ParameterError, QuadratureError
from .network import (ChannelParams, generate_realization,
                      interference_coefficients, nearest_interferer_structure)
from .optimize import (CoolingSchedule, max_min_global, max_min_nearest,
                       max_throughput_gibbs, max_throughput_nearest,
                       prop_fair_global, prop_fair_nearest)
from .rates import log_success_probability, rate_report
from .serialize import write_csv, write_json
from .stochgeo import (AnalyticModel, CdfCurve, QuadratureSettings,
                       ShotNoiseLaw, default_rho_grid, map_ccdf_curve)

SCHEME_NAMES = ("PF-AI", "PF-CI", "MT-AI", "MT-CI", "MT-CI-improved",
                "MM-AI", "MM-CI")


def child_seed(master_seed: int, *key) -> int:
    """Deterministic child seed from (master_seed, key...)."""
    parts = [int(master_seed)]
    for item in key:
        if isinstance(item, str):
            parts.extend(ord(ch) for ch in item)
        else:
            parts.append(int(item))
    ss = np.random.SeedSequence(parts)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of a Monte-Carlo study.

    Exactly one of ``intensity`` and ``n_nodes`` is set; the other follows
    from intensity = N / L**2.
    """

    region_side: float
    intensity: Optional[float] = None
    n_nodes: Optional[int] = None
    link_distance: float = 1.0
    alpha: float = 4.0
    sinr_threshold: float = 10.0
    fading_rate: float = 1.0
    schemes: tuple = ("PF-AI",)
    n_realizations: int = 1000
    master_seed: int = 0
    window_fraction: float = 0.5
    count_mode: str = "fixed"
    gibbs_sweeps: int = 2000
    gibbs_tau0: float = 1.0
    pf_tol: float = 1e-12
    mm_tol: float = 1e-5
    mm_max_iter: int = 8000
    rho_grid: tuple = ()

    def __post_init__(self):
        if (self.intensity is None) == (self.n_nodes is None):
            raise ParameterError("set exactly one of intensity / n_nodes")
        if self.n_realizations < 1:
            raise ParameterError("n_realizations must be >= 1")
        if not 0 < self.window_fraction <= 1:
            raise ParameterError("window_fraction must be in (0, 1]")
        object.__setattr__(self, "schemes", tuple(self.schemes))
        grid = tuple(float(g) for g in self.rho_grid) or \
            tuple(default_rho_grid())
        object.__setattr__(self, "rho_grid", grid)
        for name in self.schemes:
            parse_scheme(name)

    @property
    def effective_intensity(self) -> float:
        if self.intensity is not None:
            return self.intensity
        return self.n_nodes / self.region_side ** 2

    @property
    def channel_params(self) -> ChannelParams:
        return ChannelParams(alpha=self.alpha,
                             sinr_threshold=self.sinr_threshold,
                             fading_rate=self.fading_rate)

    def analytic_model(self) -> AnalyticModel:
        return AnalyticModel(intensity=self.effective_intensity,
                             sinr_threshold=self.sinr_threshold,
                             link_distance=self.link_distance,
                             alpha=self.alpha)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def parse_scheme(name: str):
    """Split a scheme spec into (kind, parameter).

    Plain Aloha takes its common MAP in parentheses: "plain-aloha(0.4)" or
    "plain-aloha(best)" for the per-instance best common MAP.
    """
    if name in SCHEME_NAMES:
        return name, None
    if name.startswith("plain-aloha(") and name.endswith(")"):
        arg = name[len("plain-aloha("):-1]
        if arg == "best":
            return "plain-aloha", "best"
        p = float(arg)
        if not 0 <= p <= 1:
            raise ParameterError(f"plain-aloha MAP {p} outside [0, 1]")
        return "plain-aloha", p
    raise ParameterError(
        f"unknown scheme {name!r}; expected one of {SCHEME_NAMES} "
        "or plain-aloha(<p>|best)")


def solve_scheme(name, realization, b, nbr, config: ExperimentConfig,
                 seed: int):
    """Run one scheme on a prepared instance; returns (p, converged)."""
    kind, arg = parse_scheme(name)
    if kind == "PF-AI":
        rep = prop_fair_global(b, tol=config.pf_tol)
        return rep.p, rep.converged
    if kind == "PF-CI":
        rep = prop_fair_nearest(b, nbr, tol=config.pf_tol)
        return rep.p, rep.converged
    schedule = CoolingSchedule(tau0=config.gibbs_tau0)
    if kind == "MT-AI":
        rep = max_throughput_gibbs(b, schedule, seed=seed,
                                   n_sweeps=config.gibbs_sweeps)
        return rep.p, rep.converged
    if kind == "MT-CI":
        rep = max_throughput_nearest(b, nbr, "static_nearest", schedule,
                                     seed=seed, n_sweeps=config.gibbs_sweeps)
        return rep.p, rep.converged
    if kind == "MT-CI-improved":
        rep = max_throughput_nearest(b, nbr, "closest_active", schedule,
                                     seed=seed, n_sweeps=config.gibbs_sweeps)
        return rep.p, rep.converged
    if kind == "MM-AI":
        rep = max_min_global(b, tol=config.mm_tol,
                             max_iter=config.mm_max_iter)
        return rep.p, rep.converged
    if kind == "MM-CI":
        rep = max_min_nearest(b, nbr, tol=config.mm_tol,
                              max_iter=config.mm_max_iter)
        return rep.p, rep.converged
    # plain-aloha
    if arg == "best":
        p_common, _ = best_common_p(
            b, config.channel_params, config.link_distance,
            window_mask=realization.window_mask(config.window_fraction))
    else:
        p_common = arg
    return np.full(b.n_nodes, p_common), True


def _needs_neighbors(schemes) -> bool:
    return any(parse_scheme(s)[0] in
               ("PF-CI", "MT-CI", "MT-CI-improved", "MM-CI")
               for s in schemes)


def plain_aloha_baseline(b, p_common, params: ChannelParams,
                         link_distance=1.0):
    """Exact rate report when every node uses the same MAP."""
    return rate_report(np.full(b.n_nodes, float(p_common)), b, params,
                       link_distance)


def best_common_p(b, params: ChannelParams, link_distance=1.0,
                  grid=None, window_mask=None):
    """Best common MAP by grid search on the exact windowed throughput."""
    if grid is None:
        grid = np.arange(1, 101) / 100.0
    if window_mask is None:
        window_mask = np.ones(b.n_nodes, dtype=bool)
    sup = b.suppression()
    noise = params.fading_rate * params.noise_power * params.sinr_threshold \
        * np.asarray(link_distance) ** params.alpha
    best_p, best_val = grid[0], -np.inf
    for p in grid:
        with np.errstate(divide="ignore"):
            log_q = np.log(1.0 - p * sup).sum(axis=0) - noise
        val = float((p * np.exp(log_q))[window_mask].sum())
        if val > best_val:
            best_val, best_p = val, float(p)
    return best_p, best_val


def empirical_cdf(samples, grid) -> CdfCurve:
    """Right-continuous empirical CCDF P(sample > rho) on a grid."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ParameterError("empirical_cdf needs at least one sample")
    grid = np.asarray(grid, dtype=float)
    s = np.sort(samples)
    n = s.size
    ccdf = (n - np.searchsorted(s, grid, side="right")) / n
    atom = float((samples >= 1.0 - 1e-12).mean())
    return CdfCurve(rho=grid.copy(), ccdf=ccdf, atom_at_one=atom)


def kolmogorov_distance(a: CdfCurve, b: CdfCurve) -> float:
    """Max absolute ccdf difference over a shared grid, atoms included."""
    if a.rho.shape != b.rho.shape or not np.array_equal(a.rho, b.rho):
        raise ParameterError("curves are on different grids")
    return float(max(np.abs(a.ccdf - b.ccdf).max(),
                     abs(a.atom_at_one - b.atom_at_one)))


# ---------------------------------------------------------------------------
# MAP-distribution experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MapCdfResult:
    scheme: str
    empirical: CdfCurve
    analytic: Optional[CdfCurve]
    kolmogorov: Optional[float]
    n_samples: int
    n_realizations: int
    failed_realizations: tuple
    full_access_fraction: float      # share of window nodes with p = 1

    def summary(self) -> dict:
        out = {
            "scheme": self.scheme,
            "n_samples": self.n_samples,
            "n_realizations": self.n_realizations,
            "n_failed": len(self.failed_realizations),
            "full_access_fraction": self.full_access_fraction,
        }
        if self.kolmogorov is not None:
            out["kolmogorov_distance"] = self.kolmogorov
        return out


def _map_cdf_worker(task):
    config, k = task
    params = config.channel_params
    seed = child_seed(config.master_seed, "realization", k)
    real = generate_realization(config.effective_intensity,
                                config.region_side, config.link_distance,
                                config.count_mode, seed)
    b = interference_coefficients(real, params)
    nbr = nearest_interferer_structure(real) \
        if _needs_neighbors(config.schemes) else None
    p, converged = solve_scheme(config.schemes[0], real, b, nbr, config,
                                child_seed(config.master_seed, "scheme", k))
    if not converged:
        return k, None
    return k, p[real.window_mask(config.window_fraction)]


def _run_tasks(worker, tasks, threads):
    if threads <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


def run_map_cdf_experiment(config: ExperimentConfig, threads: int = 1,
                           law: Optional[ShotNoiseLaw] = None) -> MapCdfResult:
    """Empirical MAP ccdf of inner-window nodes (PF schemes), paired with
    the analytic curve and Kolmogorov distance when the scheme is PF-AI."""
    if len(config.schemes) != 1 or \
            parse_scheme(config.schemes[0])[0] not in ("PF-AI", "PF-CI"):
        raise ParameterError(
            "run_map_cdf_experiment wants exactly one PF scheme")
    scheme = config.schemes[0]
    results = _run_tasks(_map_cdf_worker,
                         [(config, k) for k in range(config.n_realizations)],
                         threads)
    results.sort(key=lambda kv: kv[0])
    failed = tuple(k for k, v in results if v is None)
    chunks = [v for _, v in results if v is not None and v.size]
    if not chunks:
        raise ParameterError("all realizations failed or were empty")
    samples = np.concatenate(chunks)
    grid = np.array(config.rho_grid)
    emp = empirical_cdf(samples, grid)
    analytic = ks = None
    if scheme == "PF-AI":
        law = law or ShotNoiseLaw(config.analytic_model(),
                                  QuadratureSettings(rho_grid=grid))
        analytic = map_ccdf_curve(config.analytic_model(), law=law)
        ks = kolmogorov_distance(emp, analytic)
    return MapCdfResult(
        scheme=scheme, empirical=emp, analytic=analytic, kolmogorov=ks,
        n_samples=int(samples.size), n_realizations=config.n_realizations,
        failed_realizations=failed,
        full_access_fraction=float((samples >= 1.0 - 1e-12).mean()))


# ---------------------------------------------------------------------------
# Conditional MAP distribution (pairs binned by transmitter distance)
# ---------------------------------------------------------------------------

def _conditional_worker(task):
    config, k, distance, halfwidth = task
    params = config.channel_params
    seed = child_seed(config.master_seed, "realization", k)
    real = generate_realization(config.effective_intensity,
                                config.region_side, config.link_distance,
                                config.count_mode, seed)
    b = interference_coefficients(real, params)
    p, converged = solve_scheme("PF-AI", real, b, None, config,
                                child_seed(config.master_seed, "scheme", k))
    if not converged:
        return k, None
    win = np.nonzero(real.window_mask(config.window_fraction))[0]
    if win.size < 2:
        return k, np.empty(0)
    diff = real.tx[win, None, :] - real.tx[None, win, :]
    dist = np.sqrt((diff ** 2).sum(axis=2))
    sel = (dist >= distance - halfwidth) & (dist <= distance + halfwidth)
    np.fill_diagonal(sel, False)
    partners = np.nonzero(sel)[1]
    return k, p[win[partners]]


def run_conditional_map_cdf_experiment(config: ExperimentConfig, distance,
                                       halfwidth=None, threads: int = 1,
                                       law: Optional[ShotNoiseLaw] = None,
                                       rho_grid=None):
    """Empirical MAP ccdf of nodes at a given transmitter-transmitter
    distance from a window node (both endpoints window-filtered), paired
    with the analytic two-point law."""
    if halfwidth is None:
        halfwidth = 0.15 * distance
    results = _run_tasks(
        _conditional_worker,
        [(config, k, distance, halfwidth)
         for k in range(config.n_realizations)], threads)
    results.sort(key=lambda kv: kv[0])
    failed = tuple(k for k, v in results if v is None)
    chunks = [v for _, v in results if v is not None and v.size]
    if not chunks:
        raise ParameterError("no conditional samples collected")
    samples = np.concatenate(chunks)
    grid = np.asarray(rho_grid if rho_grid is not None
                      else np.array(config.rho_grid))
    emp = empirical_cdf(samples, grid)
    law = law or ShotNoiseLaw(config.analytic_model(), QuadratureSettings())
    vals = np.array([law.ccdf_given_transmitter_distance(r, distance)
                     for r in grid])
    atom = law.ccdf_given_transmitter_distance(1.0, distance)
    analytic = CdfCurve(rho=grid.copy(), ccdf=vals, atom_at_one=atom)
    ks = kolmogorov_distance(emp, analytic)
    return MapCdfResult(
        scheme="PF-AI", empirical=emp, analytic=analytic, kolmogorov=ks,
        n_samples=int(samples.size), n_realizations=config.n_realizations,
        failed_realizations=failed,
        full_access_fraction=float((samples >= 1.0 - 1e-12).mean()))


# ---------------------------------------------------------------------------
# Throughput sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThroughputSweepResult:
    n_values: tuple
    schemes: tuple
    mean_aggregate: dict        # scheme -> array over n_values
    mean_log_utility: dict
    per_realization: dict       # (scheme, N) -> array of aggregates
    failed: dict                # (scheme, N) -> tuple of realization ids

    def rows(self):
        out = []
        for scheme in self.schemes:
            for ni, n in enumerate(self.n_values):
                out.append((scheme, n,
                            float(self.mean_aggregate[scheme][ni]),
                            float(self.mean_log_utility[scheme][ni]),
                            len(self.failed.get((scheme, n), ()))))
        return out


def _sweep_worker(task):
    config, n, k = task
    cfg = dataclasses.replace(config, intensity=None, n_nodes=n)
    params = cfg.channel_params
    seed = child_seed(cfg.master_seed, "realization", n, k)
    real = generate_realization(cfg.effective_intensity, cfg.region_side,
                                cfg.link_distance, cfg.count_mode, seed)
    b = interference_coefficients(real, params)
    nbr = nearest_interferer_structure(real) \
        if (_needs_neighbors(cfg.schemes) and real.n_nodes >= 2) else None
    mask = real.window_mask(cfg.window_fraction)
    out = {}
    for si, scheme in enumerate(cfg.schemes):
        try:
            p, converged = solve_scheme(
                scheme, real, b, nbr, cfg,
                child_seed(cfg.master_seed, "scheme", n, k, si))
        except (ParameterError, NumericalError, QuadratureError):
            converged = False
        if not converged:
            out[scheme] = None
            continue
        # exact scoring with aggregate interference, window nodes only
        log_q = log_success_probability(p, b, params, cfg.link_distance)
        rate = p * np.exp(log_q)
        with np.errstate(divide="ignore"):
            log_util = np.where(p > 0, np.log(np.maximum(p, 1e-300)) + log_q,
                                -np.inf)
        out[scheme] = (float(rate[mask].sum()),
                       float(log_util[mask].sum()))
    return (n, k), out


def run_throughput_sweep(config: ExperimentConfig, n_values,
                         threads: int = 1) -> ThroughputSweepResult:
    """Mean windowed aggregate throughput and log utility per scheme and N.

    Every scheme's MAP vector is scored with the exact product-form success
    probabilities over the full realization, regardless of the interference
    model the scheme itself assumed.
    """
    n_values = tuple(int(n) for n in n_values)
    tasks = [(config, n, k) for n in n_values
             for k in range(config.n_realizations)]
    results = dict()
    for key, val in _run_tasks(_sweep_worker, tasks, threads):
        results[key] = val
    mean_agg = {s: np.zeros(len(n_values)) for s in config.schemes}
    mean_log = {s: np.zeros(len(n_values)) for s in config.schemes}
    per_real = {}
    failed = {}
    for ni, n in enumerate(n_values):
        for scheme in config.schemes:
            aggs, logs, bad = [], [], []
            for k in range(config.n_realizations):
                cell = results[(n, k)].get(scheme)
                if cell is None:
                    bad.append(k)
                else:
                    aggs.append(cell[0])
                    logs.append(cell[1])
            if not aggs:
                raise ParameterError(
                    f"every realization failed for {scheme} at N={n}")
            mean_agg[scheme][ni] = float(np.mean(aggs))
            mean_log[scheme][ni] = float(np.mean(logs))
            per_real[(scheme, n)] = np.array(aggs)
            failed[(scheme, n)] = tuple(bad)
    return ThroughputSweepResult(
        n_values=n_values, schemes=config.schemes,
        mean_aggregate=mean_agg, mean_log_utility=mean_log,
        per_realization=per_real, failed=failed)


# ---------------------------------------------------------------------------
# Results directory
# ---------------------------------------------------------------------------

def write_map_cdf_results(out_dir, config: ExperimentConfig,
                          result: MapCdfResult):
    """Write config.json, cdf_<scheme>.csv, failures.csv, summary.json."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, "config.json"), config.to_dict())
    emp = result.empirical
    rows = list(zip(emp.rho, emp.ccdf)) if result.analytic is None else \
        list(zip(emp.rho, emp.ccdf, result.analytic.ccdf))
    header = ["rho", "empirical_ccdf"] if result.analytic is None else \
        ["rho", "empirical_ccdf", "analytic_ccdf"]
    write_csv(os.path.join(out_dir, f"cdf_{result.scheme}.csv"),
              header, rows,
              preamble=[f"atom_at_one_empirical={emp.atom_at_one!r}"]
              + ([f"atom_at_one_analytic={result.analytic.atom_at_one!r}"]
                 if result.analytic else []))
    write_csv(os.path.join(out_dir, "failures.csv"),
              ["realization"], [(k,) for k in result.failed_realizations])
    write_json(os.path.join(out_dir, "summary.json"), result.summary())


def write_sweep_results(out_dir, config: ExperimentConfig,
                        result: ThroughputSweepResult):
    import os

    os.makedirs(out_dir, exist_ok=True)
    write_json(os.path.join(out_dir, "config.json"), config.to_dict())
    write_csv(os.path.join(out_dir, "throughput_sweep.csv"),
              ["scheme", "n_nodes", "mean_aggregate", "mean_log_utility",
               "n_failed"], result.rows())
    fail_rows = [(s, n, k) for (s, n), ks in sorted(result.failed.items())
                 for k in ks]
    write_csv(os.path.join(out_dir, "failures.csv"),
              ["scheme", "n_nodes", "realization"], fail_rows)
    summary = {
        "schemes": list(result.schemes),
        "n_values": list(result.n_values),
        "mean_aggregate": {s: list(map(float, result.mean_aggregate[s]))
                           for s in result.schemes},
        "mean_log_utility": {s: list(map(float, result.mean_log_utility[s]))
                             for s in result.schemes},
        "n_failed": {f"{s}@{n}": len(ks)
                     for (s, n), ks in sorted(result.failed.items())},
    }
    write_json(os.path.join(out_dir, "summary.json"), summary)
