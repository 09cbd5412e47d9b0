"""Command-line surface: generate, optimize, analyze, experiment, validate.

Every command is deterministic given its config file and seed; result files
go through the canonical writers so reruns are byte-identical.  A sidecar
``manifest.json`` (the only file carrying wall-clock timestamps) echoes the
resolved configuration, library version, and output paths; result files
reference it by name plus the config digest.

Exit codes: 0 success, 1 numerical/convergence failure, 2 usage error.
"""

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import (DegenerateGeometryError, NumericalError, ParameterError,
                     QuadratureError)
from .network import (ChannelParams, NetworkRealization, generate_realization,
                      interference_coefficients, nearest_interferer_structure)
from .optimize import (CoolingSchedule, max_min_global, max_min_nearest,
                       max_throughput_best_response, max_throughput_bruteforce,
                       max_throughput_gibbs, max_throughput_nearest,
                       prop_fair_global, prop_fair_nearest)
from .serialize import canonical_json, write_json
from .experiments import (ExperimentConfig, parse_scheme,
                          run_map_cdf_experiment, run_throughput_sweep,
                          write_map_cdf_results, write_sweep_results)
from .stochgeo import (AnalyticModel, QuadratureSettings, ShotNoiseLaw,
                       map_ccdf_curve, mean_utility)

SCHEMES = ("PF-AI", "PF-CI", "MT-AI", "MT-CI", "MT-CI-improved",
           "MM-AI", "MM-CI", "plain-aloha")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _config_digest(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def _write_manifest(out_dir, command, config, outputs, master_seed,
                    started, finished):
    manifest = {
        "command": command,
        "config": config,
        "config_sha256": _config_digest(config),
        "library_version": __version__,
        "master_seed": master_seed,
        "started_unix": started,
        "finished_unix": finished,
        "outputs": sorted(outputs),
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _manifest_ref(config) -> dict:
    return {"manifest": "manifest.json", "config_sha256": _config_digest(config)}


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load_json(args.config)
    for key in ("region_side", "link_distance"):
        if key not in cfg:
            raise ParameterError(f"generate config misses field {key!r}")
    if ("intensity" in cfg) == ("n_nodes" in cfg):
        raise ParameterError(
            "generate config needs exactly one of intensity / n_nodes")
    intensity = cfg.get("intensity",
                        cfg.get("n_nodes", 0) / cfg["region_side"] ** 2)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    started = time.time()
    real = generate_realization(intensity, cfg["region_side"],
                                cfg["link_distance"],
                                cfg.get("count_mode", "fixed"), seed)
    out_dir = args.out or "realization-out"
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "realization.json")
    doc = json.loads(real.to_json())
    doc.update(_manifest_ref(cfg))
    write_json(path, doc)
    _write_manifest(out_dir, "generate", cfg, ["realization.json"],
                    seed, started, time.time())
    print(f"wrote {path} ({real.n_nodes} bipoles)")
    return 0


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------

def _load_realization(path) -> NetworkRealization:
    with open(path) as fh:
        return NetworkRealization.from_json(fh.read())


def cmd_optimize(args) -> int:
    real = _load_realization(args.realization)
    pcfg = _load_json(args.params) if args.params else {}
    params = ChannelParams(alpha=pcfg.get("alpha", 4.0),
                           sinr_threshold=pcfg.get("sinr_threshold", 10.0),
                           fading_rate=pcfg.get("fading_rate", 1.0),
                           noise_power=pcfg.get("noise_power", 0.0))
    started = time.time()
    b = interference_coefficients(real, params)
    kind, arg = parse_scheme(args.scheme)
    needs_nbr = kind in ("PF-CI", "MT-CI", "MT-CI-improved", "MM-CI")
    nbr = nearest_interferer_structure(real) if needs_nbr else None
    seed = args.seed if args.seed is not None else 0
    schedule = CoolingSchedule(tau0=args.tau0)
    if kind == "PF-AI":
        report = prop_fair_global(b, tol=args.tol, max_iter=args.max_iter)
    elif kind == "PF-CI":
        report = prop_fair_nearest(b, nbr, tol=args.tol,
                                   max_iter=args.max_iter)
    elif kind == "MT-AI":
        if args.mt_method == "bruteforce":
            report = max_throughput_bruteforce(b)
        elif args.mt_method == "best-response":
            report = max_throughput_best_response(b)
        else:
            report = max_throughput_gibbs(b, schedule, seed=seed,
                                          n_sweeps=args.sweeps)
    elif kind == "MT-CI":
        report = max_throughput_nearest(b, nbr, "static_nearest", schedule,
                                        seed=seed, n_sweeps=args.sweeps)
    elif kind == "MT-CI-improved":
        report = max_throughput_nearest(b, nbr, "closest_active", schedule,
                                        seed=seed, n_sweeps=args.sweeps)
    elif kind == "MM-AI":
        report = max_min_global(b, tol=args.tol, max_iter=args.max_iter,
                                return_trace=args.trace is not None)
    elif kind == "MM-CI":
        report = max_min_nearest(b, nbr, tol=args.tol,
                                 max_iter=args.max_iter,
                                 return_trace=args.trace is not None)
    else:    # plain-aloha(p | best)
        from .experiments import best_common_p
        from .optimize import OptimizerReport
        from .rates import rate_report

        if arg == "best" or arg is None:
            p, _ = best_common_p(b, params, real.link_distance)
        else:
            p = float(arg)
        rr = rate_report(np.full(real.n_nodes, p), b, params,
                         real.link_distance)
        report = OptimizerReport(p=rr.p, objective_value=rr.aggregate,
                                 iterations=0, converged=True, residual=0.0,
                                 config={"scheme": args.scheme})
    out_dir = args.out or "optimize-out"
    os.makedirs(out_dir, exist_ok=True)
    doc = json.loads(report.to_json())
    config_echo = {"scheme": args.scheme, "seed": seed, "tol": args.tol,
                   "max_iter": args.max_iter, "sweeps": args.sweeps,
                   "tau0": args.tau0, "params": pcfg,
                   "realization": os.path.basename(args.realization)}
    doc.update(_manifest_ref(config_echo))
    path = os.path.join(out_dir, "report.json")
    write_json(path, doc)
    outputs = ["report.json"]
    if args.trace is not None and report.trace is not None:
        report.write_trace_csv(os.path.join(out_dir, args.trace))
        outputs.append(args.trace)
    _write_manifest(out_dir, "optimize", config_echo, outputs, seed,
                    started, time.time())
    print(f"wrote {path} (objective {report.objective_value!r}, "
          f"converged={report.converged})")
    return 0 if report.converged else 1


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _quad_settings(args) -> QuadratureSettings:
    qcfg = _load_json(args.quad) if args.quad else {}
    kwargs = {}
    for key in ("radial_rel_tol", "contour_w_max", "contour_rel_tol",
                "spatial_r_max", "phi_nodes"):
        if key in qcfg:
            kwargs[key] = qcfg[key]
    if "rho_grid" in qcfg:
        kwargs["rho_grid"] = np.asarray(qcfg["rho_grid"], dtype=float)
    return QuadratureSettings(**kwargs)


def cmd_analyze(args) -> int:
    mcfg = _load_json(args.model)
    model = AnalyticModel(intensity=mcfg["intensity"],
                          sinr_threshold=mcfg["sinr_threshold"],
                          link_distance=mcfg["link_distance"],
                          alpha=mcfg["alpha"])
    quad = _quad_settings(args)
    law = ShotNoiseLaw(model, quad, method=args.method)
    started = time.time()
    out_dir = args.out or "analyze-out"
    os.makedirs(out_dir, exist_ok=True)
    config_echo = {"model": mcfg, "mode": args.mode, "method": args.method,
                   "distance": args.distance, "reference": args.reference,
                   "format": args.format}
    try:
        if args.mode == "mean-utility":
            result = mean_utility(model, law=law)
            doc = json.loads(result.to_json())
            doc.update(_manifest_ref(config_echo))
            path = os.path.join(out_dir, "mean_utility.json")
            write_json(path, doc)
            outputs = ["mean_utility.json"]
            print(f"mean utility: {result.total!r} "
                  f"(map {result.map_term!r}, "
                  f"interference {result.interference_term!r})")
        else:
            distance = args.distance
            if args.mode == "conditional-curve":
                if distance is None:
                    raise ParameterError(
                        "conditional-curve needs --distance")
                curve = map_ccdf_curve(model, law=law,
                                       conditional_distance=distance,
                                       reference=args.reference)
            else:
                curve = map_ccdf_curve(model, law=law)
            if args.format == "json":
                path = os.path.join(out_dir, "curve.json")
                doc = {"rho": curve.rho, "ccdf": curve.ccdf,
                       "atom_at_one": curve.atom_at_one,
                       "model": model.to_dict()}
                doc.update(_manifest_ref(config_echo))
                write_json(path, doc)
                outputs = ["curve.json"]
            else:
                path = os.path.join(out_dir, "curve.csv")
                curve.write_csv(path, model=model,
                                extra_header=_manifest_ref(config_echo))
                outputs = ["curve.csv"]
            print(f"wrote {path} ({curve.rho.size} grid points, "
                  f"atom {curve.atom_at_one!r})")
    except (QuadratureError, NumericalError) as exc:
        est = getattr(exc, "error_estimate", None)
        print(f"numerical failure: {exc}"
              + (f" (error estimate {est!r})" if est is not None else ""),
              file=sys.stderr)
        return 1
    _write_manifest(out_dir, "analyze", config_echo, outputs, 0,
                    started, time.time())
    return 0


# ---------------------------------------------------------------------------
# experiment
# ---------------------------------------------------------------------------

def cmd_experiment(args) -> int:
    cfg = _load_json(args.config)
    kind = cfg.pop("kind", "map-cdf")
    n_values = cfg.pop("n_values", None)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(cfg) - known
    if unknown:
        raise ParameterError(f"unknown experiment config fields {sorted(unknown)}")
    config = ExperimentConfig(**cfg)
    out_dir = args.out or "experiment-out"
    started = time.time()
    if kind == "map-cdf":
        result = run_map_cdf_experiment(config, threads=args.threads)
        write_map_cdf_results(out_dir, config, result)
        outputs = ["config.json", f"cdf_{result.scheme}.csv",
                   "failures.csv", "summary.json"]
        n_bad = len(result.failed_realizations)
        print(f"{result.scheme}: {result.n_samples} window samples, "
              f"{n_bad} failed realizations"
              + (f", Kolmogorov {result.kolmogorov!r}"
                 if result.kolmogorov is not None else ""))
        ok = n_bad <= 0.1 * config.n_realizations
    elif kind == "throughput-sweep":
        if not n_values:
            raise ParameterError("throughput-sweep needs n_values")
        result = run_throughput_sweep(config, n_values, threads=args.threads)
        write_sweep_results(out_dir, config, result)
        outputs = ["config.json", "throughput_sweep.csv", "failures.csv",
                   "summary.json"]
        print(f"{'scheme':>20} " + " ".join(f"N={n:>4}" for n in
                                            result.n_values))
        for s in result.schemes:
            cells = " ".join(f"{v:6.3f}" for v in result.mean_aggregate[s])
            print(f"{s:>20} {cells}")
        n_bad = sum(len(v) for v in result.failed.values())
        total = len(result.schemes) * len(result.n_values) \
            * config.n_realizations
        ok = n_bad <= 0.1 * total
    else:
        raise ParameterError(f"unknown experiment kind {kind!r}")
    _write_manifest(out_dir, "experiment", {"kind": kind, **cfg},
                    outputs, config.master_seed, started, time.time())
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------

def cmd_validate(args) -> int:
    from . import validation

    if args.list:
        for name, desc in validation.list_presets():
            print(f"{name:>24}  {desc}")
        return 0
    if args.preset is None:
        print("validate: name a preset or pass --list", file=sys.stderr)
        return 2
    if args.preset not in validation.PRESETS:
        print(f"unknown preset {args.preset!r}; --list shows the choices",
              file=sys.stderr)
        return 2
    result = validation.run_preset(args.preset, threads=args.threads)
    print(result.details)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_json(os.path.join(args.out, f"{args.preset}.json"), {
            "preset": result.name, "passed": result.passed,
            "metrics": result.metrics,
        })
    print(f"{result.name}: {'PASS' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatialoha",
        description="Adaptive spatial Aloha MAP selection and "
                    "stochastic-geometry analytics")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a bipole topology")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(fn=cmd_generate)

    o = sub.add_parser("optimize", help="run a MAP-selection scheme")
    o.add_argument("--realization", required=True)
    o.add_argument("--scheme", required=True)
    o.add_argument("--params", default=None)
    o.add_argument("--seed", type=int, default=None)
    o.add_argument("--tol", type=float, default=1e-12)
    o.add_argument("--max-iter", type=int, default=8000)
    o.add_argument("--sweeps", type=int, default=2000)
    o.add_argument("--tau0", type=float, default=1.0)
    o.add_argument("--mt-method", choices=("gibbs", "bruteforce",
                                           "best-response"), default="gibbs")
    o.add_argument("--trace", default=None,
                   help="also write the per-iteration trace CSV")
    o.add_argument("--out", default=None)
    o.set_defaults(fn=cmd_optimize)

    a = sub.add_parser("analyze", help="evaluate the analytic pipeline")
    a.add_argument("--model", required=True)
    a.add_argument("--mode", choices=("curve", "conditional-curve",
                                      "mean-utility"), default="curve")
    a.add_argument("--quad", default=None)
    a.add_argument("--method", choices=("auto", "generic"), default="auto")
    a.add_argument("--distance", type=float, default=None)
    a.add_argument("--reference", choices=("transmitter", "receiver"),
                   default="transmitter")
    a.add_argument("--format", choices=("csv", "json"), default="csv")
    a.add_argument("--out", default=None)
    a.set_defaults(fn=cmd_analyze)

    e = sub.add_parser("experiment", help="run a Monte-Carlo study")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int, default=None)
    e.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    e.add_argument("--out", default=None)
    e.set_defaults(fn=cmd_experiment)

    v = sub.add_parser("validate", help="run an acceptance preset")
    v.add_argument("--preset", default=None)
    v.add_argument("--list", action="store_true")
    v.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    v.add_argument("--out", default=None)
    v.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParameterError, DegenerateGeometryError, FileNotFoundError,
            KeyError, json.JSONDecodeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, QuadratureError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
