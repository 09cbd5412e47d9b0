"""Maximum-throughput MAP selection.

The aggregate throughput Theta(p) = sum_i p_i prod_{j != i}(1 - p_j/(1+b_ji))
is maximized at a vertex of [0,1]^N, so the schemes search over transmit
subsets.  The subset game with each node's utility equal to its marginal
throughput gain is an exact potential game with potential Theta: best
responses terminate at a Nash profile, and Gibbs resampling from the
logistic law on the gain samples the distribution ~ exp(Theta/tau), which
concentrates on the maximizer under logarithmic cooling.

Closest-interferer variants replace Theta by its nearest-interferer
approximation: "static_nearest" uses the topological nearest interferer
c(i); "closest_active" re-derives the nearest *active* interferer after
every accepted flip, which prices interference more faithfully.
"""

import numpy as np

from ..errors import ParameterError
from ..network import InterferenceMatrix, NeighborStructure
from . import _kernels
from .common import CoolingSchedule, OptimizerReport

BRUTEFORCE_LIMIT = 22


def _exact_subset_throughput(b: InterferenceMatrix, a: np.ndarray) -> float:
    sup = b.suppression()
    active = a.astype(bool)
    factors = np.where(active[:, None], 1.0 - sup, 1.0)
    np.fill_diagonal(factors, 1.0)
    per_node = factors.prod(axis=0)
    return float(per_node[active].sum())


def _static_ci_throughput(b, nbr, a) -> float:
    sup = b.suppression()
    idx = np.arange(b.n_nodes)
    act = a.astype(float)
    return float((act * (1.0 - act[nbr.c] * sup[nbr.c, idx])).sum())


def _active_ci_throughput(b, a) -> float:
    """Throughput with every active node charged its closest active
    interferer at unit activity."""
    active = np.nonzero(a)[0]
    if active.size == 0:
        return 0.0
    sup = b.suppression()
    total = 0.0
    for i in active:
        others = active[active != i]
        if others.size == 0:
            total += 1.0
        else:
            k = others[np.argmin(b.b[others, i])]
            total += 1.0 - sup[k, i]
    return float(total)


def _draw_sweep_randoms(rng, n_sweeps, n):
    order = np.argsort(rng.random((n_sweeps, max(n, 1))), axis=1)
    unif = rng.random((n_sweeps, max(n, 1)))
    return order.astype(np.int64), unif


def max_throughput_bruteforce(b: InterferenceMatrix) -> OptimizerReport:
    """Globally optimal transmit subset by 2^N enumeration (N <= 22).

    Ties resolve to the lexicographically smallest subset.
    """
    n = b.n_nodes
    if n > BRUTEFORCE_LIMIT:
        raise ParameterError(
            f"brute force covers N <= {BRUTEFORCE_LIMIT}; "
            f"use max_throughput_gibbs for N = {n}")
    sup = np.ascontiguousarray(b.suppression())
    best_val, best_mask = _kernels.bruteforce_best_subset(sup)
    a = np.array([(best_mask >> k) & 1 for k in range(n)], dtype=float)
    return OptimizerReport(p=a, objective_value=float(best_val),
                           iterations=1 << n, converged=True, residual=0.0,
                           config={"scheme": "MT-bruteforce"})


def max_throughput_gibbs(b: InterferenceMatrix,
                         schedule: CoolingSchedule = None,
                         seed: int = 0, n_sweeps: int = 2000,
                         record_history: bool = False) -> OptimizerReport:
    """Annealed Gibbs sampling of the aggregate-interference subset game.

    Nodes are visited in a fresh seeded random order each sweep; the report
    carries the best profile ever visited, not the final one (the
    concentration on the optimum is only asymptotic in the cooling).
    """
    schedule = schedule or CoolingSchedule()
    n = b.n_nodes
    if n == 0:
        return OptimizerReport(p=np.empty(0), objective_value=0.0,
                               iterations=0, converged=True, residual=0.0,
                               config={"scheme": "MT-AI"})
    rng = np.random.default_rng(seed)
    order, unif = _draw_sweep_randoms(rng, n_sweeps, n)
    tau = schedule.temperatures(n_sweeps)
    sup = np.ascontiguousarray(b.suppression())
    best_a, final_a, history = _kernels.gibbs_aggregate(
        sup, order[:, :n], unif[:, :n], tau, record_history)
    # with record_history the trace holds the profile bitmask after each
    # sweep (for stationary-distribution checks), not objective values
    return OptimizerReport(
        p=best_a.astype(float),
        objective_value=_exact_subset_throughput(b, best_a),
        iterations=n_sweeps, converged=True, residual=0.0,
        trace=history.astype(float) if record_history else None,
        config={"scheme": "MT-AI", "schedule": schedule.to_dict(),
                "seed": seed, "n_sweeps": n_sweeps})


def max_throughput_best_response(b: InterferenceMatrix,
                                 init=None,
                                 max_sweeps: int = 10000) -> OptimizerReport:
    """Deterministic best-response dynamics to a Nash profile.

    The returned profile may be a suboptimal local maximum of the
    throughput; the trace (one entry per node visit) is non-decreasing.
    """
    n = b.n_nodes
    if init is None:
        init = np.zeros(n)
    a0 = np.asarray(init).astype(np.uint8).reshape(n)
    sup = np.ascontiguousarray(b.suppression())
    a, trace, sweeps = _kernels.best_response_aggregate(sup, a0, max_sweeps)
    return OptimizerReport(
        p=a.astype(float), objective_value=_exact_subset_throughput(b, a),
        iterations=int(sweeps), converged=sweeps < max_sweeps, residual=0.0,
        trace=trace, config={"scheme": "MT-best-response",
                             "init": a0.tolist()})


def forced_on_mask(b: InterferenceMatrix, nbr: NeighborStructure) -> np.ndarray:
    """Nodes whose static-CI gain is positive under any opponent profile.

    Such a node must transmit: 1 - sup[c(i), i] - sum_{j in C(i)} sup[i, j]
    > 0 already assumes everyone else is on.
    """
    sup = b.suppression()
    idx = np.arange(b.n_nodes)
    worst = 1.0 - sup[nbr.c, idx]
    for i in range(b.n_nodes):
        members = nbr.C[i]
        if members.size:
            worst[i] -= sup[i, members].sum()
    return worst > 0


def max_throughput_nearest(b: InterferenceMatrix, nbr: NeighborStructure,
                           variant: str = "static_nearest",
                           schedule: CoolingSchedule = None,
                           seed: int = 0,
                           n_sweeps: int = 2000) -> OptimizerReport:
    """Closest-interferer throughput games under Gibbs dynamics.

    "static_nearest" first force-sets the always-profitable nodes on and
    sweeps only the rest; "closest_active" recomputes each node's closest
    active interferer after every accepted flip (column order of b matches
    distance order since all link distances are equal).
    """
    if b.n_nodes < 2:
        raise ParameterError("closest-interferer schemes need >= 2 nodes")
    if variant not in ("static_nearest", "closest_active"):
        raise ParameterError(f"unknown variant {variant!r}")
    schedule = schedule or CoolingSchedule()
    n = b.n_nodes
    rng = np.random.default_rng(seed)
    tau = schedule.temperatures(n_sweeps)
    sup = np.ascontiguousarray(b.suppression())
    config = {"scheme": "MT-CI" if variant == "static_nearest"
              else "MT-CI-improved", "variant": variant,
              "schedule": schedule.to_dict(), "seed": seed,
              "n_sweeps": n_sweeps}

    if variant == "closest_active":
        order, unif = _draw_sweep_randoms(rng, n_sweeps, n)
        best_a, final_a = _kernels.gibbs_nearest_active(
            sup, np.ascontiguousarray(b.b), order[:, :n], unif[:, :n], tau)
        return OptimizerReport(
            p=best_a.astype(float),
            objective_value=_active_ci_throughput(b, best_a),
            iterations=n_sweeps, converged=True, residual=0.0, config=config)

    forced = forced_on_mask(b, nbr)
    free_nodes = np.nonzero(~forced)[0].astype(np.int64)
    a_init = forced.astype(np.uint8)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(nbr.C[i])
    c_idx = np.concatenate(nbr.C).astype(np.int64)
    if free_nodes.size:
        order = np.argsort(rng.random((n_sweeps, free_nodes.size)), axis=1)
        unif = rng.random((n_sweeps, free_nodes.size))
        best_a, final_a = _kernels.gibbs_nearest_static(
            sup, nbr.c, indptr, c_idx, free_nodes, a_init,
            order.astype(np.int64), unif, tau)
    else:
        best_a = a_init
    return OptimizerReport(
        p=best_a.astype(float),
        objective_value=_static_ci_throughput(b, nbr, best_a),
        iterations=n_sweeps, converged=True, residual=0.0, config=config)
