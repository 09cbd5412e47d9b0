"""Max-min fair MAP selection by dual gradient projection.

The max-min problem  max theta  s.t.  theta <= log rate_i  is solved through
its convex reformulation: multipliers lambda_i ascend the constraint
violations with diminishing steps beta(n), while (p, theta) minimize the
Lagrangian at the current multipliers:

    p_i = lambda_i / sum_j lambda_j/(1 + b_ij - p_i)   (or 1 / 0 at the box),
    theta = -sum_i lambda_i.

The closest-interferer variant adds per-node theta_i tied together by
edge multipliers mu_ij over the nearest-interferer adjacency; on a
disconnected adjacency the system decouples into independent per-component
problems, which the synchronous updates preserve exactly.

Dual subgradient iterates jitter near the optimum, so the solvers return
the visited iterate with the largest min rate (the objective), with
convergence flags taken from the final iterate.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ParameterError
from ..network import InterferenceMatrix, NeighborStructure
from .common import DualState, OptimizerReport, StepSchedule
from .propfair import solve_weighted_fixed_points

_P_FLOOR = 1e-12


def _weighted_p_update(lam, coeffs, weights_src, tol):
    """Lagrangian p-minimization given multipliers.

    ``coeffs[m, k]`` holds 1 + b terms (inf padding); ``weights_src[m, k]``
    indexes which lambda weights each term (entries are node indices, -1 for
    padding).  Nodes with lambda = 0 facing any positive weight get p = 0
    (the limit of the update); nodes whose weighted spread is below their own
    lambda get p = 1.
    """
    m = lam.shape[0]
    w = np.where(weights_src >= 0, lam[np.maximum(weights_src, 0)], 0.0)
    with np.errstate(invalid="ignore"):
        spread = (w / (coeffs - 1.0)).sum(axis=1)
    p = np.ones(m)
    zero_lam = lam <= 0
    p[zero_lam & (spread > 0)] = 0.0
    interior = (~zero_lam) & (spread > lam)
    if interior.any():
        sol, _, _ = solve_weighted_fixed_points(
            lam[interior], coeffs[interior], w[interior],
            tol=tol, max_iter=200, start=1.0)
        p[interior] = sol
    return p


@dataclass
class _Best:
    min_rate: float = -np.inf
    p: Optional[np.ndarray] = None
    lam: Optional[np.ndarray] = None
    theta: Optional[np.ndarray] = None


def max_min_global(b: InterferenceMatrix, step_schedule: StepSchedule = None,
                   tol: float = 1e-6, max_iter: int = 4000,
                   return_trace: bool = False) -> OptimizerReport:
    """Aggregate-interference max-min fair MAPs.

    On a fully coupled instance the optimum equalizes all rates
    (lexicographic max-min on a strongly connected link graph).
    """
    n = b.n_nodes
    if n < 2:
        raise ParameterError("max-min scheme needs >= 2 nodes")
    step_schedule = step_schedule or StepSchedule()
    inner_tol = tol / 10.0
    sup = b.suppression()
    coeffs = 1.0 + b.b
    weights_src = np.tile(np.arange(n), (n, 1))
    weights_src[np.arange(n), np.arange(n)] = -1   # no self term

    lam = np.full(n, 1.0 / n)
    best = _Best()
    trace = []
    movement = np.inf
    feas = np.inf
    for it in range(1, max_iter + 1):
        p = _weighted_p_update(lam, coeffs, weights_src, inner_tol)
        theta = -lam.sum()
        with np.errstate(divide="ignore"):
            log_q = np.log(1.0 - p[:, None] * sup).sum(axis=0)
        rate = p * np.exp(log_q)
        log_rate = np.log(np.maximum(p, _P_FLOOR)) + log_q
        viol = theta - log_rate
        beta = step_schedule(it)
        lam_new = np.maximum(lam + beta * viol, 0.0)
        movement = float(np.abs(lam_new - lam).max())
        feas = float(viol.max())
        min_rate = float(rate.min())
        if return_trace:
            trace.append(min_rate)
        if min_rate > best.min_rate and feas <= max(tol, 1e-9) * 10:
            best = _Best(min_rate, p.copy(), lam.copy(), np.array(theta))
        lam = lam_new
        if movement <= tol and feas <= tol:
            break
    if best.p is None:     # never near-feasible; fall back to last iterate
        best = _Best(float(rate.min()), p, lam, np.array(theta))
    with np.errstate(divide="ignore"):
        log_q = np.log(1.0 - best.p[:, None] * sup).sum(axis=0)
        log_rates = np.log(np.maximum(best.p, _P_FLOOR)) + log_q
    converged = movement <= tol and feas <= tol
    dual = DualState(lam=best.lam, theta=best.theta,
                     step_schedule=step_schedule, log_rates=log_rates)
    return OptimizerReport(
        p=best.p, objective_value=best.min_rate, iterations=it,
        converged=converged, residual=float(max(movement, feas, 0.0)),
        trace=np.array(trace) if return_trace else None,
        config={"scheme": "MM-AI", "tol": tol, "max_iter": max_iter,
                "step_schedule": step_schedule.to_dict()},
        dual=dual)


def _undirected_adjacency(nbr: NeighborStructure):
    n = nbr.n_nodes
    adj = [set() for _ in range(n)]
    for i in range(n):
        adj[i].add(int(nbr.c[i]))
        adj[int(nbr.c[i])].add(i)
        for j in nbr.C[i]:
            adj[i].add(int(j))
            adj[int(j)].add(i)
    return [sorted(s) for s in adj]


def connected_components(nbr: NeighborStructure):
    """Components of the nearest-interferer link graph (either direction)."""
    adj = _undirected_adjacency(nbr)
    n = nbr.n_nodes
    label = np.full(n, -1, dtype=int)
    comps = []
    for s in range(n):
        if label[s] >= 0:
            continue
        stack = [s]
        label[s] = len(comps)
        members = []
        while stack:
            v = stack.pop()
            members.append(v)
            for w in adj[v]:
                if label[w] < 0:
                    label[w] = len(comps)
                    stack.append(w)
        comps.append(np.array(sorted(members)))
    return comps, label


def max_min_nearest(b: InterferenceMatrix, nbr: NeighborStructure,
                    step_schedule: StepSchedule = None, tol: float = 1e-6,
                    max_iter: int = 4000,
                    return_trace: bool = False) -> OptimizerReport:
    """Closest-interferer max-min fair MAPs.

    Each node only exchanges variables with c(i) and C(i).  The theta_i <=
    theta_j constraints over edges force all theta_i equal within a
    connected component; a disconnected link graph decomposes into
    independent per-component problems (the synchronous updates never couple
    components, and best iterates are tracked per component).
    """
    n = b.n_nodes
    if n < 2:
        raise ParameterError("max-min scheme needs >= 2 nodes")
    step_schedule = step_schedule or StepSchedule()
    inner_tol = tol / 10.0
    sup = b.suppression()
    comps, comp_label = connected_components(nbr)

    # padded coefficient matrix over C(i)
    max_deg = max(1, max(len(m) for m in nbr.C))
    coeffs = np.full((n, max_deg), np.inf)
    weights_src = np.full((n, max_deg), -1, dtype=int)
    for i, members in enumerate(nbr.C):
        coeffs[i, :len(members)] = 1.0 + b.b[i, members]
        weights_src[i, :len(members)] = members

    # directed multiplier edges (i -> j) for j in C(i) U {c(i)}
    adj = _undirected_adjacency(nbr)
    src = np.array([i for i in range(n) for _ in adj[i]], dtype=int)
    dst = np.array([j for i in range(n) for j in adj[i]], dtype=int)
    pos = {(int(s), int(d)): e for e, (s, d) in enumerate(zip(src, dst))}
    rev = np.array([pos[(int(d), int(s))] for s, d in zip(src, dst)],
                   dtype=int)

    lam = np.array([1.0 / len(comps[comp_label[i]]) for i in range(n)])
    mu = np.zeros(src.shape[0])
    idx = np.arange(n)
    bests = [_Best() for _ in comps]
    trace = []
    movement = np.inf
    feas = np.inf
    for it in range(1, max_iter + 1):
        p = _weighted_p_update(lam, coeffs, weights_src, inner_tol)
        flow = np.zeros(n)
        np.add.at(flow, src, mu)
        np.add.at(flow, dst, -mu)
        theta = -np.maximum(lam + flow, 0.0)
        log_q = np.log(1.0 - p[nbr.c] * sup[nbr.c, idx])
        rate = p * (1.0 - p[nbr.c] * sup[nbr.c, idx])
        log_rate = np.log(np.maximum(p, _P_FLOOR)) + log_q
        viol = theta - log_rate
        edge_viol = theta[src] - theta[dst]
        beta = step_schedule(it)
        lam_new = np.maximum(lam + beta * viol, 0.0)
        mu_new = np.maximum(mu + beta * edge_viol, 0.0)
        movement = float(max(np.abs(lam_new - lam).max(),
                             np.abs(mu_new - mu).max()))
        feas = float(max(viol.max(), edge_viol.max()))
        if return_trace:
            trace.append(float(rate.min()))
        for ci, members in enumerate(comps):
            mr = float(rate[members].min())
            fv = float(max(viol[members].max(initial=-np.inf),
                           edge_viol[np.isin(src, members)].max(
                               initial=-np.inf)))
            if mr > bests[ci].min_rate and fv <= max(tol, 1e-9) * 10:
                bests[ci] = _Best(mr, p[members].copy(),
                                  lam[members].copy(), theta[members].copy())
        lam, mu = lam_new, mu_new
        if movement <= tol and feas <= tol:
            break
    p_out = p.copy()
    lam_out = lam.copy()
    theta_out = theta.copy()
    for ci, members in enumerate(comps):
        if bests[ci].p is not None:
            p_out[members] = bests[ci].p
            lam_out[members] = bests[ci].lam
            theta_out[members] = bests[ci].theta
    rate_out = p_out * (1.0 - p_out[nbr.c] * sup[nbr.c, idx])
    log_rates = np.log(np.maximum(rate_out, _P_FLOOR))
    converged = movement <= tol and feas <= tol
    mu_dict = {(int(s), int(d)): float(v) for s, d, v in zip(src, dst, mu)}
    dual = DualState(lam=lam_out, theta=theta_out, mu=mu_dict,
                     step_schedule=step_schedule, log_rates=log_rates)
    return OptimizerReport(
        p=p_out, objective_value=float(rate_out.min()), iterations=it,
        converged=converged, residual=float(max(movement, feas, 0.0)),
        trace=np.array(trace) if return_trace else None,
        config={"scheme": "MM-CI", "tol": tol, "max_iter": max_iter,
                "step_schedule": step_schedule.to_dict()},
        dual=dual)
