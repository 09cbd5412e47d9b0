"""Proportional-fair MAP selection.

Maximizing sum_i log(p_i q_i) separates per node: node i's optimal MAP is
the unique root in (0, 1] of

    1/p = sum_j w_j / (1 + b_ij - p)        (w_j = 1 for plain PF),

or p = 1 when sum_j w_j / b_ij <= w-numerator (the node's transmission does
not hurt the others enough to warrant backing off).  The aggregate variant
sums over all j != i; the closest-interferer variant only over C(i).

The fixed-point map f is monotone with |f'| <= 1, with equality approached
when a single interferer term dominates (plain Picard then stalls or
oscillates), so the iteration from p = 1 is Aitken-accelerated; leftover
stragglers fall back to bracketed root finding on the optimality condition.
"""

import numpy as np
from scipy.optimize import brentq

from ..errors import ParameterError
from ..network import InterferenceMatrix, NeighborStructure
from .common import OptimizerReport

_TINY = 1e-300


def solve_weighted_fixed_points(numerator, coeffs, weights, tol=1e-12,
                                max_iter=200, start=1.0):
    """Solve p_m = numerator_m / sum_k weights[m,k] / (coeffs[m,k] - p_m).

    ``coeffs`` holds 1 + b terms with +inf padding for absent entries.  Only
    rows whose root lies strictly inside (0, 1) should be passed (i.e. rows
    with sum_k weights/ (coeffs-1) > numerator).  Returns (p, residual,
    iterations) with per-row iteration counts of the accelerated iteration.
    """
    numerator = np.asarray(numerator, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    weights = np.asarray(weights, dtype=float)
    m = numerator.shape[0]
    if m == 0:
        return (np.empty(0), np.empty(0), np.zeros(0, dtype=int))

    def f(p):
        s = (weights / (coeffs - p[:, None])).sum(axis=1)
        return numerator / s

    p = np.full(m, float(start))
    iters = np.zeros(m, dtype=int)
    active = np.ones(m, dtype=bool)
    resid = np.abs(f(p) - p)
    active &= resid > tol
    for _ in range(max_iter):
        if not active.any():
            break
        p0 = p[active]
        sub_c, sub_w, sub_n = coeffs[active], weights[active], numerator[active]

        def fsub(q):
            return sub_n / (sub_w / (sub_c - q[:, None])).sum(axis=1)

        p1 = fsub(p0)
        p2 = fsub(p1)
        denom = p2 - 2.0 * p1 + p0
        with np.errstate(divide="ignore", invalid="ignore"):
            steff = p0 - (p1 - p0) ** 2 / denom
        nxt = np.where(np.abs(denom) > 1e-30, steff, p2)
        nxt = np.clip(nxt, 1e-15, 1.0)
        p[active] = nxt
        iters[active] += 1
        r = np.abs(fsub(nxt) - nxt)
        resid[active] = r
        still = active.copy()
        still[active] = r > tol
        active = still

    # bracketed fallback for anything the acceleration left behind
    for idx in np.nonzero(active)[0]:
        c_row, w_row, num = coeffs[idx], weights[idx], numerator[idx]

        def g(q):
            return num / q - (w_row / (c_row - q)).sum()

        try:
            p[idx] = brentq(g, 1e-15, 1.0 - 1e-15, xtol=1e-15, rtol=8.9e-16)
        except ValueError:
            # root within float distance of the upper boundary
            p[idx] = 1.0
        fp = num / (w_row / (c_row - p[idx])).sum()
        resid[idx] = abs(fp - p[idx])
        iters[idx] = max_iter
    return p, resid, iters


def _pf_objective(p, b: InterferenceMatrix) -> float:
    """sum_i log(p_i q_i) under the exact product-form q."""
    with np.errstate(divide="ignore"):
        log_q = np.log(1.0 - p[:, None] * b.suppression()).sum(axis=0)
        return float((np.log(p) + log_q).sum())


def prop_fair_global(b: InterferenceMatrix, tol: float = 1e-12,
                     max_iter: int = 200, start: float = 1.0,
                     return_trace: bool = False) -> OptimizerReport:
    """Aggregate-interference proportional fair MAPs.

    Each node solves its own fixed point; results are independent of the
    other nodes' values and of ``start``.
    """
    n = b.n_nodes
    config = {"scheme": "PF-AI", "tol": tol, "max_iter": max_iter,
              "start": start}
    if n == 0:
        return OptimizerReport(p=np.empty(0), objective_value=0.0,
                               iterations=0, converged=True, residual=0.0,
                               config=config)
    coeffs = 1.0 + b.b.copy()          # row i: 1 + b_ij, self term +inf
    weights = np.ones_like(coeffs)
    weights[~np.isfinite(coeffs)] = 0.0
    with np.errstate(divide="ignore"):
        interior = (1.0 / b.b).sum(axis=1) > 1.0   # f_i(1) < 1
    p = np.ones(n)
    resid = np.zeros(n)
    iters = np.zeros(n, dtype=int)
    if interior.any():
        sol, r, it = solve_weighted_fixed_points(
            np.ones(interior.sum()), coeffs[interior], weights[interior],
            tol=tol, max_iter=max_iter, start=start)
        p[interior], resid[interior], iters[interior] = sol, r, it
    converged = bool((resid <= tol).all())
    return OptimizerReport(
        p=p, objective_value=_pf_objective(p, b),
        iterations=int(iters.max(initial=0)), converged=converged,
        residual=float(resid.max(initial=0.0)),
        trace=resid if return_trace else None, config=config)


def prop_fair_nearest(b: InterferenceMatrix, nbr: NeighborStructure,
                      tol: float = 1e-12, max_iter: int = 200,
                      start: float = 1.0) -> OptimizerReport:
    """Closest-interferer proportional fair MAPs (fixed point over C(i))."""
    n = b.n_nodes
    if n < 2:
        raise ParameterError("closest-interferer scheme needs >= 2 nodes")
    config = {"scheme": "PF-CI", "tol": tol, "max_iter": max_iter,
              "start": start}
    max_deg = max(1, max(len(s) for s in nbr.C))
    coeffs = np.full((n, max_deg), np.inf)
    for i, members in enumerate(nbr.C):
        coeffs[i, :len(members)] = 1.0 + b.b[i, members]
    weights = np.where(np.isfinite(coeffs), 1.0, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.where(weights > 0, 1.0 / (coeffs - 1.0), 0.0).sum(axis=1)
    interior = spread > 1.0            # sum_{j in C(i)} 1/b_ij > 1
    p = np.ones(n)
    resid = np.zeros(n)
    iters = np.zeros(n, dtype=int)
    if interior.any():
        sol, r, it = solve_weighted_fixed_points(
            np.ones(interior.sum()), coeffs[interior], weights[interior],
            tol=tol, max_iter=max_iter, start=start)
        p[interior], resid[interior], iters[interior] = sol, r, it
    idx = np.arange(n)
    q_near = 1.0 - p[nbr.c] / (1.0 + b.b[nbr.c, idx])
    with np.errstate(divide="ignore"):
        objective = float((np.log(p) + np.log(q_near)).sum())
    converged = bool((resid <= tol).all())
    return OptimizerReport(p=p, objective_value=objective,
                           iterations=int(iters.max(initial=0)),
                           converged=converged,
                           residual=float(resid.max(initial=0.0)),
                           config=config)


def prop_fair_singleton_closed_form(b_ij: float) -> float:
    """Optimal MAP when C(i) = {j}: (1 + b_ij) / 2 if b_ij < 1, else 1."""
    if not b_ij > 0:
        raise ParameterError("b_ij must be > 0")
    return (1.0 + b_ij) / 2.0 if b_ij < 1.0 else 1.0


def prop_fair_linear_closed_form(b_minus: float, b_plus: float) -> float:
    """Optimal MAP with C(i) = {i-1, i+1} on a line.

    Solves 1/p = 1/(1+b_minus-p) + 1/(1+b_plus-p); the smaller quadratic
    root is the valid probability.  When 1/b_minus + 1/b_plus <= 1 the node
    transmits always, mirroring the general rule.
    """
    if not (b_minus > 0 and b_plus > 0):
        raise ParameterError("coefficients must be > 0")
    if 1.0 / b_minus + 1.0 / b_plus <= 1.0:
        return 1.0
    root = (2.0 + b_minus + b_plus
            - np.sqrt((b_minus - b_plus) ** 2
                      + (1.0 + b_minus) * (1.0 + b_plus))) / 3.0
    return float(root)
