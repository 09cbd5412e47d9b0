"""Numba inner loops for the throughput schemes.

Sampler state is kept in plain arrays; all randomness is pre-drawn with
numpy Generators outside, so results are reproducible and independent of
how the kernels are scheduled.  ``sup`` always denotes the suppression
matrix 1/(1+b) with a zero diagonal, indexed [transmitter, receiver].
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lex_smaller(a_mask, b_mask):
    """Is subset a < subset b as lexicographically ordered index tuples?"""
    d = a_mask ^ b_mask
    if d == 0:
        return False
    k = 0
    while ((d >> k) & 1) == 0:
        k += 1
    if (a_mask >> k) & 1:
        # a owns the first differing index; a is smaller unless b already
        # ended (then b is a strict prefix of a)
        return (b_mask >> (k + 1)) != 0
    return (a_mask >> (k + 1)) == 0


@njit(cache=True)
def subset_throughput(sup, mask):
    """Aggregate throughput of the all-on subset encoded by ``mask``."""
    n = sup.shape[0]
    val = 0.0
    for i in range(n):
        if (mask >> i) & 1:
            prod = 1.0
            for j in range(n):
                if j != i and ((mask >> j) & 1):
                    prod *= 1.0 - sup[j, i]
            val += prod
    return val


@njit(cache=True)
def bruteforce_best_subset(sup):
    """Exhaustive maximization over the 2^N transmit subsets."""
    n = sup.shape[0]
    best_val = 0.0
    best_mask = 0
    for mask in range(1, 1 << n):
        val = subset_throughput(sup, mask)
        if val > best_val or (val == best_val
                              and lex_smaller(mask, best_mask)):
            best_val = val
            best_mask = mask
    return best_val, best_mask


@njit(cache=True)
def _refresh_products(sup, a, P):
    n = sup.shape[0]
    for k in range(n):
        prod = 1.0
        for j in range(n):
            if j != k and a[j] == 1:
                prod *= 1.0 - sup[j, k]
        P[k] = prod


@njit(cache=True)
def gibbs_aggregate(sup, order, unif, tau, record_masks):
    """Gibbs sweeps for the aggregate-interference throughput game.

    At each visit node i resamples its action from the logistic law on the
    exact marginal throughput gain.  Returns the best profile ever visited,
    plus the final profile and an optional per-sweep profile-mask history.
    """
    n = sup.shape[0]
    n_sweeps = order.shape[0]
    a = np.zeros(n, dtype=np.uint8)
    best_a = np.zeros(n, dtype=np.uint8)
    P = np.ones(n)                 # P[k] = prod_{j active != k}(1 - sup[j,k])
    best_val = 0.0
    history = np.zeros(n_sweeps if record_masks else 0, dtype=np.int64)
    for s in range(n_sweeps):
        t = tau[s]
        for vi in range(n):
            i = order[s, vi]
            if a[i] == 1:
                a[i] = 0
                for k in range(n):
                    if k != i:
                        P[k] /= 1.0 - sup[i, k]
            # marginal gain: own success minus damage to active others
            u = P[i]
            for j in range(n):
                if a[j] == 1:
                    u -= sup[i, j] * P[j]
            if t == np.inf:
                pr = 0.5
            else:
                z = u / t
                if z > 50.0:
                    pr = 1.0
                elif z < -50.0:
                    pr = 0.0
                else:
                    pr = 1.0 / (1.0 + np.exp(-z))
            if unif[s, vi] < pr:
                a[i] = 1
                for k in range(n):
                    if k != i:
                        P[k] *= 1.0 - sup[i, k]
            val = 0.0
            for k in range(n):
                if a[k] == 1:
                    val += P[k]
            if val > best_val:
                best_val = val
                best_a[:] = a
        _refresh_products(sup, a, P)   # kill multiplicative drift
        if record_masks:
            m = 0
            for k in range(n):
                if a[k] == 1:
                    m |= 1 << k
            history[s] = m
    return best_a, a, history


@njit(cache=True)
def best_response_aggregate(sup, a_init, max_sweeps):
    """Round-robin best responses; ties (zero gain) resolve to 'off'.

    Returns the Nash profile, the aggregate-throughput trace recorded after
    every visit, and the number of sweeps used.  Terminates because every
    actual switch strictly increases the potential (the throughput itself).
    """
    n = sup.shape[0]
    a = a_init.copy()
    P = np.ones(n)
    _refresh_products(sup, a, P)
    trace = np.empty(max_sweeps * n + 1)
    val = 0.0
    for k in range(n):
        if a[k] == 1:
            val += P[k]
    trace[0] = val
    pos = 1
    sweeps = 0
    for _ in range(max_sweeps):
        changed = False
        sweeps += 1
        for i in range(n):
            prev = a[i]
            if a[i] == 1:
                a[i] = 0
                for k in range(n):
                    if k != i:
                        P[k] /= 1.0 - sup[i, k]
            u = P[i]
            for j in range(n):
                if a[j] == 1:
                    u -= sup[i, j] * P[j]
            want = 1 if u > 0.0 else 0
            if want == 1:
                a[i] = 1
                for k in range(n):
                    if k != i:
                        P[k] *= 1.0 - sup[i, k]
            if want != prev:
                changed = True
                # each switch changes the potential by the (signed) gain of
                # being on; accumulating it keeps the trace exactly monotone
                val += u if want == 1 else -u
            trace[pos] = val
            pos += 1
        _refresh_products(sup, a, P)
        if not changed:
            break
    return a, trace[:pos], sweeps


@njit(cache=True)
def gibbs_nearest_static(sup, c, C_indptr, C_idx, free_nodes, a_init,
                         order, unif, tau):
    """Gibbs sweeps for the static closest-interferer throughput game.

    ``order`` indexes into ``free_nodes``; forced-on nodes keep a = 1 and
    are never visited.  The tracked objective is the static CI throughput
    sum_i a_i (1 - a_c(i) * sup[c(i), i]).
    """
    n = sup.shape[0]
    n_sweeps = order.shape[0]
    a = a_init.copy()
    best_a = a_init.copy()

    def objective(act):
        val = 0.0
        for i in range(n):
            if act[i] == 1:
                val += 1.0 - act[c[i]] * sup[c[i], i]
        return val

    best_val = objective(a)
    for s in range(n_sweeps):
        t = tau[s]
        for vi in range(order.shape[1]):
            i = free_nodes[order[s, vi]]
            u = 1.0 - a[c[i]] * sup[c[i], i]
            for k in range(C_indptr[i], C_indptr[i + 1]):
                j = C_idx[k]
                if a[j] == 1:
                    u -= sup[i, j]
            if t == np.inf:
                pr = 0.5
            else:
                z = u / t
                if z > 50.0:
                    pr = 1.0
                elif z < -50.0:
                    pr = 0.0
                else:
                    pr = 1.0 / (1.0 + np.exp(-z))
            a[i] = 1 if unif[s, vi] < pr else 0
            val = objective(a)
            if val > best_val:
                best_val = val
                best_a[:] = a
    return best_a, a


@njit(cache=True)
def _nearest_active(dist_proxy, a, j):
    """Index of the active k != j minimizing dist_proxy[k, j], -1 if none."""
    n = dist_proxy.shape[0]
    best = -1
    best_d = np.inf
    for k in range(n):
        if k != j and a[k] == 1 and dist_proxy[k, j] < best_d:
            best_d = dist_proxy[k, j]
            best = k
    return best


@njit(cache=True)
def gibbs_nearest_active(sup, dist_proxy, order, unif, tau):
    """Gibbs sweeps accounting for the closest *active* interferer.

    ``dist_proxy`` is any matrix whose per-column order matches transmitter-
    to-receiver distance (b itself qualifies when all link distances are
    equal).  ``na[j]`` caches the closest active interferer of each active
    node and is updated after every accepted flip.
    """
    n = sup.shape[0]
    n_sweeps = order.shape[0]
    a = np.zeros(n, dtype=np.uint8)
    na = np.full(n, -1, dtype=np.int64)
    best_a = np.zeros(n, dtype=np.uint8)
    best_val = 0.0
    for s in range(n_sweeps):
        t = tau[s]
        for vi in range(n):
            i = order[s, vi]
            if a[i] == 1:
                # detach i, repairing neighbors that pointed at it
                a[i] = 0
                na[i] = -1
                for j in range(n):
                    if a[j] == 1 and na[j] == i:
                        na[j] = _nearest_active(dist_proxy, a, j)
            m = _nearest_active(dist_proxy, a, i)
            own = 1.0 if m < 0 else 1.0 - sup[m, i]
            loss = 0.0
            for j in range(n):
                if a[j] == 1:
                    if na[j] < 0:
                        loss += sup[i, j]
                    elif dist_proxy[i, j] < dist_proxy[na[j], j]:
                        loss += sup[i, j] - sup[na[j], j]
            u = own - loss
            if t == np.inf:
                pr = 0.5
            else:
                z = u / t
                if z > 50.0:
                    pr = 1.0
                elif z < -50.0:
                    pr = 0.0
                else:
                    pr = 1.0 / (1.0 + np.exp(-z))
            if unif[s, vi] < pr:
                for j in range(n):
                    if a[j] == 1 and (na[j] < 0 or dist_proxy[i, j]
                                      < dist_proxy[na[j], j]):
                        na[j] = i
                a[i] = 1
                na[i] = m
            val = 0.0
            for k in range(n):
                if a[k] == 1:
                    val += 1.0 if na[k] < 0 else 1.0 - sup[na[k], k]
            if val > best_val:
                best_val = val
                best_a[:] = a
    return best_a, a
