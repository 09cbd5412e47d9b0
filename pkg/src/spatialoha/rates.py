"""Success probabilities, throughputs, utilities, and a slot-level simulator.

With medium access probabilities p and Rayleigh block fading, receiver i
decodes its packet in a slot with probability

    q_i = exp(-mu * w * T * r_ii**alpha) * prod_{j != i} (1 - p_j / (1 + b_ji)),

and node i's rate (throughput) is p_i * q_i.  ``simulate_slots`` estimates
the same quantities by drawing per-slot transmission indicators and fading
and applying the SINR threshold directly; it is the independent oracle for
the closed forms above.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .network import ChannelParams, InterferenceMatrix, NeighborStructure, \
    NetworkRealization
from .serialize import canonical_json, write_csv


def check_map_vector(p, n_nodes: int) -> np.ndarray:
    """Validate a medium-access-probability vector and return it as float64."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != n_nodes:
        raise ParameterError(
            f"MAP vector has length {p.shape[0]}, expected {n_nodes}")
    if ((p < 0) | (p > 1)).any():
        raise ParameterError("MAP entries must lie in [0, 1]")
    return p


def _noise_prefactor(params: ChannelParams, link_distance) -> np.ndarray:
    r = np.asarray(link_distance, dtype=float)
    return np.exp(-params.fading_rate * params.noise_power
                  * params.sinr_threshold * r ** params.alpha)


def success_probability(p, b: InterferenceMatrix, params: ChannelParams,
                        link_distance=1.0) -> np.ndarray:
    """Exact per-node success probabilities q_i for MAP vector p."""
    p = check_map_vector(p, b.n_nodes)
    factors = 1.0 - p[:, None] * b.suppression()   # [j, i]
    q = factors.prod(axis=0)
    return _noise_prefactor(params, link_distance) * q


def log_success_probability(p, b: InterferenceMatrix, params: ChannelParams,
                            link_distance=1.0) -> np.ndarray:
    """log q_i computed as a sum of logs (no product underflow)."""
    p = check_map_vector(p, b.n_nodes)
    factors = 1.0 - p[:, None] * b.suppression()
    with np.errstate(divide="ignore"):
        logs = np.log(factors).sum(axis=0)
    r = np.asarray(link_distance, dtype=float)
    return logs - params.fading_rate * params.noise_power \
        * params.sinr_threshold * r ** params.alpha


def nearest_success_probability(p, b: InterferenceMatrix,
                                nbr: NeighborStructure) -> np.ndarray:
    """Closest-interferer approximation q~_i = 1 - p_c(i) / (1 + b_c(i)i)."""
    if b.n_nodes < 2:
        raise ParameterError("closest-interferer form needs at least 2 nodes")
    p = check_map_vector(p, b.n_nodes)
    idx = np.arange(b.n_nodes)
    return 1.0 - p[nbr.c] / (1.0 + b.b[nbr.c, idx])


@dataclass(frozen=True)
class RateReport:
    """Per-node and aggregate throughput quantities at a given MAP vector."""

    p: np.ndarray
    q: np.ndarray
    rate: np.ndarray          # p_i * q_i
    aggregate: float          # sum of rates
    log_utility: float        # sum of log rates, -inf if any rate is 0
    min_rate: float

    def to_dict(self) -> dict:
        return {
            "p": self.p, "q": self.q, "rate": self.rate,
            "aggregate": self.aggregate,
            "log_utility": self.log_utility, "min_rate": self.min_rate,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())

    def write_csv(self, path):
        rows = [(i, float(pi), float(qi), float(ri)) for i, (pi, qi, ri)
                in enumerate(zip(self.p, self.q, self.rate))]
        write_csv(path, ["i", "p", "q", "rate"], rows)


def rate_report(p, b: InterferenceMatrix, params: ChannelParams,
                link_distance=1.0) -> RateReport:
    """Assemble q, rates, aggregate throughput, log utility and min rate."""
    p = check_map_vector(p, b.n_nodes)
    q = success_probability(p, b, params, link_distance)
    rate = p * q
    with np.errstate(divide="ignore"):
        log_utility = float(np.log(rate).sum()) if rate.size else 0.0
    return RateReport(p=p, q=q, rate=rate,
                      aggregate=float(rate.sum()),
                      log_utility=log_utility,
                      min_rate=float(rate.min()) if rate.size else np.inf)


@dataclass(frozen=True)
class SlotSimulation:
    """Empirical outcome of a slotted-Aloha run."""

    n_slots: int
    attempts: np.ndarray            # per-node transmission counts
    successes: np.ndarray           # per-node decoded-packet counts
    rate: np.ndarray                # successes / n_slots (estimates p_i q_i)
    success_frequency: np.ndarray   # successes / attempts (estimates q_i)


def simulate_slots(realization: NetworkRealization, p,
                   params: ChannelParams, n_slots: int,
                   seed: int = 0) -> SlotSimulation:
    """Slot-by-slot Monte-Carlo of the SINR threshold model.

    Each slot draws independent transmission indicators e_j ~ Bernoulli(p_j)
    and fading powers h_ji ~ Exponential(rate mu), then declares success for
    a transmitting node i iff

        h_ii r_ii^-alpha / (sum_{j != i} e_j h_ji r_ji^-alpha + w) >= T.

    Slots are partitioned into independently seeded chunks, so the result is
    reproducible regardless of how chunks would be scheduled.
    """
    if n_slots < 1:
        raise ParameterError("n_slots must be >= 1")
    n = realization.n_nodes
    p = check_map_vector(p, n)
    from .network import cross_distances

    dist = cross_distances(realization)
    np.fill_diagonal(dist, realization.link_distance)
    gain = dist ** (-params.alpha)

    chunk = max(1, int(2 ** 22 / max(1, n * n)))
    seeds = np.random.SeedSequence(seed).spawn(-(-n_slots // chunk))
    attempts = np.zeros(n, dtype=np.int64)
    successes = np.zeros(n, dtype=np.int64)
    done = 0
    scale = 1.0 / params.fading_rate
    for ss in seeds:
        m = min(chunk, n_slots - done)
        rng = np.random.default_rng(ss)
        e = rng.random((m, n)) < p[None, :]
        h = rng.exponential(scale, size=(m, n, n))
        # interference at receiver i from everyone (then drop the own term)
        received = np.einsum("sj,sji,ji->si", e, h, gain)
        own = h[:, np.arange(n), np.arange(n)] * np.diag(gain)[None, :]
        interference = received - e * own
        ok = own >= params.sinr_threshold * (interference + params.noise_power)
        attempts += e.sum(axis=0)
        successes += (e & ok).sum(axis=0)
        done += m
    with np.errstate(invalid="ignore"):
        freq = np.where(attempts > 0, successes / np.maximum(attempts, 1),
                        np.nan)
    return SlotSimulation(n_slots=n_slots, attempts=attempts,
                          successes=successes,
                          rate=successes / n_slots,
                          success_frequency=freq)
