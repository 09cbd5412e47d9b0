"""Bipole network topologies and interference geometry.

A network realization is a set of transmitter-receiver pairs ("bipoles"):
each transmitter sits in an L x L square and its receiver lies at a fixed
link distance in a uniformly random direction.  From a realization we derive
the normalized interference coefficient matrix

    b[j, i] = (1/T) * (r_ji / r_ii)**alpha     for j != i,

where r_ji is the distance from transmitter j to receiver i, and the
nearest-interferer structure c(i) / C(i).  Large b[j, i] means transmitter j
barely disturbs receiver i.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, ParameterError
from .serialize import canonical_json

REALIZATION_FORMAT = "spatialoha.realization"
REALIZATION_VERSION = 1


@dataclass(frozen=True)
class ChannelParams:
    """Physical-layer parameters shared by all links.

    alpha          path-loss exponent (> 2)
    sinr_threshold SINR threshold for successful reception (linear scale, > 0)
    fading_rate    rate of the exponential Rayleigh-power fading (> 0)
    noise_power    thermal noise variance (>= 0; the interference-limited
                   regime studied here uses 0, the default)
    """

    alpha: float
    sinr_threshold: float
    fading_rate: float = 1.0
    noise_power: float = 0.0

    def __post_init__(self):
        if not self.alpha > 2:
            raise ParameterError(f"alpha must be > 2, got {self.alpha}")
        if not self.sinr_threshold > 0:
            raise ParameterError(
                f"sinr_threshold must be > 0, got {self.sinr_threshold}")
        if not self.fading_rate > 0:
            raise ParameterError(
                f"fading_rate must be > 0, got {self.fading_rate}")
        if self.noise_power < 0:
            raise ParameterError(
                f"noise_power must be >= 0, got {self.noise_power}")


@dataclass(frozen=True)
class Bipole:
    """One transmitter-receiver pair."""

    tx_x: float
    tx_y: float
    rx_angle: float
    link_distance: float

    @property
    def rx_x(self) -> float:
        return self.tx_x + self.link_distance * np.cos(self.rx_angle)

    @property
    def rx_y(self) -> float:
        return self.tx_y + self.link_distance * np.sin(self.rx_angle)


@dataclass(frozen=True)
class NetworkRealization:
    """A sampled topology: transmitter positions plus receiver offsets.

    The array index is the node index used by every downstream structure.
    Transmitters lie in [0, L]^2; receivers may fall outside (only
    transmitters define the region).
    """

    tx: np.ndarray            # (N, 2) transmitter positions
    rx_angle: np.ndarray      # (N,) angles in [0, 2*pi)
    link_distance: float      # common transmitter-receiver separation r0
    region_side: float
    seed: int

    def __post_init__(self):
        tx = np.asarray(self.tx, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "tx", tx)
        n = tx.shape[0]
        object.__setattr__(
            self, "rx_angle", np.asarray(self.rx_angle, dtype=float).reshape(n))
        object.__setattr__(self, "link_distance", float(self.link_distance))
        if not self.region_side > 0:
            raise ParameterError(
                f"region_side must be > 0, got {self.region_side}")
        if not self.link_distance > 0:
            raise ParameterError("link_distance must be > 0")
        if n and ((tx < 0).any() or (tx > self.region_side).any()):
            raise ParameterError("transmitters must lie in [0, L]^2")

    @property
    def n_nodes(self) -> int:
        return self.tx.shape[0]

    @property
    def link_distances(self) -> np.ndarray:
        """(N,) per-node r_ii (all equal to the common link distance)."""
        return np.full(self.n_nodes, self.link_distance)

    @property
    def rx(self) -> np.ndarray:
        """(N, 2) receiver positions."""
        offs = np.stack([np.cos(self.rx_angle), np.sin(self.rx_angle)], axis=1)
        return self.tx + self.link_distance * offs

    def bipoles(self):
        return [Bipole(float(x), float(y), float(a), self.link_distance)
                for (x, y), a in zip(self.tx, self.rx_angle)]

    def window_mask(self, window_fraction: float = 0.5) -> np.ndarray:
        """Boolean mask of transmitters inside the centered observation square.

        The square has side ``window_fraction * L``; metrics are computed on
        these nodes only, so boundary nodes contribute interference but no
        edge-biased samples.
        """
        if not 0 < window_fraction <= 1:
            raise ParameterError("window_fraction must be in (0, 1]")
        lo = self.region_side * (1 - window_fraction) / 2
        hi = self.region_side * (1 + window_fraction) / 2
        return ((self.tx >= lo) & (self.tx <= hi)).all(axis=1)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "format": REALIZATION_FORMAT,
            "version": REALIZATION_VERSION,
            "seed": int(self.seed),
            "L": float(self.region_side),
            "r0": float(self.link_distance),
            "nodes": [
                {"x": float(x), "y": float(y), "phi": float(a)}
                for (x, y), a in zip(self.tx, self.rx_angle)
            ],
        }
        return canonical_json(doc)

    @classmethod
    def from_json(cls, text: str) -> "NetworkRealization":
        import json

        doc = json.loads(text)
        if doc.get("format") != REALIZATION_FORMAT:
            raise ParameterError("not a realization document")
        if doc.get("version") != REALIZATION_VERSION:
            raise ParameterError(
                f"unsupported realization version {doc.get('version')}")
        nodes = doc["nodes"]
        tx = np.array([[nd["x"], nd["y"]] for nd in nodes],
                      dtype=float).reshape(-1, 2)
        ang = np.array([nd["phi"] for nd in nodes], dtype=float)
        return cls(tx=tx, rx_angle=ang, link_distance=float(doc["r0"]),
                   region_side=float(doc["L"]), seed=int(doc["seed"]))


@dataclass(frozen=True)
class InterferenceMatrix:
    """Normalized interference coefficients b[j, i] for j != i.

    The diagonal is a +inf sentinel: it is never meaningful, and the choice
    makes self-terms vanish automatically in 1/(1+b) style expressions so
    vectorized sums and products can run over all j.
    """

    b: np.ndarray
    n_nodes: int

    def suppression(self) -> np.ndarray:
        """Matrix 1/(1+b); entry [j, i] is the throughput fraction receiver i
        loses when j transmits persistently (0 on the diagonal)."""
        return 1.0 / (1.0 + self.b)


@dataclass(frozen=True)
class NeighborStructure:
    """Nearest-interferer maps.

    ``c[i]`` is the interferer whose transmitter is closest to receiver i;
    ``C[i]`` lists the nodes for which i is that closest interferer.  Exact
    distance ties resolve to the smallest index and are flagged.
    """

    c: np.ndarray                 # (N,) int
    C: tuple                      # tuple of int arrays, C[i] sorted
    tie_flags: np.ndarray = field(default=None)

    @property
    def n_nodes(self) -> int:
        return self.c.shape[0]


def cross_distances(realization: NetworkRealization) -> np.ndarray:
    """D[j, i] = distance from transmitter j to receiver i."""
    rx = realization.rx
    diff = realization.tx[:, None, :] - rx[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def generate_realization(intensity, region_side, link_distance,
                         count_mode: str = "fixed",
                         seed: int = 0) -> NetworkRealization:
    """Sample a bipole network on an L x L square.

    Parameters
    ----------
    intensity : float
        Node density (nodes per unit area), >= 0.
    region_side : float
        Square side length L > 0.
    link_distance : float
        Common transmitter-receiver separation r0 > 0.
    count_mode : {"fixed", "poisson"}
        "fixed" places exactly round(intensity * L**2) nodes (the default;
        for large intensity * L**2 the Poisson count concentrates there
        anyway); "poisson" draws the count from Poisson(intensity * L**2).
    seed : int
        RNG seed; output is bit-identical for identical inputs and seed.
    """
    if intensity < 0:
        raise ParameterError(f"intensity must be >= 0, got {intensity}")
    if not region_side > 0:
        raise ParameterError(f"region_side must be > 0, got {region_side}")
    if not link_distance > 0:
        raise ParameterError(f"link_distance must be > 0, got {link_distance}")
    if count_mode not in ("fixed", "poisson"):
        raise ParameterError(f"unknown count_mode {count_mode!r}")

    mean_count = intensity * region_side ** 2
    rng = np.random.default_rng(seed)
    if count_mode == "fixed":
        n = int(round(mean_count))
    else:
        n = int(rng.poisson(mean_count))
    tx = rng.uniform(0.0, region_side, size=(n, 2))
    angles = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return NetworkRealization(tx=tx, rx_angle=angles,
                              link_distance=float(link_distance),
                              region_side=float(region_side), seed=int(seed))


def interference_coefficients(realization: NetworkRealization,
                              params: ChannelParams) -> InterferenceMatrix:
    """Compute b[j, i] = (1/T) (r_ji / r_ii)**alpha for all j != i."""
    n = realization.n_nodes
    dist = cross_distances(realization)
    off_diag = ~np.eye(n, dtype=bool)
    zero = (dist == 0) & off_diag
    if zero.any():
        j, i = np.argwhere(zero)[0]
        raise DegenerateGeometryError(
            f"transmitter {j} coincides with receiver {i}")
    b = (dist / realization.link_distance) ** params.alpha \
        / params.sinr_threshold
    np.fill_diagonal(b, np.inf)
    return InterferenceMatrix(b=b, n_nodes=n)


def nearest_interferer_structure(
        realization: NetworkRealization) -> NeighborStructure:
    """Build c(i) = argmin_{j != i} r_ji and its inverse sets C(i)."""
    n = realization.n_nodes
    if n < 2:
        raise ParameterError(
            "nearest-interferer structure needs at least 2 nodes")
    dist = cross_distances(realization)
    np.fill_diagonal(dist, np.inf)
    c = dist.argmin(axis=0)          # smallest index wins on exact ties
    mins = dist[c, np.arange(n)]
    tie_flags = (dist == mins[None, :]).sum(axis=0) > 1
    members = [[] for _ in range(n)]
    for j in range(n):
        members[c[j]].append(j)
    C = tuple(np.array(m, dtype=np.int64) for m in members)
    return NeighborStructure(c=c.astype(np.int64), C=C, tie_flags=tie_flags)
