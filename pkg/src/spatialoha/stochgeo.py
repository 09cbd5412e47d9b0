"""Analytic MAP distribution and mean utility under a Poisson field.

When transmitters form a homogeneous Poisson process and every node runs the
proportional-fair fixed point, the typical node's MAP obeys

    P(p0 > rho) = P(J(rho) < 1),

where J(rho) is the shot noise, over the receiver field, of the response

    v_rho(d) = rho * R / (d**alpha + (1 - rho) * R),      R = T * r0**alpha.

Its Laplace transform is exp(-2*pi*lambda * I(rho, s)) with
I = int_0^inf (1 - exp(-s v_rho(r))) r dr, and the law is recovered by a
Fourier inversion along the imaginary axis.  The inversion is evaluated in
the equivalent form

    P(J <= x) = 1/2 + (1/pi) int_0^inf Im[L(iw) e^{iwx}] / w dw,

which extracts the exact 1/2 contributed by P(J < 0) = 0; a literal
truncation of the raw Parseval integrand loses that mass whenever the law
concentrates near 0 (small lambda).  The integrand has a finite w -> 0
limit, conjugate symmetry halves the contour, truncation grows adaptively
with a sine/cosine-integral tail estimate, and panels self-refine on a
two-rule quadrature comparison.

Conditioning on a second node adds one deterministic response term v to J:
P(J + v < 1) = P(J < 1 - v).  Conditioning at transmitter-transmitter
distance r (the two-point law) averages that over the receiver angle.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import exp1
from scipy.special import gamma as gamma_fn
from scipy.special import ive, jv

from .errors import NumericalError, ParameterError, QuadratureError
from .serialize import canonical_json, write_csv

_GL_CACHE = {}


def _gl_nodes(n, a, b):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    x, w = _GL_CACHE[n]
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class AnalyticModel:
    """Poisson network model for the analytic pipeline."""

    intensity: float          # nodes per unit area
    sinr_threshold: float     # T, linear
    link_distance: float      # r0
    alpha: float              # path-loss exponent, > 2

    def __post_init__(self):
        if not self.intensity >= 0:
            raise ParameterError("intensity must be >= 0")
        if not self.sinr_threshold > 0:
            raise ParameterError("sinr_threshold must be > 0")
        if not self.link_distance > 0:
            raise ParameterError("link_distance must be > 0")
        if not self.alpha > 2:
            raise ParameterError("alpha must be > 2 (shot-noise tail)")

    @property
    def range_scale(self) -> float:
        """T * r0**alpha: the distance^alpha scale at which one persistent
        interferer costs half the throughput."""
        return self.sinr_threshold * self.link_distance ** self.alpha

    def to_dict(self) -> dict:
        return {"intensity": self.intensity,
                "sinr_threshold": self.sinr_threshold,
                "link_distance": self.link_distance, "alpha": self.alpha}


def default_rho_grid() -> np.ndarray:
    """200 uniform points on [0, 1) plus geometric refinement near 0 and 1."""
    base = np.linspace(0.0, 1.0, 201)[:-1]
    near0 = np.array([1e-4, 2.5e-4, 5e-4, 1e-3, 2.5e-3])
    near1 = 1.0 - np.array([2.5e-3, 1e-3, 5e-4, 2.5e-4, 1e-4])
    return np.unique(np.concatenate([base, near0, near1]))


@dataclass(frozen=True)
class QuadratureSettings:
    """Tolerances and grids for the analytic pipeline."""

    radial_rel_tol: float = 1e-11
    contour_w_max: float = 1e6
    contour_rel_tol: float = 1e-9
    rho_grid: np.ndarray = field(default_factory=default_rho_grid)
    spatial_r_max: float = 80.0
    phi_nodes: int = 64

    def __post_init__(self):
        grid = np.asarray(self.rho_grid, dtype=float)
        object.__setattr__(self, "rho_grid", grid)
        if not (self.radial_rel_tol > 0 and self.contour_rel_tol > 0):
            raise ParameterError("tolerances must be > 0")
        if grid.size and not ((np.diff(grid) > 0).all()
                              and grid[0] >= 0 and grid[-1] < 1):
            raise ParameterError("rho_grid must be strictly increasing in [0, 1)")


@dataclass(frozen=True)
class CdfCurve:
    """CCDF samples P(p > rho) on a grid, plus the point mass at p = 1."""

    rho: np.ndarray
    ccdf: np.ndarray
    atom_at_one: float

    def write_csv(self, path, model: Optional[AnalyticModel] = None,
                  extra_header: Optional[dict] = None):
        meta = {}
        if model is not None:
            meta["model"] = model.to_dict()
        if extra_header:
            meta.update(extra_header)
        meta["atom_at_one"] = float(self.atom_at_one)
        pre = [canonical_json(meta).replace("\n", " ").strip()]
        write_csv(path, ["rho", "ccdf"],
                  list(zip(self.rho, self.ccdf)), preamble=pre)


@dataclass(frozen=True)
class DiscreteMeasure:
    """Stieltjes measure on (0, 1]: bin masses at midpoints plus an atom."""

    points: np.ndarray
    masses: np.ndarray
    atom_at_one: float

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum() + self.atom_at_one)

    @property
    def mean(self) -> float:
        return self.integrate(lambda v: v)

    def integrate(self, fn) -> float:
        vals = fn(self.points)
        return float((vals * self.masses).sum()
                     + fn(np.array([1.0]))[0] * self.atom_at_one)


def response(rho, distance, model: AnalyticModel):
    """Shot-noise response v_rho(d) of one receiver at distance d."""
    R = model.range_scale
    return rho * R / (np.asarray(distance) ** model.alpha + (1.0 - rho) * R)


# ---------------------------------------------------------------------------
# Laplace transform of the shot noise
# ---------------------------------------------------------------------------

def _radial_exponent_quad(rho, s, model: AnalyticModel, rel_tol):
    """I(rho, s) = int_0^inf (1 - e^{-s v_rho(r)}) r dr by real quadrature.

    Substitutes u = r^2 then u = R^{2/alpha} (1 - t)/t to land on (0, 1];
    the t -> 0 endpoint carries an integrable t^{alpha/2 - 2} singularity.
    """
    R = model.range_scale
    if rho == 0 or s == 0:
        return 0.0 + 0.0j
    half_alpha = model.alpha / 2.0
    scale = R ** (1.0 / half_alpha)

    def integrand(t, part):
        u = scale * (1.0 - t) / t
        v = rho * R / (u ** half_alpha + (1.0 - rho) * R)
        val = (1.0 - np.exp(-s * v)) * scale / t ** 2
        return val.real if part == 0 else val.imag

    out = 0.0 + 0.0j
    for part in (0, 1):
        res = quad(integrand, 0.0, 1.0, args=(part,),
                   epsabs=1e-300, epsrel=rel_tol, limit=400, full_output=1)
        val, err = res[0], res[1]
        if err > max(100 * rel_tol * abs(val), 1e-11):
            raise QuadratureError(
                f"radial quadrature stalled (error estimate {err:.2e})",
                error_estimate=err)
        out += val if part == 0 else 1j * val
    return 0.5 * out


def _atom_exponent(s, model: AnalyticModel):
    """I(1, s) in closed form: the rho = 1 response is R/r^alpha, whose
    shot-noise exponent is the stable-law form (1/2) Gamma(1-2/alpha)
    (s R)^{2/alpha} (principal branch, Re s >= 0)."""
    e = 2.0 / model.alpha
    sR = np.asarray(s, dtype=complex) * model.range_scale
    return 0.5 * gamma_fn(1.0 - e) * sR ** e


def _alpha4_exponent_bessel(rho, s, model: AnalyticModel):
    """I(rho, s) for alpha = 4, rho < 1, via the closed Bessel form.

    Substituting t = r^2 (Jacobian 1/2) and then v^2 = 1/(1+u^2) turns the
    radial integral into (1/2) sqrt((1-rho) R) int_0^1
    (1 - e^{-c v^2}) / (v^2 sqrt(1-v^2)) dv with c = s rho/(1-rho), and that
    integral equals (pi/2) c e^{-c/2} (I0 + I1)(c/2); for purely imaginary c
    it is evaluated with ordinary Bessel J to stay bounded.
    """
    c = np.asarray(s, dtype=complex) * rho / (1.0 - rho)
    pref = 0.5 * math.sqrt((1.0 - rho) * model.range_scale)
    flat = c.reshape(-1)
    res = np.empty(flat.shape, dtype=complex)
    imag_mask = np.abs(flat.real) <= 1e-300 * np.abs(flat.imag)
    y = flat.imag[imag_mask]
    sign = np.sign(y)
    ay = np.abs(y)
    half = ay / 2.0
    bess = np.exp(-1j * half) * (jv(0, half) + 1j * jv(1, half))
    val = (np.pi / 2.0) * (1j * ay) * bess
    res[imag_mask] = np.where(sign >= 0, val, np.conj(val))
    rest = flat[~imag_mask]
    if rest.size:
        if (rest.real < -1e-12).any():
            raise ParameterError("transform defined for Re(s) >= 0")
        z = rest / 2.0
        scaled = ive(0, z) + ive(1, z)      # (I0+I1)(z) * exp(-|Re z|)
        phase = np.exp(np.abs(z.real) - z)
        res[~imag_mask] = (np.pi / 2.0) * rest * phase * scaled
    out = res.reshape(c.shape)
    return pref * out


def _alpha4_exponent_trig_quad(rho, s, model: AnalyticModel, rel_tol):
    """The same alpha = 4 integral by adaptive quadrature after v = sin(u).

    The substitution absorbs both integrable endpoint singularities: the
    integrand becomes (1 - e^{-c sin^2 u}) / sin^2 u on (0, pi/2), finite
    (-> c) at u -> 0.  Carries the same t = r^2 Jacobian 1/2 as the Bessel
    form.
    """
    c = complex(s) * rho / (1.0 - rho)
    pref = 0.5 * math.sqrt((1.0 - rho) * model.range_scale)

    def integrand(u, part):
        su2 = math.sin(u) ** 2
        val = (1.0 - np.exp(-c * su2)) / su2
        return val.real if part == 0 else val.imag

    out = 0.0 + 0.0j
    for part in (0, 1):
        res = quad(integrand, 0.0, np.pi / 2.0, args=(part,),
                   epsabs=1e-300, epsrel=rel_tol, limit=400, full_output=1)
        val, err = res[0], res[1]
        if err > max(100 * rel_tol * abs(val), 1e-11):
            raise QuadratureError(
                f"alpha=4 quadrature stalled (error estimate {err:.2e})",
                error_estimate=err)
        out += val if part == 0 else 1j * val
    return pref * out


def laplace_shotnoise(rho, s, model: AnalyticModel,
                      quad_settings: QuadratureSettings = None) -> complex:
    """Laplace transform L(s) of the shot noise J(rho) at the origin.

    Valid for Re(s) >= 0 or purely imaginary s.  Exactly 1 at s = 0 or
    rho = 0.
    """
    quad_settings = quad_settings or QuadratureSettings()
    if not 0 <= rho <= 1:
        raise ParameterError("rho must be in [0, 1]")
    s = complex(s)
    if s.real < -1e-12:
        raise ParameterError("transform defined for Re(s) >= 0")
    if rho == 0 or s == 0 or model.intensity == 0:
        return 1.0 + 0.0j
    if rho == 1.0:
        expo = complex(_atom_exponent(s, model))
    else:
        expo = complex(_radial_exponent_quad(
            rho, s, model, quad_settings.radial_rel_tol))
    return complex(np.exp(-2.0 * np.pi * model.intensity * expo))


def laplace_shotnoise_alpha4(rho, s, model: AnalyticModel,
                             quad_settings: QuadratureSettings = None) -> complex:
    """alpha = 4 transform via the one-dimensional simplified integral.

    Requires rho < 1 (the simplification degenerates there; use
    ``laplace_shotnoise``, whose generic integral is well defined at
    rho = 1).
    """
    quad_settings = quad_settings or QuadratureSettings()
    if model.alpha != 4.0:
        raise ParameterError("closed form requires alpha = 4")
    if not 0 <= rho < 1:
        return laplace_shotnoise(rho, s, model, quad_settings)
    s = complex(s)
    if s.real < -1e-12:
        raise ParameterError("transform defined for Re(s) >= 0")
    if rho == 0 or s == 0 or model.intensity == 0:
        return 1.0 + 0.0j
    expo = _alpha4_exponent_trig_quad(rho, s, model,
                                      quad_settings.radial_rel_tol)
    return complex(np.exp(-2.0 * np.pi * model.intensity * expo))


# ---------------------------------------------------------------------------
# Contour inversion engine
# ---------------------------------------------------------------------------

@dataclass
class _Panel:
    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray
    values: np.ndarray     # L(i w) at the nodes
    val_end: complex       # L(i b)


class ShotNoiseLaw:
    """Evaluates P(J(rho) <= x) with per-rho caching of L(iw) panels.

    The transform values along the contour depend only on rho, so curves,
    conditional curves at many distances, and the mean-utility radial
    integral all reuse one cache.
    """

    _PANEL_LEN = 6.0 * np.pi
    _NODES = 80
    _CHECK_NODES = 56
    _MAX_DEPTH = 9

    def __init__(self, model: AnalyticModel,
                 quad_settings: QuadratureSettings = None,
                 method: str = "auto"):
        if method not in ("auto", "generic"):
            raise ParameterError(f"unknown method {method!r}")
        self.model = model
        self.quad = quad_settings or QuadratureSettings()
        self.method = method
        self._panels = {}          # rho -> list[_Panel]
        self._real_exponent_cache = {}

    # -- transform evaluation ------------------------------------------

    def charfn(self, rho, w):
        """L(iw) for an array of w >= 0."""
        w = np.asarray(w, dtype=float)
        model = self.model
        if rho == 0 or model.intensity == 0:
            return np.ones(w.shape, dtype=complex)
        if rho == 1.0:
            expo = _atom_exponent(1j * w, model)
        elif model.alpha == 4.0 and self.method == "auto":
            expo = _alpha4_exponent_bessel(rho, 1j * w, model)
        else:
            expo = np.array([_radial_exponent_quad(
                rho, 1j * float(wi), model, self.quad.radial_rel_tol)
                for wi in w.reshape(-1)], dtype=complex).reshape(w.shape)
        return np.exp(-2.0 * np.pi * model.intensity * expo)

    def _exponent_derivative(self, rho, w):
        """d/dw log L(iw) where a closed form exists, else None.

        Used for the second-order truncation tail: with g = log L slowly
        varying, int_W^inf e^{iwx} L(iw)/w dw ~ L(iW) e^{-g'W} E1(-(ix+g')W).
        For alpha = 4 the derivative follows from F'(c) = e^{-c/2} I0(c/2)
        of the Bessel antiderivative; at rho = 1 from the stable-law form.
        """
        model = self.model
        lam2pi = 2.0 * np.pi * model.intensity
        if rho == 0 or model.intensity == 0:
            return np.zeros(np.shape(w), dtype=complex)
        R = model.range_scale
        if rho == 1.0:
            e = 2.0 / model.alpha
            coef = 0.5 * gamma_fn(1.0 - e) * (1j * R) ** e
            return -lam2pi * coef * e * np.asarray(w) ** (e - 1.0)
        if model.alpha == 4.0:
            y = np.asarray(w) * rho / (1.0 - rho)
            fprime = np.exp(-0.5j * y) * jv(0, y / 2.0)
            didw = 0.5 * math.sqrt((1.0 - rho) * R) * (np.pi / 2.0) \
                * fprime * (1j * rho / (1.0 - rho))
            return -lam2pi * didw
        return None

    def _tail_estimate(self, rho, x, panel):
        """Estimated Im of the dropped integral beyond the panel end."""
        W = panel.b
        gp = self._exponent_derivative(rho, np.array([W]))
        g1 = 0.0 + 0.0j if gp is None else complex(gp[0])
        zeta = -(1j * x + g1) * W
        val = panel.val_end * np.exp(-g1 * W) * exp1(zeta)
        if not np.isfinite(val.real) or not np.isfinite(val.imag):
            val = panel.val_end * exp1(-1j * x * W)
        return float(val.imag)

    def _real_laplace_exponent(self, rho, s_real):
        key = (rho, s_real)
        if key in self._real_exponent_cache:
            return self._real_exponent_cache[key]
        model = self.model
        if rho == 1.0:
            expo = float(_atom_exponent(s_real, model).real)
        elif model.alpha == 4.0 and s_real < 2000.0:
            expo = float(_alpha4_exponent_bessel(
                rho, np.array(s_real, dtype=complex), model).real)
        else:
            expo = float(_radial_exponent_quad(
                rho, s_real, model, 1e-9).real)
        self._real_exponent_cache[key] = expo
        return expo

    # -- panel construction ----------------------------------------------

    def _x1_contribution(self, nodes, values, weights):
        return float((weights * np.imag(values * np.exp(1j * nodes))
                      / nodes).sum())

    def _make_panel(self, rho, a, b, depth=0):
        nodes, weights = _gl_nodes(self._NODES, a, b)
        values = self.charfn(rho, nodes)
        cn, cw = _gl_nodes(self._CHECK_NODES, a, b)
        cvals = self.charfn(rho, cn)
        err = abs(self._x1_contribution(nodes, values, weights)
                  - self._x1_contribution(cn, cvals, cw))
        if err > 0.1 * self.quad.contour_rel_tol and depth < self._MAX_DEPTH:
            mid = 0.5 * (a + b)
            return (self._make_panel(rho, a, mid, depth + 1)
                    + self._make_panel(rho, mid, b, depth + 1))
        val_end = complex(self.charfn(rho, np.array([b]))[0])
        return [_Panel(a, b, nodes, weights, values, val_end)]

    def _first_panels(self, rho):
        """Geometric subdivision of (0, PANEL_LEN]: the integrand can carry
        an integrable w^{2/alpha - 1} singularity at 0 when rho = 1."""
        edges = [self._PANEL_LEN * 2.0 ** (-k) for k in range(40, -1, -1)]
        panels = []
        lo = 0.0
        for hi in edges:
            panels.extend(self._make_panel(rho, lo, hi))
            lo = hi
        return panels

    def _panel_source(self, rho):
        key = float(rho)
        cache = self._panels.setdefault(key, [])
        i = 0
        while True:
            if i >= len(cache):
                a = cache[-1].b if cache else 0.0
                if a >= self.quad.contour_w_max:
                    return
                if not cache:
                    cache.extend(self._first_panels(rho))
                else:
                    cache.extend(self._make_panel(
                        rho, a, a + self._PANEL_LEN))
            yield cache[i]
            i += 1

    # -- inversion ---------------------------------------------------------

    def cdf_at(self, rho, x) -> float:
        """P(J(rho) <= x) for x in (0, 1] (and any x > 0)."""
        if x <= 0.0:
            return 0.0
        if rho == 0 or self.model.intensity == 0:
            return 1.0
        # Chernoff shortcut: P(J <= x) <= e * L(1/x)
        if x < 0.02:
            bound = 2.0 * np.pi * self.model.intensity \
                * self._real_laplace_exponent(rho, 1.0 / x)
            if bound - 1.0 > 46.0:          # e * exp(1 - bound) < 3e-20
                return 0.0
        tol = self.quad.contour_rel_tol
        # the asymptotic tail estimate is trustworthy only once the phase
        # x*w has turned over many times
        w_min = 30.0 / x
        acc = 0.0
        est = prev_est = None
        stable = 0
        last_change = np.inf
        for panel in self._panel_source(rho):
            phase = np.exp(1j * panel.nodes * x)
            acc += float((panel.weights
                          * np.imag(panel.values * phase) / panel.nodes).sum())
            if panel.b < w_min and abs(panel.val_end) >= 1e-16:
                continue
            est = acc + self._tail_estimate(rho, x, panel)
            if abs(panel.val_end) < 1e-16:
                return 0.5 + est / np.pi
            if prev_est is not None:
                last_change = abs(est - prev_est)
                stable = stable + 1 if last_change <= 0.25 * tol else 0
                if stable >= 2:
                    return 0.5 + est / np.pi
            prev_est = est
        raise QuadratureError(
            f"contour truncated at w = {self.quad.contour_w_max:g} without "
            f"meeting tolerance {tol:g} (last change {last_change:.2e})",
            error_estimate=last_change)

    def ccdf(self, rho) -> float:
        """P(p0 > rho) = P(J(rho) < 1) for rho < 1; the atom P(p0 = 1) at
        rho = 1."""
        return self.cdf_at(rho, 1.0)

    def ccdf_given_receiver_distance(self, rho, distance) -> float:
        """MAP law of a node at deterministic distance from the tagged
        receiver: one extra response term shifts the threshold."""
        v = float(response(rho, distance, self.model))
        return self.cdf_at(rho, 1.0 - v)

    def ccdf_given_transmitter_distance(self, rho, distance) -> float:
        """Two-point law at transmitter-transmitter distance r: the tagged
        receiver sits at angle phi, uniform; average the receiver-distance
        law over the circle."""
        r0 = self.model.link_distance
        nodes, weights = _gl_nodes(self.quad.phi_nodes, 0.0, np.pi)
        d = np.sqrt(distance ** 2 + r0 ** 2
                    - 2.0 * distance * r0 * np.cos(nodes))
        vals = np.array([self.cdf_at(rho, 1.0 - float(
            response(rho, di, self.model))) for di in d])
        return float((weights * vals).sum() / np.pi)


def _clamp_probability(value, tol, context):
    if -tol <= value <= 1.0 + tol:
        return min(max(value, 0.0), 1.0)
    raise NumericalError(
        f"{context} = {value!r} outside [0, 1] beyond tolerance {tol:g}; "
        "raise contour_w_max or tighten radial_rel_tol")


def map_ccdf(rho, model: AnalyticModel,
             quad_settings: QuadratureSettings = None,
             law: ShotNoiseLaw = None) -> float:
    """P(p0 > rho) for the typical node (Fourier inversion of the
    shot-noise law)."""
    if not 0 <= rho <= 1:
        raise ParameterError("rho must be in [0, 1]")
    law = law or ShotNoiseLaw(model, quad_settings)
    value = law.ccdf(rho)
    tol = max(1e-7, 100.0 * law.quad.contour_rel_tol)
    return _clamp_probability(value, tol, f"map_ccdf({rho})")


def conditional_map_ccdf(rho, distance_r, model: AnalyticModel,
                         quad_settings: QuadratureSettings = None,
                         reference: str = "transmitter",
                         law: ShotNoiseLaw = None) -> float:
    """MAP ccdf of a node conditioned on the typical node nearby.

    reference="transmitter": distance_r separates the two transmitters and
    the tagged receiver's angle is averaged (the two-point law).
    reference="receiver": distance_r separates the node from the tagged
    receiver, so the extra interfered receiver is at a known distance (the
    kernel of the mean-utility formula).
    """
    if distance_r < 0:
        raise ParameterError("distance_r must be >= 0")
    if not 0 <= rho <= 1:
        raise ParameterError("rho must be in [0, 1]")
    if reference not in ("transmitter", "receiver"):
        raise ParameterError(f"unknown reference {reference!r}")
    law = law or ShotNoiseLaw(model, quad_settings)
    if reference == "transmitter":
        value = law.ccdf_given_transmitter_distance(rho, distance_r)
    else:
        value = law.ccdf_given_receiver_distance(rho, distance_r)
    tol = max(1e-7, 100.0 * law.quad.contour_rel_tol)
    return _clamp_probability(
        value, tol, f"conditional_map_ccdf({rho}, r={distance_r})")


def map_ccdf_curve(model: AnalyticModel,
                   quad_settings: QuadratureSettings = None,
                   conditional_distance: Optional[float] = None,
                   reference: str = "transmitter",
                   law: ShotNoiseLaw = None) -> CdfCurve:
    """Full ccdf curve on the configured rho grid plus the atom at 1."""
    law = law or ShotNoiseLaw(model, quad_settings)
    grid = law.quad.rho_grid
    if conditional_distance is None:
        vals = np.array([map_ccdf(r, model, law=law) for r in grid])
        atom = map_ccdf(1.0, model, law=law)
    else:
        vals = np.array([conditional_map_ccdf(
            r, conditional_distance, model, reference=reference, law=law)
            for r in grid])
        atom = conditional_map_ccdf(1.0, conditional_distance, model,
                                    reference=reference, law=law)
    return CdfCurve(rho=grid.copy(), ccdf=vals, atom_at_one=atom)


def map_pdf_on_grid(model: AnalyticModel,
                    quad_settings: QuadratureSettings = None,
                    conditional_distance: Optional[float] = None,
                    reference: str = "transmitter",
                    law: ShotNoiseLaw = None,
                    curve: Optional[CdfCurve] = None) -> DiscreteMeasure:
    """Stieltjes measure (bin decrements of the ccdf plus the atom at 1).

    Small negative decrements from quadrature noise are clamped to zero;
    decrements below the tolerance raise a numerical failure.
    """
    law = law or ShotNoiseLaw(model, quad_settings)
    if curve is None:
        curve = map_ccdf_curve(model, conditional_distance=conditional_distance,
                               reference=reference, law=law)
    grid = curve.rho
    vals = curve.ccdf
    atom = curve.atom_at_one
    neg_tol = max(1e-4, 1000.0 * law.quad.contour_rel_tol)
    if grid[0] > 0:                          # head bin (0, grid[0]]
        full_grid = np.concatenate([[0.0], grid])
        full_vals = np.concatenate([[1.0], vals, [atom]])
    else:
        full_grid = grid
        full_vals = np.concatenate([vals, [atom]])
    decr = full_vals[:-1] - full_vals[1:]
    if (decr < -neg_tol).any():
        worst = float(decr.min())
        raise NumericalError(
            f"ccdf increased by {-worst:.3e} along the grid "
            f"(tolerance {neg_tol:g})")
    decr = np.maximum(decr, 0.0)
    mids = np.concatenate([(full_grid[:-1] + full_grid[1:]) / 2.0,
                           [(full_grid[-1] + 1.0) / 2.0]])
    return DiscreteMeasure(points=mids, masses=decr, atom_at_one=atom)


@dataclass(frozen=True)
class MeanUtility:
    """Mean log-throughput of the typical node, split into its two terms."""

    map_term: float            # E log p0
    interference_term: float   # E log q0
    total: float
    radial_truncation: float   # analytic estimate of the dropped tail

    def to_json(self) -> str:
        return canonical_json({
            "map_term": self.map_term,
            "interference_term": self.interference_term,
            "total": self.total,
            "radial_truncation": self.radial_truncation,
        })


def mean_utility(model: AnalyticModel,
                 quad_settings: QuadratureSettings = None,
                 law: ShotNoiseLaw = None) -> MeanUtility:
    """E[log p0 + log q0] for the typical proportional-fair node.

    First term integrates log u against the MAP law.  Second term reduces,
    by stationarity and a shift to the tagged receiver's frame, to

        2 pi lambda int_0^inf r E_r[ log(1 - v R / (r^alpha + R)) ] dr,

    where E_r averages v over the MAP law of a node at distance r from the
    tagged receiver.  Both terms are nonpositive.  The radial integral
    truncates at spatial_r_max with an analytic tail estimate appended
    (|log(1-x)| <= 2x for the small tail responses).
    """
    law = law or ShotNoiseLaw(model, quad_settings)
    qset = law.quad
    R = model.range_scale
    lam = model.intensity

    base_curve = map_ccdf_curve(model, law=law)
    base_measure = map_pdf_on_grid(model, law=law, curve=base_curve)
    with np.errstate(divide="ignore"):
        map_term = base_measure.integrate(np.log)

    def inner(r):
        measure = map_pdf_on_grid(model, law=law, conditional_distance=r,
                                  reference="receiver")
        k = R / (r ** model.alpha + R)
        return measure.integrate(lambda v: np.log1p(-v * k))

    # geometric panels resolve the near-field where the kernel varies fastest
    scale = R ** (1.0 / model.alpha)
    edges = [0.0]
    e = 0.25 * scale
    while e < qset.spatial_r_max:
        edges.append(e)
        e *= 1.7
    edges.append(qset.spatial_r_max)
    total2 = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        nodes, weights = _gl_nodes(16, a, b)
        vals = np.array([inner(float(r)) for r in nodes])
        total2 += float((weights * nodes * vals).sum())
    interference_term = 2.0 * np.pi * lam * total2

    # tail: log(1 - v k(r)) ~ -v k(r), with E[v] from the unconditional law
    mean_v = base_measure.mean
    tail_integral, _ = quad(
        lambda r: r * R / (r ** model.alpha + R),
        qset.spatial_r_max, np.inf, epsabs=1e-14, epsrel=1e-10)
    tail = -2.0 * np.pi * lam * mean_v * tail_integral
    interference_term += tail

    return MeanUtility(map_term=float(map_term),
                       interference_term=float(interference_term),
                       total=float(map_term + interference_term),
                       radial_truncation=float(tail))
