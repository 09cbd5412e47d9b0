import numpy as np
import pytest
from scipy.integrate import quad

from spatialoha.errors import ParameterError
from spatialoha.network import (ChannelParams, generate_realization,
                                interference_coefficients)
from spatialoha.optimize import prop_fair_global
from spatialoha.stochgeo import (AnalyticModel, QuadratureSettings,
                                 ShotNoiseLaw, conditional_map_ccdf,
                                 laplace_shotnoise, laplace_shotnoise_alpha4,
                                 map_ccdf, map_ccdf_curve, map_pdf_on_grid,
                                 mean_utility, response)

MODEL = AnalyticModel(intensity=0.25, sinr_threshold=10.0,
                      link_distance=1.0, alpha=4.0)


@pytest.fixture(scope="module")
def law():
    return ShotNoiseLaw(MODEL, QuadratureSettings())


class TestLaplaceTransform:
    def test_zero_argument_is_one(self):
        assert laplace_shotnoise(0.4, 0.0, MODEL) == 1.0
        assert laplace_shotnoise(0.0, 2.0, MODEL) == 1.0
        assert laplace_shotnoise_alpha4(0.4, 0.0, MODEL) == 1.0

    def test_empty_network_is_one(self):
        empty = AnalyticModel(intensity=0.0, sinr_threshold=10.0,
                              link_distance=1.0, alpha=4.0)
        assert laplace_shotnoise_alpha4(0.5, 1 + 2j, empty) == 1.0
        assert laplace_shotnoise(0.5, 1 + 2j, empty) == 1.0

    def test_alpha4_matches_generic(self):
        for rho, s in ((0.3, 1.0), (0.7, 1.0), (0.3, 2 + 3j), (0.7, 2 + 3j),
                       (0.5, 2j)):
            a = laplace_shotnoise(rho, s, MODEL)
            b = laplace_shotnoise_alpha4(rho, s, MODEL)
            assert abs(a - b) / abs(a) <= 1e-8

    def test_alpha4_at_rho_one_defers_to_generic(self):
        a = laplace_shotnoise_alpha4(1.0, 1.5, MODEL)
        b = laplace_shotnoise(1.0, 1.5, MODEL)
        assert a == b

    def test_characteristic_function_bounded_and_symmetric(self, law):
        w = np.linspace(0.05, 200.0, 60)
        for rho in (0.2, 0.6, 0.95, 1.0):
            vals = law.charfn(rho, w)
            assert (np.abs(vals) <= 1 + 1e-12).all()
        for rho in (0.3, 0.8):
            for wi in (0.5, 3.0, 40.0):
                lp = laplace_shotnoise(rho, 1j * wi, MODEL)
                lm = laplace_shotnoise(rho, -1j * wi, MODEL)
                assert abs(lm - np.conj(lp)) <= 1e-12

    def test_requires_nonnegative_real_part(self):
        with pytest.raises(ParameterError):
            laplace_shotnoise(0.5, -1.0, MODEL)

    def test_inversion_against_independent_quadrature(self, law):
        # slow adaptive quadrature of the inversion integrand is the oracle
        def reference(rho, x, W=2500):
            def f(w):
                val = complex(law.charfn(rho, np.array([w]))[0])
                return (val * np.exp(1j * w * x)).imag / w
            total = 0.0
            edges = np.linspace(1e-12, W, 501)
            for a, b in zip(edges[:-1], edges[1:]):
                total += quad(f, a, b, limit=200)[0]
            return 0.5 + total / np.pi

        for rho, x in ((0.3, 1.0), (0.8, 1.0), (0.5, 0.55)):
            assert law.cdf_at(rho, x) == pytest.approx(
                reference(rho, x), abs=5e-7)


class TestMapCcdf:
    def test_rho_zero_is_one(self, law):
        assert map_ccdf(0.0, MODEL, law=law) == 1.0

    def test_small_intensity_limit_everyone_transmits(self):
        tiny = AnalyticModel(intensity=1e-8, sinr_threshold=10.0,
                             link_distance=1.0, alpha=4.0)
        tiny_law = ShotNoiseLaw(tiny)
        for rho in (0.1, 0.5, 0.9):
            assert map_ccdf(rho, tiny, law=tiny_law) >= 1 - 1e-6

    def test_curve_monotone_within_tolerance(self, law):
        curve = map_ccdf_curve(MODEL, law=law)
        assert (np.diff(curve.ccdf) <= 1e-4).all()
        assert (curve.ccdf >= 0).all() and (curve.ccdf <= 1).all()
        assert curve.ccdf[0] == 1.0
        assert curve.atom_at_one <= curve.ccdf[-1] + 1e-6

    def test_scale_covariance(self):
        # r0 -> c r0 with intensity -> intensity / c^2 leaves the law alone
        c = 3.0
        scaled = AnalyticModel(intensity=0.25 / c ** 2, sinr_threshold=10.0,
                               link_distance=c, alpha=4.0)
        base_law = ShotNoiseLaw(MODEL)
        scaled_law = ShotNoiseLaw(scaled)
        for rho in (0.2, 0.5, 0.9):
            assert map_ccdf(rho, MODEL, law=base_law) == pytest.approx(
                map_ccdf(rho, scaled, law=scaled_law), abs=1e-8)

    def test_invalid_rho_rejected(self):
        with pytest.raises(ParameterError):
            map_ccdf(1.5, MODEL)


class TestConditional:
    def test_far_distance_matches_unconditional(self, law):
        for rho in (0.1, 0.4, 0.8):
            far = conditional_map_ccdf(rho, 1000.0, MODEL, law=law)
            base = map_ccdf(rho, MODEL, law=law)
            assert abs(far - base) <= 1e-3

    def test_rho_zero_is_one(self, law):
        assert conditional_map_ccdf(0.0, 1.0, MODEL, law=law) == 1.0
        assert conditional_map_ccdf(0.0, 1.0, MODEL, law=law,
                                    reference="receiver") == 1.0

    def test_nondecreasing_in_distance(self, law):
        # nodes farther from the tagged node are less suppressed
        for rho in (0.2, 0.5, 0.8):
            vals = [conditional_map_ccdf(rho, r, MODEL, law=law)
                    for r in (0.5, 1.0, 2.0, 5.0, 12.0)]
            assert (np.diff(vals) >= -1e-6).all()

    def test_receiver_reference_blocks_nearby_full_access(self, law):
        # a node sitting almost on the tagged receiver cannot have p = 1
        v = response(1.0, 0.5, MODEL)
        assert v > 1
        assert conditional_map_ccdf(1.0, 0.5, MODEL, law=law,
                                    reference="receiver") == 0.0

    def test_bad_arguments(self, law):
        with pytest.raises(ParameterError):
            conditional_map_ccdf(0.5, -1.0, MODEL, law=law)
        with pytest.raises(ParameterError):
            conditional_map_ccdf(0.5, 1.0, MODEL, law=law, reference="x")


class TestMeasure:
    def test_total_mass_is_one(self, law):
        meas = map_pdf_on_grid(MODEL, law=law)
        assert meas.total_mass == pytest.approx(1.0, abs=1e-3)
        assert (meas.masses >= 0).all()
        assert 0 <= meas.atom_at_one <= 1

    def test_atom_dominates_for_sparse_networks(self):
        sparse = AnalyticModel(intensity=0.002, sinr_threshold=10.0,
                               link_distance=1.0, alpha=4.0)
        sparse_law = ShotNoiseLaw(sparse)
        meas = map_pdf_on_grid(sparse, law=sparse_law)
        curve = map_ccdf_curve(sparse, law=sparse_law)
        # nearly everyone transmits at full access: the atom carries the
        # curve's terminal value
        assert meas.atom_at_one == pytest.approx(curve.ccdf[-1], abs=1e-3)
        assert meas.atom_at_one > 0.9

    def test_mean_matches_simulated_maps(self, law, params):
        meas = map_pdf_on_grid(MODEL, law=law)
        samples = []
        for k in range(100):
            real = generate_realization(0.25, 20.0, 1.0, seed=6000 + k)
            b = interference_coefficients(real, params)
            p = prop_fair_global(b).p
            samples.append(p[real.window_mask(0.5)])
        sim_mean = float(np.concatenate(samples).mean())
        assert meas.mean == pytest.approx(sim_mean, rel=0.02)


class TestMeanUtility:
    def test_terms_nonpositive(self, law):
        mu = mean_utility(MODEL, law=law)
        assert mu.map_term <= 0
        assert mu.interference_term <= 0
        assert mu.total == pytest.approx(mu.map_term + mu.interference_term)

    def test_small_intensity_limit_vanishes(self):
        tiny = AnalyticModel(intensity=1e-8, sinr_threshold=10.0,
                             link_distance=1.0, alpha=4.0)
        mu = mean_utility(tiny, QuadratureSettings(
            rho_grid=np.linspace(0, 0.999, 60)))
        assert -1e-3 <= mu.total <= 0

    def test_json_has_both_terms(self, law):
        mu = mean_utility(MODEL, law=law)
        import json

        doc = json.loads(mu.to_json())
        assert set(doc) >= {"map_term", "interference_term", "total"}
