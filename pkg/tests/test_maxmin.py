import numpy as np
import pytest

from conftest import hand_realization
from spatialoha.network import (ChannelParams, generate_realization,
                                interference_coefficients,
                                nearest_interferer_structure)
from spatialoha.optimize import (StepSchedule, connected_components,
                                 max_min_global, max_min_nearest,
                                 prop_fair_global)
from spatialoha.optimize.maxmin import _weighted_p_update
from spatialoha.rates import nearest_success_probability, rate_report


def _symmetric_pair(b_value, sinr_threshold=10.0):
    g = (b_value * sinr_threshold) ** 0.25
    real = hand_realization([[0.0, 0.0], [1.0 + g, 0.0]], [0.0, np.pi])
    params = ChannelParams(alpha=4.0, sinr_threshold=sinr_threshold)
    return real, interference_coefficients(real, params), params


class TestGlobal:
    def test_symmetric_pair_equalizes(self):
        real, b, params = _symmetric_pair(0.5)
        rep = max_min_global(b, tol=1e-7, max_iter=20000)
        assert rep.converged
        assert rep.p[0] == pytest.approx(rep.p[1], abs=1e-6)
        rr = rate_report(rep.p, b, params)
        assert rr.rate[0] == pytest.approx(rr.rate[1], rel=1e-6)
        # the symmetric stationarity condition reduces to p = 1 + b - p
        assert rep.p[0] == pytest.approx((1 + 0.5) / 2, abs=1e-4)

    def test_five_node_rates_equalize(self, params):
        real = generate_realization(5 / 25.0, 5.0, 1.0, seed=31)
        b = interference_coefficients(real, params)
        rep = max_min_global(b, tol=1e-5, max_iter=30000)
        rr = rate_report(rep.p, b, params)
        spread = (rr.rate.max() - rr.rate.min()) / rr.rate.min()
        assert spread <= 1e-2
        assert rep.converged

    def test_min_rate_dominates_proportional_fair(self, params):
        for seed in (0, 1, 2):
            real = generate_realization(5 / 25.0, 5.0, 1.0, seed=seed)
            b = interference_coefficients(real, params)
            mm = rate_report(max_min_global(b, tol=1e-5,
                                            max_iter=30000).p, b, params)
            pf = rate_report(prop_fair_global(b).p, b, params)
            assert mm.min_rate >= pf.min_rate

    def test_feasibility_at_solution(self, params):
        real = generate_realization(6 / 25.0, 5.0, 1.0, seed=12)
        b = interference_coefficients(real, params)
        rep = max_min_global(b, tol=1e-5, max_iter=30000)
        theta = float(rep.dual.theta)
        assert (theta <= rep.dual.log_rates + 1e-5).all()
        assert theta == pytest.approx(-rep.dual.lam.sum(), abs=1e-12)
        assert (rep.dual.lam >= 0).all()

    def test_nonconvergence_reported_not_raised(self, params):
        real = generate_realization(6 / 25.0, 5.0, 1.0, seed=12)
        b = interference_coefficients(real, params)
        rep = max_min_global(b, tol=1e-12, max_iter=5)
        assert not rep.converged
        assert rep.p.shape == (6,)

    def test_zero_multiplier_p_update(self, params):
        real = generate_realization(4 / 16.0, 4.0, 1.0, seed=3)
        b = interference_coefficients(real, params)
        coeffs = 1.0 + b.b
        wsrc = np.tile(np.arange(4), (4, 1))
        wsrc[np.arange(4), np.arange(4)] = -1
        lam = np.array([0.0, 0.5, 0.5, 0.5])
        p = _weighted_p_update(lam, coeffs, wsrc, 1e-9)
        assert p[0] == 0.0          # limit reading of the update condition
        lam_all_zero = np.zeros(4)
        p = _weighted_p_update(lam_all_zero, coeffs, wsrc, 1e-9)
        assert (p == 1.0).all()


class TestNearest:
    def test_symmetric_pair_equalizes(self):
        real, b, params = _symmetric_pair(0.5)
        nbr = nearest_interferer_structure(real)
        rep = max_min_nearest(b, nbr, tol=1e-7, max_iter=20000)
        assert rep.p[0] == pytest.approx(rep.p[1], abs=1e-5)
        rates = rep.p * nearest_success_probability(rep.p, b, nbr)
        assert rates[0] == pytest.approx(rates[1], rel=1e-5)

    def test_connected_instance_thetas_equalize(self, params):
        # 4 nodes on a tight line: the nearest-interferer link graph is
        # connected, so the theta_i <= theta_j constraints force equality.
        # theta mass flows along the chain through the edge multipliers; a
        # constant step keeps that contraction from being starved by the
        # diminishing default schedule
        real = hand_realization([[i * 1.5, 0.0] for i in range(4)],
                                [np.pi / 2] * 4, region_side=10.0)
        b = interference_coefficients(real, params)
        nbr = nearest_interferer_structure(real)
        comps, _ = connected_components(nbr)
        assert len(comps) == 1
        rep = max_min_nearest(b, nbr,
                              step_schedule=StepSchedule("constant", 0.1),
                              tol=1e-6, max_iter=30000)
        assert rep.converged
        th = rep.dual.theta
        assert float(th.max() - th.min()) <= 1e-4

    def test_two_clusters_decompose(self, params):
        # two well-separated pairs: per-cluster solution matches an
        # independent run on each cluster alone
        pos = [[0.0, 0.0], [1.6, 0.0], [80.0, 0.0], [81.4, 0.0]]
        real = hand_realization(pos, [np.pi / 2] * 4, region_side=100.0)
        b = interference_coefficients(real, params)
        nbr = nearest_interferer_structure(real)
        comps, _ = connected_components(nbr)
        assert sorted(len(c) for c in comps) == [2, 2]
        rep = max_min_nearest(b, nbr, tol=1e-7, max_iter=20000)
        for members in comps:
            sub_real = hand_realization([pos[i] for i in members],
                                        [np.pi / 2] * 2, region_side=100.0)
            sub_b = interference_coefficients(sub_real, params)
            sub_nbr = nearest_interferer_structure(sub_real)
            sub = max_min_nearest(sub_b, sub_nbr, tol=1e-7, max_iter=20000)
            assert np.allclose(rep.p[members], sub.p, atol=1e-9)

    def test_mu_multipliers_present_and_nonnegative(self, params):
        real = generate_realization(6 / 25.0, 5.0, 1.0, seed=8)
        b = interference_coefficients(real, params)
        nbr = nearest_interferer_structure(real)
        rep = max_min_nearest(b, nbr, tol=1e-5, max_iter=20000)
        assert rep.dual.mu
        assert all(v >= 0 for v in rep.dual.mu.values())
        # edges run over C(i) union {c(i)}
        for (i, j) in rep.dual.mu:
            assert j == nbr.c[i] or i == nbr.c[j]


class TestStepSchedule:
    def test_inv_sqrt_shape(self):
        s = StepSchedule()
        assert s(1) == pytest.approx(0.1)
        assert s(4) == pytest.approx(0.05)
        assert StepSchedule("constant", 0.2)(9) == pytest.approx(0.2)
