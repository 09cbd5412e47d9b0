import itertools

import numpy as np
import pytest

from conftest import hand_realization
from spatialoha.errors import ParameterError
from spatialoha.network import (ChannelParams, generate_realization,
                                interference_coefficients,
                                nearest_interferer_structure)
from spatialoha.optimize import (CoolingSchedule, forced_on_mask,
                                 max_throughput_best_response,
                                 max_throughput_bruteforce,
                                 max_throughput_gibbs,
                                 max_throughput_nearest)
from spatialoha.optimize._kernels import lex_smaller
from spatialoha.rates import rate_report


def _symmetric_pair(b_value, sinr_threshold=1.0):
    """Two bipoles whose cross coefficients both equal b_value."""
    # receivers face each other: rx_0 = (1, 0), tx_1 = (1 + g, 0) with
    # rx_1 = (g, 0); both cross distances equal g
    g = (b_value * sinr_threshold) ** 0.25
    real = hand_realization([[0.0, 0.0], [1.0 + g, 0.0]], [0.0, np.pi])
    params = ChannelParams(alpha=4.0, sinr_threshold=sinr_threshold)
    b = interference_coefficients(real, params)
    assert b.b[0, 1] == pytest.approx(b_value, rel=1e-9)
    assert b.b[1, 0] == pytest.approx(b_value, rel=1e-9)
    return b


def _enumerate_best(b):
    n = b.n_nodes
    sup = b.suppression()
    best_val, best_set = -1.0, None
    for bits in itertools.product((0, 1), repeat=n):
        a = np.array(bits, dtype=float)
        active = a.astype(bool)
        factors = np.where(active[:, None], 1.0 - sup, 1.0)
        np.fill_diagonal(factors, 1.0)
        val = float(factors.prod(axis=0)[active].sum())
        if val > best_val + 1e-15:
            best_val, best_set = val, bits
    return best_val, best_set


class TestBruteforce:
    def test_single_node(self, params):
        real = hand_realization([[0.0, 0.0]], [0.0])
        b = interference_coefficients(real, params)
        rep = max_throughput_bruteforce(b)
        assert rep.p.tolist() == [1.0]
        assert rep.objective_value == pytest.approx(1.0)

    def test_weak_symmetric_interference_keeps_both(self):
        b = _symmetric_pair(100.0)
        # by hand: Theta({0,1}) = 2(1 - 1/101) = 1.980 beats singletons (1.0)
        rep = max_throughput_bruteforce(b)
        assert rep.p.tolist() == [1.0, 1.0]
        assert rep.objective_value == pytest.approx(2 * (1 - 1 / 101.0),
                                                    rel=1e-12)

    def test_strong_symmetric_interference_keeps_one(self):
        b = _symmetric_pair(0.01)
        # Theta({0,1}) = 2(1 - 1/1.01) ~ 0.0198 < Theta({0}) = 1
        rep = max_throughput_bruteforce(b)
        assert rep.p.sum() == 1.0
        assert rep.p.tolist() == [1.0, 0.0]     # lexicographically smallest
        assert rep.objective_value == pytest.approx(1.0)

    def test_matches_independent_enumeration(self, params):
        for seed in range(5):
            real = generate_realization(7 / 36.0, 6.0, 1.0, seed=seed)
            b = interference_coefficients(real, params)
            rep = max_throughput_bruteforce(b)
            best_val, _ = _enumerate_best(b)
            assert rep.objective_value == pytest.approx(best_val, abs=1e-12)

    def test_size_guard(self, params):
        real = generate_realization(25 / 100.0, 10.0, 1.0, seed=1)
        b = interference_coefficients(real, params)
        with pytest.raises(ParameterError):
            max_throughput_bruteforce(b)


class TestLexOrder:
    def test_tuple_order_cases(self):
        def mask(*idx):
            m = 0
            for i in idx:
                m |= 1 << i
            return m

        cases = [((0,), (0, 1), True),     # prefix first
                 ((0, 1), (0, 2), True),
                 ((0,), (1,), True),
                 ((0, 1), (1,), True),
                 ((2,), (0, 1), False)]
        for a, b, expect in cases:
            assert lex_smaller(mask(*a), mask(*b)) is expect
            if a != b:
                assert lex_smaller(mask(*b), mask(*a)) is (not expect)


class TestGibbs:
    def test_zero_temperature_turns_positive_gain_on(self, params):
        real = hand_realization([[0.0, 0.0]], [0.0])
        b = interference_coefficients(real, params)
        # tiny fixed temperature: the lone node's unit gain forces a = 1
        rep = max_throughput_gibbs(
            b, CoolingSchedule("fixed_temperature", 1e-4), seed=0,
            n_sweeps=3)
        assert rep.p.tolist() == [1.0]

    def test_infinite_temperature_is_fair_coin(self, small_instance):
        _, b, _ = small_instance
        rep = max_throughput_gibbs(
            b, CoolingSchedule("fixed_temperature", np.inf), seed=4,
            n_sweeps=3000, record_history=True)
        masks = rep.trace.astype(np.int64)
        bits = (masks[:, None] >> np.arange(b.n_nodes)[None, :]) & 1
        freq = bits.mean(axis=0)
        # each action resampled as Bernoulli(1/2) every sweep
        assert np.abs(freq - 0.5).max() < 4 * 0.5 / np.sqrt(len(masks))

    def test_matches_bruteforce_on_seeded_batch(self, params):
        hits = 0
        rng = np.random.default_rng(99)
        for k in range(20):
            n = int(rng.integers(4, 13))
            real = generate_realization(n / 36.0, 6.0, 1.0, seed=3000 + k)
            b = interference_coefficients(real, params)
            bf = max_throughput_bruteforce(b)
            gb = max_throughput_gibbs(b, seed=k, n_sweeps=5000)
            hits += abs(gb.objective_value - bf.objective_value) <= 1e-9
        assert hits >= 19

    def test_stationary_distribution_matches_gibbs_law(self, params):
        # at fixed temperature the chain's stationary law is
        # pi(a) ~ exp(Theta(a)/tau): chi-square on the visited profiles
        real = generate_realization(3 / 16.0, 4.0, 1.0, seed=17)
        b = interference_coefficients(real, params)
        tau = 0.7
        n_sweeps = 120_000
        rep = max_throughput_gibbs(
            b, CoolingSchedule("fixed_temperature", tau), seed=11,
            n_sweeps=n_sweeps, record_history=True)
        masks = rep.trace.astype(np.int64)[1000::12]    # burn-in, thin
        sup = b.suppression()
        logpi = np.empty(8)
        for m in range(8):
            a = np.array([(m >> k) & 1 for k in range(3)], dtype=bool)
            factors = np.where(a[:, None], 1.0 - sup, 1.0)
            np.fill_diagonal(factors, 1.0)
            logpi[m] = factors.prod(axis=0)[a].sum() / tau
        pi = np.exp(logpi - logpi.max())
        pi /= pi.sum()
        counts = np.bincount(masks, minlength=8)
        expected = pi * len(masks)
        chi2 = float(((counts - expected) ** 2 / expected).sum())
        # chi-square(7 dof) 1% critical value
        assert chi2 <= 18.48, (chi2, counts, expected)


class TestBestResponse:
    def test_lone_node_switches_on_from_zero(self, params):
        real = hand_realization([[0.0, 0.0]], [0.0])
        b = interference_coefficients(real, params)
        rep = max_throughput_best_response(b)
        assert rep.p.tolist() == [1.0]

    def test_trace_monotone_and_bounded_by_bruteforce(self, params):
        for seed in range(8):
            real = generate_realization(10 / 49.0, 7.0, 1.0, seed=seed)
            b = interference_coefficients(real, params)
            br = max_throughput_best_response(b)
            bf = max_throughput_bruteforce(b)
            assert (np.diff(br.trace) >= 0).all()
            assert br.objective_value <= bf.objective_value + 1e-12
            assert br.converged

    def test_nash_profile_is_stable(self, small_instance):
        _, b, _ = small_instance
        rep = max_throughput_best_response(b)
        again = max_throughput_best_response(b, init=rep.p)
        assert np.array_equal(again.p, rep.p)


class TestNearestVariants:
    def test_isolated_strong_pair_forced_on(self):
        # far-apart pair: b huge, the worst-case gain is positive for both
        real = hand_realization([[0.0, 0.0], [30.0, 0.0]], [np.pi / 2] * 2)
        params = ChannelParams(alpha=4.0, sinr_threshold=10.0)
        b = interference_coefficients(real, params)
        nbr = nearest_interferer_structure(real)
        assert forced_on_mask(b, nbr).all()
        rep = max_throughput_nearest(b, nbr, "static_nearest", seed=0,
                                     n_sweeps=50)
        assert rep.p.tolist() == [1.0, 1.0]

    def test_static_matches_bruteforce_of_static_objective(self, params):
        for seed in range(8):
            real = generate_realization(9 / 36.0, 6.0, 1.0, seed=100 + seed)
            b = interference_coefficients(real, params)
            nbr = nearest_interferer_structure(real)
            rep = max_throughput_nearest(b, nbr, "static_nearest",
                                         seed=seed, n_sweeps=3000)
            # 2^N enumeration of the static closest-interferer objective
            sup = b.suppression()
            idx = np.arange(9)
            best = -1.0
            for bits in itertools.product((0, 1), repeat=9):
                a = np.array(bits, dtype=float)
                val = float((a * (1 - a[nbr.c] * sup[nbr.c, idx])).sum())
                best = max(best, val)
            assert rep.objective_value == pytest.approx(best, abs=1e-9)

    def test_closest_active_beats_static_usually(self, params):
        # exact aggregate throughput comparison over gibbs seeds on one
        # instance; the refined accounting should win on most seeds
        real = generate_realization(40 / 400.0, 20.0, 1.0, seed=5)
        b = interference_coefficients(real, params)
        nbr = nearest_interferer_structure(real)
        wins = 0
        for seed in range(40):
            static = max_throughput_nearest(b, nbr, "static_nearest",
                                            seed=seed, n_sweeps=800)
            active = max_throughput_nearest(b, nbr, "closest_active",
                                            seed=seed, n_sweeps=800)
            agg_s = rate_report(static.p, b, params).aggregate
            agg_a = rate_report(active.p, b, params).aggregate
            wins += agg_a >= agg_s
        assert wins >= 32    # >= 80% of seeds

    def test_variant_validation(self, small_instance):
        _, b, nbr = small_instance
        with pytest.raises(ParameterError):
            max_throughput_nearest(b, nbr, "typo")
