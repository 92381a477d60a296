import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gpattack import algorithms as alg
from gpattack.gp import gp_fit
from gpattack.kernels import Kernel, kernel_matrix


def brute_force_gain(kernel, X, t, lam):
    """Greedy selection checked by enumerating every single-point extension."""
    chosen = []
    for _ in range(t):
        best, best_val = None, -np.inf
        for i in range(len(X)):
            if i in chosen:
                continue
            S = X[chosen + [i]]
            val = 0.5 * np.linalg.slogdet(np.eye(len(S)) + kernel_matrix(kernel, S, S) / lam)[1]
            if val > best_val + 1e-12:
                best, best_val = i, val
        chosen.append(best)
    return best_val if t else 0.0


class TestBeta:
    def test_practical_first_round(self):
        assert alg.BetaSchedule("practical")(1) == pytest.approx(0.5 * math.log(2), abs=1e-12)
        assert alg.BetaSchedule("practical")(1) == pytest.approx(0.346574, abs=1e-6)

    def test_defense_shift(self):
        assert alg.BetaSchedule("defense", defense_c=8.0)(1) == pytest.approx(8.346574, abs=1e-6)

    def test_theory_noiseless(self):
        sched = alg.BetaSchedule("theory", rkhs_bound=1.0, noise_sigma=0.0)
        assert sched(5, gamma_prev=3.7) == 1.0

    def test_theory_formula(self):
        sched = alg.BetaSchedule("theory", rkhs_bound=2.0, noise_sigma=0.5, lam=0.25, delta=0.1)
        root = 2.0 + 0.5 / 0.5 * math.sqrt(2 * (1.5 + math.log(10)))
        assert sched(3, 1.5) == pytest.approx(root**2)

    def test_rounds_start_at_one(self):
        with pytest.raises(ValueError):
            alg.BetaSchedule()(0)

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            alg.BetaSchedule("defense", defense_c=-1)
        with pytest.raises(ValueError):
            alg.BetaSchedule("theory", delta=1.5)


class TestInfoGain:
    k = Kernel("matern52", 0.3, 1.0)

    def test_zero(self):
        assert alg.empirical_info_gain(self.k, np.linspace(0, 1, 5), 0) == 0.0

    def test_single_point(self):
        assert alg.empirical_info_gain(self.k, np.linspace(0, 1, 5), 1) == pytest.approx(0.5 * math.log(2))

    def test_duplicate_candidates(self):
        X = np.zeros((2, 1))
        gain = alg.empirical_info_gain(self.k, X, 2)
        # only one 2-subset exists: log det(I + ones(2,2)) / 2
        assert gain == pytest.approx(0.5 * math.log(3))

    def test_matches_enumeration(self):
        X = np.random.default_rng(0).random((9, 2))
        for t in range(1, 5):
            assert alg.empirical_info_gain(self.k, X, t, 0.5) == pytest.approx(brute_force_gain(self.k, X, t, 0.5), rel=1e-9)

    def test_greedy_is_near_optimal(self):
        # submodularity: greedy reaches at least (1 - 1/e) of the best subset
        X = np.random.default_rng(1).random((8, 1))
        t = 3
        best = max(
            0.5 * np.linalg.slogdet(np.eye(t) + kernel_matrix(self.k, X[list(S)], X[list(S)]))[1]
            for S in itertools.combinations(range(8), t)
        )
        assert alg.empirical_info_gain(self.k, X, t) >= (1 - 1 / math.e) * best

    def test_too_many(self):
        with pytest.raises(ValueError):
            alg.info_gain_curve(self.k, np.zeros((2, 1)), 3)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 1000))
    def test_curve_nondecreasing_and_concave(self, seed):
        X = np.random.default_rng(seed).random((30, 2))
        g = alg.info_gain_curve(self.k, X, 15)
        inc = np.diff(g)
        assert np.all(inc >= -1e-12)
        assert np.all(np.diff(inc) <= 1e-9)


class TestUcb:
    cands = np.linspace(0.0, 1.0, 3)

    def state(self, X=None, y=None, algorithm="gpucb"):
        s = alg.PlayerState(algorithm, Kernel("rbf", 0.5, 1.0), self.cands, eta2=0.01)
        if X is not None:
            s.set_kernel(s.kernel, np.asarray(X, float).reshape(-1, 1), np.asarray(y, float))
        return s

    def test_prior_picks_first(self):
        assert alg.select(self.state(), 2.0) == 0

    def test_zero_beta_is_mean_argmax(self):
        s = self.state([0.9], [2.0])
        mu, _ = s.candidate_posterior()
        assert alg.ucb_select_index(s, 0.0) == int(np.argmax(mu))

    def test_matches_enumeration(self):
        s = self.state([0.1], [1.0])
        post = gp_fit(s.kernel, [[0.1]], [1.0], 0.01)
        scores = [post.predict([c])[0] + math.sqrt(1.5) * post.predict([c])[1] for c in self.cands]
        assert alg.ucb_select_index(s, 1.5) == int(np.argmax(scores))
        np.testing.assert_allclose(alg.ucb_scores(s, 1.5), scores, atol=1e-12)

    def test_wrong_algorithm(self):
        with pytest.raises(ValueError):
            alg.ucb_select(self.state(algorithm="maxvar"), 1.0)


class TestMaxVar:
    def test_prior_keeps_everything(self):
        s = alg.PlayerState("maxvar", Kernel(), np.linspace(0, 1, 6), eta2=0.01)
        x, active = alg.maxvar_elim_step(s, 1.0)
        assert len(active) == 6 and x[0] == 0.0

    def test_eliminates_dominated(self):
        cands = np.array([0.0, 10.0])
        s = alg.PlayerState("maxvar", Kernel("rbf", 0.1, 1.0), cands, eta2=1e-4)
        s.set_kernel(s.kernel, cands.reshape(-1, 1), np.array([0.0, 5.0]))
        _, active = alg.maxvar_elim_step(s, 1.0)
        assert active.tolist() == [1]

    def test_matches_bound_enumeration(self):
        cands = np.array([0.0, 0.3, 0.6, 1.0])
        k = Kernel("matern52", 0.2, 1.0)
        s = alg.PlayerState("maxvar", k, cands, eta2=0.01)
        s.observe([0.0], 2.0).observe([1.0], -1.0)
        post = gp_fit(k, [[0.0], [1.0]], [2.0, -1.0], 0.01)
        beta = 2.0
        bounds = [post.predict([c]) for c in cands]
        best_lcb = max(m - math.sqrt(beta) * sd for m, sd in bounds)
        expect = [i for i, (m, sd) in enumerate(bounds) if m + math.sqrt(beta) * sd >= best_lcb]
        idx, active = alg.maxvar_elim_index(s, beta)
        assert active.tolist() == expect
        assert idx == max(expect, key=lambda i: (bounds[i][1], -i))

    def test_active_set_never_grows(self):
        rng = np.random.default_rng(3)
        cands = np.linspace(0, 1, 50)
        s = alg.PlayerState("maxvar", Kernel("matern52", 0.2, 1.0), cands, eta2=0.01)
        sizes = []
        for t in range(1, 30):
            i = alg.select(s, 0.5 * math.log(2 * t))
            s.observe(cands[i], math.sin(6 * cands[i]) + 0.01 * rng.normal())
            sizes.append(len(s.active))
        assert all(a >= b for a, b in zip(sizes, sizes[1:])) and sizes[-1] >= 1


class TestPlayerState:
    def test_incremental_cache_matches_refit(self):
        rng = np.random.default_rng(4)
        cands = rng.random((40, 2))
        k = Kernel("matern32", 0.3, 2.0)
        s = alg.PlayerState("gpucb", k, cands, eta2=1e-3, capacity=2)
        X = rng.random((7, 2))
        y = rng.normal(size=7)
        for x, v in zip(X, y):
            s.observe(x, v)
        mu, sd = s.candidate_posterior()
        mu_o, sd_o = gp_fit(k, X, y, 1e-3).predict_many(cands)
        np.testing.assert_allclose(mu, mu_o, atol=1e-9)
        np.testing.assert_allclose(sd, sd_o, atol=1e-9)

    def test_observe_grows_training_set(self):
        s = alg.PlayerState("gpucb", Kernel(), np.linspace(0, 1, 4), eta2=0.01)
        s.observe([0.5], 1.0)
        assert s.posterior.n == 1 and s.t == 1

    def test_set_kernel_refits(self):
        s = alg.PlayerState("gpucb", Kernel(), np.linspace(0, 1, 4), eta2=0.01)
        s.observe([0.5], 1.0)
        s.set_kernel(Kernel("rbf", 0.1, 3.0))
        _, sd = s.candidate_posterior()
        _, sd_o = gp_fit(Kernel("rbf", 0.1, 3.0), [[0.5]], [1.0], 0.01).predict_many(np.linspace(0, 1, 4))
        np.testing.assert_allclose(sd, sd_o, atol=1e-10)
