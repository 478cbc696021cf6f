import math

import numpy as np
import pytest

from eegconn.errors import ConfigError, NumericError
from eegconn.tuning import (
    GaussianProcess,
    HyperParams,
    SearchSpace,
    bayes_opt,
    expected_improvement,
    hyperband,
    hyperband_schedule,
    random_search,
    sample,
)
from helpers import hyperband_schedule_brute


def lr_unit(hp):
    return (math.log(hp.learning_rate) - math.log(1e-4)) / (
        math.log(1e-2) - math.log(1e-4)
    )


class TestSample:
    def test_membership(self):
        space = SearchSpace()
        rng = np.random.default_rng(0)
        for _ in range(500):
            hp = sample(space, rng)
            assert space.contains(hp)
            assert hp.dense_units % 32 == 0 and 32 <= hp.dense_units <= 512

    def test_activation_frequencies(self):
        space = SearchSpace()
        rng = np.random.default_rng(1)
        n = 100_000
        counts = {a: 0 for a in space.activations}
        for _ in range(n):
            counts[sample(space, rng).activation] += 1
        for a in space.activations:
            assert abs(counts[a] / n - 1 / 3) < 0.01

    def test_log_uniform_learning_rate(self):
        space = SearchSpace()
        rng = np.random.default_rng(2)
        logs = [math.log(sample(space, rng).learning_rate) for _ in range(100_000)]
        target = (math.log(1e-4) + math.log(1e-2)) / 2
        assert abs(np.mean(logs) - target) < 0.02

    def test_dropout_grids(self):
        space = SearchSpace()
        rng = np.random.default_rng(3)
        seen_a, seen_b = set(), set()
        for _ in range(2000):
            hp = sample(space, rng)
            seen_a.add(hp.dropout_a)
            seen_b.add(hp.dropout_b)
        assert seen_a == set(space.dropout_a_values)
        assert seen_b == {0.0, 0.05, 0.10, 0.15, 0.20}


class TestRandomSearch:
    def test_constant_objective_tie_break(self):
        best, trials = random_search(lambda hp, r, s: 0.7, SearchSpace(), 8, 0)
        assert best.trial_id == 0
        assert len(trials) == 8

    def test_single_trial(self):
        best, trials = random_search(lambda hp, r, s: 0.5, SearchSpace(), 1, 0)
        assert len(trials) == 1 and best is trials[0]

    def test_best_is_log_max(self):
        rng_obj = np.random.default_rng(4)
        best, trials = random_search(
            lambda hp, r, s: float(np.sin(hp.learning_rate * 1000)), SearchSpace(), 30, 1
        )
        assert best.score == max(t.score for t in trials)

    def test_failure_recorded_search_continues(self):
        def flaky(hp, r, s):
            if hp.activation == "relu":
                raise RuntimeError("boom")
            return 0.5

        best, trials = random_search(flaky, SearchSpace(), 40, 2)
        assert any(t.error for t in trials)
        assert best.error is None

    def test_all_failed_raises(self):
        def broken(hp, r, s):
            raise RuntimeError("nope")

        with pytest.raises(NumericError, match="failed"):
            random_search(broken, SearchSpace(), 3, 0)

    def test_deterministic_log(self):
        obj = lambda hp, r, s: lr_unit(hp)
        _, t1 = random_search(obj, SearchSpace(), 10, 9)
        _, t2 = random_search(obj, SearchSpace(), 10, 9)
        assert [(t.hp, t.score, t.seed) for t in t1] == [
            (t.hp, t.score, t.seed) for t in t2
        ]


class TestHyperbandSchedule:
    def test_classic_bracket(self):
        brackets = hyperband_schedule(81, 3)
        s4 = dict(brackets)[4]
        assert [n for n, _ in s4] == [81, 27, 9, 3, 1]
        assert [r for _, r in s4] == [1.0, 3.0, 9.0, 27.0, 81.0]

    def test_matches_independent_enumerator(self):
        for eta in (2, 3):
            for max_resource in range(eta, 244):
                got = hyperband_schedule(max_resource, eta)
                want = hyperband_schedule_brute(max_resource, eta)
                assert len(got) == len(want)
                for (s_g, rungs_g), (s_w, rungs_w) in zip(got, want):
                    assert s_g == s_w
                    assert [n for n, _ in rungs_g] == [n for n, _ in rungs_w]
                    for (_, r_g), (_, r_w) in zip(rungs_g, rungs_w):
                        assert r_g == pytest.approx(r_w, rel=1e-12)

    def test_minimal_case_total_evaluations(self):
        log = []

        def counting(hp, r, s):
            log.append(r)
            return 0.5

        hyperband(counting, SearchSpace(), 2, 2, 0)
        assert len(log) <= 5

    def test_bad_budgets(self):
        with pytest.raises(ConfigError):
            hyperband_schedule(3, 1)
        with pytest.raises(ConfigError):
            hyperband_schedule(1, 2)


class TestHyperbandRun:
    def test_executed_rungs_match_schedule(self):
        calls = []

        def spy(hp, r, s):
            calls.append((id(hp), r))
            return lr_unit(hp)

        hyperband(spy, SearchSpace(), 81, 3, 0)
        # group call resources per bracket in execution order
        resources = [r for _, r in calls]
        want = []
        for s, rungs in hyperband_schedule(81, 3):
            for n, r in rungs:
                want.extend([int(r)] * n)
        assert resources == want

    def test_monotone_objective_keeps_bracket_max(self):
        def monotone(hp, r, s):
            return lr_unit(hp) * 0.9 + r / 1000.0

        best, trials = hyperband(monotone, SearchSpace(), 27, 3, 5)
        # the largest bracket's final-rung survivor carries its max score
        first_bracket_n = hyperband_schedule(27, 3)[0][1][0][0]
        bracket_trials = [t for t in trials if t.trial_id < first_bracket_n]
        final = max(bracket_trials, key=lambda t: t.resource)
        assert final.score == max(t.score for t in bracket_trials)

    def test_best_is_global_max(self):
        obj = lambda hp, r, s: lr_unit(hp) + r / 500.0
        best, trials = hyperband(obj, SearchSpace(), 9, 3, 7)
        assert best.score == max(t.score for t in trials)

    def test_deterministic(self):
        obj = lambda hp, r, s: lr_unit(hp)
        b1, t1 = hyperband(obj, SearchSpace(), 9, 3, 3)
        b2, t2 = hyperband(obj, SearchSpace(), 9, 3, 3)
        assert [(t.hp, t.resource, t.score) for t in t1] == [
            (t.hp, t.resource, t.score) for t in t2
        ]


class TestGaussianProcess:
    def _unit_points(self, rng, n):
        space = SearchSpace()
        return np.vstack([space.to_unit(sample(space, rng)) for _ in range(n)])

    def test_interpolates_training_points(self):
        rng = np.random.default_rng(0)
        x = self._unit_points(rng, 12)
        y = rng.normal(size=12)
        y = (y - y.mean()) / y.std()
        gp = GaussianProcess(noise=0.0).fit(x, y)
        mean, _ = gp.posterior(x)
        assert np.max(np.abs(mean - y)) < 1e-6
        # with the operating observation noise the deviation is ~noise*|y|
        gp_noisy = GaussianProcess().fit(x, y)
        mean_noisy, _ = gp_noisy.posterior(x)
        assert np.max(np.abs(mean_noisy - y)) < 1e-5

    def test_ei_zero_at_observed_point_noise_free(self):
        rng = np.random.default_rng(1)
        x = self._unit_points(rng, 6)
        y = rng.normal(size=6)
        gp = GaussianProcess(noise=0.0).fit(x, y)
        mean, var = gp.posterior(x[2:3])
        ei = expected_improvement(mean, var, float(y.max()))
        assert ei[0] == 0.0

    def test_variance_nonnegative_and_shrinks(self):
        rng = np.random.default_rng(2)
        x = self._unit_points(rng, 10)
        y = rng.normal(size=10)
        probes = self._unit_points(rng, 100)
        gp_small = GaussianProcess().fit(x[:6], y[:6])
        _, var_small = gp_small.posterior(probes)
        gp_big = GaussianProcess().fit(x, y)
        _, var_big = gp_big.posterior(probes)
        assert np.all(var_small >= 0.0)
        assert np.all(var_big <= var_small + 1e-9)

    def test_duplicate_points_survive_via_jitter_or_noise(self):
        x = np.zeros((2, 3))
        gp = GaussianProcess().fit(x, np.array([0.1, 0.1]))
        mean, var = gp.posterior(np.ones((1, 3)))
        assert np.isfinite(mean).all() and np.isfinite(var).all()


class TestBayesOpt:
    def test_beats_random_search_in_median(self):
        def objective(hp, r, s):
            return math.exp(-(((lr_unit(hp)) - 0.5) / 0.08) ** 2)

        rs_best, bo_best = [], []
        for seed in range(50):
            b, _ = random_search(objective, SearchSpace(), 20, seed)
            rs_best.append(b.score)
            b, _ = bayes_opt(objective, SearchSpace(), 5, 15, seed)
            bo_best.append(b.score)
        assert np.median(bo_best) > np.median(rs_best)

    def test_returns_best_observed(self):
        obj = lambda hp, r, s: lr_unit(hp)
        best, trials = bayes_opt(obj, SearchSpace(), 4, 6, 3)
        assert best.score == max(t.score for t in trials)
        assert len(trials) == 10

    def test_deterministic(self):
        obj = lambda hp, r, s: lr_unit(hp)
        b1, t1 = bayes_opt(obj, SearchSpace(), 3, 5, 11)
        b2, t2 = bayes_opt(obj, SearchSpace(), 3, 5, 11)
        assert [(t.hp, t.score) for t in t1] == [(t.hp, t.score) for t in t2]

    def test_failures_tolerated(self):
        def flaky(hp, r, s):
            if hp.dense_units > 384:
                raise RuntimeError("oom")
            return lr_unit(hp)

        best, trials = bayes_opt(flaky, SearchSpace(), 5, 10, 0)
        assert best.error is None

    def test_bad_budgets(self):
        with pytest.raises(ConfigError):
            bayes_opt(lambda *a: 0.5, SearchSpace(), 1, 5, 0)
        with pytest.raises(ConfigError):
            bayes_opt(lambda *a: 0.5, SearchSpace(), 3, -1, 0)
