import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from oracles import brute_object_bits, max_binomial_enumerated
from repalign import robustness as rb
from repalign.core import EmbeddingAgent, EmbeddingSet, NoisyAgent, SimilarityAgent, StimulusSet
from repalign.errors import InputError


def agent(x):
    return EmbeddingAgent(EmbeddingSet.from_array(np.asarray(x, dtype=float)))


class TestObjectRelative:
    def test_coincident_object_wins(self):
        x = np.random.default_rng(0).normal(size=(7, 2))
        ort = rb.object_relative_triplets(agent(x), x[3])
        ju, ku = np.triu_indices(7, 1)
        assert ort.bits[ju == 3].all()
        assert not ort.bits[ku == 3].any()

    def test_two_stimuli_single_bit(self):
        assert len(rb.object_relative_triplets(agent([[0.0], [1.0]]), [0.2])) == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_double_loop(self, seed):
        rng = np.random.default_rng(seed)
        x, e = rng.normal(size=(12, 3)), rng.normal(size=3)
        row = [float(np.linalg.norm(e - xi)) for xi in x]
        np.testing.assert_array_equal(rb.object_relative_triplets(agent(x), e).bits, brute_object_bits(row))

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            rb.object_relative_triplets(agent(np.zeros((3, 2))), [1.0, 2.0, 3.0])

    def test_similarity_row(self):
        s = np.array([[1.0, 0.2, 0.5], [0.2, 1.0, 0.1], [0.5, 0.1, 1.0]])
        ort = rb.object_relative_triplets(SimilarityAgent(StimulusSet.range(3), s), [0.9, 0.3, 0.3])
        np.testing.assert_array_equal(ort.bits, [True, True, False])
        np.testing.assert_array_equal(ort.tie_mask, [False, False, True])


class TestDomainShift:
    def test_identity_update(self):
        rng = np.random.default_rng(0)
        x = agent(rng.normal(size=(10, 2)))
        c = rng.normal(size=(3, 2))
        assert rb.domain_shift_sensitivity(x, rb.CentroidSet(c, c.copy())) == 0.0
        assert rb.domain_shift_sensitivity(x, rb.CentroidSet(c)) == 0.0

    def test_joint_translation(self):
        rng = np.random.default_rng(1)
        xs, c, v = rng.normal(size=(10, 2)), rng.normal(size=(3, 2)), np.array([0.5, 0.25])
        s = rb.domain_shift_sensitivity(agent(xs), rb.CentroidSet(c, c + v), shifted_agent=agent(xs + v))
        assert s == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            rb.CentroidSet(np.zeros((2, 2)), np.zeros((3, 2)))

    def test_counts_flipped_bits(self):
        x = agent([[0.0], [1.0], [2.0]])
        # moving the centroid from near 0 to near 2 flips every pair
        s = rb.domain_shift_sensitivity(x, rb.CentroidSet([[-0.1]], [[2.1]]))
        assert s == 1.0

    def test_mean_over_draws(self):
        rng = np.random.default_rng(2)
        c = rng.normal(size=(2, 2))
        cents = rb.CentroidSet(c, c + 0.3)
        draws = [agent(rng.normal(size=(8, 2))) for _ in range(4)]
        mean, per = rb.mean_domain_shift_sensitivity(draws, cents)
        assert per.shape == (4,) and mean == pytest.approx(per.mean())
        with pytest.raises(InputError):
            rb.mean_domain_shift_sensitivity([], cents)

    def test_sweep_grows(self):
        mags = np.linspace(0, 0.45, 10)
        rows = rb.perturbation_sweep(mags, trials=30, seed=0)
        means = [r["mean_sensitivity"] for r in rows]
        assert sps.spearmanr(mags, means).statistic > 0.9
        assert means[0] == 0.0


class TestAdversarial:
    def test_identical_agents(self):
        rng = np.random.default_rng(0)
        a = agent(rng.normal(size=(6, 2)))
        choice = rb.select_adversarial(list(rng.normal(size=(5, 2))), a, a)
        assert choice.index == 0 and choice.disagreement == 0

    def test_crafted_candidate_found(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(10, 2))
        a = agent(x)
        b = NoisyAgent(a, 0.4, 3)
        grid = rng.uniform(-3, 3, size=(400, 2))
        counts = [rb._ort_disagreement(a, b, g) for g in grid]
        crafted = grid[int(np.argmax(counts))]
        assert max(counts) > 0
        choice = rb.select_adversarial([x[0], crafted], a, b)
        assert choice.index == 1 and choice.disagreement == max(counts)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 12), st.integers(1, 50), st.integers(0, 2**31 - 1))
    def test_matches_brute_force(self, n, pool_size, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(n, 2))
        a, b = agent(x), agent(x + 0.5 * rng.normal(size=x.shape))
        pool = rng.normal(size=(pool_size, 2))
        counts = []
        for e in pool:
            ra = [float(np.linalg.norm(e - xi)) for xi in a.embedding.coords]
            rb_ = [float(np.linalg.norm(e - xi)) for xi in b.embedding.coords]
            counts.append(int((brute_object_bits(ra) != brute_object_bits(rb_)).sum()))
        best = max(range(pool_size), key=lambda i: (counts[i], -i))
        choice = rb.select_adversarial(pool, a, b)
        assert choice.index == best and choice.disagreement == counts[best]
        assert choice.disagreement <= n * (n - 1) // 2

    def test_empty_pool(self):
        a = agent(np.zeros((3, 1)))
        with pytest.raises(InputError):
            rb.select_adversarial([], a, a)


class TestOrderStatistic:
    def test_single_variable_mean(self):
        for N, p in [(20, 0.3), (7, 0.9), (100, 0.01)]:
            assert rb.expected_max_binomial(N, p, 1) == pytest.approx(N * p, rel=1e-12)

    def test_enumerated(self):
        assert rb.expected_max_binomial(1, 0.5, 2) == pytest.approx(0.75, abs=1e-15)
        for N, p, k in [(3, 0.4, 3), (5, 0.2, 2), (4, 0.7, 4)]:
            assert rb.expected_max_binomial(N, p, k) == pytest.approx(max_binomial_enumerated(N, p, k), rel=1e-12)

    def test_logcdf_matches_scipy(self):
        ref = sps.binom.logcdf(np.arange(191), 190, 0.1)
        np.testing.assert_allclose(rb.binomial_logcdf(190, 0.1), ref, atol=1e-12)

    @settings(max_examples=60)
    @given(st.integers(1, 300), st.floats(0.0, 1.0), st.integers(1, 30))
    def test_bounds_and_monotone(self, N, p, k):
        v = rb.expected_max_binomial(N, p, k)
        assert N * p - 1e-9 <= v <= N + 1e-9
        assert rb.expected_max_binomial(N, p, k + 1) >= v - 1e-9
        assert rb.expected_max_binomial(N + 1, p, k) >= v - 1e-9
        assert rb.expected_max_binomial(N, min(1.0, p + 0.01), k) >= v - 1e-9

    def test_edge_probabilities(self):
        assert rb.expected_max_binomial(10, 0.0, 3) == 0.0
        assert rb.expected_max_binomial(10, 1.0, 3) == 10.0

    def test_large_n(self):
        assert rb.expected_max_binomial(100_000, 0.5, 2) > 50_000

    @pytest.mark.parametrize("args", [(0, 0.5, 1), (100_001, 0.5, 1), (5, 1.5, 1), (5, 0.5, 0)])
    def test_range_errors(self, args):
        with pytest.raises(InputError):
            rb.expected_max_binomial(*args)

    def test_monotonicity_table(self):
        rows = rb.adversarial_monotonicity_check([0.01, 0.1, 0.3, 0.6, 0.9], trials=500, seed=1)
        f = [r["formula_expectation"] for r in rows]
        e = [r["empirical_mean"] for r in rows]
        assert (np.diff(f) > 0).all() and (np.diff(e) > 0).all()
        for r in rows:
            assert abs(r["formula_expectation"] - r["empirical_mean"]) <= 3 * max(r["empirical_stderr"], 1e-3)
        assert tuple(rows[0]) == rb.ADVERSARIAL_COLUMNS

    def test_small_eps_limit(self):
        r = rb.adversarial_monotonicity_check([1e-9], trials=10, seed=0)[0]
        assert r["formula_expectation"] < 1e-5 and r["empirical_mean"] == 0.0

    def test_grid_open_interval(self):
        with pytest.raises(InputError):
            rb.adversarial_monotonicity_check([0.0, 0.5])


class TestFlipOrder:
    def test_flip_fraction_ordered_by_information(self):
        rows = rb.flip_order_check([0.05, 0.25, 0.5, 0.75, 0.95], trials=8, budget=100, particles=300, seed=0)
        f = {r["epsilon"]: r["mean_flip_fraction"] for r in rows}
        assert f[0.05] < f[0.25] < f[0.5]
        assert f[0.95] < f[0.75] < f[0.5]
