import numpy as np
import pytest

from repalign import fewshot, synth
from repalign.core import EmbeddingAgent, InvertedAgent, SimilarityAgent, StimulusSet
from repalign.errors import InputError, NumericError


def central_difference(f, params, h=1e-6):
    grad = np.zeros_like(params)
    for idx in np.ndindex(params.shape):
        up, dn = params.copy(), params.copy()
        up[idx] += h
        dn[idx] -= h
        grad[idx] = (f(up) - f(dn)) / (2 * h)
    return grad


class TestProbe:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(25, 3))
        y = rng.integers(0, 4, size=25)
        Y = np.eye(4)[y]
        worst = 0.0
        for _ in range(10):
            W, b = rng.normal(size=(4, 3)), rng.normal(size=4)
            _, gW, gb = fewshot.probe_loss_and_grad(W, b, X, Y, 0.01)
            nW = central_difference(lambda w: fewshot.probe_loss_and_grad(w, b, X, Y, 0.01)[0], W)
            nb = central_difference(lambda v: fewshot.probe_loss_and_grad(W, v, X, Y, 0.01)[0], b)
            g, n = np.concatenate([gW.ravel(), gb]), np.concatenate([nW.ravel(), nb])
            worst = max(worst, np.linalg.norm(g - n) / np.linalg.norm(n))
        assert worst < 1e-5

    def test_separable_one_shot(self):
        probe = fewshot.train_linear_probe([[-1.0], [1.0]], [0, 1])
        assert probe.accuracy([[-1.0], [1.0]], [0, 1]) == 1.0
        assert list(probe.predict([[-5.0], [0.3], [7.0]])) == [0, 1, 1]

    def test_contradictory_labels(self):
        X = [[0.0], [0.0], [1.0], [1.0]]
        probe = fewshot.train_linear_probe(X, [0, 1, 0, 1])
        assert probe.accuracy([[0.0], [0.0]], [0, 1]) == 0.5
        assert probe.loss_history.min() >= np.log(2) - 1e-12

    def test_loss_nonincreasing_every_epoch(self):
        for seed in range(5):
            emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(seed=seed))
            probe = fewshot.train_linear_probe(emb.coords, labels)
            assert probe.loss_history.size == fewshot.ProbeConfig().epochs + 1
            assert (np.diff(probe.loss_history) <= 1e-12).all()

    def test_bit_reproducible(self):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(seed=1))
        a = fewshot.train_linear_probe(emb.coords, labels)
        b = fewshot.train_linear_probe(emb.coords, labels)
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.biases, b.biases)

    def test_empty_class(self):
        with pytest.raises(InputError, match="classes without"):
            fewshot.train_linear_probe([[0.0], [1.0]], [0, 2], k=3)

    def test_non_finite_loss_reports_epoch(self):
        cfg = fewshot.ProbeConfig(learning_rate=1e308, epochs=5)
        with pytest.raises(NumericError, match="epoch"):
            fewshot.train_linear_probe([[-1.0], [1.0], [2.0]], [0, 1, 1], config=cfg)

    @pytest.mark.parametrize("kw", [{"learning_rate": 0}, {"epochs": 0}, {"l2_penalty": -1}])
    def test_config_validation(self, kw):
        with pytest.raises(InputError):
            fewshot.ProbeConfig(**kw)


class TestNShot:
    def test_well_separated_clusters(self):
        accs = []
        for seed in range(20):
            emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=20, separation=10.0, seed=seed))
            accs.append(fewshot.evaluate_nshot(EmbeddingAgent(emb), labels, 5, seed=seed))
        assert np.mean(accs) > 0.95

    def test_permuted_labels_are_chance(self):
        accs = []
        for seed in range(20):
            emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=20, seed=seed))
            shuffled = np.random.default_rng(seed).permutation(labels)
            accs.append(fewshot.evaluate_nshot(emb, shuffled, 5, seed=seed))
        assert abs(np.mean(accs) - 0.25) < 0.05

    def test_more_shots_help(self):
        lo, hi = [], []
        for seed in range(20):
            emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=15, separation=3.0, seed=seed))
            lo.append(fewshot.evaluate_nshot(emb, labels, 1, seed=seed))
            hi.append(fewshot.evaluate_nshot(emb, labels, 14, seed=seed))
        assert np.mean(hi) >= np.mean(lo)

    def test_class_too_small(self):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=3))
        with pytest.raises(InputError, match="class"):
            fewshot.evaluate_nshot(emb, labels, 3)

    def test_row_order_invariance(self):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=10, separation=2.0, seed=2))
        idx = fewshot.sample_shots(labels, 2, 7)
        perm = np.random.default_rng(0).permutation(labels.size)
        inv = np.argsort(perm)
        X, Xp = emb.coords, emb.coords[perm]
        a = fewshot.evaluate_split(X, labels, idx)
        b = fewshot.evaluate_split(Xp, labels[perm], inv[idx])
        assert a == b

    def test_needs_embedding(self):
        s = np.random.default_rng(0).normal(size=(6, 6))
        sim = SimilarityAgent(StimulusSet.range(6), s + s.T)
        with pytest.raises(InputError, match="embedding"):
            fewshot.evaluate_nshot(sim, [0, 0, 0, 1, 1, 1], 1)

    def test_inverted_uses_base_coordinates(self):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=8, seed=0))
        base = EmbeddingAgent(emb)
        assert fewshot.evaluate_nshot(InvertedAgent(base), labels, 2, seed=1) == fewshot.evaluate_nshot(base, labels, 2, seed=1)


class TestExperiment:
    @pytest.fixture(scope="class")
    @classmethod
    def result(cls):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(seed=0))
        return fewshot.ushape_fsl_experiment(emb, labels, [0.0, 0.5, 8.0, 64.0], shots=(1, 5), trials=4, seed=0)

    def test_columns_and_rows(self, result):
        assert all(tuple(r) == fewshot.FSL_COLUMNS for r in result.rows)
        assert len(result.rows) == 5 * 2

    def test_noise_free_student_equals_reference(self, result):
        row = next(r for r in result.rows if r["agent_id"] == "noise_0" and r["shot"] == 1)
        assert row["triplet_alignment"] == 1.0
        inv = next(r for r in result.rows if r["agent_id"] == "inverted" and r["shot"] == 1)
        assert row["mean_accuracy"] == inv["mean_accuracy"]

    def test_deterministic(self, result):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(seed=0))
        again = fewshot.ushape_fsl_experiment(emb, labels, [0.0, 0.5, 8.0, 64.0], shots=(1, 5), trials=4, seed=0)
        assert again.rows == result.rows

    def test_empty_grid(self):
        emb, labels = synth.gen_clustered_embedding(synth.SynthSpec(n_per_class=4))
        with pytest.raises(InputError):
            fewshot.ushape_fsl_experiment(emb, labels, [])
