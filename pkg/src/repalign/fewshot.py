"""n-shot transfer measured with a linear probe, and the alignment U-shape experiment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import derive_rng
from .core import Agent, EmbeddingAgent, EmbeddingSet
from .errors import InputError, NumericError
from .stats import pearson_r, z_squared
from .synth import gen_agent_family

FSL_COLUMNS = (
    "agent_id",
    "noise_scale",
    "triplet_alignment",
    "pearson_alignment",
    "spearman_alignment",
    "shot",
    "mean_accuracy",
    "std_err",
)


@dataclass(frozen=True)
class ProbeConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2_penalty: float = 1e-4

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InputError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise InputError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2_penalty < 0:
            raise InputError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


@dataclass
class LinearProbe:
    """Multinomial logistic regression on centred, isotropically rescaled features."""

    weights: np.ndarray  # (k, d)
    biases: np.ndarray  # (k,)
    mean: np.ndarray
    scale: np.ndarray
    loss_history: np.ndarray = field(repr=False)

    def decision_function(self, X) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.mean) / self.scale
        return Z @ self.weights.T + self.biases

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def accuracy(self, X, y) -> float:
        return float((self.predict(X) == np.asarray(y)).mean())


def _log_softmax(logits):
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def probe_loss_and_grad(weights, biases, X, Y, l2):
    """Mean cross-entropy plus ``l2/2 * ||W||^2`` and its gradient.

    ``Y`` is one-hot with shape (N, k).
    """
    logp = _log_softmax(X @ weights.T + biases)
    n = X.shape[0]
    loss = -(Y * logp).sum() / n + 0.5 * l2 * (weights * weights).sum()
    G = (np.exp(logp) - Y) / n
    return loss, G.T @ X + l2 * weights, G.sum(axis=0)


def train_linear_probe(X, y, k: int | None = None, config: ProbeConfig = ProbeConfig()) -> LinearProbe:
    """Full-batch gradient descent from zero initialization."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=int)
    if X.shape[0] != y.shape[0] or X.shape[0] == 0:
        raise InputError("need matching, non-empty features and labels")
    k = int(y.max()) + 1 if k is None else k
    if y.min() < 0 or y.max() >= k:
        raise InputError(f"labels must lie in [0, {k})")
    counts = np.bincount(y, minlength=k)
    if (counts == 0).any():
        raise InputError(f"classes without training examples: {np.flatnonzero(counts == 0).tolist()}")
    # one scale for all axes keeps the geometry and bounds the loss curvature
    mean = X.mean(axis=0)
    rms = float(np.sqrt(((X - mean) ** 2).sum(axis=1).mean()))
    scale = np.full(X.shape[1], rms if rms > 0 else 1.0)
    Z = (X - mean) / scale
    Y = np.eye(k)[y]
    W = np.zeros((k, X.shape[1]))
    b = np.zeros(k)
    history = np.empty(config.epochs + 1)
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is caught below
        for epoch in range(config.epochs):
            loss, gW, gb = probe_loss_and_grad(W, b, Z, Y, config.l2_penalty)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite probe loss at epoch {epoch}")
            history[epoch] = loss
            W -= config.learning_rate * gW
            b -= config.learning_rate * gb
        loss, _, _ = probe_loss_and_grad(W, b, Z, Y, config.l2_penalty)
    if not np.isfinite(loss):
        raise NumericError(f"non-finite probe loss at epoch {config.epochs}")
    history[-1] = loss
    return LinearProbe(W, b, mean, scale, history)


def _features(agent):
    if isinstance(agent, EmbeddingSet):
        return agent.coords
    emb = agent.embedding
    if emb is None:
        raise InputError("few-shot evaluation needs an embedding-backed agent")
    return emb.coords


def sample_shots(labels, n_per_class: int, seed: int) -> np.ndarray:
    """Indices of ``n_per_class`` training examples per class, classes in sorted order."""
    labels = np.asarray(labels, dtype=int)
    rng = derive_rng(seed, "nshot")
    chosen = []
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        if idx.size <= n_per_class:
            raise InputError(f"class {c} has {idx.size} examples; need more than {n_per_class}")
        chosen.append(rng.choice(idx, size=n_per_class, replace=False))
    return np.sort(np.concatenate(chosen))


def evaluate_split(X, labels, train_idx, config: ProbeConfig = ProbeConfig()) -> float:
    labels = np.asarray(labels, dtype=int)
    mask = np.zeros(labels.size, dtype=bool)
    mask[train_idx] = True
    k = int(labels.max()) + 1
    probe = train_linear_probe(X[mask], labels[mask], k, config)
    return probe.accuracy(X[~mask], labels[~mask])


def evaluate_nshot(agent, labels, n_per_class: int, config: ProbeConfig = ProbeConfig(), seed: int = 0) -> float:
    """Held-out accuracy of a probe trained on ``n_per_class`` examples per class."""
    X = _features(agent)
    labels = np.asarray(labels, dtype=int)
    if labels.shape[0] != X.shape[0]:
        raise InputError(f"{labels.shape[0]} labels for {X.shape[0]} stimuli")
    if n_per_class < 1:
        raise InputError(f"n_per_class must be >= 1, got {n_per_class}")
    return evaluate_split(X, labels, sample_shots(labels, n_per_class, seed), config)


@dataclass
class FSLResult:
    rows: list  # one dict per (agent, shot), keys FSL_COLUMNS
    accuracies: dict = field(repr=False)  # (agent_id, shot) -> per-trial accuracies

    def agent_table(self, shot):
        """(agent ids, mean triplet alignment, mean accuracy) for one shot count."""
        sel = [r for r in self.rows if r["shot"] == shot]
        return (
            [r["agent_id"] for r in sel],
            np.array([r["triplet_alignment"] for r in sel]),
            np.array([r["mean_accuracy"] for r in sel]),
        )

    def zsq_correlation(self, shot, metric="triplet_alignment") -> float:
        sel = [r for r in self.rows if r["shot"] == shot]
        align = np.array([r[metric] for r in sel])
        acc = np.array([r["mean_accuracy"] for r in sel])
        return pearson_r(z_squared(align), acc)


def ushape_fsl_experiment(
    reference: EmbeddingSet,
    labels,
    noise_scales,
    include_inverted: bool = True,
    shots=(1, 5),
    trials: int = 20,
    seed: int = 0,
    config: ProbeConfig = ProbeConfig(),
    tie_mode: str = "include",
) -> FSLResult:
    """Alignment and n-shot accuracy of a noise-swept family of students.

    Each trial rebuilds the family with fresh noise; within a trial every
    student is probed on the same sampled training indices.  The inverted
    student reuses the reference coordinates (its inversion is at the
    distance-oracle level), so its probe accuracy equals the reference's.
    """
    scales = list(noise_scales)
    if not scales:
        raise InputError("noise scale grid is empty")
    labels = np.asarray(labels, dtype=int)
    ref = EmbeddingAgent(reference)
    align = {}
    accs = {}
    meta = {}
    for t in range(trials):
        fam = gen_agent_family(ref, scales, include_inverted, False, seed=int(derive_rng(seed, "fsl", "family", t).integers(0, 2**63 - 1)), tie_mode=tie_mode)
        for shot in shots:
            split_seed = int(derive_rng(seed, "fsl", "split", t, shot).integers(0, 2**63 - 1))
            idx = sample_shots(labels, shot, split_seed)
            for m in fam:
                accs.setdefault((m.agent_id, shot), []).append(evaluate_split(_features(m.agent), labels, idx, config))
        for m in fam:
            meta[m.agent_id] = m.noise_scale
            align.setdefault(m.agent_id, []).append((m.triplet_alignment, m.pearson_alignment, m.spearman_alignment))
    rows = []
    for agent_id, vals in align.items():
        tri, pea, spe = np.mean(np.array(vals), axis=0)
        for shot in shots:
            a = np.array(accs[(agent_id, shot)])
            se = float(a.std(ddof=1) / np.sqrt(a.size)) if a.size > 1 else 0.0
            rows.append(
                {
                    "agent_id": agent_id,
                    "noise_scale": meta[agent_id],
                    "triplet_alignment": float(tri),
                    "pearson_alignment": float(pea),
                    "spearman_alignment": float(spe),
                    "shot": int(shot),
                    "mean_accuracy": float(a.mean()),
                    "std_err": se,
                }
            )
    return FSLResult(rows, {k: np.array(v) for k, v in accs.items()})
