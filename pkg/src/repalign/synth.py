"""Deterministic synthetic datasets and agent families with measured alignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import derive_rng
from .core import (
    Agent,
    EmbeddingAgent,
    EmbeddingSet,
    InvertedAgent,
    IsometryAgent,
    NoisyAgent,
    StimulusSet,
    random_rotation,
)
from .errors import InputError
from .metrics import alignment_report

# Geometric sweep for the default SynthSpec: triplet alignment 1.0, ~0.99, then
# down to the ~0.5 plateau where coordinates carry no class information.
DEFAULT_NOISE_SCALES = (0.0, 0.05, 0.5, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0)


@dataclass(frozen=True)
class SynthSpec:
    n_per_class: int = 15
    k: int = 4
    d: int = 2
    separation: float = 6.0
    seed: int = 0

    def __post_init__(self):
        if self.n_per_class < 1 or self.k < 1 or self.d < 1:
            raise InputError("n_per_class, k and d must be positive")
        if self.separation < 0:
            raise InputError(f"separation must be >= 0, got {self.separation}")


def class_centroids(k: int, d: int, separation: float) -> np.ndarray:
    """``k`` centroids on the first axis, consecutive ones ``separation`` apart, centred at 0."""
    c = np.zeros((k, d))
    c[:, 0] = separation * (np.arange(k) - (k - 1) / 2.0)
    return c


def gen_clustered_embedding(spec: SynthSpec) -> tuple[EmbeddingSet, np.ndarray]:
    """Unit-variance Gaussian clusters around :func:`class_centroids`.

    Rows are grouped by class; ids are ``c{class}_{i}``.
    """
    rng = derive_rng(spec.seed, "clusters")
    centroids = class_centroids(spec.k, spec.d, spec.separation)
    labels = np.repeat(np.arange(spec.k), spec.n_per_class)
    coords = centroids[labels] + rng.standard_normal((labels.size, spec.d))
    ids = [f"c{c}_{i}" for c in range(spec.k) for i in range(spec.n_per_class)]
    return EmbeddingSet(StimulusSet(ids), coords), labels


@dataclass
class FamilyMember:
    agent_id: str
    agent: Agent
    kind: str
    noise_scale: float
    triplet_alignment: float
    pearson_alignment: float
    spearman_alignment: float


def _member(agent_id, agent, kind, scale, reference, tie_mode):
    rep = alignment_report(reference, agent, tie_mode=tie_mode)
    return FamilyMember(agent_id, agent, kind, float(scale), rep.triplet_alignment, rep.pearson, rep.spearman)


def gen_agent_family(
    reference: EmbeddingSet | Agent,
    noise_scales=DEFAULT_NOISE_SCALES,
    include_inverted: bool = True,
    include_isometry: bool = True,
    seed: int = 0,
    n_isometry: int = 1,
    tie_mode: str = "include",
) -> list[FamilyMember]:
    """Noise-swept copies of ``reference`` plus optional isometric and inverted members.

    Every member's alignment to the reference is measured exactly, never
    inferred from its noise scale.
    """
    scales = list(noise_scales)
    if not scales:
        raise InputError("noise scale grid is empty")
    ref = reference if isinstance(reference, Agent) else EmbeddingAgent(reference)
    members = []
    for idx, scale in enumerate(scales):
        noise_seed = int(derive_rng(seed, "family", "noise", idx).integers(0, 2**63 - 1))
        agent = NoisyAgent(ref, float(scale), noise_seed)
        members.append(_member(f"noise_{idx}", agent, "noise", scale, ref, tie_mode))
    if include_isometry:
        d = ref.embedding.d
        for idx in range(n_isometry):
            rng = derive_rng(seed, "family", "isometry", idx)
            agent = IsometryAgent(ref, random_rotation(d, rng), rng.normal(size=d), float(rng.uniform(0.5, 2.0)))
            members.append(_member(f"isometry_{idx}", agent, "isometry", 0.0, ref, tie_mode))
    if include_inverted:
        members.append(_member("inverted", InvertedAgent(ref), "inverted", 0.0, ref, tie_mode))
    return members
