"""Stimulus sets, agents as distance oracles, and canonical triplet spaces.

A triplet ``(i, j, k)`` with ``j < k`` asks whether stimulus ``i`` is closer to
``j`` than to ``k``.  Triplets are laid out anchor-major: all pairs for anchor
0 first, then anchor 1, and so on, with pairs ordered lexicographically over
the indices that remain once the anchor is removed.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from ._rng import derive_rng
from .errors import ContractError, InputError

METRICS = ("euclidean", "neg_dot", "neg_cosine")
KERNELS = ("neg_euclidean", "dot", "cosine")

ORTHOGONALITY_TOL = 1e-9


@dataclass(frozen=True)
class StimulusSet:
    ids: tuple

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        if len(set(ids)) != len(ids):
            seen, dup = set(), []
            for i in ids:
                if i in seen:
                    dup.append(i)
                seen.add(i)
            raise InputError(f"duplicate stimulus ids: {sorted(set(dup))}")
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    def __len__(self):
        return len(self.ids)

    @classmethod
    def range(cls, n: int) -> "StimulusSet":
        return cls(tuple(f"s{i}" for i in range(n)))


@dataclass(frozen=True)
class EmbeddingSet:
    """Coordinates for every stimulus, one row per id."""

    stimuli: StimulusSet
    coords: np.ndarray

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        if coords.ndim != 2:
            raise InputError(f"coordinates must be a 2-D array, got shape {coords.shape}")
        if coords.shape[0] != self.stimuli.n:
            raise InputError(
                f"{coords.shape[0]} coordinate rows for {self.stimuli.n} stimuli"
            )
        bad = ~np.isfinite(coords).all(axis=1)
        if bad.any():
            raise InputError(f"non-finite coordinate for stimulus {self.stimuli.ids[int(np.argmax(bad))]!r}")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def n(self) -> int:
        return self.stimuli.n

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    @classmethod
    def from_array(cls, coords, ids: Sequence[str] | None = None) -> "EmbeddingSet":
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords[:, None]
        stimuli = StimulusSet(ids) if ids is not None else StimulusSet.range(coords.shape[0])
        return cls(stimuli, coords)


def _readonly(a):
    a.setflags(write=False)
    return a


def _metric_distances(a, b, metric):
    if metric == "euclidean":
        return cdist(a, b, "euclidean")
    if metric == "neg_dot":
        return -(a @ b.T)
    if metric == "neg_cosine":
        na = np.linalg.norm(a, axis=1, keepdims=True)
        nb = np.linalg.norm(b, axis=1, keepdims=True)
        if (na == 0).any() or (nb == 0).any():
            raise InputError("cosine metric undefined for zero-norm vectors")
        return -((a / na) @ (b / nb).T)
    raise InputError(f"unknown metric {metric!r}; expected one of {METRICS}")


def _kernel_similarities(coords, kernel):
    """Full similarity matrix of an embedding under ``kernel``."""
    if kernel == "neg_euclidean":
        return -squareform(pdist(coords, "euclidean"))
    if kernel == "dot":
        return coords @ coords.T
    if kernel == "cosine":
        norms = np.linalg.norm(coords, axis=1, keepdims=True)
        if (norms == 0).any():
            raise InputError("cosine kernel undefined for zero-norm vectors")
        u = coords / norms
        return u @ u.T
    raise InputError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


def upper_triangle(matrix: np.ndarray) -> np.ndarray:
    """Values above the diagonal in row-major order, length n(n-1)/2."""
    n = matrix.shape[0]
    return matrix[np.triu_indices(n, k=1)]


class Agent:
    """A distance oracle over a stimulus set.

    Subclasses implement :meth:`_distances`.  Smaller distance means more
    similar; only the ordering of distances matters for triplets.
    """

    kind = "agent"

    def __init__(self, stimuli: StimulusSet):
        self.stimuli = stimuli

    @property
    def n(self) -> int:
        return self.stimuli.n

    @property
    def embedding(self) -> EmbeddingSet | None:
        """Coordinates backing this agent, if it has any."""
        return None

    @cached_property
    def _dist(self):
        d = np.array(self._distances(), dtype=float)
        if not np.isfinite(d).all():
            i = int(np.argmax(~np.isfinite(d).all(axis=1)))
            raise InputError(f"non-finite distance for stimulus {self.stimuli.ids[i]!r}")
        return _readonly(d)

    def _distances(self) -> np.ndarray:
        raise NotImplementedError

    def distance_matrix(self) -> np.ndarray:
        return self._dist

    def distance(self, i: int, j: int) -> float:
        return float(self._dist[i, j])

    def similarity_matrix(self, kernel: str = "neg_euclidean") -> np.ndarray:
        """Similarity values used by the pairwise correlation metrics."""
        return -self._dist

    def similarities(self, kernel: str = "neg_euclidean") -> np.ndarray:
        return upper_triangle(self.similarity_matrix(kernel))

    def distances_to(self, obj) -> np.ndarray:
        """Distances from an object outside the stimulus set to every stimulus."""
        raise NotImplementedError(f"{type(self).__name__} cannot place new objects")

    def describe(self) -> dict:
        return {"kind": self.kind}


class EmbeddingAgent(Agent):
    kind = "embedding"

    def __init__(self, embedding: EmbeddingSet, metric: str = "euclidean"):
        if metric not in METRICS:
            raise InputError(f"unknown metric {metric!r}; expected one of {METRICS}")
        super().__init__(embedding.stimuli)
        self._embedding = embedding
        self.metric = metric

    @property
    def embedding(self):
        return self._embedding

    def _distances(self):
        x = self._embedding.coords
        if self.metric == "euclidean":
            return squareform(pdist(x, "euclidean"))
        return _metric_distances(x, x, self.metric)

    def similarity_matrix(self, kernel="neg_euclidean"):
        return _kernel_similarities(self._embedding.coords, kernel)

    def distances_to(self, obj):
        e = np.asarray(obj, dtype=float).reshape(-1)
        if e.shape[0] != self._embedding.d:
            raise InputError(f"object has dimension {e.shape[0]}, embedding has {self._embedding.d}")
        if not np.isfinite(e).all():
            raise InputError("object coordinates must be finite")
        return _metric_distances(e[None, :], self._embedding.coords, self.metric)[0]

    def describe(self):
        return {"kind": self.kind, "metric": self.metric}


class SimilarityAgent(Agent):
    """Agent backed by a symmetric similarity matrix; distance is negated similarity."""

    kind = "similarity_matrix"

    def __init__(self, stimuli: StimulusSet, similarity):
        s = np.array(similarity, dtype=float)
        if s.shape != (stimuli.n, stimuli.n):
            raise InputError(f"similarity matrix shape {s.shape} does not match {stimuli.n} stimuli")
        bad = ~np.isfinite(s).all(axis=1)
        if bad.any():
            raise InputError(f"non-finite similarity for stimulus {stimuli.ids[int(np.argmax(bad))]!r}")
        if not np.array_equal(s, s.T):
            raise InputError("similarity matrix is not symmetric")
        super().__init__(stimuli)
        self.similarity = _readonly(s)

    def _distances(self):
        return -self.similarity

    def similarity_matrix(self, kernel="neg_euclidean"):
        return self.similarity

    def distances_to(self, obj):
        row = np.asarray(obj, dtype=float).reshape(-1)
        if row.shape[0] != self.n:
            raise InputError(f"similarity row has length {row.shape[0]}, expected {self.n}")
        return -row


class NoisyAgent(Agent):
    """Base agent perturbed by i.i.d. Gaussian noise.

    Embedding-backed bases get noise on the coordinates; other bases get
    symmetric noise on the off-diagonal distances.  New objects are placed
    without noise.
    """

    kind = "noise"

    def __init__(self, base: Agent, scale: float, seed: int):
        if not scale >= 0:
            raise InputError(f"noise scale must be >= 0, got {scale}")
        super().__init__(base.stimuli)
        self.base = base
        self.scale = float(scale)
        self.seed = int(seed)
        self._inner = None
        if base.embedding is not None:
            rng = derive_rng(seed, "noise")
            x = base.embedding.coords
            noisy = EmbeddingSet(base.stimuli, x + self.scale * rng.standard_normal(x.shape))
            self._inner = EmbeddingAgent(noisy, getattr(base, "metric", "euclidean"))

    @property
    def embedding(self):
        return None if self._inner is None else self._inner.embedding

    def _distances(self):
        if self._inner is not None:
            return self._inner.distance_matrix()
        rng = derive_rng(self.seed, "noise")
        n = self.n
        upper = np.triu(rng.standard_normal((n, n)), k=1)
        return self.base.distance_matrix() + self.scale * (upper + upper.T)

    def similarity_matrix(self, kernel="neg_euclidean"):
        if self._inner is not None:
            return self._inner.similarity_matrix(kernel)
        return super().similarity_matrix(kernel)

    def distances_to(self, obj):
        if self._inner is not None:
            return self._inner.distances_to(obj)
        return self.base.distances_to(obj)

    def describe(self):
        return {"kind": self.kind, "scale": self.scale, "seed": self.seed, "base": self.base.describe()}


class InvertedAgent(Agent):
    """Reverses every comparison of its base: distance = -base distance."""

    kind = "inverted"

    def __init__(self, base: Agent):
        super().__init__(base.stimuli)
        self.base = base

    @property
    def embedding(self):
        # Linear probes see the base coordinates; inversion lives at the oracle level.
        return self.base.embedding

    def _distances(self):
        return -self.base.distance_matrix()

    def similarity_matrix(self, kernel="neg_euclidean"):
        return -self.base.similarity_matrix(kernel)

    def distances_to(self, obj):
        return -self.base.distances_to(obj)

    def describe(self):
        return {"kind": self.kind, "base": self.base.describe()}


class IsometryAgent(Agent):
    """Embedding agent seen through a rotation, translation and uniform scaling."""

    kind = "isometry"

    def __init__(self, base: Agent, rotation, translation, scale: float = 1.0):
        if base.embedding is None:
            raise InputError("isometry wrapper needs an embedding-backed base agent")
        super().__init__(base.stimuli)
        self.base = base
        self.rotation = np.asarray(rotation, dtype=float)
        self.translation = np.asarray(translation, dtype=float)
        self.scale = float(scale)
        moved = apply_isometry(base.embedding, self.rotation, self.translation, self.scale)
        self._inner = EmbeddingAgent(moved, getattr(base, "metric", "euclidean"))

    @property
    def embedding(self):
        return self._inner.embedding

    def _distances(self):
        return self._inner.distance_matrix()

    def similarity_matrix(self, kernel="neg_euclidean"):
        return self._inner.similarity_matrix(kernel)

    def distances_to(self, obj):
        e = np.asarray(obj, dtype=float).reshape(1, -1)
        moved = self.scale * e @ self.rotation.T + self.translation
        return self._inner.distances_to(moved[0])

    def describe(self):
        return {"kind": self.kind, "scale": self.scale, "base": self.base.describe()}


def pairwise_distances(agent: Agent) -> np.ndarray:
    """Symmetric n x n distance matrix of ``agent``."""
    if agent.n < 2:
        raise InputError(f"need at least 2 stimuli, got {agent.n}")
    return agent.distance_matrix()


def apply_isometry(embedding: EmbeddingSet, rotation, translation, uniform_scale: float = 1.0) -> EmbeddingSet:
    """Return ``scale * R x + t`` for every row ``x``."""
    d = embedding.d
    r = np.asarray(rotation, dtype=float)
    t = np.broadcast_to(np.asarray(translation, dtype=float), (d,))
    if r.shape != (d, d):
        raise InputError(f"rotation must be {d}x{d}, got {r.shape}")
    if not uniform_scale > 0:
        raise InputError(f"scale must be positive, got {uniform_scale}")
    if np.abs(r @ r.T - np.eye(d)).max() > ORTHOGONALITY_TOL:
        raise InputError("rotation matrix is not orthogonal")
    coords = uniform_scale * embedding.coords @ r.T + t
    return EmbeddingSet(embedding.stimuli, coords)


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


# -- canonical triplet indexing -------------------------------------------


def n_triplets(n: int) -> int:
    """Number of unique triplets, n(n-1)(n-2)/2."""
    return n * (n - 1) * (n - 2) // 2


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _pair_rank(a: int, b: int, m: int) -> int:
    # rank of (a, b), a < b, among the lexicographic pairs of range(m)
    return a * (2 * m - a - 1) // 2 + (b - a - 1)


def triplet_index(i: int, j: int, k: int, n: int) -> int:
    """Flat index of triplet (anchor i; pair j < k) among n stimuli."""
    if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
        raise ContractError(f"indices ({i}, {j}, {k}) out of range for n={n}")
    if i == j or i == k or j >= k:
        raise ContractError(f"need distinct indices with j < k, got ({i}, {j}, {k})")
    m = n - 1
    a = j - (j > i)
    b = k - (k > i)
    return i * n_pairs(m) + _pair_rank(a, b, m)


def triplet_unindex(t: int, n: int) -> tuple[int, int, int]:
    """Inverse of :func:`triplet_index`."""
    total = n_triplets(n)
    if not 0 <= t < total:
        raise ContractError(f"flat index {t} out of range [0, {total})")
    m = n - 1
    per = n_pairs(m)
    i, r = divmod(t, per)
    a = 0
    while r >= m - 1 - a:
        r -= m - 1 - a
        a += 1
    b = a + 1 + r
    j = a + (a >= i)
    k = b + (b >= i)
    return i, j, k


def triplet_unindex_array(t, n: int):
    """Vectorized :func:`triplet_unindex` over an integer array."""
    t = np.asarray(t, dtype=np.int64)
    m = n - 1
    per = n_pairs(m)
    i, r = np.divmod(t, per)
    # row starts of the lexicographic pair enumeration over range(m)
    starts = np.array([_pair_rank(a, a + 1, m) for a in range(m - 1)], dtype=np.int64)
    a = np.searchsorted(starts, r, side="right") - 1
    b = a + 1 + (r - starts[a])
    j = a + (a >= i)
    k = b + (b >= i)
    return i, j, k


# -- triplet spaces -----------------------------------------------------------


@dataclass(frozen=True)
class TripletSpace:
    """Packed triplet answers of one agent.

    ``bits`` and ``tie_mask`` are ``np.packbits`` arrays (big-endian bit order)
    covering exactly ``n(n-1)(n-2)/2`` positions; pad bits are zero.
    """

    n: int
    bits: np.ndarray = field(repr=False)
    tie_mask: np.ndarray = field(repr=False)

    @property
    def length(self) -> int:
        return n_triplets(self.n)

    def __len__(self):
        return self.length

    def unpacked(self) -> np.ndarray:
        return np.unpackbits(self.bits, count=self.length).astype(bool)

    def ties(self) -> np.ndarray:
        return np.unpackbits(self.tie_mask, count=self.length).astype(bool)

    @property
    def n_ties(self) -> int:
        return int(np.bitwise_count(self.tie_mask).sum())

    def __eq__(self, other):
        if not isinstance(other, TripletSpace):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.bits, other.bits)
            and np.array_equal(self.tie_mask, other.tie_mask)
        )

    __hash__ = None


def _anchor_block(dist: np.ndarray, i: int, ju: np.ndarray, ku: np.ndarray):
    row = np.delete(dist[i], i)
    dj, dk = row[ju], row[ku]
    return dj < dk, dj == dk


def triplet_bits_from_distances(dist: np.ndarray, workers: int = 1):
    """Unpacked (bits, ties) boolean arrays from a distance matrix."""
    n = dist.shape[0]
    if n < 3:
        raise InputError(f"triplet space needs at least 3 stimuli, got {n}")
    ju, ku = np.triu_indices(n - 1, k=1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda i: _anchor_block(dist, i, ju, ku), range(n)))
    else:
        blocks = [_anchor_block(dist, i, ju, ku) for i in range(n)]
    bits = np.concatenate([b for b, _ in blocks])
    ties = np.concatenate([t for _, t in blocks])
    return bits, ties


def triplet_space(agent: Agent, workers: int = 1) -> TripletSpace:
    """Canonical triplet space of ``agent``.

    Bit is 1 iff the anchor is strictly closer to ``j`` than to ``k``; exact
    ties give bit 0 and set the tie mask.  ``workers > 1`` splits anchors over
    threads with identical output.
    """
    if agent.n < 3:
        raise InputError(f"triplet space needs at least 3 stimuli, got {agent.n}")
    bits, ties = triplet_bits_from_distances(agent.distance_matrix(), workers=workers)
    return TripletSpace(agent.n, _readonly(np.packbits(bits)), _readonly(np.packbits(ties)))
