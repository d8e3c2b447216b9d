"""Domain-shift sensitivity, adversarial selection and binomial order statistics.

Triplets relating an outside object ``e`` to the stimuli are anchored at the
object: for every canonical pair ``j < k`` the bit says whether ``e`` is
strictly closer to ``x_j`` than to ``x_k``, giving ``n(n-1)/2`` bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from ._rng import derive_rng
from .channel import ChannelSpec, simulate_teaching
from .core import Agent, EmbeddingAgent, EmbeddingSet, n_pairs
from .errors import InputError

MAX_BINOMIAL_TRIALS = 100_000
ADVERSARIAL_COLUMNS = ("epsilon", "formula_expectation", "empirical_mean", "empirical_stderr")


@dataclass(frozen=True)
class CentroidSet:
    centroids: np.ndarray
    shifted: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        if c.shape[0] < 1 or not np.isfinite(c).all():
            raise InputError("need at least one finite centroid")
        object.__setattr__(self, "centroids", c)
        if self.shifted is not None:
            s = np.atleast_2d(np.asarray(self.shifted, dtype=float))
            if s.shape != c.shape:
                raise InputError(f"shifted centroids have shape {s.shape}, expected {c.shape}")
            if not np.isfinite(s).all():
                raise InputError("shifted centroids must be finite")
            object.__setattr__(self, "shifted", s)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class ObjectRelativeTriplets:
    obj: np.ndarray = field(repr=False)
    bits: np.ndarray = field(repr=False)
    tie_mask: np.ndarray = field(repr=False)

    def __len__(self):
        return self.bits.size


def object_relative_triplets(agent: Agent, e) -> ObjectRelativeTriplets:
    """Bits over pairs ``j < k``: is ``e`` strictly closer to ``x_j`` than ``x_k``."""
    d = np.asarray(agent.distances_to(e), dtype=float)
    ju, ku = np.triu_indices(agent.n, k=1)
    dj, dk = d[ju], d[ku]
    return ObjectRelativeTriplets(np.asarray(e, dtype=float), dj < dk, dj == dk)


def _ort_disagreement(agent_a, agent_b, e) -> int:
    return int((object_relative_triplets(agent_a, e).bits != object_relative_triplets(agent_b, e).bits).sum())


def domain_shift_sensitivity(agent: Agent, centroids: CentroidSet, shifted_agent: Agent | None = None) -> float:
    """Fraction of centroid-relative triplets flipped by the centroid update.

    ``shifted_agent`` represents the stimuli after the shift; by default the
    stimuli stay fixed.  Shifted centroids default to the originals.
    """
    after_agent = agent if shifted_agent is None else shifted_agent
    if after_agent.n != agent.n:
        raise InputError("shifted agent must cover the same stimuli")
    shifted = centroids.centroids if centroids.shifted is None else centroids.shifted
    flipped = 0
    for c, cs in zip(centroids.centroids, shifted):
        before = object_relative_triplets(agent, c).bits
        after = object_relative_triplets(after_agent, cs).bits
        flipped += int((before != after).sum())
    return flipped / (centroids.k * n_pairs(agent.n))


def mean_domain_shift_sensitivity(draws, centroids: CentroidSet):
    """Average sensitivity over caller-supplied stimulus draws.

    ``draws`` is a sequence of agents or ``(agent, shifted_agent)`` pairs.
    Returns the mean and the per-draw values.
    """
    values = []
    for draw in draws:
        agent, shifted = draw if isinstance(draw, tuple) else (draw, None)
        values.append(domain_shift_sensitivity(agent, centroids, shifted))
    if not values:
        raise InputError("no stimulus draws supplied")
    return float(np.mean(values)), np.array(values)


def perturbation_sweep(magnitudes, n: int = 20, k: int = 4, d: int = 2, trials: int = 50, seed: int = 0):
    """Mean sensitivity against the size of a random centroid displacement.

    Each trial draws stimuli and centroids uniformly in the unit cube and a
    unit direction per centroid; the update moves every centroid by
    ``magnitude`` along its direction.
    """
    mags = np.asarray(list(magnitudes), dtype=float)
    sens = np.empty((mags.size, trials))
    for t in range(trials):
        rng = derive_rng(seed, "sweep", t)
        x = EmbeddingAgent(EmbeddingSet.from_array(rng.uniform(size=(n, d))))
        c = rng.uniform(size=(k, d))
        u = rng.standard_normal((k, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        for a, m in enumerate(mags):
            sens[a, t] = domain_shift_sensitivity(x, CentroidSet(c, c + m * u))
    return [
        {"magnitude": float(m), "mean_sensitivity": float(s.mean()), "std_err": float(s.std(ddof=1) / np.sqrt(trials))}
        for m, s in zip(mags, sens)
    ]


@dataclass(frozen=True)
class AdversarialChoice:
    index: int
    obj: np.ndarray
    disagreement: int
    counts: np.ndarray = field(repr=False)


def select_adversarial(pool, agent_a: Agent, agent_b: Agent) -> AdversarialChoice:
    """Pool member maximizing the object-relative disagreement of two agents.

    Ties go to the lowest pool index.
    """
    pool = list(pool)
    if not pool:
        raise InputError("candidate pool is empty")
    if agent_a.stimuli.ids != agent_b.stimuli.ids:
        raise InputError("agents must share the same ordered stimulus set")
    counts = np.array([_ort_disagreement(agent_a, agent_b, e) for e in pool])
    best = int(np.argmax(counts))
    return AdversarialChoice(best, np.asarray(pool[best]), int(counts[best]), counts)


def binomial_logcdf(trials: int, p: float) -> np.ndarray:
    """log P(X <= x) for x = 0..trials, X ~ Bin(trials, p), by exact log-space summation."""
    x = np.arange(trials + 1)
    logpmf = (
        gammaln(trials + 1) - gammaln(x + 1) - gammaln(trials - x + 1)
        + xlogy(x, p) + xlog1py(trials - x, -p)
    )
    return np.minimum(np.logaddexp.accumulate(logpmf), 0.0)


def expected_max_binomial(trials: int, p: float, k: int) -> float:
    """Expected maximum of ``k`` i.i.d. Bin(trials, p) variables.

    Evaluates ``sum_x (1 - F(x)^k)`` over x = 0..trials.
    """
    if not 1 <= trials <= MAX_BINOMIAL_TRIALS:
        raise InputError(f"trials must lie in [1, {MAX_BINOMIAL_TRIALS}], got {trials}")
    if k < 1:
        raise InputError(f"k must be >= 1, got {k}")
    if not 0.0 <= p <= 1.0:
        raise InputError(f"p must lie in [0, 1], got {p}")
    logcdf = binomial_logcdf(int(trials), float(p))
    return float(-np.expm1(k * logcdf).sum())


def adversarial_monotonicity_check(epsilons, n: int = 20, pool_size: int = 20, trials: int = 2000, seed: int = 0):
    """Closed-form and simulated expected worst-case disagreement per flip rate.

    Each candidate in a pool of ``pool_size`` disagrees with the teacher on each
    of the ``n(n-1)/2`` object-relative triplets independently with
    probability epsilon; the pool's maximum is averaged over ``trials``.  The
    same uniforms are reused across epsilon.
    """
    eps = np.asarray(list(epsilons), dtype=float)
    if eps.size == 0:
        raise InputError("epsilon grid is empty")
    if ((eps <= 0) | (eps >= 1)).any():
        raise InputError("epsilon grid must lie in (0, 1)")
    if n < 2 or pool_size < 1 or trials < 2:
        raise InputError("need n >= 2, pool_size >= 1, trials >= 2")
    N = n_pairs(n)
    maxima = np.empty((eps.size, trials))
    block = max(1, 2_000_000 // (pool_size * N))
    for start in range(0, trials, block):
        stop = min(trials, start + block)
        u = derive_rng(seed, "adversarial", start).random((stop - start, pool_size, N))
        for a, e in enumerate(eps):
            maxima[a, start:stop] = (u < e).sum(axis=2).max(axis=1)
    rows = []
    for a, e in enumerate(eps):
        m = maxima[a]
        rows.append(
            {
                "epsilon": float(e),
                "formula_expectation": expected_max_binomial(N, float(e), pool_size),
                "empirical_mean": float(m.mean()),
                "empirical_stderr": float(m.std(ddof=1) / np.sqrt(trials)),
            }
        )
    return rows


def flip_order_check(
    epsilons,
    n: int = 16,
    k: int = 3,
    budget: int = 100,
    trials: int = 20,
    seed: int = 0,
    particles: int = 500,
):
    """Student-side flip fraction under a domain shift the teacher is blind to.

    The teacher's update leaves its centroid triplets unchanged (``c* = c``,
    sensitivity 0).  A student learns each centroid from the teacher over a
    channel with flip rate epsilon, once before and once after the update,
    commits to one posterior draw each time, and the flip fraction compares
    the object-relative triplets of the two draws.
    """
    eps = np.asarray(list(epsilons), dtype=float)
    flips = np.empty((eps.size, trials))
    for t in range(trials):
        rng = derive_rng(seed, "flip-order", t)
        emb = EmbeddingSet.from_array(rng.uniform(size=(n, 2)))
        teacher = EmbeddingAgent(emb)
        cents = CentroidSet(rng.uniform(size=(k, 2)))
        seeds = rng.integers(0, 2**63 - 1, size=(k, 2))
        for a, e in enumerate(eps):
            flipped = 0
            for c_idx, c in enumerate(cents.centroids):
                est = []
                for phase in (0, 1):
                    s = int(seeds[c_idx, phase])
                    trace = simulate_teaching(emb, c, ChannelSpec(float(e), s), budget, "known_epsilon", particles)
                    est.append(trace.sample(derive_rng(s, "commit")))
                flipped += int((object_relative_triplets(teacher, est[0]).bits != object_relative_triplets(teacher, est[1]).bits).sum())
            flips[a, t] = flipped / (k * n_pairs(n))
    return [
        {"epsilon": float(e), "mean_flip_fraction": float(f.mean()), "std_err": float(f.std(ddof=1) / np.sqrt(trials))}
        for e, f in zip(eps, flips)
    ]
