"""Binary-symmetric-channel maths and the teacher-to-student triplet game.

A teacher sees a new object ``c`` and answers random queries "is c closer to
x_j than to x_k?" about the shared stimuli.  Each answer crosses a binary
symmetric channel with flip probability epsilon.  The student keeps a fixed
cloud of candidate locations and reweights them by the likelihood of every
received bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.special import xlogy

from ._rng import derive_rng
from .core import Agent, EmbeddingSet
from .errors import InputError

DECODERS = ("known_epsilon", "calibrated", "naive")
LIKELIHOOD_FLOOR = 1e-12
PRIOR_INFLATION = 1.25
USHAPE_COLUMNS = ("epsilon", "mean_error", "std_err", "trials", "budget")


def _check_epsilon(epsilon):
    if not 0.0 <= epsilon <= 1.0:
        raise InputError(f"epsilon must lie in [0, 1], got {epsilon}")


@dataclass(frozen=True)
class ChannelSpec:
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        _check_epsilon(self.epsilon)


def bsc_capacity(epsilon: float) -> float:
    """Capacity in bits of a binary symmetric channel, ``1 - H(epsilon)``."""
    _check_epsilon(epsilon)
    # xlogy gives 0*log(0) = 0 at the endpoints
    return float(1.0 + (xlogy(epsilon, epsilon) + xlogy(1.0 - epsilon, 1.0 - epsilon)) / np.log(2.0))


def query_lower_bound(n: int, d: int, epsilon: float, m: int = 1) -> float:
    """Order-of-magnitude query count ``m d log2(n) / C(epsilon)``; +inf at zero capacity."""
    if n < 2 or d < 1 or m < 1:
        raise InputError(f"need n >= 2, d >= 1, m >= 1; got n={n}, d={d}, m={m}")
    cap = bsc_capacity(epsilon)
    if cap <= 0.0:
        return float("inf")
    return m * d * np.log2(n) / cap


class ParticlePosterior:
    """Weighted candidate locations for the hidden object, kept in log space."""

    def __init__(self, particles: np.ndarray):
        self.particles = np.asarray(particles, dtype=float)
        self.log_weights = np.zeros(len(self.particles))

    @property
    def weights(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def predicted_bits(self, xj, xk) -> np.ndarray:
        """Per particle: is the particle strictly closer to ``xj`` than to ``xk``."""
        dj = ((self.particles - xj) ** 2).sum(axis=1)
        dk = ((self.particles - xk) ** 2).sum(axis=1)
        return dj < dk

    def update(self, xj, xk, received: bool, epsilon_model: float):
        match = np.log(max(1.0 - epsilon_model, LIKELIHOOD_FLOOR))
        miss = np.log(max(epsilon_model, LIKELIHOOD_FLOOR))
        agree = self.predicted_bits(xj, xk) == bool(received)
        self.log_weights += np.where(agree, match, miss)
        self.log_weights -= self.log_weights.max()

    def mean_distance(self, target) -> float:
        dist = np.linalg.norm(self.particles - np.asarray(target, dtype=float), axis=1)
        return float(self.weights @ dist)

    def mean(self) -> np.ndarray:
        return self.weights @ self.particles


@dataclass
class TeachingTrace:
    queries: list  # (j, k, teacher_bit, received_bit) per query
    particles: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    error_curve: np.ndarray = field(repr=False)
    weight_sums: np.ndarray = field(repr=False)
    budget: int
    prior_error: float
    epsilon_model: float

    @property
    def final_error(self) -> float:
        return float(self.error_curve[-1])

    def estimate(self) -> np.ndarray:
        """Posterior-mean location of the hidden object."""
        return self.weights @ self.particles

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """One candidate location drawn in proportion to its posterior weight."""
        return self.particles[rng.choice(len(self.weights), p=self.weights)]


def prior_box(coords: np.ndarray, inflation: float = PRIOR_INFLATION):
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    width = hi - lo
    if not (width > 0).any():
        raise InputError("degenerate teacher embedding: all stimuli coincide")
    width = np.where(width > 0, width, width.max())
    center = (lo + hi) / 2.0
    half = inflation * width / 2.0
    return center - half, center + half


def _teacher_coords(teacher) -> np.ndarray:
    emb = teacher.embedding if isinstance(teacher, Agent) else teacher
    if not isinstance(emb, EmbeddingSet):
        raise InputError("teaching needs an embedding-backed teacher")
    if emb.d not in (1, 2, 3):
        raise InputError(f"teaching simulation supports d in {{1, 2, 3}}, got d={emb.d}")
    if emb.n < 2:
        raise InputError("teacher needs at least 2 shared stimuli")
    return emb.coords


def calibrate_epsilon(coords: np.ndarray, epsilon: float, k: int, rng: np.random.Generator) -> float:
    """Estimate the flip rate from ``k`` channel-crossed triplets over shared data."""
    n = coords.shape[0]
    if n < 3:
        raise InputError("calibration needs at least 3 shared stimuli")
    if k < 1:
        raise InputError(f"need k >= 1 calibration triplets, got {k}")
    i = rng.integers(0, n, size=k)
    j = (i + rng.integers(1, n, size=k)) % n
    kk = (i + rng.integers(1, n, size=k)) % n
    bad = kk == j
    while bad.any():
        kk[bad] = (i[bad] + rng.integers(1, n, size=int(bad.sum()))) % n
        bad = kk == j
    own = np.linalg.norm(coords[i] - coords[j], axis=1) < np.linalg.norm(coords[i] - coords[kk], axis=1)
    received = own ^ (rng.random(k) < epsilon)
    return float((received != own).mean())


def simulate_teaching(
    teacher,
    new_object,
    channel: ChannelSpec,
    budget: int,
    decoder: str = "known_epsilon",
    particles: int = 1000,
    seed: int | None = None,
    calibration: int = 50,
) -> TeachingTrace:
    """Run one teaching episode and record the student's localization error.

    Streams for the prior particles, query choice, channel flips and
    calibration are derived separately from ``seed``, so runs at different
    epsilon share queries and differ only in which bits flip.
    """
    if decoder not in DECODERS:
        raise InputError(f"unknown decoder {decoder!r}; expected one of {DECODERS}")
    if budget < 1:
        raise InputError(f"budget must be >= 1, got {budget}")
    if particles < 100:
        raise InputError(f"need at least 100 particles, got {particles}")
    coords = _teacher_coords(teacher)
    c = np.asarray(new_object, dtype=float).reshape(-1)
    if c.shape[0] != coords.shape[1]:
        raise InputError(f"new object has dimension {c.shape[0]}, teacher has {coords.shape[1]}")
    seed = channel.seed if seed is None else seed
    eps = channel.epsilon
    n, d = coords.shape

    lo, hi = prior_box(coords)
    post = ParticlePosterior(derive_rng(seed, "prior").uniform(lo, hi, size=(particles, d)))
    dist_to_c = np.linalg.norm(post.particles - c, axis=1)
    prior_error = float(dist_to_c.mean())

    if decoder == "known_epsilon":
        eps_model = eps
    elif decoder == "naive":
        eps_model = 0.0
    else:
        eps_model = calibrate_epsilon(coords, eps, calibration, derive_rng(seed, "calibration"))

    q_rng = derive_rng(seed, "queries")
    js = q_rng.integers(0, n, size=budget)
    ks = (js + q_rng.integers(1, n, size=budget)) % n
    js, ks = np.minimum(js, ks), np.maximum(js, ks)
    flips = derive_rng(seed, "flips").random(budget) < eps
    teacher_bits = np.linalg.norm(c - coords[js], axis=1) < np.linalg.norm(c - coords[ks], axis=1)
    received = teacher_bits ^ flips

    errors = np.empty(budget)
    sums = np.empty(budget)
    queries = []
    for q in range(budget):
        post.update(coords[js[q]], coords[ks[q]], received[q], eps_model)
        w = post.weights
        sums[q] = w.sum()
        errors[q] = w @ dist_to_c
        queries.append((int(js[q]), int(ks[q]), bool(teacher_bits[q]), bool(received[q])))
    return TeachingTrace(
        queries=queries,
        particles=post.particles,
        weights=post.weights,
        error_curve=errors,
        weight_sums=sums,
        budget=budget,
        prior_error=prior_error,
        epsilon_model=eps_model,
    )


def trial_setup(seed: int, trial: int, n: int, d: int):
    """Shared stimuli, hidden object and episode seed for one trial."""
    rng = derive_rng(seed, "trial", trial)
    coords = rng.uniform(0.0, 1.0, size=(n, d))
    c = rng.uniform(0.0, 1.0, size=d)
    episode_seed = int(rng.integers(0, 2**63 - 1))
    return EmbeddingSet.from_array(coords), c, episode_seed


@dataclass
class UShapeResult:
    epsilons: np.ndarray
    final_errors: np.ndarray  # shape (len(epsilons), trials)
    prior_errors: np.ndarray  # shape (trials,)
    budget: int
    decoder: str

    @property
    def trials(self) -> int:
        return self.final_errors.shape[1]

    @property
    def mean_error(self) -> np.ndarray:
        return self.final_errors.mean(axis=1)

    @property
    def std_err(self) -> np.ndarray:
        return self.final_errors.std(axis=1, ddof=1) / np.sqrt(self.trials)

    def rows(self) -> list[dict]:
        return [
            {"epsilon": float(e), "mean_error": float(m), "std_err": float(s), "trials": self.trials, "budget": self.budget}
            for e, m, s in zip(self.epsilons, self.mean_error, self.std_err)
        ]

    def error_at(self, epsilon: float) -> float:
        idx = int(np.argmin(np.abs(self.epsilons - epsilon)))
        return float(self.mean_error[idx])


def _one_trial(args):
    epsilons, t, seed, n, d, budget, decoder, particles, calibration = args
    emb, c, ep_seed = trial_setup(seed, t, n, d)
    finals = []
    prior = None
    for eps in epsilons:
        tr = simulate_teaching(emb, c, ChannelSpec(float(eps), ep_seed), budget, decoder, particles, calibration=calibration)
        finals.append(tr.final_error)
        prior = tr.prior_error
    return finals, prior


def ushape_curve(
    epsilons,
    budget: int = 200,
    trials: int = 100,
    seed: int = 0,
    decoder: str = "known_epsilon",
    n: int = 32,
    d: int = 2,
    particles: int = 1000,
    calibration: int = 50,
    workers: int = 1,
) -> UShapeResult:
    """Mean final localization error across a grid of flip probabilities.

    Trial ``t`` draws its stimuli, object and streams from ``(seed, t)`` only,
    so the table does not depend on ``workers``.
    """
    eps = np.asarray(list(epsilons), dtype=float)
    if eps.size == 0:
        raise InputError("epsilon grid is empty")
    for e in eps:
        _check_epsilon(e)
    if trials < 2:
        raise InputError("need at least 2 trials for a standard error")
    jobs = [(eps, t, seed, n, d, budget, decoder, particles, calibration) for t in range(trials)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_one_trial, jobs))
    else:
        out = [_one_trial(j) for j in jobs]
    finals = np.array([o[0] for o in out]).T
    priors = np.array([o[1] for o in out])
    return UShapeResult(eps, finals, priors, budget, decoder)


def symmetry_gaps(result: UShapeResult):
    """For each epsilon whose mirror 1-epsilon is on the grid: (eps, |diff|, pooled se)."""
    out = []
    eps = result.epsilons
    mean, se = result.mean_error, result.std_err
    for a in range(len(eps)):
        b = np.flatnonzero(np.isclose(eps, 1.0 - eps[a], atol=1e-9))
        if b.size and b[0] >= a:
            b = int(b[0])
            out.append((float(eps[a]), float(abs(mean[a] - mean[b])), float(np.hypot(se[a], se[b]))))
    return out


def information_ordering_residuals(result: UShapeResult):
    """Residuals of a decreasing isotonic fit of error against |0.5 - epsilon|, in units of se."""
    x = np.abs(0.5 - result.epsilons)
    mean, se = result.mean_error, np.maximum(result.std_err, 1e-12)
    keys = np.round(x, 12)
    ux = np.unique(keys)
    wts = 1.0 / se**2
    pooled = np.array([np.average(mean[keys == u], weights=wts[keys == u]) for u in ux])
    pooled_w = np.array([wts[keys == u].sum() for u in ux])
    fit = isotonic_regression(pooled, weights=pooled_w, increasing=False).x
    fitted = fit[np.searchsorted(ux, keys)]
    return (mean - fitted) / se
