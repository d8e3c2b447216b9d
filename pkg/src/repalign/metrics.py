"""Alignment metrics between two agents over shared stimuli."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import stats
from ._rng import derive_rng
from .core import Agent, TripletSpace, n_triplets, triplet_space, triplet_unindex_array
from .errors import DegenerateInputError, InputError

TIE_MODES = ("include", "exclude")

REPORT_COLUMNS = (
    "triplet",
    "pearson",
    "spearman",
    "n_triplets_used",
    "ties_excluded",
    "sampling_m",
    "sampling_std_err",
    "sampling_ci_low",
    "sampling_ci_high",
    "sampling_seed",
)


@dataclass(frozen=True)
class StochasticMisalignment:
    epsilon_hat: float
    m: int
    std_err: float
    seed: int

    @property
    def ci95(self) -> tuple[float, float]:
        half = stats.Z_975 * self.std_err
        return (max(0.0, self.epsilon_hat - half), min(1.0, self.epsilon_hat + half))


@dataclass(frozen=True)
class AlignmentReport:
    triplet_alignment: float
    pearson: float
    spearman: float
    n_triplets_used: int
    n_ties_excluded: int
    sampling: dict | None = None

    def to_dict(self) -> dict:
        return {
            "triplet": self.triplet_alignment,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "n_triplets_used": self.n_triplets_used,
            "ties_excluded": self.n_ties_excluded,
            "sampling": self.sampling,
        }

    def csv_row(self) -> dict:
        s = self.sampling or {}
        ci = s.get("ci95", ("", ""))
        return {
            "triplet": self.triplet_alignment,
            "pearson": self.pearson,
            "spearman": self.spearman,
            "n_triplets_used": self.n_triplets_used,
            "ties_excluded": self.n_ties_excluded,
            "sampling_m": s.get("m", ""),
            "sampling_std_err": s.get("std_err", ""),
            "sampling_ci_low": ci[0],
            "sampling_ci_high": ci[1],
            "sampling_seed": s.get("seed", ""),
        }


def _check_tie_mode(tie_mode):
    if tie_mode not in TIE_MODES:
        raise InputError(f"unknown tie mode {tie_mode!r}; expected one of {TIE_MODES}")


def triplet_disagreements(sa: TripletSpace, sb: TripletSpace, tie_mode: str = "include") -> tuple[int, int]:
    """(number of disagreeing positions, number of counted positions)."""
    _check_tie_mode(tie_mode)
    if sa.n != sb.n:
        raise InputError(f"triplet spaces cover different stimulus counts: {sa.n} vs {sb.n}")
    diff = np.bitwise_xor(sa.bits, sb.bits)
    if tie_mode == "exclude":
        tied = np.bitwise_or(sa.tie_mask, sb.tie_mask)
        diff = np.bitwise_and(diff, np.bitwise_not(tied))
        counted = sa.length - int(np.bitwise_count(tied).sum())
    else:
        counted = sa.length
    return int(np.bitwise_count(diff).sum()), counted


def triplet_misalignment(sa: TripletSpace, sb: TripletSpace, tie_mode: str = "include") -> float:
    """Normalized Hamming distance between two triplet spaces.

    In ``exclude`` mode positions tied in either space are dropped and the
    remainder renormalized.  Alignment is ``1 - misalignment``.
    """
    wrong, counted = triplet_disagreements(sa, sb, tie_mode)
    if counted == 0:
        raise DegenerateInputError("every triplet position is tied; misalignment undefined")
    return wrong / counted


def _check_shared(a: Agent, b: Agent):
    if a.stimuli.ids != b.stimuli.ids:
        raise InputError("agents must share the same ordered stimulus set")


def sampled_misalignment(agent_a: Agent, agent_b: Agent, m: int, seed: int, tie_mode: str = "include") -> StochasticMisalignment:
    """Monte-Carlo disagreement rate over ``m`` uniform triplets drawn with replacement."""
    _check_tie_mode(tie_mode)
    _check_shared(agent_a, agent_b)
    n = agent_a.n
    if n < 3:
        raise InputError(f"need at least 3 stimuli, got {n}")
    if m < 1:
        raise InputError(f"need m >= 1 samples, got {m}")
    rng = derive_rng(seed, "sampled_misalignment")
    t = rng.integers(0, n_triplets(n), size=m)
    i, j, k = triplet_unindex_array(t, n)
    da, db = agent_a.distance_matrix(), agent_b.distance_matrix()
    aj, ak = da[i, j], da[i, k]
    bj, bk = db[i, j], db[i, k]
    disagree = (aj < ak) != (bj < bk)
    if tie_mode == "exclude":
        keep = (aj != ak) & (bj != bk)
        disagree = disagree[keep]
        if disagree.size == 0:
            raise DegenerateInputError("every sampled triplet is tied")
    used = disagree.size
    eps = float(disagree.mean())
    return StochasticMisalignment(eps, used, float(np.sqrt(eps * (1.0 - eps) / used)), int(seed))


def pearson_pairwise_alignment(sim_a, sim_b) -> float:
    return stats.pearson_r(sim_a, sim_b)


def spearman_pairwise_alignment(sim_a, sim_b) -> float:
    return stats.spearman_r(sim_a, sim_b)


z_squared = stats.z_squared


def alignment_report(
    agent_a: Agent,
    agent_b: Agent,
    mode: str = "exact",
    tie_mode: str = "include",
    kernel: str = "neg_euclidean",
    m: int = 10_000,
    seed: int | None = None,
) -> AlignmentReport:
    """Triplet, Pearson and Spearman alignment of two agents.

    ``mode="sampled"`` replaces the exact triplet count with the Monte-Carlo
    estimate and requires ``seed``.
    """
    _check_shared(agent_a, agent_b)
    _check_tie_mode(tie_mode)
    sim_a = agent_a.similarities(kernel)
    sim_b = agent_b.similarities(kernel)
    pearson_v = pearson_pairwise_alignment(sim_a, sim_b)
    spearman_v = spearman_pairwise_alignment(sim_a, sim_b)
    if mode == "exact":
        sa, sb = triplet_space(agent_a), triplet_space(agent_b)
        wrong, counted = triplet_disagreements(sa, sb, tie_mode)
        if counted == 0:
            raise DegenerateInputError("every triplet position is tied; misalignment undefined")
        return AlignmentReport(
            triplet_alignment=1.0 - wrong / counted,
            pearson=pearson_v,
            spearman=spearman_v,
            n_triplets_used=counted,
            n_ties_excluded=sa.length - counted,
        )
    if mode == "sampled":
        if seed is None:
            raise InputError("sampled mode requires an explicit seed")
        est = sampled_misalignment(agent_a, agent_b, m, seed, tie_mode)
        lo, hi = est.ci95
        return AlignmentReport(
            triplet_alignment=1.0 - est.epsilon_hat,
            pearson=pearson_v,
            spearman=spearman_v,
            n_triplets_used=est.m,
            n_ties_excluded=m - est.m,
            sampling={"m": m, "std_err": est.std_err, "ci95": [1.0 - hi, 1.0 - lo], "seed": int(seed)},
        )
    raise InputError(f"unknown mode {mode!r}; expected 'exact' or 'sampled'")


def average_reports(reports) -> AlignmentReport:
    """Arithmetic mean of each metric across per-dataset reports."""
    reports = list(reports)
    if not reports:
        raise InputError("no reports to average")
    return AlignmentReport(
        triplet_alignment=float(np.mean([r.triplet_alignment for r in reports])),
        pearson=float(np.mean([r.pearson for r in reports])),
        spearman=float(np.mean([r.spearman for r in reports])),
        n_triplets_used=int(sum(r.n_triplets_used for r in reports)),
        n_ties_excluded=int(sum(r.n_ties_excluded for r in reports)),
        sampling=None,
    )
