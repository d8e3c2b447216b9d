"""Correlation machinery: Pearson, Spearman, partial correlation, Fisher intervals."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats as sps

from ._rng import derive_rng
from .errors import DegenerateInputError, InputError

Z_975 = 1.959964


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    n: int
    ci95: tuple[float, float]
    p_value: float

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "n": self.n,
            "ci_low": self.ci95[0],
            "ci_high": self.ci95[1],
            "p_value": self.p_value,
        }


def _vectors(x, y, min_len):
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise InputError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < min_len:
        raise InputError(f"need at least {min_len} observations, got {x.size}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise InputError("observations must be finite")
    return x, y


def pearson_r(x, y) -> float:
    """Product-moment correlation of two equal-length vectors (length >= 2)."""
    x, y = _vectors(x, y, 2)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = dx @ dx
    syy = dy @ dy
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("correlation undefined for a constant vector")
    r = (dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def average_ranks(x) -> np.ndarray:
    return sps.rankdata(x, method="average")


def spearman_r(x, y) -> float:
    x, y = _vectors(x, y, 2)
    return pearson_r(average_ranks(x), average_ranks(y))


def fisher_ci(rho: float, n: int, n_covariates: int = 0) -> tuple[float, float]:
    dof = n - 3 - n_covariates
    if dof <= 0:
        return (-1.0, 1.0)
    if abs(rho) >= 1.0:
        return (rho, rho)
    z = np.arctanh(rho)
    half = Z_975 / np.sqrt(dof)
    return (float(np.tanh(z - half)), float(np.tanh(z + half)))


def t_p_value(rho: float, dof: int) -> float:
    """Two-sided p-value of H0: rho = 0 via the t approximation."""
    if dof <= 0:
        return float("nan")
    if abs(rho) >= 1.0:
        return 0.0
    t = rho * np.sqrt(dof / (1.0 - rho * rho))
    return float(2.0 * sps.t.sf(abs(t), dof))


def _result(rho, n, n_covariates=0):
    return CorrelationResult(
        rho=rho,
        n=n,
        ci95=fisher_ci(rho, n, n_covariates),
        p_value=t_p_value(rho, n - 2 - n_covariates),
    )


def pearson(x, y) -> CorrelationResult:
    x, y = _vectors(x, y, 3)
    return _result(pearson_r(x, y), x.size)


def spearman(x, y) -> CorrelationResult:
    x, y = _vectors(x, y, 3)
    return _result(spearman_r(x, y), x.size)


def partial_r_from_correlations(rxy, rxz, ryz) -> float:
    denom = (1.0 - rxz * rxz) * (1.0 - ryz * ryz)
    if denom <= 0:
        raise DegenerateInputError("covariate fully explains one of the variables")
    return float(np.clip((rxy - rxz * ryz) / np.sqrt(denom), -1.0, 1.0))


def partial_correlation(x, y, z) -> CorrelationResult:
    """Correlation of ``x`` and ``y`` controlling linearly for covariate ``z``."""
    x, y = _vectors(x, y, 4)
    _, z = _vectors(x, z, 4)
    rxz = pearson_r(x, z)
    ryz = pearson_r(y, z)
    if abs(rxz) >= 1.0 or abs(ryz) >= 1.0:
        raise DegenerateInputError("covariate fully explains one of the variables")
    rho = partial_r_from_correlations(pearson_r(x, y), rxz, ryz)
    return _result(rho, x.size, n_covariates=1)


def partial_correlation_residual(x, y, z) -> float:
    """Same quantity as :func:`partial_correlation`, via regression residuals."""
    x, y = _vectors(x, y, 4)
    _, z = _vectors(x, z, 4)
    design = np.column_stack([np.ones_like(z), z])
    rx = x - design @ np.linalg.lstsq(design, x, rcond=None)[0]
    ry = y - design @ np.linalg.lstsq(design, y, rcond=None)[0]
    return pearson_r(rx, ry)


def z_squared(values) -> np.ndarray:
    """Squared standard scores using the population standard deviation."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 2:
        raise InputError(f"need at least 2 values, got {v.size}")
    sd = v.std()
    if sd == 0:
        raise DegenerateInputError("z^2 undefined for a constant vector")
    return ((v - v.mean()) / sd) ** 2


@dataclass(frozen=True)
class PlantedCheck:
    rho_raw: float
    rho_zsq: float

    def to_dict(self):
        return asdict(self)


def planted_quadratic_check(n_agents: int, noise: float, seed: int, trend: str = "quadratic", curvature: float = 1.0):
    """Correlate a planted performance curve with raw and z^2 alignment.

    Alignments are drawn symmetrically about 0.5 (antithetic pairs), so a pure
    U has zero linear correlation with raw alignment.
    """
    if n_agents < 30:
        raise InputError(f"need at least 30 agents, got {n_agents}")
    rng = derive_rng(seed, "planted")
    half = rng.uniform(0.0, 0.5, size=n_agents // 2)
    align = np.concatenate([0.5 - half, 0.5 + half, [0.5] * (n_agents % 2)])
    mu = align.mean()
    if trend == "quadratic":
        perf = curvature * (align - mu) ** 2
    elif trend == "linear":
        perf = curvature * align
    else:
        raise InputError(f"unknown trend {trend!r}")
    perf = perf + noise * rng.standard_normal(n_agents)
    return PlantedCheck(rho_raw=pearson_r(align, perf), rho_zsq=pearson_r(z_squared(align), perf))
