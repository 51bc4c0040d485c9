"""Adaptive nuclear-norm penalized reduced-rank regression.

The penalized problem

    min_C  1/2 ||Y - X C||_F^2 + lam * sum_i w_i d_i(X C),   w_i = d_i(P Y)^(-gamma)

has a closed-form solution: soft-threshold the singular values of ``P Y`` with
component-specific thresholds ``lam * w_i``. The resulting rank is the number
of ``d_i(P Y)`` strictly above ``lam ** (1 / (gamma + 1))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProjectedSpectrum, RrrDataset
from .errors import UnsortedGrid, ValidationError, ZeroSpectrum

__all__ = [
    "DEFAULT_GAMMA",
    "PenaltyConfig",
    "RrrFit",
    "RankPath",
    "estimate_rank",
    "shrunk_values",
    "fit",
    "adaptive_objective",
    "rank_path",
    "default_lambda_grid",
]

DEFAULT_GAMMA = 2.0


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValidationError(f"gamma must be >= 0, got {self.gamma}")
        if not self.lam >= 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")

    @property
    def threshold(self) -> float:
        """The singular-value cutoff ``lam ** (1 / (gamma + 1))``."""
        return float(self.lam) ** (1.0 / (self.gamma + 1.0))


@dataclass(frozen=True)
class RrrFit:
    coefficient: np.ndarray
    fitted: np.ndarray
    rank: int
    lam: float
    gamma: float
    objective_value: float
    fitted_singular_values: np.ndarray


@dataclass(frozen=True)
class RankPath:
    lambdas: np.ndarray
    ranks: np.ndarray
    source: str = "full"


def _values(spectrum):
    if isinstance(spectrum, ProjectedSpectrum):
        return spectrum.singular_values
    return np.asarray(spectrum, dtype=float)


def estimate_rank(spectrum, cfg: PenaltyConfig) -> int:
    """Rank of the penalized fit: ``#{i : d_i(PY) > lam^(1/(gamma+1))}``.

    ``spectrum`` may be a :class:`ProjectedSpectrum` or a plain sequence of
    singular values.
    """
    d = _values(spectrum)
    return int(np.count_nonzero(d > cfg.threshold))


def shrunk_values(d, lam: float, gamma: float) -> np.ndarray:
    """Adaptive soft-threshold ``(d_i - lam * d_i^(-gamma))_+``.

    Components with ``d_i = 0`` carry an infinite weight and are always
    removed. A component survives exactly when ``d_i`` exceeds the rank
    threshold, so the output support matches :func:`estimate_rank`.
    """
    d = np.asarray(d, dtype=float)
    keep = d > float(lam) ** (1.0 / (gamma + 1.0))
    out = np.zeros_like(d)
    dk = d[keep]
    out[keep] = np.maximum(dk - lam * dk ** (-gamma), 0.0)
    return out


def adaptive_objective(data: RrrDataset, spectrum: ProjectedSpectrum, fitted, lam, gamma):
    """Evaluate the penalized objective at a candidate fitted matrix ``X C``.

    The i-th largest singular value of ``fitted`` is weighted by
    ``d_i(PY)^(-gamma)``; components where ``d_i(PY) = 0`` get weight +inf
    unless the matching fitted value is zero.
    """
    resid = data.y - fitted
    sv = np.linalg.svd(fitted, compute_uv=False)
    d = spectrum.singular_values
    k = min(sv.size, d.size)
    pen = 0.0
    for i in range(k):
        if sv[i] == 0.0:
            continue
        pen += sv[i] * (np.inf if d[i] == 0.0 else d[i] ** (-gamma))
    extra = sv[k:]
    if np.any(extra > 0):
        pen = np.inf
    return 0.5 * float(np.sum(resid * resid)) + lam * pen


def fit(data: RrrDataset, spectrum: ProjectedSpectrum, cfg: PenaltyConfig) -> RrrFit:
    """Closed-form adaptive nuclear-norm fit at one tuning parameter.

    Returns a rank-0 fit (zero matrices) when every component is thresholded,
    including when the projected response is identically zero.
    """
    if not cfg.lam > 0:
        raise ValidationError("fit requires lambda > 0")
    d = spectrum.singular_values
    s = shrunk_values(d, cfg.lam, cfg.gamma)
    r = estimate_rank(d, cfg)
    if not np.all(np.isfinite(s)):
        raise ValidationError("non-finite shrunk singular values")
    u = spectrum.left_vectors[:, :r]
    v = spectrum.right_vectors[:, :r]
    fitted = (u * s[:r]) @ v.T
    coef = spectrum.apply_pinv(fitted)
    resid = data.y - fitted
    pen = float(np.sum(d[:r] ** (-cfg.gamma) * s[:r])) if r else 0.0
    obj = 0.5 * float(np.sum(resid * resid)) + cfg.lam * pen
    return RrrFit(
        coefficient=coef,
        fitted=fitted,
        rank=r,
        lam=float(cfg.lam),
        gamma=float(cfg.gamma),
        objective_value=obj,
        fitted_singular_values=s,
    )


def _check_grid(lambdas):
    lam = np.asarray(lambdas, dtype=float).ravel()
    if lam.size == 0:
        raise UnsortedGrid("lambda grid is empty")
    if np.any(lam < 0) or not np.all(np.isfinite(lam)):
        raise UnsortedGrid("lambda grid must be finite and nonnegative")
    if np.any(np.diff(lam) <= 0):
        raise UnsortedGrid("lambda grid must be strictly increasing")
    return lam


def rank_path(spectrum, gamma: float, lambdas, source: str = "full") -> RankPath:
    """Estimated rank at every grid point, from one sorted pass over ``d``."""
    lam = _check_grid(lambdas)
    if gamma < 0:
        raise ValidationError("gamma must be >= 0")
    d = _values(spectrum)
    thr = lam ** (1.0 / (gamma + 1.0))
    asc = np.sort(d)
    ranks = d.size - np.searchsorted(asc, thr, side="right")
    return RankPath(lambdas=lam, ranks=ranks.astype(int), source=source)


def default_lambda_grid(spectrum, gamma: float = DEFAULT_GAMMA, extra_points: int = 0):
    """Breakpoint grid visiting every achievable rank in ``[0, m]``.

    One point sits between each pair of distinct consecutive positive singular
    values (the midpoint, raised to ``gamma + 1``), one below the smallest and
    one above the largest. ``extra_points`` log-spaced values spanning the
    same range are merged in.
    """
    d = _values(spectrum)
    d = d[d > 0]
    if d.size == 0:
        raise ZeroSpectrum("no positive singular values to build a grid from")
    e = gamma + 1.0
    uniq = np.unique(d)[::-1]  # descending, distinct
    mids = (uniq[1:] + uniq[:-1]) / 2.0
    pts = np.concatenate([[uniq[-1] / 2.0], mids[::-1], [1.05 * uniq[0]]]) ** e
    if extra_points > 0:
        logs = np.geomspace(pts[0], pts[-1], int(extra_points))
        pts = np.concatenate([pts, logs])
    return np.unique(pts)
