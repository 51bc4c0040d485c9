"""Tuning-parameter selection by information criteria and K-fold CV."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, RrrDataset, projected_spectrum
from .errors import AllScoresInfinite, FoldTooSmall, ValidationError
from .estimator import PenaltyConfig, RrrFit, _check_grid, estimate_rank, fit

__all__ = [
    "Criterion",
    "SelectionResult",
    "degrees_of_freedom",
    "criterion_score",
    "argmin_prefer_last",
    "select_by_criterion",
    "select_by_criteria",
    "kfold_partition",
    "kfold_cv",
]

RSS_FLOOR = 1e-300


class Criterion(str, enum.Enum):
    AIC = "AIC"
    BIC = "BIC"
    GIC = "GIC"
    BICP = "BICP"
    GCV = "GCV"
    PIC = "PIC"


@dataclass
class SelectionResult:
    method: str
    lam: float
    rank: int
    index: int
    score_trace: np.ndarray
    lambdas: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return [clean(x) for x in v.tolist()]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            if isinstance(v, dict):
                return {str(k): clean(x) for k, x in v.items()}
            if isinstance(v, (float, np.floating)):
                f = float(v)
                return f if math.isfinite(f) else str(f)
            if isinstance(v, np.integer):
                return int(v)
            return v

        return clean(
            {
                "method": self.method,
                "lambda": self.lam,
                "rank": self.rank,
                "index": self.index,
                "lambdas": self.lambdas,
                "score_trace": self.score_trace,
                "diagnostics": self.diagnostics,
            }
        )


def degrees_of_freedom(rank: int, r_x: int, q: int) -> int:
    """Parameter count ``r (r_x + q - r)`` of a rank-``r`` coefficient."""
    return int(rank) * (int(r_x) + int(q) - int(rank))


def _score(kind, rss, n, p, q, df):
    nq = n * q
    if kind in (Criterion.GCV, Criterion.PIC):
        den = nq - (df if kind is Criterion.GCV else 2 * df)
        if den <= 0:
            return math.inf
        return nq * rss / den**2 if kind is Criterion.GCV else rss / den
    fit_term = nq * math.log(max(rss, RSS_FLOOR) / nq)
    if kind is Criterion.AIC:
        return fit_term + 2.0 * df
    if kind is Criterion.BIC:
        return fit_term + math.log(nq) * df
    if kind is Criterion.GIC:
        return fit_term + math.log(math.log(nq)) * math.log(p * q) * df
    if kind is Criterion.BICP:
        return fit_term + 2.0 * math.log(p * q) * df
    raise ValidationError(f"unknown criterion {kind!r}")


def criterion_score(kind, data: RrrDataset, fitres: RrrFit, r_x: int) -> float:
    """Value of an information criterion at one penalized fit.

    GCV and PIC return ``+inf`` when their denominators are not positive.
    """
    kind = Criterion(kind)
    resid = data.y - fitres.fitted
    rss = float(np.sum(resid * resid))
    df = degrees_of_freedom(fitres.rank, r_x, data.q)
    return _score(kind, rss, data.n, data.p, data.q, df)


def argmin_prefer_last(scores) -> int:
    """Index of the minimum; exact ties go to the later (larger lambda) index."""
    scores = np.asarray(scores, dtype=float)
    rev = scores[::-1]
    return int(scores.size - 1 - np.argmin(rev))


def select_by_criteria(kinds, data: RrrDataset, gamma: float, lambdas, spectrum=None) -> dict:
    """Score every grid point under several criteria, sharing the fits.

    Returns ``{kind.value: SelectionResult}``. A criterion whose scores are
    all infinite maps to the :class:`AllScoresInfinite` instance instead.
    """
    kinds = [Criterion(k) for k in kinds]
    lam = _check_grid(lambdas)
    if spectrum is None:
        spectrum = projected_spectrum(data)
    r_x = spectrum.design_rank
    traces = {k: np.empty(lam.size) for k in kinds}
    ranks = np.empty(lam.size, dtype=int)
    for j, lj in enumerate(lam):
        f = fit(data, spectrum, PenaltyConfig(lam=lj, gamma=gamma))
        ranks[j] = f.rank
        resid = data.y - f.fitted
        rss = float(np.sum(resid * resid))
        df = degrees_of_freedom(f.rank, r_x, data.q)
        for k in kinds:
            traces[k][j] = _score(k, rss, data.n, data.p, data.q, df)
    out = {}
    for k in kinds:
        tr = traces[k]
        if not np.any(np.isfinite(tr)):
            out[k.value] = AllScoresInfinite(f"{k.value}: every grid point scored +inf")
            continue
        i = argmin_prefer_last(tr)
        out[k.value] = SelectionResult(
            method=k.value,
            lam=float(lam[i]),
            rank=int(ranks[i]),
            index=i,
            score_trace=tr,
            lambdas=lam,
            diagnostics={"ranks": ranks.copy(), "gamma": gamma, "design_rank": r_x},
        )
    return out


def select_by_criterion(kind, data: RrrDataset, gamma: float, lambdas, spectrum=None) -> SelectionResult:
    """Fit at every grid point and return the criterion minimizer."""
    res = select_by_criteria([kind], data, gamma, lambdas, spectrum)[Criterion(kind).value]
    if isinstance(res, Exception):
        raise res
    return res


def kfold_partition(n: int, k_folds: int, rng: RngStream) -> list:
    """Random near-equal partition of ``range(n)``; the first ``n % k`` folds
    get one extra row."""
    if k_folds < 2 or k_folds > n:
        raise FoldTooSmall(f"need 2 <= k_folds <= n (k_folds={k_folds}, n={n})")
    base, extra = divmod(n, k_folds)
    if n - (base + (1 if extra else 0)) < 2:
        raise FoldTooSmall("a training complement would have fewer than 2 rows")
    perm = rng.generator().permutation(n)
    sizes = [base + 1 if i < extra else base for i in range(k_folds)]
    bounds = np.cumsum([0] + sizes)
    return [np.sort(perm[bounds[i] : bounds[i + 1]]) for i in range(k_folds)]


def kfold_cv(
    data: RrrDataset,
    gamma: float,
    lambdas,
    k_folds: int = 5,
    rng: RngStream | None = None,
    folds=None,
) -> SelectionResult:
    """K-fold cross validation of the penalized estimator over a grid.

    Each training complement gets its own spectrum; the held-out score is the
    squared Frobenius prediction error, averaged over folds. ``folds`` may be
    supplied directly (a list of index arrays) instead of drawing from ``rng``.
    """
    lam = _check_grid(lambdas)
    if folds is None:
        if rng is None:
            raise ValidationError("kfold_cv needs an rng or explicit folds")
        folds = kfold_partition(data.n, k_folds, rng)
    all_rows = np.arange(data.n)
    per_fold = np.empty((len(folds), lam.size))
    for i, test in enumerate(folds):
        test = np.asarray(test, dtype=np.intp)
        if test.size < 1:
            raise FoldTooSmall("empty fold")
        train = np.setdiff1d(all_rows, test)
        if train.size < 2:
            raise FoldTooSmall("training complement has fewer than 2 rows")
        tr = data.take(train)
        spec = projected_spectrum(tr)
        x_te, y_te = data.x[test], data.y[test]
        for j, lj in enumerate(lam):
            f = fit(tr, spec, PenaltyConfig(lam=lj, gamma=gamma))
            r = y_te - x_te @ f.coefficient
            per_fold[i, j] = float(np.sum(r * r))
    scores = per_fold.mean(axis=0)
    j = argmin_prefer_last(scores)
    full = projected_spectrum(data)
    return SelectionResult(
        method="CV",
        lam=float(lam[j]),
        rank=estimate_rank(full, PenaltyConfig(lam=lam[j], gamma=gamma)),
        index=j,
        score_trace=scores,
        lambdas=lam,
        diagnostics={"per_fold": per_fold, "folds": [f.tolist() for f in folds], "gamma": gamma},
    )
