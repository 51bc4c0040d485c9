"""Stability-based selection of the penalty level (StARS-RRR).

For each tuning parameter on an increasing grid, the estimated rank is
computed on ``N`` random subsamples of size ``b``. The instability is the
sample variance of those ranks; its running minimum along the grid is
compared against a threshold ``eta`` and the first (smallest) tuning
parameter that clears it is selected. The reported rank is the full-data
rank at that tuning parameter.

At very small tuning parameters the subsample ranks pile up at their cap
``min(rank(X_b), q)``; a low variance there reflects saturation, not
stability. Leading grid points where any subsample sits at its cap are
trimmed from the profile before the scan (``trim_saturated=True``).
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import RngStream, RrrDataset, projected_spectrum, subsample
from .errors import BadSubsampleSize, NoStableLambda, TooFewSubsamples, ValidationError
from .estimator import DEFAULT_GAMMA, _check_grid, default_lambda_grid, rank_path
from .selection import SelectionResult

__all__ = [
    "StarsConfig",
    "InstabilityProfile",
    "compute_instability",
    "build_profile",
    "select_lambda_stars",
    "stars_rrr",
    "PROFILE_COLUMNS",
]

PROFILE_COLUMNS = ("lambda", "log_lambda", "instability", "cumulative_min", "full_data_rank")


@dataclass(frozen=True)
class StarsConfig:
    """Hyperparameters of the stability search.

    ``subsample_size`` is a row count; when left as ``None`` it resolves to
    ``ceil(subsample_fraction * n)``. ``lambdas=None`` means the breakpoint
    grid of the full-data spectrum with ``extra_points`` log-spaced additions;
    the subsample stable window usually falls between full-data breakpoints,
    so the refinement matters.
    ``lambda_scale`` multiplies the grid seen by the subsamples only.
    ``trim_saturated`` drops leading grid points where some subsample rank
    equals its cap.
    """

    n_subsamples: int = 100
    subsample_size: int | None = None
    subsample_fraction: float = 0.7
    eta: float = 0.001
    gamma: float = DEFAULT_GAMMA
    lambdas: tuple | None = None
    extra_points: int = 100
    lambda_scale: float = 1.0
    trim_saturated: bool = True

    def __post_init__(self):
        if self.n_subsamples < 2:
            raise TooFewSubsamples("need at least 2 subsamples")
        if not self.eta > 0:
            raise ValidationError("eta must be positive")
        if not 0 < self.subsample_fraction < 1:
            raise ValidationError("subsample_fraction must lie in (0, 1)")
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")
        if not self.lambda_scale > 0:
            raise ValidationError("lambda_scale must be positive")
        if self.lambdas is not None:
            object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))

    def resolve_b(self, n: int) -> int:
        b = self.subsample_size
        if b is None:
            # guard the product against float noise (0.7 * 80 = 56.00000000000001)
            b = math.ceil(round(self.subsample_fraction * n, 9))
        b = int(b)
        if b < 2 or b >= n:
            raise BadSubsampleSize(f"subsample size must satisfy 2 <= b < n (b={b}, n={n})")
        return b


@dataclass
class InstabilityProfile:
    lambdas: np.ndarray
    subsample_ranks: np.ndarray  # N x K
    instability: np.ndarray
    cumulative_min: np.ndarray
    full_data_ranks: np.ndarray
    meta: dict = field(default_factory=dict)

    def to_csv(self, path, selected_index=None) -> None:
        """Write one row per grid point; optionally a trailing ``# selected`` marker."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PROFILE_COLUMNS)
            for k, lam in enumerate(self.lambdas):
                w.writerow(
                    [
                        repr(float(lam)),
                        repr(float(np.log(lam))) if lam > 0 else "-inf",
                        repr(float(self.instability[k])),
                        repr(float(self.cumulative_min[k])),
                        int(self.full_data_ranks[k]),
                    ]
                )
            if selected_index is not None:
                fh.write(f"# selected_index={int(selected_index)},lambda={float(self.lambdas[selected_index])!r}\n")

    @staticmethod
    def read_csv(path) -> dict:
        """Parse a profile CSV back into column arrays (plus ``selected_index``)."""
        cols = {c: [] for c in PROFILE_COLUMNS}
        selected = None
        with open(path, newline="") as fh:
            rows = [ln for ln in fh]
        for ln in rows[1:]:
            if ln.startswith("# selected_index="):
                selected = int(ln.split("=")[1].split(",")[0])
                continue
            vals = ln.strip().split(",")
            for c, v in zip(PROFILE_COLUMNS, vals):
                cols[c].append(float(v))
        out = {c: np.array(v) for c, v in cols.items()}
        out["full_data_rank"] = out["full_data_rank"].astype(int)
        out["selected_index"] = selected
        return out


def compute_instability(ranks_at_lambda) -> float:
    """Sample variance (divisor ``N - 1``) of subsample ranks, two-pass form."""
    r = np.asarray(ranks_at_lambda, dtype=float).ravel()
    if r.size < 2:
        raise TooFewSubsamples("instability needs at least 2 subsample ranks")
    dev = r - r.mean()
    return float(np.dot(dev, dev) / (r.size - 1))


def _instability_columns(ranks):
    # column-wise version of compute_instability; exact zero for constant columns
    r = np.asarray(ranks, dtype=float)
    dev = r - r.mean(axis=0)
    var = np.einsum("ij,ij->j", dev, dev) / (r.shape[0] - 1)
    const = np.all(r == r[:1], axis=0)
    var[const] = 0.0
    return var


def _subsample_path(data, b, stream, gamma, grid):
    sub = subsample(data, b, stream)
    spec = projected_spectrum(sub)
    return rank_path(spec, gamma, grid).ranks, min(spec.design_rank, data.q)


def build_profile(
    data: RrrDataset, cfg: StarsConfig, rng: RngStream, n_jobs: int = 1, spectrum=None
) -> InstabilityProfile:
    """Subsample rank paths, instability and its cumulative minimum.

    Subsample ``i`` is drawn from ``rng.fork(i)``, so the result does not
    depend on scheduling when ``n_jobs > 1``.
    """
    full = spectrum if spectrum is not None else projected_spectrum(data)
    if cfg.lambdas is None:
        lam = default_lambda_grid(full, cfg.gamma, cfg.extra_points)
    else:
        lam = _check_grid(cfg.lambdas)
    b = cfg.resolve_b(data.n)
    streams = [rng.fork(i) for i in range(cfg.n_subsamples)]
    sub_grid = lam * cfg.lambda_scale
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            paths = list(ex.map(lambda s: _subsample_path(data, b, s, cfg.gamma, sub_grid), streams))
    else:
        paths = [_subsample_path(data, b, s, cfg.gamma, sub_grid) for s in streams]
    ranks = np.vstack([p[0] for p in paths]).astype(int)
    caps = np.array([p[1] for p in paths])
    start = 0
    if cfg.trim_saturated:
        saturated = np.any(ranks == caps[:, None], axis=0)
        while start < saturated.size - 1 and saturated[start]:
            start += 1
    lam_all = lam
    lam, ranks = lam[start:], ranks[:, start:]
    inst = _instability_columns(ranks)
    return InstabilityProfile(
        lambdas=lam,
        subsample_ranks=ranks,
        instability=inst,
        cumulative_min=np.minimum.accumulate(inst),
        full_data_ranks=rank_path(full, cfg.gamma, lam).ranks,
        meta={
            "trimmed_points": start,
            "candidate_grid_size": int(lam_all.size),
            "n_subsamples": cfg.n_subsamples,
            "subsample_size": b,
            "eta": cfg.eta,
            "gamma": cfg.gamma,
            "lambda_scale": cfg.lambda_scale,
            "seed": rng.seed,
            "stream_id": rng.stream_id,
        },
    )


def select_lambda_stars(profile: InstabilityProfile, eta: float) -> SelectionResult:
    """First grid point (ascending) whose cumulative-minimum instability is <= eta.

    Raises
    ------
    NoStableLambda
        When no grid point qualifies. The exception carries the index of the
        smallest cumulative minimum as an advisory fallback.
    """
    if not eta > 0:
        raise ValidationError("eta must be positive")
    dbar = np.asarray(profile.cumulative_min, dtype=float)
    hits = np.flatnonzero(dbar <= eta)
    lam = np.asarray(profile.lambdas, dtype=float)
    if hits.size == 0:
        fb = int(np.argmin(dbar))
        raise NoStableLambda(
            f"no grid point has cumulative instability <= {eta} (min {dbar[fb]:.4g})",
            fallback_index=fb,
            fallback_lambda=lam[fb],
        )
    k = int(hits[0])
    return SelectionResult(
        method="StARS-RRR",
        lam=float(lam[k]),
        rank=int(profile.full_data_ranks[k]),
        index=k,
        score_trace=np.asarray(profile.cumulative_min, dtype=float).copy(),
        lambdas=lam,
        diagnostics={"eta": eta, "instability": profile.instability.copy(), **profile.meta},
    )


def stars_rrr(data: RrrDataset, cfg: StarsConfig, rng: RngStream, n_jobs: int = 1, spectrum=None):
    """Build the profile and apply the selection rule; returns ``(result, profile)``."""
    prof = build_profile(data, cfg, rng, n_jobs=n_jobs, spectrum=spectrum)
    return select_lambda_stars(prof, cfg.eta), prof
