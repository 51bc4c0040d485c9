"""Monte-Carlo orchestration: rank-recovery tables, random-split MSPE,
instability-profile export and hyperparameter sensitivity sweeps.

Every replication derives its random streams from ``(model.seed,
model.stream_id)`` by forking: stream 0 draws the data, stream 1 the CV
folds and stream 2 the StARS subsamples. Methods therefore never perturb
each other's draws.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RngStream, RrrDataset, projected_spectrum
from .errors import BadSplit, RrrError, ValidationError
from .estimator import DEFAULT_GAMMA, default_lambda_grid
from .refit import mspe, refit_ridge_rrr
from .selection import Criterion, kfold_cv, select_by_criteria
from .simgen import SimulationConfig, generate
from .stars import StarsConfig, build_profile, select_lambda_stars

log = logging.getLogger(__name__)

__all__ = [
    "METHODS",
    "OUTPUT_DIR_ENV",
    "ExperimentSpec",
    "MetricsRow",
    "ReplicationRecord",
    "run_replication",
    "aggregate",
    "run_experiment",
    "run_split_evaluation",
    "export_instability_profile",
    "run_sensitivity",
    "mspe_by_rank",
    "write_metrics_csv",
]

METHODS = ("AIC", "BIC", "GIC", "BICP", "GCV", "PIC", "CV", "StARS-RRR")
OUTPUT_DIR_ENV = "STARSRRR_OUTPUT_DIR"
SWEEPABLE = ("eta", "N", "b")

_STARS_FIELDS = {f.name for f in dataclasses.fields(StarsConfig)}


def _stars_from_dict(d):
    d = dict(d or {})
    unknown = set(d) - _STARS_FIELDS
    if unknown:
        raise ValidationError(f"unknown stars fields: {sorted(unknown)}")
    return StarsConfig(**d)


@dataclass(frozen=True)
class ExperimentSpec:
    """One simulation cell: a model, a method roster and the shared settings.

    The information criteria score full-data fits only, so they run on each
    replication's breakpoint grid (plus ``extra_points`` log-spaced values,
    none by default). CV and StARS-RRR decide from refits on row subsets,
    whose spectra do not line up with the full-data breakpoints; they use
    the same breakpoints refined by ``cv_extra_points`` and
    ``stars.extra_points`` log-spaced values respectively.
    """

    model: SimulationConfig
    methods: tuple = METHODS
    replications: int = 100
    stars: StarsConfig = field(default_factory=StarsConfig)
    cv_folds: int = 5
    gamma: float = DEFAULT_GAMMA
    extra_points: int = 0
    cv_extra_points: int = 100
    output_dir: str | None = None
    n_jobs: int = 1

    def __post_init__(self):
        methods = tuple(self.methods)
        if not methods:
            raise ValidationError("methods must be nonempty")
        if len(set(methods)) != len(methods):
            raise ValidationError("duplicate method labels")
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise ValidationError(f"unknown methods {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.replications < 1:
            raise ValidationError("replications must be >= 1")
        if self.cv_folds < 2:
            raise ValidationError("cv_folds must be >= 2")
        if self.gamma < 0:
            raise ValidationError("gamma must be >= 0")
        if self.extra_points < 0 or self.cv_extra_points < 0:
            raise ValidationError("extra_points must be >= 0")
        if self.stars.gamma != self.gamma:
            object.__setattr__(self, "stars", dataclasses.replace(self.stars, gamma=self.gamma))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        if d["stars"]["lambdas"] is not None:
            d["stars"]["lambdas"] = list(d["stars"]["lambdas"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown experiment fields: {sorted(unknown)}")
        if "model" not in d:
            raise ValidationError("experiment spec needs a 'model' section")
        d["model"] = SimulationConfig.from_dict(d["model"])
        d["stars"] = _stars_from_dict(d.get("stars"))
        if "methods" in d:
            d["methods"] = tuple(d["methods"])
        return cls(**d)


@dataclass
class MetricsRow:
    method: str
    replications: int
    failures: int
    recovery_pct: float
    under_pct: float
    over_pct: float
    bias_mean: float
    bias_sd: float
    rank_mean: float
    rank_sd: float
    snr_mean: float
    mspe_mean: float | None = None
    mspe_sd: float | None = None
    errors: str = ""
    sweep_value: str = ""

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class ReplicationRecord:
    index: int
    snr: float
    effective_rank: int
    grid_size: int
    ranks: dict  # method -> int or None
    errors: dict  # method -> exception class name
    lambdas: dict  # method -> selected lambda or None


def _sd(a):
    a = np.asarray(a, dtype=float)
    return float(np.std(a, ddof=1)) if a.size > 1 else 0.0


def _rep_streams(model: SimulationConfig, index: int):
    rep = RngStream(model.seed, model.stream_id).fork(index)
    return rep.fork(0), rep.fork(1), rep.fork(2)


def _select_all(data, spectrum, spec, grid, cv_stream, stars_stream):
    methods, gamma = spec.methods, spec.gamma
    ranks, errors, lams = {}, {}, {}
    ic = [m for m in methods if m in Criterion.__members__]
    if ic:
        res = select_by_criteria(ic, data, gamma, grid, spectrum)
        for m in ic:
            r = res[m]
            if isinstance(r, Exception):
                ranks[m], errors[m], lams[m] = None, type(r).__name__, None
            else:
                ranks[m], lams[m] = r.rank, r.lam
    if "CV" in methods:
        try:
            cv_grid = default_lambda_grid(spectrum, gamma, spec.cv_extra_points)
            r = kfold_cv(data, gamma, cv_grid, spec.cv_folds, cv_stream)
            ranks["CV"], lams["CV"] = r.rank, r.lam
        except RrrError as exc:
            ranks["CV"], errors["CV"], lams["CV"] = None, type(exc).__name__, None
    if "StARS-RRR" in methods:
        cfg = dataclasses.replace(spec.stars, gamma=gamma)
        try:
            prof = build_profile(data, cfg, stars_stream, spectrum=spectrum)
            r = select_lambda_stars(prof, cfg.eta)
            ranks["StARS-RRR"], lams["StARS-RRR"] = r.rank, r.lam
        except RrrError as exc:
            ranks["StARS-RRR"], errors["StARS-RRR"] = None, type(exc).__name__
            lams["StARS-RRR"] = None
    return ranks, errors, lams


def run_replication(spec: ExperimentSpec, index: int) -> ReplicationRecord:
    """Generate replication ``index`` and record each method's selected rank."""
    data_s, cv_s, stars_s = _rep_streams(spec.model, index)
    cfg = spec.model.replace(seed=data_s.seed, stream_id=data_s.stream_id)
    sim = generate(cfg)
    spectrum = projected_spectrum(sim.data)
    grid = default_lambda_grid(spectrum, spec.gamma, spec.extra_points)
    ranks, errors, lams = _select_all(sim.data, spectrum, spec, grid, cv_s, stars_s)
    return ReplicationRecord(index, sim.snr, sim.effective_rank, int(grid.size), ranks, errors, lams)


def aggregate(method, ranks, true_rank, snrs, errors=(), mspes=None) -> MetricsRow:
    """Summarize one method's per-replication ranks.

    Failed replications (``None`` ranks) are excluded from the ratios and
    counted in ``failures``; ``errors`` lists the exception names.
    """
    ok = np.array([r for r in ranks if r is not None], dtype=float)
    fails = len(ranks) - ok.size
    errs = {}
    for e in errors:
        if e:
            errs[e] = errs.get(e, 0) + 1
    err_s = ";".join(f"{k}={v}" for k, v in sorted(errs.items()))
    nan = float("nan")
    if ok.size and true_rank is not None:
        rec = 100.0 * np.mean(ok == true_rank)
        under = 100.0 * np.mean(ok < true_rank)
        over = 100.0 * np.mean(ok > true_rank)
        bias = ok - true_rank
        bias_mean, bias_sd = float(bias.mean()), _sd(bias)
    else:
        rec = under = over = bias_mean = bias_sd = nan
    row = MetricsRow(
        method=method,
        replications=len(ranks),
        failures=fails,
        recovery_pct=float(rec),
        under_pct=float(under),
        over_pct=float(over),
        bias_mean=bias_mean,
        bias_sd=bias_sd,
        rank_mean=float(ok.mean()) if ok.size else nan,
        rank_sd=_sd(ok) if ok.size else nan,
        snr_mean=float(np.mean(snrs)) if len(snrs) else nan,
        errors=err_s,
    )
    if mspes is not None:
        vals = np.array([v for v in mspes if v is not None], dtype=float)
        row.mspe_mean = float(vals.mean()) if vals.size else nan
        row.mspe_sd = _sd(vals) if vals.size else nan
    return row


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 10)) if math.isfinite(v) else str(v)
    return str(v)


def write_metrics_csv(path, rows) -> None:
    names = [f.name for f in dataclasses.fields(MetricsRow)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for r in rows:
            w.writerow([_fmt(getattr(r, nm)) for nm in names])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _resolve_out(output_dir):
    out = output_dir or os.environ.get(OUTPUT_DIR_ENV)
    return Path(out) if out else None


def _run_reps(spec):
    idx = range(spec.replications)
    if spec.n_jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.n_jobs) as ex:
            return list(ex.map(run_replication, [spec] * spec.replications, idx))
    return [run_replication(spec, i) for i in idx]


def run_experiment(spec: ExperimentSpec, write: bool = True):
    """Run all replications of one cell; returns ``(rows, records)``.

    When an output directory is configured (``spec.output_dir`` or the
    ``STARSRRR_OUTPUT_DIR`` environment variable) and ``write`` is true,
    ``metrics.csv`` and ``run.json`` are written there.
    """
    records = _run_reps(spec)
    snrs = [r.snr for r in records]
    rows = [
        aggregate(
            m,
            [r.ranks.get(m) for r in records],
            spec.model.r_star,
            snrs,
            [r.errors.get(m) for r in records],
        )
        for m in spec.methods
    ]
    out = _resolve_out(spec.output_dir)
    if write and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "metrics.csv", rows)
        payload = {
            "spec": spec.to_dict(),
            "rows": [r.as_dict() for r in rows],
            "replications": [dataclasses.asdict(r) for r in records],
        }
        with open(out / "run.json", "w") as fh:
            json.dump(_jsonable(payload), fh, indent=1, sort_keys=True)
    return rows, records


def _split_sizes(n, train_fraction):
    if not 0 < train_fraction < 1:
        raise BadSplit("train_fraction must lie strictly between 0 and 1")
    n_train = int(round(train_fraction * n))
    n_test = n - n_train
    if n_test < 1 or n_train < 2:
        raise BadSplit(f"split of n={n} at {train_fraction} leaves n_train={n_train}, n_test={n_test}")
    return n_train, n_test


def run_split_evaluation(
    data: RrrDataset,
    spec: ExperimentSpec,
    train_fraction: float,
    rng: RngStream,
    n_splits: int = 100,
    ridge: float | None = None,
):
    """Random train/test splits: select the rank on the training part,
    refit a ridge reduced-rank regression at that rank, score MSPE on the
    held-out part. Returns ``(rows, per_split)``.
    """
    n_train, _ = _split_sizes(data.n, train_fraction)
    ranks = {m: [] for m in spec.methods}
    errs = {m: [] for m in spec.methods}
    mspes = {m: [] for m in spec.methods}
    per_split = []
    for i in range(n_splits):
        s = rng.fork(i)
        perm = s.fork(0).generator().permutation(data.n)
        train = data.take(np.sort(perm[:n_train]))
        test = data.take(np.sort(perm[n_train:]))
        spectrum = projected_spectrum(train)
        grid = default_lambda_grid(spectrum, spec.gamma, spec.extra_points)
        rk, er, _ = _select_all(train, spectrum, spec, grid, s.fork(1), s.fork(2))
        row = {"split": i}
        for m in spec.methods:
            k = rk.get(m)
            ranks[m].append(k)
            errs[m].append(er.get(m))
            if k is None:
                mspes[m].append(None)
                continue
            k = min(int(k), train.p, train.q)
            val = mspe(refit_ridge_rrr(train, k, ridge), test)
            mspes[m].append(val)
            row[m] = {"rank": int(k), "mspe": val}
        per_split.append(row)
    rows = [aggregate(m, ranks[m], None, [], errs[m], mspes[m]) for m in spec.methods]
    out = _resolve_out(spec.output_dir)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "split_metrics.csv", rows)
        with open(out / "split_run.json", "w") as fh:
            payload = {
                "spec": spec.to_dict(),
                "train_fraction": train_fraction,
                "n_splits": n_splits,
                "seed": rng.seed,
                "stream_id": rng.stream_id,
                "splits": per_split,
            }
            json.dump(_jsonable(payload), fh, indent=1, sort_keys=True)
    return rows, per_split


def mspe_by_rank(cfg: SimulationConfig, ranks, replications: int = 100, ridge=None):
    """Mean test MSPE of the ridge refit at each fixed rank.

    Each replication draws ``2 n`` rows from the model (shared ``X2`` and
    ``C``); the first ``n`` train, the rest test. Returns ``{k: (mean, sd)}``.
    """
    ranks = list(ranks)
    vals = {k: [] for k in ranks}
    root = RngStream(cfg.seed, cfg.stream_id)
    for i in range(replications):
        s = root.fork(i)
        sim = generate(cfg.replace(n=2 * cfg.n, seed=s.seed, stream_id=s.stream_id))
        train = sim.data.take(np.arange(cfg.n))
        test = sim.data.take(np.arange(cfg.n, 2 * cfg.n))
        for k in ranks:
            vals[k].append(mspe(refit_ridge_rrr(train, k, ridge), test))
    return {k: (float(np.mean(v)), _sd(v)) for k, v in vals.items()}


def export_instability_profile(data: RrrDataset, cfg: StarsConfig, rng: RngStream, path, grid_extra=None):
    """Write the instability profile CSV; returns ``(profile, selection or None)``.

    The CSV holds one row per grid point after the header; the selected index,
    when one exists, is appended as a ``# selected_index=...`` comment line.
    """
    if cfg.lambdas is None and grid_extra is not None:
        cfg = dataclasses.replace(cfg, extra_points=int(grid_extra))
    prof = build_profile(data, cfg, rng)
    try:
        sel = select_lambda_stars(prof, cfg.eta)
    except RrrError as exc:
        log.warning("no stable lambda: %s", exc)
        sel = None
    prof.to_csv(path, selected_index=None if sel is None else sel.index)
    return prof, sel


def _parse_b(value):
    v = float(value)
    if v < 1:
        return {"subsample_size": None, "subsample_fraction": v}
    if v != int(v):
        raise ValidationError(f"subsample size must be an integer count or a fraction, got {value}")
    return {"subsample_size": int(v)}


def run_sensitivity(spec: ExperimentSpec, param: str, values, write: bool = True):
    """Repeat :func:`run_experiment` for each value of ``eta``, ``N`` or ``b``.

    ``b`` values below 1 are fractions of ``n``; values >= 1 are row counts.
    Returns ``{value: rows}``; with an output directory, one subdirectory
    per value plus a combined ``sensitivity.csv``.
    """
    if param not in SWEEPABLE:
        raise ValidationError(f"sweep parameter must be one of {SWEEPABLE}")
    values = list(values)
    if not values:
        raise ValidationError("sweep needs at least one value")
    out = _resolve_out(spec.output_dir)
    results, combined = {}, []
    for v in values:
        if param == "eta":
            st = dataclasses.replace(spec.stars, eta=float(v))
        elif param == "N":
            st = dataclasses.replace(spec.stars, n_subsamples=int(v))
        else:
            st = dataclasses.replace(spec.stars, **_parse_b(v))
        sub_out = str(out / f"{param}={v}") if out is not None else None
        sub = dataclasses.replace(spec, stars=st, output_dir=sub_out)
        rows, _ = run_experiment(sub, write=write)
        for r in rows:
            r.sweep_value = f"{param}={v}"
        results[v] = rows
        combined.extend(rows)
    if write and out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(out / "sensitivity.csv", combined)
    return results
