"""Command-line entry point: ``starsrrr <subcommand> ...``.

Exit status is 0 on success, 2 when the input is rejected (bad flags, bad
files, invalid configuration) and 1 when a computation fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import (
    METHODS,
    OUTPUT_DIR_ENV,
    ExperimentSpec,
    _jsonable,
    _resolve_out,
    export_instability_profile,
    run_experiment,
    run_sensitivity,
    run_split_evaluation,
)
from .core import RngStream, RrrDataset, load_matrix_csv, projected_spectrum, save_matrix_csv
from .errors import RrrError, ValidationError
from .estimator import DEFAULT_GAMMA, default_lambda_grid
from .selection import Criterion, kfold_cv, select_by_criterion
from .simgen import SimulationConfig, generate, model_i, model_ii
from .stars import StarsConfig, stars_rrr

log = logging.getLogger("starsrrr")


def _out_dir(arg) -> Path:
    out = _resolve_out(arg)
    return out if out is not None else Path.cwd()


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _load_dataset(x_path, y_path) -> RrrDataset:
    return RrrDataset(y=load_matrix_csv(y_path), x=load_matrix_csv(x_path))


def _stars_cfg(args, lambdas=None) -> StarsConfig:
    kw = {"n_subsamples": args.subsamples, "eta": args.eta, "gamma": args.gamma, "lambdas": lambdas}
    if args.subsample_size is not None:
        if args.subsample_size < 1:
            kw["subsample_fraction"] = args.subsample_size
        else:
            kw["subsample_size"] = int(args.subsample_size)
    return StarsConfig(**kw)


def _print_rows(rows, stream=None):
    stream = stream or sys.stdout
    head = f"{'method':<10} {'rec%':>6} {'under%':>7} {'over%':>6} {'bias':>7} {'sd':>6} {'rank':>6} {'mspe':>9} {'fail':>4}"
    print(head, file=stream)
    for r in rows:
        mspe = "" if r.mspe_mean is None else f"{r.mspe_mean:9.3f}"
        print(
            f"{r.method:<10} {r.recovery_pct:6.1f} {r.under_pct:7.1f} {r.over_pct:6.1f} "
            f"{r.bias_mean:7.2f} {r.bias_sd:6.2f} {r.rank_mean:6.2f} {mspe:>9} {r.failures:4d}",
            file=stream,
        )


def cmd_simulate(args) -> int:
    if args.config:
        cfg = SimulationConfig.from_dict(_read_json(args.config))
    else:
        make = model_i if args.model == "I" else model_ii
        kw = {"seed": args.seed}
        if args.rho is not None:
            kw["rho"] = args.rho
        if args.s is not None:
            kw["s"] = args.s
        cfg = make(**kw)
    sim = generate(cfg)
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "X.csv", sim.data.x)
    save_matrix_csv(out / "Y.csv", sim.data.y)
    save_matrix_csv(out / "C.csv", sim.true_coefficient)
    meta = {"config": cfg.to_dict(), "snr": sim.snr, "effective_rank": sim.effective_rank}
    with open(out / "simulation.json", "w") as fh:
        json.dump(_jsonable(meta), fh, indent=1, sort_keys=True)
    print(f"wrote X.csv, Y.csv, C.csv to {out} (snr={sim.snr:.3f})")
    return 0


def cmd_select(args) -> int:
    data = _load_dataset(args.x, args.y)
    spectrum = projected_spectrum(data)
    if args.grid_file:
        grid = load_matrix_csv(args.grid_file).ravel()
    else:
        extra = args.extra_points
        if extra is None:
            extra = ExperimentSpec.cv_extra_points if args.method == "CV" else 0
        grid = default_lambda_grid(spectrum, args.gamma, extra)
    rng = RngStream(args.seed)
    if args.method == "StARS-RRR":
        cfg = _stars_cfg(args, grid if args.grid_file else None)
        if args.extra_points is not None:
            cfg = dataclasses.replace(cfg, extra_points=args.extra_points)
        res, _ = stars_rrr(data, cfg, rng, spectrum=spectrum)
    elif args.method == "CV":
        res = kfold_cv(data, args.gamma, grid, args.folds, rng)
    else:
        res = select_by_criterion(Criterion(args.method), data, args.gamma, grid, spectrum)
    text = json.dumps(res.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    log.info("%s selected rank %d at lambda %.6g", res.method, res.rank, res.lam)
    return 0


def _spec_from_args(args) -> ExperimentSpec:
    d = _read_json(args.spec)
    if args.out:
        d["output_dir"] = args.out
    if args.replications is not None:
        d["replications"] = args.replications
    if args.jobs is not None:
        d["n_jobs"] = args.jobs
    return ExperimentSpec.from_dict(d)


def cmd_bench(args) -> int:
    spec = _spec_from_args(args)
    spec = dataclasses.replace(spec, output_dir=str(_out_dir(spec.output_dir)))
    rows, _ = run_experiment(spec)
    _print_rows(rows)
    return 0


def cmd_split_eval(args) -> int:
    data = _load_dataset(args.x, args.y)
    if args.spec:
        d = _read_json(args.spec)
    else:
        # the model section only seeds the experiment echo; no data are simulated
        d = {"model": {"n": data.n, "p": data.p, "q": data.q, "r_x": 1, "r_star": 0}}
    d["output_dir"] = str(_out_dir(args.out or d.get("output_dir")))
    if args.methods:
        d["methods"] = args.methods.split(",")
    spec = ExperimentSpec.from_dict(d)
    rows, _ = run_split_evaluation(
        data, spec, args.train_fraction, RngStream(args.seed), n_splits=args.splits, ridge=args.ridge
    )
    _print_rows(rows)
    return 0


def cmd_profile(args) -> int:
    data = _load_dataset(args.x, args.y)
    grid = load_matrix_csv(args.grid_file).ravel() if args.grid_file else None
    cfg = _stars_cfg(args, grid)
    if grid is None:
        cfg = dataclasses.replace(cfg, extra_points=args.extra_points)
    path = Path(args.out) if args.out else _out_dir(None) / "profile.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    prof, sel = export_instability_profile(data, cfg, RngStream(args.seed), path)
    if sel is None:
        print(f"wrote {path} ({prof.lambdas.size} grid points); no stable lambda")
        return 1
    print(f"wrote {path} ({prof.lambdas.size} grid points); selected rank {sel.rank} at lambda {sel.lam:.6g}")
    return 0


def cmd_sensitivity(args) -> int:
    spec = _spec_from_args(args)
    spec = dataclasses.replace(spec, output_dir=str(_out_dir(spec.output_dir)))
    values = [v for v in args.values.split(",") if v.strip()]
    if args.param in ("N",):
        values = [int(v) for v in values]
    else:
        values = [float(v) for v in values]
    res = run_sensitivity(spec, args.param, values)
    for v, rows in res.items():
        print(f"{args.param} = {v}")
        _print_rows(rows)
    return 0


def _add_stars_flags(p):
    p.add_argument("--eta", type=float, default=StarsConfig.eta, help="instability threshold")
    p.add_argument("--subsamples", type=int, default=StarsConfig.n_subsamples, help="number of subsamples N")
    p.add_argument(
        "--subsample-size",
        type=float,
        default=None,
        help="subsample size b: a row count, or a fraction of n when below 1 (default 0.7)",
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="starsrrr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw one simulated dataset to CSV")
    p.add_argument("--model", choices=("I", "II"), default="I")
    p.add_argument("--config", help="SimulationConfig JSON (overrides --model)")
    p.add_argument("--rho", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or cwd)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="select the penalty level for one dataset")
    p.add_argument("x", help="design matrix CSV")
    p.add_argument("y", help="response matrix CSV")
    p.add_argument("--method", choices=METHODS, default="StARS-RRR")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    _add_stars_flags(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--grid-file", help="CSV of increasing lambda values")
    p.add_argument("--extra-points", type=int, default=None, help="log-spaced points added to the breakpoint grid (default 0; CV and StARS-RRR 100)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.set_defaults(func=cmd_select)

    for name, func, help_ in (
        ("bench", cmd_bench, "run a simulation experiment from a JSON spec"),
        ("sensitivity", cmd_sensitivity, "sweep eta, N or b over an experiment"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("spec", help="ExperimentSpec JSON")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or cwd)")
        p.add_argument("--replications", type=int)
        p.add_argument("--jobs", type=int)
        if name == "sensitivity":
            p.add_argument("--param", choices=("eta", "N", "b"), required=True)
            p.add_argument("--values", required=True, help="comma-separated values")
        p.set_defaults(func=func)

    p = sub.add_parser("split-eval", help="random-split MSPE evaluation of X.csv / Y.csv")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--spec", help="ExperimentSpec JSON for methods and StARS settings")
    p.add_argument("--methods", help="comma-separated method labels")
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--splits", type=int, default=100)
    p.add_argument("--ridge", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_split_eval)

    p = sub.add_parser("profile", help="write the instability profile CSV of a dataset")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--gamma", type=float, default=DEFAULT_GAMMA)
    _add_stars_flags(p)
    p.add_argument("--grid-file")
    p.add_argument("--extra-points", type=int, default=StarsConfig.extra_points)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default <output dir>/profile.csv)")
    p.set_defaults(func=cmd_profile)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RrrError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
