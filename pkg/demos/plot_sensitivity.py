"""
How much do the StARS-RRR knobs matter?
=======================================

Two small sweeps on the high-dimensional model (n = 80, p = q = 100, true
rank 8): the threshold eta barely matters, while the subsample size b does.
Small subsamples see too few rows to resolve the weaker signal directions.
"""

from starsrrr import ExperimentSpec, model_ii, run_sensitivity

R = 30

spec = ExperimentSpec(model=model_ii(rho=0.1, s=12.0, seed=1), methods=("StARS-RRR",), replications=R)
for eta, rows in run_sensitivity(spec, "eta", [0.001, 0.01, 0.02], write=False).items():
    print(f"eta={eta:<6} recovery {rows[0].recovery_pct:5.1f}%")

spec = ExperimentSpec(model=model_ii(rho=0.5, s=8.0, seed=1), methods=("StARS-RRR",), replications=R)
for b, rows in run_sensitivity(spec, "b", [0.4, 0.55, 0.7], write=False).items():
    r = rows[0]
    print(f"b={b:<5}n recovery {r.recovery_pct:5.1f}%  under {r.under_pct:5.1f}%")
