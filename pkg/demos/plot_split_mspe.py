"""
Prediction error on random splits
=================================

A stand-in with the shape of a genomic dataset (89 samples, 319 predictors,
58 responses). Each split selects a rank on 80% of the rows, refits a ridge
reduced-rank regression at that rank and scores the remaining 20%.
"""

from starsrrr import METHODS, ExperimentSpec, RngStream, generate, run_split_evaluation
from starsrrr.simgen import SimulationConfig

cfg = SimulationConfig(n=89, p=319, q=58, r_x=60, r_star=6, rho=0.3, s=300.0, seed=3)
sim = generate(cfg)
spec = ExperimentSpec(model=cfg, methods=METHODS, replications=1)

rows, _ = run_split_evaluation(sim.data, spec, 0.8, RngStream(3), n_splits=10)
print(f"{'method':<10} {'mean rank':>9} {'MSPE':>9}")
for r in rows:
    print(f"{r.method:<10} {r.rank_mean:9.2f} {r.mspe_mean:9.2f}")
