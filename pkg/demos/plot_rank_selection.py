"""
Choosing the rank of a reduced-rank regression
==============================================

We draw one dataset from the low-dimensional simulation model (n = 500,
p = q = 25, true rank 10) and ask every selector which penalty level, and
hence which rank, it prefers.

Run with ``python demos/plot_rank_selection.py``.
"""

import numpy as np

from starsrrr import (
    Criterion,
    RngStream,
    StarsConfig,
    default_lambda_grid,
    generate,
    kfold_cv,
    model_i,
    projected_spectrum,
    select_by_criteria,
    stars_rrr,
)

# %%
# A moderately hard instance: the r*-th signal singular value is about
# twice the top noise singular value.
sim = generate(model_i(rho=0.1, s=60.0, seed=7))
data = sim.data
print(f"n={data.n}  p={data.p}  q={data.q}  SNR={sim.snr:.2f}  true rank=10")

# %%
# Everything downstream works from the singular values of P Y, where P
# projects onto the column space of X. The gap after the 10th value is the
# signal we hope to find.
spec = projected_spectrum(data)
np.set_printoptions(precision=2, suppress=True)
print("leading singular values of PY:", spec.singular_values[:13])

# %%
# The rank at penalty lam is the number of singular values above
# lam ** (1 / (gamma + 1)). The breakpoint grid places one lam between each
# pair of neighbouring values, so every attainable rank is represented.
gamma = 2.0
grid = default_lambda_grid(spec, gamma)
ics = select_by_criteria(list(Criterion), data, gamma, grid, spec)
for name, res in ics.items():
    print(f"{name:>5}: rank {res.rank}")

# %%
# Cross validation refits on row subsets, so it uses a refined grid.
cv = kfold_cv(data, gamma, default_lambda_grid(spec, gamma, 100), 5, RngStream(7, 1))
print(f"   CV: rank {cv.rank}")

# %%
# StARS-RRR: the smallest lam whose subsample ranks agree.
res, prof = stars_rrr(data, StarsConfig(), RngStream(7, 2), spectrum=spec)
print(f"StARS: rank {res.rank} at lambda {res.lam:.4g} "
      f"({prof.meta['trimmed_points']} saturated grid points trimmed)")
