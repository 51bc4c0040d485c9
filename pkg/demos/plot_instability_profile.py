"""
What the instability profile looks like
=======================================

For each penalty level we refit on 100 random subsamples of 70% of the rows
and record the variance of the estimated ranks. Small penalties give
erratic ranks (a positive plateau); near the true rank the subsamples agree
exactly (a zero window). The selected penalty is the first one whose running
minimum drops to eta.

The profile is written to ``profile.csv``; with matplotlib installed a
``profile.png`` is drawn as well.
"""

import numpy as np

from starsrrr import RngStream, StarsConfig, generate, model_i, stars_rrr

sim = generate(model_i(rho=0.1, s=60.0, seed=11))
res, prof = stars_rrr(sim.data, StarsConfig(), RngStream(11, 1))
prof.to_csv("profile.csv", selected_index=res.index)

# %%
# A text rendering: one line per grid point, log lambda on the left.
step = max(1, prof.lambdas.size // 40)
for k in range(0, prof.lambdas.size, step):
    bar = "#" * int(round(20 * min(prof.instability[k], 2.0)))
    mark = " <- selected" if k <= res.index < k + step else ""
    print(f"{np.log(prof.lambdas[k]):8.2f}  rank {prof.full_data_ranks[k]:2d}  {bar}{mark}")
print(f"selected rank {res.rank} (true rank 10, SNR {sim.snr:.2f})")

# %%
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    x = np.log(prof.lambdas)
    ax.plot(x, prof.instability, ":", label="instability")
    ax.plot(x, prof.cumulative_min, "-", label="running minimum")
    ax.axvline(np.log(res.lam), color="k", lw=0.8)
    ax2 = ax.twinx()
    ax2.step(x, prof.full_data_ranks, where="post", color="grey", lw=0.8)
    ax2.set_ylabel("full-data rank")
    ax.set_xlabel("log lambda")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig("profile.png", dpi=120)
