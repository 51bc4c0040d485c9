"""Reduced-rank regression with an adaptive nuclear-norm penalty and
stability-based (StARS-RRR) selection of the penalty level.

The estimator has a closed form in the spectrum of the projected response
``P Y``: with ``d_i`` its singular values, the fitted singular values are
``(d_i - lam * d_i**-gamma)_+`` and the rank is ``#{d_i > lam**(1/(gamma+1))}``.
Tuning is available by information criteria, K-fold cross validation or
subsample rank stability.
"""

from .bench import (
    METHODS,
    ExperimentSpec,
    MetricsRow,
    export_instability_profile,
    mspe_by_rank,
    run_experiment,
    run_sensitivity,
    run_split_evaluation,
)
from .core import (
    ProjectedSpectrum,
    RngStream,
    RrrDataset,
    load_matrix_csv,
    projected_spectrum,
    save_matrix_csv,
    subsample,
)
from .errors import *  # noqa: F401,F403
from .estimator import (
    DEFAULT_GAMMA,
    PenaltyConfig,
    RankPath,
    RrrFit,
    default_lambda_grid,
    estimate_rank,
    fit,
    rank_path,
    shrunk_values,
)
from .refit import RefitModel, mspe, refit_ridge_rrr
from .selection import Criterion, SelectionResult, kfold_cv, select_by_criteria, select_by_criterion
from .simgen import SimulatedDataset, SimulationConfig, generate, model_i, model_ii
from .stars import InstabilityProfile, StarsConfig, build_profile, compute_instability, select_lambda_stars, stars_rrr

__version__ = "0.1.0"
