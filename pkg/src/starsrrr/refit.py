"""Rank-constrained ridge reduced-rank regression refit and prediction error.

Given a rank ``k`` chosen upstream, the refit uses centered data and ridge
covariance estimates

    Sxx = (Xc' Xc + t I) / n,    Sxy = Xc' Yc / n,

and keeps the leading ``k`` eigen-directions of the weighted response-space
operator ``W^(1/2) Syx Sxx^-1 Sxy W^(1/2)``. With ``W = I`` this is the
classical reduced-rank regression of the ridge coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .core import RrrDataset
from .errors import ShapeMismatch, SingularCovariance, ValidationError

__all__ = ["RefitModel", "default_ridge", "refit_ridge_rrr", "mspe", "WEIGHTINGS"]

WEIGHTINGS = ("identity", "inverse_yy")


@dataclass(frozen=True)
class RefitModel:
    coefficient: np.ndarray
    intercept: np.ndarray
    rank: int
    ridge: float
    weighting: str = "identity"

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.coefficient.shape[0]:
            raise ShapeMismatch(
                f"design has {x.shape[1]} columns, model expects {self.coefficient.shape[0]}"
            )
        return x @ self.coefficient + self.intercept


def default_ridge(x) -> float:
    """``1e-3 * d_1(Xc' Xc) / n`` for the centered design."""
    x = np.asarray(x, dtype=float)
    xc = x - x.mean(axis=0)
    top = np.linalg.norm(xc, 2) ** 2
    return 1e-3 * top / x.shape[0]


def _sym_power(a, power):
    w, v = np.linalg.eigh((a + a.T) / 2.0)
    return (v * w**power) @ v.T


def refit_ridge_rrr(
    train: RrrDataset, k: int, t: float | None = None, weighting: str = "identity"
) -> RefitModel:
    """Fit a rank-``k`` ridge reduced-rank regression on ``train``.

    ``k = 0`` returns the zero coefficient, so predictions are the training
    column means of ``Y``. ``t=None`` uses :func:`default_ridge`.
    """
    if weighting not in WEIGHTINGS:
        raise ValidationError(f"weighting must be one of {WEIGHTINGS}")
    n, p, q = train.n, train.p, train.q
    if not 0 <= k <= min(p, q):
        raise ValidationError(f"rank must satisfy 0 <= k <= min(p, q) = {min(p, q)}")
    if t is None:
        t = default_ridge(train.x)
    if t < 0:
        raise ValidationError("ridge parameter t must be nonnegative")
    xm = train.x.mean(axis=0)
    ym = train.y.mean(axis=0)
    if k == 0:
        return RefitModel(np.zeros((p, q)), ym.copy(), 0, float(t), weighting)
    xc = train.x - xm
    yc = train.y - ym
    gram = xc.T @ xc
    if t == 0 and np.linalg.matrix_rank(gram) < p:
        raise SingularCovariance("Xc'Xc is singular; use a positive ridge parameter")
    sxx = (gram + t * np.eye(p)) / n
    sxy = xc.T @ yc / n
    try:
        b_full = sla.solve(sxx, sxy, assume_a="pos")
    except (np.linalg.LinAlgError, sla.LinAlgError) as exc:
        raise SingularCovariance(str(exc)) from None
    m = sxy.T @ b_full
    if weighting == "identity":
        w, v = np.linalg.eigh((m + m.T) / 2.0)
        vk = v[:, ::-1][:, :k]
        coef = b_full @ vk @ vk.T
    else:
        syy = (yc.T @ yc + t * np.eye(q)) / n
        g_half = _sym_power(np.linalg.inv(syy), 0.5)
        g_mhalf = _sym_power(syy, 0.5)
        mw = g_half @ m @ g_half
        w, v = np.linalg.eigh((mw + mw.T) / 2.0)
        vk = v[:, ::-1][:, :k]
        coef = b_full @ g_half @ vk @ vk.T @ g_mhalf
    intercept = ym - xm @ coef
    return RefitModel(coef, intercept, int(k), float(t), weighting)


def mspe(model: RefitModel, test: RrrDataset) -> float:
    """``100 * ||Y_test - prediction||_F^2 / (q * n_test)``."""
    if test.p != model.coefficient.shape[0] or test.q != model.coefficient.shape[1]:
        raise ShapeMismatch("test data dimensions do not match the model")
    r = test.y - model.predict(test.x)
    return 100.0 * float(np.sum(r * r)) / (test.q * test.n)
