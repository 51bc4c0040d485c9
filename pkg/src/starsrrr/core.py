"""Data model, design decomposition and the projected response spectrum.

Everything downstream works from a :class:`ProjectedSpectrum`: the singular
triplets of ``P Y`` where ``P`` projects onto the column space of ``X``. The
projector itself is never formed; a thin orthonormal basis of ``col(X)`` taken
from the SVD of ``X`` is used instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadSubsampleSize,
    DegenerateDesign,
    NonFiniteInput,
    ShapeMismatch,
    ValidationError,
)

__all__ = [
    "RrrDataset",
    "ProjectedSpectrum",
    "RngStream",
    "projected_spectrum",
    "subsample",
    "subsample_indices",
    "load_matrix_csv",
    "save_matrix_csv",
]

_U64 = (1 << 64) - 1


def _frozen(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RrrDataset:
    """Response ``y`` (n x q) paired row-wise with design ``x`` (n x p)."""

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if y.ndim == 1:
            y = y[:, None]
        if x.ndim == 1:
            x = x[:, None]
        if y.ndim != 2 or x.ndim != 2:
            raise ShapeMismatch("x and y must be 2-D matrices")
        if y.shape[0] != x.shape[0]:
            raise ShapeMismatch(
                f"row mismatch: y has {y.shape[0]} rows, x has {x.shape[0]}"
            )
        if y.shape[0] < 2:
            raise ValidationError("need at least two rows")
        if y.shape[1] < 1 or x.shape[1] < 1:
            raise ValidationError("x and y need at least one column")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(x))):
            raise NonFiniteInput("x and y must contain only finite values")
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "x", _frozen(x))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def q(self) -> int:
        return self.y.shape[1]

    def take(self, rows) -> "RrrDataset":
        """Return the dataset restricted to ``rows`` (pairing preserved)."""
        rows = np.asarray(rows, dtype=np.intp)
        return RrrDataset(y=self.y[rows], x=self.x[rows])


@dataclass(frozen=True)
class ProjectedSpectrum:
    """Singular triplets of ``P Y`` plus the thin SVD factors of ``X``.

    ``left_vectors`` is n x m, ``right_vectors`` is q x m, with
    ``m = min(design_rank, q)``. The design factors satisfy
    ``X ~= design_u @ diag(design_s) @ design_vt`` restricted to the
    ``design_rank`` leading components.
    """

    singular_values: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray
    design_rank: int
    design_u: np.ndarray = field(repr=False)
    design_s: np.ndarray = field(repr=False)
    design_vt: np.ndarray = field(repr=False)
    response_norm2: float = 0.0

    @property
    def m(self) -> int:
        return self.singular_values.shape[0]

    @property
    def projected_norm2(self) -> float:
        """Squared Frobenius norm of ``P Y``."""
        return float(np.sum(self.singular_values**2))

    def project(self, mat):
        """Apply the column-space projector of ``X`` to ``mat``."""
        u = self.design_u
        return u @ (u.T @ mat)

    def apply_pinv(self, mat):
        """Return ``X^+ @ mat``."""
        coords = (self.design_u.T @ mat) / self.design_s[:, None]
        return self.design_vt.T @ coords


def _design_factors(x, tolerance):
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise DegenerateDesign("design matrix is identically zero")
    if tolerance > 0:
        cutoff = tolerance
    else:
        cutoff = max(x.shape) * np.finfo(float).eps * s[0]
    r = int(np.sum(s > cutoff))
    if r == 0:
        raise DegenerateDesign("design matrix has numerical rank 0")
    return u[:, :r], s[:r], vt[:r]


def projected_spectrum(data: RrrDataset, tolerance: float = 0.0) -> ProjectedSpectrum:
    """Singular value decomposition of the projected response ``P Y``.

    Parameters
    ----------
    data : RrrDataset
    tolerance : float, default 0
        Absolute singular-value cutoff used to decide the numerical rank of
        ``X``. Zero selects ``max(n, p) * eps * d_1(X)``. Singular values of
        ``P Y`` below ``max(n, q) * eps * d_1(P Y)`` are set to zero.

    Returns
    -------
    ProjectedSpectrum
    """
    if tolerance < 0:
        raise ValidationError("tolerance must be nonnegative")
    x, y = data.x, data.y
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFiniteInput("x and y must contain only finite values")
    u_x, s_x, vt_x = _design_factors(x, tolerance)
    coords = u_x.T @ y  # r_x x q; P Y = u_x @ coords
    a, d, bt = np.linalg.svd(coords, full_matrices=False)
    # values at rounding level are exact zeros of P Y (noiseless responses)
    if d.size and d[0] > 0:
        d = np.where(d > max(y.shape) * np.finfo(float).eps * d[0], d, 0.0)
    d = np.maximum(d, 0.0)
    return ProjectedSpectrum(
        singular_values=_frozen(d),
        left_vectors=_frozen(u_x @ a),
        right_vectors=_frozen(bt.T),
        design_rank=int(s_x.size),
        design_u=_frozen(u_x),
        design_s=_frozen(s_x),
        design_vt=_frozen(vt_x),
        response_norm2=float(np.sum(y * y)),
    )


@dataclass(frozen=True)
class RngStream:
    """Value-semantic handle on a counter-based (Philox) random stream.

    Each call to :meth:`generator` restarts the stream, so the same
    ``(seed, stream_id)`` always yields the same draws. Use :meth:`fork` to
    derive independent child streams for replications, folds or subsamples.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _U64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _U64)

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def fork(self, index: int) -> "RngStream":
        ss = np.random.SeedSequence([self.seed, self.stream_id, int(index) & _U64])
        child = int(ss.generate_state(1, dtype=np.uint64)[0])
        return RngStream(self.seed, child)


def subsample_indices(n: int, b: int, gen: np.random.Generator) -> np.ndarray:
    """Sorted indices of ``b`` distinct rows out of ``n``."""
    if b < 2 or b >= n:
        raise BadSubsampleSize(f"subsample size must satisfy 2 <= b < n (b={b}, n={n})")
    return np.sort(gen.choice(n, size=b, replace=False))


def subsample(data: RrrDataset, b: int, rng: RngStream) -> RrrDataset:
    """Draw ``b`` rows of ``(X, Y)`` uniformly without replacement."""
    return data.take(subsample_indices(data.n, b, rng.generator()))


def load_matrix_csv(path) -> np.ndarray:
    """Read a headerless, comma-separated numeric matrix."""
    path = Path(path)
    rows = []
    width = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals = [float(tok) for tok in line.split(",")]
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if width is None:
                width = len(vals)
            elif len(vals) != width:
                raise ValidationError(
                    f"{path}:{lineno}: ragged row ({len(vals)} fields, expected {width})"
                )
            rows.append(vals)
    if not rows:
        raise ValidationError(f"{path}: empty matrix file")
    return np.array(rows, dtype=float)


def save_matrix_csv(path, mat) -> None:
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    np.savetxt(path, mat, delimiter=",", fmt="%.17g")
