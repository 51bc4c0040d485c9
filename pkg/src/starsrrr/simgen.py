"""Low-rank simulation models with AR(1)-correlated, rank-deficient designs.

``C = s * unit * C1 @ C2.T`` with standard-normal factors, ``X = X1 @ X2.T @ G^(1/2)``
where ``G[i, j] = rho ** |i - j|``, and ``Y = X C + E`` with i.i.d. normal
noise. Signal strength is summarized as ``d_{r*}(X C) / d_1(P E)``.

``unit`` defaults to 1e-3: with it, the customary signal levels (s = 30..200
for the n=500 setting, s = 8..32 for the n=80 setting) land at SNR 1..3.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import RngStream, RrrDataset, _design_factors
from .errors import DegenerateSignal, ValidationError

__all__ = [
    "SimulationConfig",
    "SimulatedDataset",
    "model_i",
    "model_ii",
    "ar1_sqrt",
    "generate",
    "compute_snr",
    "effective_rank",
]


@dataclass(frozen=True)
class SimulationConfig:
    n: int
    p: int
    q: int
    r_x: int
    r_star: int
    rho: float = 0.1
    s: float = 1.0
    sigma: float = 1.0
    signal_unit: float = 1e-3
    seed: int = 0
    stream_id: int = 0

    def __post_init__(self):
        for name in ("n", "p", "q", "r_x"):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive count")
        if self.r_star < 0:
            raise ValidationError("r_star must be >= 0")
        if self.r_x > min(self.n, self.p):
            raise ValidationError("r_x must not exceed min(n, p)")
        if self.r_star > min(self.r_x, self.q):
            raise ValidationError("r_star must not exceed min(r_x, q)")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError("rho must lie in [0, 1)")
        if not self.s > 0:
            raise ValidationError("signal scale s must be positive")
        if not self.signal_unit > 0:
            raise ValidationError("signal_unit must be positive")
        if not self.sigma >= 0:
            raise ValidationError("sigma must be nonnegative")

    @property
    def rng(self) -> RngStream:
        return RngStream(self.seed, self.stream_id)

    def replace(self, **changes) -> "SimulationConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SimulationConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown simulation fields: {sorted(unknown)}")
        return cls(**d)


def model_i(rho=0.1, s=60.0, **kw) -> SimulationConfig:
    """Low-dimensional setting: n=500, p=q=25, r_x=15, r*=10."""
    return SimulationConfig(n=500, p=25, q=25, r_x=15, r_star=10, rho=rho, s=s, **kw)


def model_ii(rho=0.5, s=12.0, **kw) -> SimulationConfig:
    """High-dimensional setting: n=80, p=q=100, r_x=30, r*=8."""
    return SimulationConfig(n=80, p=100, q=100, r_x=30, r_star=8, rho=rho, s=s, **kw)


@dataclass(frozen=True)
class SimulatedDataset:
    data: RrrDataset
    true_coefficient: np.ndarray
    noise: np.ndarray
    snr: float
    effective_rank: int
    config: SimulationConfig


@lru_cache(maxsize=32)
def _ar1_sqrt_cached(p, rho):
    if rho == 0.0:
        root = np.eye(p)
        root.setflags(write=False)
        return root
    idx = np.arange(p)
    gam = rho ** np.abs(idx[:, None] - idx[None, :])
    w, v = np.linalg.eigh(gam)
    root = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T
    root = (root + root.T) / 2.0
    root.setflags(write=False)
    return root


def ar1_sqrt(p: int, rho: float) -> np.ndarray:
    """Symmetric square root of the AR(1) correlation matrix ``rho^|i-j|``."""
    return _ar1_sqrt_cached(int(p), float(rho))


def _signal_and_noise_spectra(x, signal, noise):
    u_x, _, _ = _design_factors(x, 0.0)
    d_sig = np.linalg.svd(signal, compute_uv=False)
    d_noise = np.linalg.svd(u_x.T @ noise, compute_uv=False)
    return d_sig, d_noise


def compute_snr(sim: SimulatedDataset) -> float:
    """``d_{r*}(X C) / d_1(P E)``."""
    cfg = sim.config
    x = sim.data.x
    d_sig, d_noise = _signal_and_noise_spectra(x, x @ sim.true_coefficient, sim.noise)
    k = cfg.r_star
    if k < 1 or k > d_sig.size or d_sig[k - 1] == 0.0:
        raise DegenerateSignal("the r*-th singular value of X C is zero")
    if d_noise.size == 0 or d_noise[0] == 0.0:
        return float("inf")
    return float(d_sig[k - 1] / d_noise[0])


def effective_rank(sim: SimulatedDataset) -> int:
    """Number of singular values of ``X C`` above ``d_1(P E)``."""
    x = sim.data.x
    d_sig, d_noise = _signal_and_noise_spectra(x, x @ sim.true_coefficient, sim.noise)
    level = d_noise[0] if d_noise.size else 0.0
    if level == 0.0:
        # zero noise: count the numerically nonzero signal directions
        level = max(x.shape) * np.finfo(float).eps * (d_sig[0] if d_sig.size else 0.0)
    return int(np.count_nonzero(d_sig > level))


def generate(cfg: SimulationConfig) -> SimulatedDataset:
    """Draw one dataset; identical configs give bitwise-identical output."""
    gen = cfg.rng.generator()
    c1 = gen.standard_normal((cfg.p, cfg.r_star))
    c2 = gen.standard_normal((cfg.q, cfg.r_star))
    x1 = gen.standard_normal((cfg.n, cfg.r_x))
    x2 = gen.standard_normal((cfg.p, cfg.r_x))
    e = cfg.sigma * gen.standard_normal((cfg.n, cfg.q))
    coef = (cfg.s * cfg.signal_unit) * (c1 @ c2.T)
    x = (x1 @ x2.T) @ ar1_sqrt(cfg.p, cfg.rho)
    y = x @ coef + e
    data = RrrDataset(y=y, x=x)
    sim = SimulatedDataset(
        data=data, true_coefficient=coef, noise=e, snr=np.nan, effective_rank=-1, config=cfg
    )
    snr = compute_snr(sim) if cfg.r_star > 0 else float("nan")
    return dataclasses.replace(sim, snr=snr, effective_rank=effective_rank(sim))
