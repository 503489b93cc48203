"""Cosine noise schedule, score extraction, and deterministic DDIM sampling.

Denoisers here live in the additive-noise convention y = x + sigma * eta.
The sampler keeps a variance-preserving state z_t and converts at each step
via y = z_t / sqrt(alpha_bar_t) with sigma_t = sqrt((1 - alpha_bar_t) /
alpha_bar_t); this correspondence and the eta = 0 (fully deterministic)
update are recorded in every run sidecar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .denoisers.base import Denoiser
from .errors import SamplingError, ValidationError
from .rng import make_rng
from .stats import data_scale, empirical_mean

ALPHA_BAR_CLAMP = 1e-5
COSINE_OFFSET = 0.008


@dataclass(frozen=True)
class NoiseSchedule:
    """Discretized noise levels for T steps.

    alpha_bar has T+1 entries for t = 0..T, strictly decreasing from ~1;
    sigma are the equivalent additive noise levels, strictly increasing.
    """

    steps: int
    alpha_bar: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=float)
        if ab.shape != (self.steps + 1,):
            raise ValidationError("alpha_bar must have steps + 1 entries")
        if ab[0] < 0.999:
            raise ValidationError("alpha_bar[0] must be >= 0.999")
        if np.any(np.diff(ab) >= 0):
            raise ValidationError("alpha_bar must be strictly decreasing")
        sg = np.asarray(self.sigma, dtype=float)
        if np.any(np.diff(sg) <= 0):
            raise ValidationError("sigma must be strictly increasing")
        for arr in (ab, sg):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha_bar", ab)
        object.__setattr__(self, "sigma", sg)

    def sigma_range(self) -> tuple[float, float]:
        """Range of noise levels the sampler will actually query (t = 1..T)."""
        return float(self.sigma[1]), float(self.sigma[-1])

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "kind": "cosine",
            "alpha_bar_clamp": ALPHA_BAR_CLAMP,
            "offset": COSINE_OFFSET,
            "sigma_min": float(self.sigma[1]),
            "sigma_max": float(self.sigma[-1]),
        }


def cosine_schedule(steps: int) -> NoiseSchedule:
    """Squared-cosine alpha_bar with offset 0.008, clamped to [1e-5, 1-1e-5]."""
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    t = np.arange(steps + 1) / steps
    f = np.cos(((t + COSINE_OFFSET) / (1.0 + COSINE_OFFSET)) * math.pi / 2.0) ** 2
    alpha_bar = np.clip(f / f[0], ALPHA_BAR_CLAMP, 1.0 - ALPHA_BAR_CLAMP)
    if np.any(np.diff(alpha_bar) >= 0):
        raise ValidationError(
            f"clamping collapses the schedule at T={steps}; use fewer steps"
        )
    sigma = np.sqrt((1.0 - alpha_bar) / alpha_bar)
    return NoiseSchedule(steps=steps, alpha_bar=alpha_bar, sigma=sigma)


def score_from_denoiser(den: Denoiser, y: np.ndarray, sigma: float) -> np.ndarray:
    """Score of the noisy marginal implied by a denoiser: (S(y) - y) / sigma^2."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    y = np.asarray(y, dtype=float)
    return (den.denoise(y, sigma) - y) / (sigma * sigma)


@dataclass(frozen=True)
class SamplerRun:
    """Output of one DDIM run plus everything needed to reproduce it."""

    outputs: Dataset
    schedule: NoiseSchedule
    descriptor: dict
    seed: int
    n_samples: int
    trajectory: list | None = None

    def to_meta(self) -> dict:
        return {
            "schedule": self.schedule.to_dict(),
            "denoiser": self.descriptor,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "state_convention": "y = z_t / sqrt(alpha_bar_t), eta = 0",
        }


def ddim_sample(
    den: Denoiser,
    schedule: NoiseSchedule,
    n: int,
    seed: int,
    keep_trajectory: bool = False,
    name: str = "generated",
) -> SamplerRun:
    """Deterministic DDIM: z_T ~ N(0, I), then T denoise-and-renoise steps.

    At step t the clean estimate is x0 = denoise(z_t / sqrt(ab_t), sigma_t)
    and the state moves to z_{t-1} = sqrt(ab_{t-1}) x0 + sqrt(1 - ab_{t-1})
    eps_hat with eps_hat implied by (z_t, x0). Bit-identical for a fixed
    seed. Raises SamplingError naming the step if a state stops being finite.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = make_rng(seed)
    z = rng.standard_normal((n, den.dim))
    ab = schedule.alpha_bar
    trajectory = [z.copy()] if keep_trajectory else None
    for t in range(schedule.steps, 0, -1):
        ab_t, ab_prev = ab[t], ab[t - 1]
        sigma_t = float(schedule.sigma[t])
        x0 = den.denoise(z / math.sqrt(ab_t), sigma_t)
        eps_hat = (z - math.sqrt(ab_t) * x0) / math.sqrt(1.0 - ab_t)
        z = math.sqrt(ab_prev) * x0 + math.sqrt(1.0 - ab_prev) * eps_hat
        if not np.all(np.isfinite(z)):
            raise SamplingError(
                f"non-finite sampler state at step {t} (sigma = {sigma_t:.6g})"
            )
        if keep_trajectory:
            trajectory.append(z.copy())
    return SamplerRun(
        outputs=Dataset(z, name=name),
        schedule=schedule,
        descriptor=den.descriptor,
        seed=seed,
        n_samples=n,
        trajectory=trajectory,
    )


@dataclass(frozen=True)
class Standardizer:
    """Isotropic standardization: center the data, divide by one scale.

    The single scale is the root mean per-coordinate variance. A shared
    scalar (rather than per-coordinate scaling) commutes with eigenmode
    truncation, so rank-limited covariance claims survive the round trip;
    it still makes the unit-Gaussian initialization of the sampler
    appropriate for arbitrary data.
    """

    mean: np.ndarray
    scale: float

    @classmethod
    def fit(cls, data: Dataset) -> "Standardizer":
        scale = data_scale(data)
        return cls(mean=empirical_mean(data), scale=scale if scale > 0 else 1.0)

    def transform(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.mean) / self.scale

    def inverse(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) * self.scale + self.mean

    def transform_dataset(self, data: Dataset) -> Dataset:
        return Dataset(self.transform(data.points), name=f"{data.name}-std")

    def inverse_dataset(self, data: Dataset, name: str | None = None) -> Dataset:
        return Dataset(self.inverse(data.points), name=name or data.name)

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": float(self.scale), "mode": "isotropic"}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=np.asarray(d["mean"], dtype=float), scale=float(d["scale"]))
