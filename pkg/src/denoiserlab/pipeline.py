"""Fit-then-sample pipeline shared by the verification checks and the CLI.

Data are centered and isotropically scaled before fitting, the denoiser is
trained in that space, DDIM runs from a unit Gaussian, and outputs are
mapped back. The standardizer travels with the fitted denoiser in one
container file so sampling can always undo it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .datasets import Dataset
from .denoisers import Denoiser, denoiser_from_dict, denoiser_to_dict
from .errors import ValidationError
from .sampler import NoiseSchedule, SamplerRun, Standardizer, cosine_schedule, ddim_sample

MODEL_FORMAT = "denoiserlab/model"
MODEL_VERSION = 1

# Default DDIM step counts: linear families sample with 10 steps, everything
# else with 50.
LINEAR_STEPS = 10
DEFAULT_STEPS = 50


@dataclass(frozen=True)
class FittedModel:
    """A denoiser plus the standardizer it was fitted under."""

    denoiser: Denoiser
    scaler: Standardizer
    diagnostics: dict

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "denoiser": denoiser_to_dict(self.denoiser),
            "standardizer": self.scaler.to_dict(),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "FittedModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValidationError(f"not a model container: format={doc.get('format')!r}")
        return cls(
            denoiser=denoiser_from_dict(doc["denoiser"]),
            scaler=Standardizer.from_dict(doc["standardizer"]),
            diagnostics=doc.get("diagnostics", {}),
        )

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path: str | Path) -> "FittedModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_model(
    data: Dataset, fitter: Callable[[Dataset], Denoiser], diagnostics: dict | None = None
) -> FittedModel:
    scaler = Standardizer.fit(data)
    den = fitter(scaler.transform_dataset(data))
    return FittedModel(denoiser=den, scaler=scaler, diagnostics=diagnostics or {})


def sample_model(
    model: FittedModel,
    steps: int,
    n: int,
    seed: int,
    name: str = "generated",
    keep_trajectory: bool = False,
) -> tuple[Dataset, SamplerRun]:
    """Run DDIM in the model's standardized space and map samples back."""
    schedule = cosine_schedule(steps)
    run = ddim_sample(model.denoiser, schedule, n, seed, keep_trajectory=keep_trajectory)
    return model.scaler.inverse_dataset(run.outputs, name=name), run


@dataclass(frozen=True)
class GenerationResult:
    samples: Dataset
    model: FittedModel
    run: SamplerRun


def generate(
    data: Dataset,
    fitter: Callable[[Dataset], Denoiser],
    steps: int,
    n: int,
    seed: int,
    name: str = "generated",
) -> GenerationResult:
    """Standardize, fit, sample, de-standardize."""
    model = fit_model(data, fitter)
    samples, run = sample_model(model, steps, n, seed, name=name)
    return GenerationResult(samples=samples, model=model, run=run)
