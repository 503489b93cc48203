"""Bottleneck MLP denoiser trained on the denoising objective.

Plain numpy: tanh encoder [d+1 -> width -> h], tanh decoder [h -> width -> d],
Adam updates, analytic backprop. The network input is the noisy vector
scaled by 1/sqrt(1 + sigma^2) with log(sigma) appended, which keeps inputs
bounded across the full noise range while preserving the rank-h constraint
of the bottleneck (there is no residual path around it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..datasets import Dataset
from ..errors import TrainingError, ValidationError
from ..rng import derive_seed, make_rng
from .base import Denoiser

# Full sigma range implied by the cosine schedule's alpha-bar clamp [1e-5, 1-1e-5];
# used when no schedule range is supplied.
DEFAULT_SIGMA_RANGE = (3.163e-3, 3.162e2)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def _init_params(sizes: list[int], seed: int) -> tuple[list[np.ndarray], list[np.ndarray]]:
    rng = make_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        std = math.sqrt(2.0 / (fan_in + fan_out))
        weights.append(std * rng.standard_normal((fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(weights, biases, z):
    """Activations per layer; tanh on all but the last affine map."""
    acts = [z]
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = acts[-1] @ w + b
        if i < last:
            z = np.tanh(z)
        acts.append(z)
    return acts


def loss_and_grads(weights, biases, inputs, targets):
    """Mean squared-norm denoising loss and its parameter gradients."""
    acts = _forward(weights, biases, inputs)
    out = acts[-1]
    diff = out - targets
    n = inputs.shape[0]
    loss = float(np.sum(diff * diff) / n)

    grad_w = [None] * len(weights)
    grad_b = [None] * len(biases)
    delta = 2.0 * diff / n
    for i in range(len(weights) - 1, -1, -1):
        grad_w[i] = acts[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (1.0 - acts[i] * acts[i])
    return loss, grad_w, grad_b


@dataclass(frozen=True)
class MlpBottleneckDenoiser(Denoiser):
    """Encoder-bottleneck-decoder denoiser with layer widths [d+1, w, h, w, d]."""

    weights: list
    biases: list
    h: int
    width: int
    sigma_range: tuple
    activation: str = "tanh"
    loss_curve: list = field(default_factory=list, repr=False)
    train_meta: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def descriptor(self) -> dict:
        return {
            "family": "mlp_bottleneck",
            "dim": self.dim,
            "h": self.h,
            "width": self.width,
            "activation": self.activation,
            "input_encoding": "[y / sqrt(1 + sigma^2), log sigma]",
            "train": dict(self.train_meta),
        }

    def _encode(self, batch: np.ndarray, sigma: float) -> np.ndarray:
        scale = math.sqrt(1.0 + sigma * sigma)
        col = np.full((batch.shape[0], 1), math.log(sigma))
        return np.hstack([batch / scale, col])

    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray:
        batch, single = self._check_input(y, sigma)
        out = _forward(self.weights, self.biases, self._encode(batch, sigma))[-1]
        return out[0] if single else out


def fit_mlp(
    data: Dataset,
    h: int,
    width: int = 64,
    epochs: int = 500,
    lr: float = 1e-4,
    seed: int = 0,
    batch_size: int = 128,
    sigma_range: tuple[float, float] | None = None,
) -> MlpBottleneckDenoiser:
    """Train the bottleneck MLP on E||S(x + sigma eps, sigma) - x||^2.

    One sigma is drawn per batch, log-uniform over ``sigma_range``. Adam
    with the default 500 epochs at lr 1e-4; callers working at toy scale
    usually want more aggressive settings and record them. Raises
    TrainingError with the epoch index if the loss stops being finite.
    """
    if h < 1:
        raise ValidationError("h must be >= 1")
    if width < h:
        raise ValidationError("width must be >= h")
    lo, hi = sigma_range if sigma_range is not None else DEFAULT_SIGMA_RANGE
    if not 0 < lo < hi:
        raise ValidationError("sigma_range must satisfy 0 < lo < hi")

    d = data.dim
    sizes = [d + 1, width, h, width, d]
    weights, biases = _init_params(sizes, derive_seed(seed, 1))
    rng = make_rng(derive_seed(seed, 2))
    x_all = data.points

    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0
    log_lo, log_hi = math.log(lo), math.log(hi)
    loss_curve: list[float] = []

    for epoch in range(epochs):
        order = rng.permutation(data.n)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, data.n, batch_size):
            idx = order[start:start + batch_size]
            x = x_all[idx]
            sigma = math.exp(rng.uniform(log_lo, log_hi))
            y = x + sigma * rng.standard_normal(x.shape)
            scale = math.sqrt(1.0 + sigma * sigma)
            inputs = np.hstack([y / scale, np.full((x.shape[0], 1), math.log(sigma))])
            loss, grad_w, grad_b = loss_and_grads(weights, biases, inputs, x)
            if not math.isfinite(loss):
                raise TrainingError(f"training loss became non-finite at epoch {epoch}")
            epoch_loss += loss
            n_batches += 1
            step += 1
            corr1 = 1.0 - ADAM_BETA1**step
            corr2 = 1.0 - ADAM_BETA2**step
            for params, grads, ms, vs in (
                (weights, grad_w, m_w, v_w),
                (biases, grad_b, m_b, v_b),
            ):
                for p, g, m, v in zip(params, grads, ms, vs):
                    m *= ADAM_BETA1
                    m += (1 - ADAM_BETA1) * g
                    v *= ADAM_BETA2
                    v += (1 - ADAM_BETA2) * g * g
                    p -= lr * (m / corr1) / (np.sqrt(v / corr2) + ADAM_EPS)
        loss_curve.append(epoch_loss / max(n_batches, 1))

    return MlpBottleneckDenoiser(
        weights=weights,
        biases=biases,
        h=h,
        width=width,
        sigma_range=(float(lo), float(hi)),
        loss_curve=loss_curve,
        train_meta={
            "epochs": epochs, "lr": lr, "seed": seed, "batch_size": batch_size,
            "optimizer": "adam",
        },
    )
