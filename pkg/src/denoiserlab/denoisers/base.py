"""Common denoiser interface and Jacobian-rank probing."""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from ..errors import ValidationError


class Denoiser(ABC):
    """A sigma-conditioned map from noisy vectors to clean estimates.

    ``denoise`` accepts a single (d,) vector or an (n, d) batch and returns
    the same shape. Calls are pure: deterministic given (y, sigma).
    """

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    @abstractmethod
    def descriptor(self) -> dict:
        """Structured label: family plus the hyperparameters that define it."""

    @abstractmethod
    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray: ...

    def _check_input(self, y: np.ndarray, sigma: float) -> tuple[np.ndarray, bool]:
        y = np.asarray(y, dtype=float)
        if sigma <= 0:
            raise ValidationError("sigma must be positive")
        single = y.ndim == 1
        batch = y[None, :] if single else y
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise ValidationError(
                f"expected input of dimension {self.dim}, got shape {y.shape}"
            )
        return batch, single


def finite_difference_jacobian(
    den: Denoiser, y: np.ndarray, sigma: float, step: float = 1e-4
) -> np.ndarray:
    """Central-difference Jacobian of ``den.denoise`` at one point."""
    y = np.asarray(y, dtype=float)
    d = y.shape[0]
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        cols.append((den.denoise(y + e, sigma) - den.denoise(y - e, sigma)) / (2 * step))
    return np.stack(cols, axis=1)


def jacobian_rank(
    den: Denoiser,
    probes: list[np.ndarray] | np.ndarray,
    sigma: float,
    tol: float,
    step: float = 1e-4,
) -> int:
    """Numerical rank of the denoiser's Jacobian, maximized over probes.

    Rank at a probe is the number of singular values exceeding ``tol`` times
    the largest one.
    """
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if probes.shape[0] == 0:
        raise ValidationError("probes must be nonempty")
    best = 0
    for y in probes:
        jac = finite_difference_jacobian(den, y, sigma, step)
        svals = np.linalg.svd(jac, compute_uv=False)
        if svals[0] <= 0.0:
            continue
        best = max(best, int(np.sum(svals > tol * svals[0])))
    return best
