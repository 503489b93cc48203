"""Linear denoisers: full-rank and rank-limited shrinkage, plus the analytic
Gaussian and mixture posterior-mean denoisers used as exact references."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..datasets import Dataset, GmmSpec
from ..errors import ValidationError
from ..linalg import EigenDecomposition, eig_sym
from ..stats import empirical_cov, empirical_mean
from .base import Denoiser


@dataclass(frozen=True)
class LinearDenoiser(Denoiser):
    """Per-eigenmode shrinkage around the mean.

    denoise(y, sigma) = mean + sum_{i<=k} [lambda_i / (lambda_i + sigma^2)]
    u_i u_i^T (y - mean). With k unset the sum runs over all modes, which is
    the Gaussian posterior mean mu + Sigma (Sigma + sigma^2 I)^{-1} (y - mu).
    """

    mean: np.ndarray
    eig: EigenDecomposition
    k: int | None = None
    label: str = "linear"

    def __post_init__(self):
        d = self.mean.shape[0]
        if self.eig.dim != d:
            raise ValidationError("mean and eigendecomposition dimensions differ")
        if self.k is not None and not 1 <= self.k <= d:
            raise ValidationError(f"k must be in [1, {d}], got {self.k}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def rank(self) -> int:
        return self.dim if self.k is None else self.k

    @property
    def descriptor(self) -> dict:
        return {"family": self.label, "dim": self.dim, "k": self.k}

    def gains(self, sigma: float) -> np.ndarray:
        """Per-mode Wiener gains lambda/(lambda + sigma^2), zeroed past rank."""
        lam = np.clip(self.eig.eigenvalues, 0.0, None)
        g = lam / (lam + sigma * sigma)
        g[self.rank:] = 0.0
        return g

    def operator_matrix(self, sigma: float) -> np.ndarray:
        """The linear operator applied to (y - mean) at this noise level."""
        u = self.eig.eigenvectors
        return (u * self.gains(sigma)) @ u.T

    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray:
        batch, single = self._check_input(y, sigma)
        u = self.eig.eigenvectors
        coeffs = (batch - self.mean) @ u
        out = self.mean + (coeffs * self.gains(sigma)) @ u.T
        return out[0] if single else out


def fit_linear(data: Dataset) -> LinearDenoiser:
    """Closed-form linear fit: empirical mean plus covariance eigenmodes."""
    return LinearDenoiser(empirical_mean(data), eig_sym(empirical_cov(data)))


def fit_rank_k_linear(data: Dataset, k: int) -> LinearDenoiser:
    """Linear fit whose operator is truncated to the top k covariance modes."""
    if not 1 <= k <= data.dim:
        raise ValidationError(f"k must be in [1, {data.dim}], got {k}")
    return LinearDenoiser(
        empirical_mean(data), eig_sym(empirical_cov(data)), k=k, label="rank_k_linear"
    )


def exact_gaussian_denoiser(mean: np.ndarray, cov: np.ndarray) -> LinearDenoiser:
    """Posterior-mean denoiser of a known Gaussian N(mean, cov).

    Used as the analytic reference whose score is exact, so sampling with it
    must reproduce the Gaussian itself.
    """
    mean = np.asarray(mean, dtype=float)
    return LinearDenoiser(mean, eig_sym(np.asarray(cov, dtype=float)), label="exact_gaussian")


@dataclass(frozen=True)
class ExactGmmDenoiser(Denoiser):
    """Posterior-mean denoiser of a known Gaussian mixture.

    For y = x + sigma eta with x ~ GMM, the posterior mean is the
    responsibility-weighted combination of per-component Gaussian posterior
    means, with responsibilities proportional to w_i N(y; m_i, C_i +
    sigma^2 I). Its score is exact for the mixture, so it serves as the
    negative control that reproduces a non-Gaussian target.
    """

    spec: GmmSpec

    @property
    def dim(self) -> int:
        return self.spec.dim

    @property
    def descriptor(self) -> dict:
        return {"family": "exact_gmm", "dim": self.dim, "components": self.spec.n_components}

    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray:
        batch, single = self._check_input(y, sigma)
        n, d = batch.shape
        k = self.spec.n_components
        log_resp = np.empty((n, k))
        post_means = np.empty((k, n, d))
        for i in range(k):
            m, c = self.spec.means[i], self.spec.covariances[i]
            noisy_cov = c + sigma * sigma * np.eye(d)
            eig = eig_sym(noisy_cov)
            diff = batch - m
            coeffs = diff @ eig.eigenvectors
            maha = np.sum(coeffs * coeffs / eig.eigenvalues, axis=1)
            log_det = float(np.sum(np.log(eig.eigenvalues)))
            log_resp[:, i] = (
                np.log(self.spec.weights[i] + 1e-300)
                - 0.5 * (maha + log_det + d * np.log(2 * np.pi))
            )
            shrink = c @ eig.eigenvectors / eig.eigenvalues
            post_means[i] = m + coeffs @ shrink.T
        log_resp -= logsumexp(log_resp, axis=1, keepdims=True)
        resp = np.exp(log_resp)
        out = np.einsum("nk,knd->nd", resp, post_means)
        return out[0] if single else out
