"""Maximum-likelihood fits of log-polynomial densities on a grid.

A log-polynomial density has log p(x) = c . phi(x) - log Z(c) with phi the
monomials of total degree 1..degree. Fitting maximizes the penalized sample
log-likelihood with Z evaluated by quadrature on a fixed grid over a
4-standard-deviation box; the problem is convex (an exponential family), so
L-BFGS converges to the global optimum. Coordinates are mapped to [-1, 1]
inside the box before building monomials, which keeps high-degree features
well conditioned; KL comparisons between fits are invariant to that shared
rescaling.

Restricted to dimension <= 2, where grid quadrature is adequate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .datasets import multi_indices
from .errors import ValidationError

GRID_N = 200
KL_BINS = 50
BOX_STDS = 4.0
PENALTY = 1e-6


def _monomials(u: np.ndarray, exponents: list[tuple[int, ...]]) -> np.ndarray:
    cols = []
    for alpha in exponents:
        col = np.ones(u.shape[0])
        for i, a in enumerate(alpha):
            if a:
                col = col * u[:, i] ** a
        cols.append(col)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class LogPolyFit:
    """A fitted log-polynomial density over a finite box."""

    degree: int
    center: np.ndarray
    halfwidth: np.ndarray
    coeffs: np.ndarray
    exponents: list
    grid_n: int
    mean_loglik: float
    n_dropped: int

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def _scale(self, points: np.ndarray) -> np.ndarray:
        return (points - self.center) / self.halfwidth

    def grid_log_masses(self, bins: int) -> np.ndarray:
        """Log probability mass of each cell of a bins-per-axis partition.

        ``bins`` must divide the quadrature grid so cells aggregate exactly.
        """
        if self.grid_n % bins != 0:
            raise ValidationError(f"{bins} bins must divide the {self.grid_n} grid")
        axes = [np.linspace(-1, 1, self.grid_n, endpoint=False) + 1.0 / self.grid_n
                for _ in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        u = np.stack([m.ravel() for m in mesh], axis=1)
        logits = _monomials(u, self.exponents) @ self.coeffs
        logits -= logsumexp(logits)
        block = self.grid_n // bins
        shape = (bins, block) * self.dim
        grouped = logits.reshape(shape)
        if self.dim == 1:
            return logsumexp(grouped, axis=1)
        return logsumexp(grouped.transpose(0, 2, 1, 3).reshape(bins, bins, -1), axis=2)


def fit_log_polynomial(
    points: np.ndarray,
    degree: int,
    grid_n: int = GRID_N,
    box_stds: float = BOX_STDS,
    penalty: float = PENALTY,
) -> LogPolyFit:
    """Penalized ML fit of a degree-``degree`` log-polynomial density.

    Samples outside the box (mean +/- box_stds sigma per coordinate) are
    dropped and counted in the result.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] > 2:
        raise ValidationError("log-polynomial fitting supports dimension 1 or 2")
    if degree < 1:
        raise ValidationError("degree must be >= 1")
    d = points.shape[1]
    center = points.mean(axis=0)
    std = points.std(axis=0)
    if np.any(std <= 0):
        raise ValidationError("degenerate sample: zero variance coordinate")
    halfwidth = box_stds * std

    u_all = (points - center) / halfwidth
    inside = np.all(np.abs(u_all) <= 1.0, axis=1)
    u = u_all[inside]
    n_dropped = int(points.shape[0] - u.shape[0])
    if u.shape[0] < 10:
        raise ValidationError("too few in-box samples to fit")

    exponents = [a for a in multi_indices(d, degree) if sum(a) >= 1]
    phi_x = _monomials(u, exponents)
    phi_x_mean = phi_x.mean(axis=0)

    axes = [np.linspace(-1, 1, grid_n, endpoint=False) + 1.0 / grid_n for _ in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_u = np.stack([m.ravel() for m in mesh], axis=1)
    phi_g = _monomials(grid_u, exponents)
    log_cell = d * np.log(2.0 / grid_n)

    def objective(c):
        logits = phi_g @ c
        log_z = logsumexp(logits) + log_cell
        nll = -(phi_x_mean @ c - log_z) + penalty * float(c @ c)
        w = np.exp(logits - logsumexp(logits))
        grad = -(phi_x_mean - w @ phi_g) + 2.0 * penalty * c
        return nll, grad

    res = minimize(objective, np.zeros(len(exponents)), jac=True, method="L-BFGS-B",
                   options={"maxiter": 500})
    coeffs = res.x
    logits = phi_g @ coeffs
    log_z = logsumexp(logits) + log_cell
    # Jacobian of the box rescaling converts back to original coordinates.
    mean_ll = float(phi_x_mean @ coeffs - log_z - np.log(halfwidth).sum())
    return LogPolyFit(
        degree=degree,
        center=center,
        halfwidth=halfwidth,
        coeffs=coeffs,
        exponents=exponents,
        grid_n=grid_n,
        mean_loglik=mean_ll,
        n_dropped=n_dropped,
    )


def grid_kl(points: np.ndarray, fit: LogPolyFit, bins: int = KL_BINS) -> float:
    """KL divergence (nats) of the binned sample against the fitted density.

    Both the empirical sample and the fitted density are reduced to cell
    masses on the same bins-per-axis partition of the fit's box; samples
    outside the box are dropped.
    """
    points = np.asarray(points, dtype=float)
    u = fit._scale(points)
    inside = np.all(np.abs(u) <= 1.0, axis=1)
    u = u[inside]
    if u.shape[0] == 0:
        raise ValidationError("no samples inside the fit box")
    edges = np.linspace(-1, 1, bins + 1)
    if fit.dim == 1:
        counts, _ = np.histogram(u[:, 0], bins=edges)
    else:
        counts, _, _ = np.histogram2d(u[:, 0], u[:, 1], bins=(edges, edges))
    p_hat = counts.astype(float) / counts.sum()
    log_q = fit.grid_log_masses(bins)
    mask = p_hat > 0
    return float(np.sum(p_hat[mask] * (np.log(p_hat[mask]) - log_q[mask])))
