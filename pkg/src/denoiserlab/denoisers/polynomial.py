"""Polynomial denoisers fit in closed form, per noise level.

Two feature maps share one solver: exact monomials up to a total degree, and
random features (a frozen Gaussian projection followed by an elementwise
k-th power plus intercept). For each sigma on a fixed grid, fresh noise is
drawn and the minimum-MSE affine readout A h(y) + b is solved from feature
covariances, with A = Cov(x, h) (Cov(h) + ridge I)^{-1} and b = mean(x) -
A mean(h).

Feature covariances are also assembled directly from a raw moment table of
the clean data (noise integrated analytically), which is the route used to
verify that the fit depends on the data only through its first 2*degree
moments.

Features are evaluated on y / sqrt(1 + sigma^2). This rescaling spans the
same polynomial function class at every sigma and keeps the feature
covariance well conditioned when sigma is large.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from ..datasets import Dataset, MomentTable, multi_indices
from ..errors import NumericalError, ValidationError
from ..rng import derive_seed, make_rng
from ..stats import empirical_mean
from .base import Denoiser

# Near-singular feature covariances are refused when ridge is exactly zero.
COND_LIMIT = 1e14

MAX_EXACT_DIM = 4


def _check_degree(degree: int) -> None:
    if degree < 1 or degree % 2 == 0:
        raise ValidationError(
            f"degree must be a positive odd integer, got {degree}: an even-degree "
            "score field integrates to a log-density that cannot be normalized"
        )


def monomial_exponents(dim: int, degree: int) -> list[tuple[int, ...]]:
    """Exponent tuples of all monomials with total order 1..degree."""
    return [a for a in multi_indices(dim, degree) if sum(a) >= 1]


def _monomial_features(y: np.ndarray, exponents: list[tuple[int, ...]]) -> np.ndarray:
    n, d = y.shape
    max_pow = max(max(a) for a in exponents)
    powers = [np.ones((n, d))]
    for _ in range(max_pow):
        powers.append(powers[-1] * y)
    cols = []
    for alpha in exponents:
        col = np.ones(n)
        for i, a in enumerate(alpha):
            if a:
                col = col * powers[a][:, i]
        cols.append(col)
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class PolynomialDenoiser(Denoiser):
    """Affine readout over polynomial features, one fit per grid noise level.

    kind is "exact" (monomials given by ``exponents``) or "rf" (frozen
    projection ``rf_matrix`` with elementwise ``degree``-th power). Queries
    use the fit whose grid sigma is nearest in log space.
    """

    kind: str
    degree: int
    sigma_grid: np.ndarray
    a_matrices: list
    b_vectors: list
    input_dim: int
    exponents: list | None = None
    rf_matrix: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.input_dim

    @property
    def n_features(self) -> int:
        return self.a_matrices[0].shape[1]

    @property
    def descriptor(self) -> dict:
        out = {
            "family": f"polynomial_{self.kind}",
            "dim": self.input_dim,
            "degree": self.degree,
            "n_features": self.n_features,
            "sigma_grid": [float(self.sigma_grid[0]), float(self.sigma_grid[-1]),
                           int(self.sigma_grid.size)],
            "feature_scaling": "y / sqrt(1 + sigma^2)",
        }
        if self.kind == "rf":
            out["note"] = "pure elementwise k-th power of the frozen projection, plus intercept"
        return out

    def _grid_index(self, sigma: float) -> int:
        return int(np.argmin(np.abs(np.log(self.sigma_grid) - math.log(sigma))))

    def features(self, y: np.ndarray, sigma: float) -> np.ndarray:
        scale = math.sqrt(1.0 + sigma * sigma)
        ys = y / scale
        if self.kind == "exact":
            return _monomial_features(ys, self.exponents)
        return (ys @ self.rf_matrix.T) ** self.degree

    def denoise(self, y: np.ndarray, sigma: float) -> np.ndarray:
        batch, single = self._check_input(y, sigma)
        idx = self._grid_index(sigma)
        grid_sigma = float(self.sigma_grid[idx])
        h = self.features(batch, grid_sigma)
        out = h @ self.a_matrices[idx].T + self.b_vectors[idx]
        return out[0] if single else out


def default_ridge(sigma_h: np.ndarray) -> float:
    """Default Tikhonov level: 1e-6 * trace(Sigma_h) / dim(Sigma_h)."""
    m = sigma_h.shape[0]
    return 1e-6 * float(np.trace(sigma_h)) / m


def _solve_readout(
    x: np.ndarray, h: np.ndarray, ridge: float | None
) -> tuple[np.ndarray, np.ndarray, float]:
    n = x.shape[0]
    mu_x = x.mean(axis=0)
    mu_h = h.mean(axis=0)
    hc = h - mu_h
    sigma_h = hc.T @ hc / n
    sigma_xh = (x - mu_x).T @ hc / n
    eff_ridge = default_ridge(sigma_h) if ridge is None else float(ridge)
    lhs = sigma_h + eff_ridge * np.eye(sigma_h.shape[0])
    cond = float(np.linalg.cond(lhs))
    if eff_ridge == 0.0 and (not np.isfinite(cond) or cond > COND_LIMIT):
        raise NumericalError(
            f"feature covariance is numerically singular (condition ~ {cond:.3e}); "
            "pass a positive ridge"
        )
    a = np.linalg.solve(lhs, sigma_xh.T).T
    b = mu_x - a @ mu_h
    return a, b, cond


def _fit_on_grid(
    data: Dataset,
    featfn,
    sigma_grid: np.ndarray,
    ridge: float | None,
    seed: int,
    noise_reps: int,
) -> tuple[list, list, dict]:
    x = np.tile(data.points, (noise_reps, 1))
    a_list, b_list, conds = [], [], []
    for j, sigma in enumerate(sigma_grid):
        rng = make_rng(derive_seed(seed, j))
        y = x + float(sigma) * rng.standard_normal(x.shape)
        scale = math.sqrt(1.0 + float(sigma) ** 2)
        h = featfn(y / scale)
        a, b, cond = _solve_readout(x, h, ridge)
        a_list.append(a)
        b_list.append(b)
        conds.append(cond)
    return a_list, b_list, {"condition_numbers": conds, "noise_reps": noise_reps, "seed": seed}


def _check_grid(sigma_grid) -> np.ndarray:
    grid = np.asarray(sigma_grid, dtype=float).reshape(-1)
    if grid.size == 0 or np.any(grid <= 0):
        raise ValidationError("sigma_grid must be nonempty and positive")
    if np.any(np.diff(grid) <= 0):
        raise ValidationError("sigma_grid must be strictly increasing")
    return grid


def fit_polynomial_exact(
    data: Dataset,
    degree: int,
    sigma_grid,
    ridge: float | None = None,
    seed: int = 0,
    noise_reps: int = 8,
) -> PolynomialDenoiser:
    """Fit the monomial-feature polynomial denoiser on a sigma grid.

    The feature count C(d + degree, degree) grows quickly, so the exact map
    is restricted to dimension <= 4.
    """
    _check_degree(degree)
    if data.dim > MAX_EXACT_DIM:
        raise ValidationError(
            f"exact monomial features are limited to dim <= {MAX_EXACT_DIM}, got {data.dim}"
        )
    grid = _check_grid(sigma_grid)
    exponents = monomial_exponents(data.dim, degree)
    featfn = lambda ys: _monomial_features(ys, exponents)
    a_list, b_list, diag = _fit_on_grid(data, featfn, grid, ridge, seed, noise_reps)
    return PolynomialDenoiser(
        kind="exact",
        degree=degree,
        sigma_grid=grid,
        a_matrices=a_list,
        b_vectors=b_list,
        input_dim=data.dim,
        exponents=exponents,
        diagnostics=diag,
    )


def fit_polynomial_rf(
    data: Dataset,
    degree: int,
    width: int,
    sigma_grid,
    ridge: float | None = None,
    seed: int = 0,
    noise_reps: int = 4,
) -> PolynomialDenoiser:
    """Fit the random-feature polynomial denoiser.

    The projection matrix is drawn once from the seed with entries of
    variance 1/d (so projected coordinates stay O(1) before the power) and
    frozen; only the affine readout is solved, per grid sigma.
    """
    _check_degree(degree)
    if width < 1:
        raise ValidationError("width must be >= 1")
    grid = _check_grid(sigma_grid)
    rng = make_rng(derive_seed(seed, 10_000))
    r = rng.standard_normal((width, data.dim)) / math.sqrt(data.dim)
    featfn = lambda ys: (ys @ r.T) ** degree
    a_list, b_list, diag = _fit_on_grid(data, featfn, grid, ridge, seed, noise_reps)
    return PolynomialDenoiser(
        kind="rf",
        degree=degree,
        sigma_grid=grid,
        a_matrices=a_list,
        b_vectors=b_list,
        input_dim=data.dim,
        rf_matrix=r,
        diagnostics=diag,
    )


def log_spaced_sigma_grid(sigma_lo: float, sigma_hi: float, levels: int = 20) -> np.ndarray:
    """The default fitting grid: log-spaced noise levels spanning a schedule."""
    if not 0 < sigma_lo < sigma_hi:
        raise ValidationError("need 0 < sigma_lo < sigma_hi")
    return np.exp(np.linspace(math.log(sigma_lo), math.log(sigma_hi), levels))


# --- moment-route assembly -------------------------------------------------
#
# With y = x + sigma * eta and eta standard normal independent of x, every
# raw moment of y (and every cross moment with x) expands binomially into
# raw moments of x times Gaussian moments of eta. These routines evaluate
# that expansion against a MomentTable, so feature covariances can be built
# without drawing any noise.


def gaussian_raw_moment(order: int) -> float:
    """E[eta^order] for standard normal eta: 0 odd, (order-1)!! even."""
    if order % 2 == 1:
        return 0.0
    out = 1.0
    for k in range(order - 1, 0, -2):
        out *= k
    return out


def noisy_raw_moment(table: MomentTable, alpha: tuple[int, ...], sigma: float) -> float:
    """E[prod_l (x_l + sigma eta_l)^{alpha_l}] from clean-data moments."""
    alpha = tuple(int(a) for a in alpha)
    total = 0.0
    for beta in itertools.product(*(range(a + 1) for a in alpha)):
        gauss = 1.0
        for a, b in zip(alpha, beta):
            m = a - b
            if m % 2 == 1:
                gauss = 0.0
                break
            gauss *= math.comb(a, b) * (sigma**m) * gaussian_raw_moment(m)
        if gauss == 0.0:
            continue
        total += gauss * table.get(beta)
    return total


def noisy_cross_moment(
    table: MomentTable, coord: int, alpha: tuple[int, ...], sigma: float
) -> float:
    """E[x_coord * prod_l (x_l + sigma eta_l)^{alpha_l}]."""
    alpha = tuple(int(a) for a in alpha)
    total = 0.0
    for beta in itertools.product(*(range(a + 1) for a in alpha)):
        gauss = 1.0
        for a, b in zip(alpha, beta):
            m = a - b
            if m % 2 == 1:
                gauss = 0.0
                break
            gauss *= math.comb(a, b) * (sigma**m) * gaussian_raw_moment(m)
        if gauss == 0.0:
            continue
        shifted = tuple(b + (1 if i == coord else 0) for i, b in enumerate(beta))
        total += gauss * table.get(shifted)
    return total


def feature_moments_from_table(
    table: MomentTable, exponents: list[tuple[int, ...]], sigma: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mu_h, Sigma_h, Sigma_xh) of the scaled monomial features, analytically.

    Requires the table to hold moments up to twice the feature degree.
    """
    max_deg = max(sum(a) for a in exponents)
    if table.max_order < 2 * max_deg:
        raise ValidationError(
            f"moment table of order {table.max_order} too small, need {2 * max_deg}"
        )
    scale = math.sqrt(1.0 + sigma * sigma)
    m = len(exponents)
    d = table.dim
    raw = np.array([noisy_raw_moment(table, a, sigma) for a in exponents])
    scales = np.array([scale ** (-sum(a)) for a in exponents])
    mu_h = raw * scales

    sigma_h = np.empty((m, m))
    for i, ai in enumerate(exponents):
        for j in range(i, m):
            aj = exponents[j]
            pair = tuple(a + b for a, b in zip(ai, aj))
            second = noisy_raw_moment(table, pair, sigma) * scales[i] * scales[j]
            sigma_h[i, j] = sigma_h[j, i] = second - mu_h[i] * mu_h[j]

    mu_x = np.array([table.get(tuple(1 if i == c else 0 for i in range(d))) for c in range(d)])
    sigma_xh = np.empty((d, m))
    for c in range(d):
        for j, aj in enumerate(exponents):
            cross = noisy_cross_moment(table, c, aj, sigma) * scales[j]
            sigma_xh[c, j] = cross - mu_x[c] * mu_h[j]
    return mu_h, sigma_h, sigma_xh


def polynomial_fit_from_moments(
    table: MomentTable, degree: int, sigma: float, ridge: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """The (A, b) readout assembled purely from clean-data moments."""
    _check_degree(degree)
    exponents = monomial_exponents(table.dim, degree)
    mu_h, sigma_h, sigma_xh = feature_moments_from_table(table, exponents, sigma)
    eff_ridge = default_ridge(sigma_h) if ridge is None else float(ridge)
    lhs = sigma_h + eff_ridge * np.eye(sigma_h.shape[0])
    a = np.linalg.solve(lhs, sigma_xh.T).T
    d = table.dim
    mu_x = np.array([table.get(tuple(1 if i == c else 0 for i in range(d))) for c in range(d)])
    b = mu_x - a @ mu_h
    return a, b


def sample_feature_moments(
    data: Dataset, exponents: list[tuple[int, ...]], sigma: float, seed: int,
    noise_reps: int = 1,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(mu_h, Sigma_h, Sigma_xh) estimated from an actual noise draw.

    The Monte-Carlo counterpart of ``feature_moments_from_table``; the two
    must agree up to noise sampling error since they share the clean points.
    """
    rng = make_rng(seed)
    x = np.tile(data.points, (noise_reps, 1))
    y = x + sigma * rng.standard_normal(x.shape)
    scale = math.sqrt(1.0 + sigma * sigma)
    h = _monomial_features(y / scale, exponents)
    n = h.shape[0]
    mu_h = h.mean(axis=0)
    hc = h - mu_h
    sigma_h = hc.T @ hc / n
    mu_x = empirical_mean(data)
    sigma_xh = (x - mu_x).T @ hc / n
    return mu_h, sigma_h, sigma_xh
