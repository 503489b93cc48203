"""Target distributions for the two-dimensional experiments.

Gaussian mixture specs with analytic moments, the matched-moment pair
construction (two different mixtures sharing mean and covariance exactly),
raw moment tables, and CSV persistence.
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .linalg import eig_sym
from .rng import derive_seed, make_rng

WEIGHT_SUM_TOL = 1e-12
PSD_EIG_FLOOR = -1e-10


@dataclass(frozen=True)
class Dataset:
    """A fixed collection of d-dimensional points.

    Attributes
    ----------
    points : (n, d) ndarray
        n >= 2 rows, read-only after construction.
    name : str
        Label carried into reports and file sidecars.
    """

    points: np.ndarray
    name: str = "data"

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError(f"points must be a 2-D array, got ndim={pts.ndim}")
        n, d = pts.shape
        if d < 1:
            raise ValidationError("dimension must be >= 1")
        if n < 2:
            raise ValidationError("need at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def with_name(self, name: str) -> "Dataset":
        return Dataset(self.points, name)


@dataclass(frozen=True)
class GmmSpec:
    """Parameters of a Gaussian mixture.

    weights : (k,) probability vector, sums to 1 within 1e-12.
    means : (k, d) component means.
    covariances : (k, d, d) symmetric PSD component covariances.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        m = np.array(self.means, dtype=float)
        c = np.array(self.covariances, dtype=float)
        if m.ndim != 2:
            raise ValidationError("means must be a (k, d) array")
        k, d = m.shape
        if w.shape != (k,):
            raise ValidationError(f"weights must have length {k}")
        if c.shape != (k, d, d):
            raise ValidationError(f"covariances must have shape ({k}, {d}, {d})")
        if np.any(w < 0):
            raise ValidationError("weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValidationError(f"weights must sum to 1 within {WEIGHT_SUM_TOL}")
        for i in range(k):
            ci = c[i]
            if float(np.abs(ci - ci.T).max()) > 1e-10:
                raise ValidationError(f"covariance {i} is not symmetric")
            min_eig = float(eig_sym(ci).eigenvalues[-1])
            if min_eig < PSD_EIG_FLOOR:
                raise ValidationError(
                    f"covariance {i} is not PSD (min eigenvalue {min_eig:.3e})"
                )
        for arr in (w, m, c):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covariances", c)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        """Nested-list form for config files and JSON sidecars."""
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GmmSpec":
        return cls(
            weights=np.asarray(d["weights"], dtype=float),
            means=np.asarray(d["means"], dtype=float),
            covariances=np.asarray(d["covariances"], dtype=float),
        )


def gmm_mean(spec: GmmSpec) -> np.ndarray:
    """Analytic mixture mean, sum_i w_i m_i."""
    return spec.weights @ spec.means


def gmm_cov(spec: GmmSpec) -> np.ndarray:
    """Analytic mixture covariance, sum_i w_i (C_i + m_i m_i^T) - mu mu^T."""
    mu = gmm_mean(spec)
    d = spec.dim
    out = np.zeros((d, d))
    for w, m, c in zip(spec.weights, spec.means, spec.covariances):
        out += w * (c + np.outer(m, m))
    return out - np.outer(mu, mu)


def _psd_factor(c: np.ndarray) -> np.ndarray:
    """A factor L with L L^T = c, tolerating semidefinite input."""
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        eig = eig_sym(c)
        vals = np.clip(eig.eigenvalues, 0.0, None)
        return eig.eigenvectors * np.sqrt(vals)


def sample_gmm(spec: GmmSpec, n: int, seed: int, name: str | None = None) -> Dataset:
    """Draw n i.i.d. points from a Gaussian mixture.

    Deterministic given ``seed``: the same call always returns bit-identical
    points.

    Parameters
    ----------
    spec : GmmSpec
        Validated mixture parameters.
    n : int
        Number of points, at least 2.
    seed : int
        Stream identifier for the draw.
    """
    if n < 2:
        raise ValidationError("n must be >= 2")
    rng = make_rng(seed)
    k, d = spec.n_components, spec.dim
    factors = np.stack([_psd_factor(spec.covariances[i]) for i in range(k)])
    comps = rng.choice(k, size=n, p=spec.weights)
    z = rng.standard_normal((n, d))
    pts = spec.means[comps] + np.einsum("nij,nj->ni", factors[comps], z)
    return Dataset(pts, name or f"gmm{k}")


# Fixed parameters for the trimodal target used throughout the 2-D runs.
# The exact values are an artifact choice (recorded in every report); they are
# picked so the three modes are well separated at unit-ish scale.
DEFAULT_3GMM = {
    "weights": [0.35, 0.35, 0.30],
    "means": [[-2.2, -1.2], [2.0, -1.4], [0.1, 2.2]],
    "covariances": [
        [[0.35, 0.10], [0.10, 0.25]],
        [[0.30, -0.08], [-0.08, 0.35]],
        [[0.25, 0.05], [0.05, 0.30]],
    ],
}

# Offset factor for the matched two-component mixture: the mode offset is
# 0.8 * sqrt(leading eigenvalue) along the leading eigenvector. The shared
# component covariance Sigma - delta delta^T stays positive definite with
# margin (its variance along that axis is 0.36 of the original) while the
# two modes sit ~2.7 component widths apart, so the pair is genuinely
# bimodal rather than a near-Gaussian blob.
MATCHED_DELTA_FACTOR = 0.8


def default_3gmm_spec() -> GmmSpec:
    """The package's fixed trimodal 2-D target."""
    return GmmSpec.from_dict(DEFAULT_3GMM)


def matched_moment_specs() -> tuple[GmmSpec, GmmSpec]:
    """A 3-component and a 2-component mixture with equal mean and covariance.

    The trimodal spec is ``default_3gmm_spec``. Its analytic moments (mu,
    Sigma) are computed exactly, then the bimodal spec places equal-weight
    components at mu +/- delta with shared covariance C = Sigma - delta
    delta^T, so both mixtures have mean mu and covariance Sigma exactly.
    """
    spec3 = default_3gmm_spec()
    mu = gmm_mean(spec3)
    sigma = gmm_cov(spec3)
    eig = eig_sym(sigma)
    delta = MATCHED_DELTA_FACTOR * np.sqrt(eig.eigenvalues[0]) * eig.eigenvectors[:, 0]
    c = sigma - np.outer(delta, delta)
    spec2 = GmmSpec(
        weights=np.array([0.5, 0.5]),
        means=np.stack([mu - delta, mu + delta]),
        covariances=np.stack([c, c]),
    )
    return spec3, spec2


def matched_moment_pair(seed: int, n: int = 10_000) -> tuple[Dataset, Dataset]:
    """Sample the matched-moment pair (trimodal, bimodal).

    Both datasets are drawn with seeds derived from ``seed``; their underlying
    specs share analytic mean and covariance exactly by construction.
    """
    spec3, spec2 = matched_moment_specs()
    ds3 = sample_gmm(spec3, n, derive_seed(seed, 0), name="matched-3gmm")
    ds2 = sample_gmm(spec2, n, derive_seed(seed, 1), name="matched-2gmm")
    return ds3, ds2


def multi_indices(dim: int, max_order: int) -> list[tuple[int, ...]]:
    """All exponent tuples with total order 0..max_order, in (order, lex) order."""
    out = []
    for order in range(max_order + 1):
        block = sorted(
            {
                tuple(
                    sum(1 for c in combo if c == i) for i in range(dim)
                )
                for combo in itertools.combinations_with_replacement(range(dim), order)
            },
            reverse=True,
        )
        out.extend(block)
    return out


@dataclass(frozen=True)
class MomentTable:
    """Raw mixed moments E[prod_i x_i^{a_i}] up to a total order.

    values maps each exponent tuple to its empirical moment. The order-0
    entry is always 1.
    """

    dim: int
    max_order: int
    values: dict = field(repr=False)

    def get(self, alpha: tuple[int, ...]) -> float:
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != self.dim:
            raise ValidationError(f"multi-index must have length {self.dim}")
        if sum(alpha) > self.max_order:
            raise ValidationError(
                f"moment of order {sum(alpha)} not in table (max {self.max_order})"
            )
        return self.values[alpha]


def moments(data: Dataset, max_order: int) -> MomentTable:
    """Empirical raw moments of ``data`` up to total order ``max_order``.

    Every mixed moment E[prod_i x_i^{j_i}] with sum(j) <= max_order is
    computed, indexed by its exponent tuple.
    """
    if max_order < 1:
        raise ValidationError("max_order must be >= 1")
    pts = data.points
    n, d = pts.shape
    # Precompute per-coordinate powers once; orders here are small.
    powers = [np.ones((n, d))]
    for _ in range(max_order):
        powers.append(powers[-1] * pts)
    values = {}
    for alpha in multi_indices(d, max_order):
        prod = np.ones(n)
        for i, a in enumerate(alpha):
            if a:
                prod = prod * powers[a][:, i]
        values[alpha] = float(prod.mean())
    return MomentTable(dim=d, max_order=max_order, values=values)


def sample_tile_images(
    n: int, side: int, tile: int, seed: int, n_patterns: int = 6, noise: float = 0.05
) -> Dataset:
    """Tiny synthetic images assembled from a fixed library of tile patterns.

    Each image is a (side/tile)^2 grid of tiles chosen from ``n_patterns``
    smooth seeded patterns, plus per-pixel noise. Rows are flattened images
    of dimension side*side.
    """
    if side % tile != 0:
        raise ValidationError("tile must divide side")
    rng = make_rng(seed)
    # Smooth-ish patterns: random low-frequency mixtures on the tile.
    coords = np.arange(tile) / max(tile - 1, 1)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    patterns = []
    for _ in range(n_patterns):
        a, b, c = rng.normal(size=3)
        fx, fy = rng.uniform(0.5, 2.0, size=2)
        patterns.append(a * np.sin(np.pi * fx * xx) + b * np.cos(np.pi * fy * yy) + 0.3 * c)
    patterns = np.stack(patterns)

    per_axis = side // tile
    images = np.empty((n, side, side))
    for i in range(n):
        choice = rng.integers(0, n_patterns, size=(per_axis, per_axis))
        for r in range(per_axis):
            for c in range(per_axis):
                images[i, r * tile:(r + 1) * tile, c * tile:(c + 1) * tile] = patterns[
                    choice[r, c]
                ]
    images += noise * rng.standard_normal(images.shape)
    return Dataset(images.reshape(n, side * side), name=f"tiles{side}x{side}")


def shuffle_tiles(data: Dataset, tile: int, seed: int) -> Dataset:
    """Permute each image's aligned tiles.

    The multiset of tile-aligned patches is preserved exactly, so patch
    statistics at that alignment are unchanged while the global arrangement
    differs.
    """
    side = int(np.sqrt(data.dim))
    if side * side != data.dim or side % tile != 0:
        raise ValidationError("dataset rows must be square images divisible by tile")
    rng = make_rng(seed)
    per_axis = side // tile
    n_tiles = per_axis * per_axis
    images = data.points.reshape(data.n, side, side)
    out = np.empty_like(images)
    for i in range(data.n):
        perm = rng.permutation(n_tiles)
        for dst, src in enumerate(perm):
            dr, dc = divmod(dst, per_axis)
            sr, sc = divmod(int(src), per_axis)
            out[i, dr * tile:(dr + 1) * tile, dc * tile:(dc + 1) * tile] = images[
                i, sr * tile:(sr + 1) * tile, sc * tile:(sc + 1) * tile
            ]
    return Dataset(out.reshape(data.n, data.dim), name=f"{data.name}-shuffled")


def save_dataset(data: Dataset, path: str | Path) -> None:
    """Write a dataset as CSV: header x0..x{d-1}, one row per point.

    Floats are written with shortest round-trip repr, so save/load is
    bit-exact and reruns produce byte-identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i}" for i in range(data.dim)])
        for row in data.points:
            writer.writerow([repr(float(v)) for v in row])


def load_dataset(path: str | Path, name: str | None = None) -> Dataset:
    """Read a dataset written by ``save_dataset``."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ValidationError(f"{path} contains no data rows")
    pts = np.asarray(rows, dtype=float)
    if pts.shape[1] != len(header):
        raise ValidationError(f"{path}: row width does not match header")
    return Dataset(pts, name or path.stem)
