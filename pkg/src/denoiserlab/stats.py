"""Statistics kernels shared by the denoisers, sampler, and checks.

Moment estimators, the Jacobi eigensolver re-exported from ``linalg``,
energy-distance two-sample machinery, nearest-neighbour memorization
metrics, and PCA-based intrinsic dimension (global and local).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .datasets import Dataset
from .errors import ValidationError
from .linalg import EigenDecomposition, eig_sym, rank_k_approx  # noqa: F401  (public surface)
from .rng import make_rng

# Fraction of the training set's own median NN distance below which a
# generated point counts as memorized. The value is recorded in every report.
MEMORIZATION_RATIO = 1.0 / 3.0


def empirical_mean(data: Dataset) -> np.ndarray:
    """Arithmetic mean per coordinate."""
    return data.points.mean(axis=0)


def empirical_cov(data: Dataset) -> np.ndarray:
    """Unbiased (n-1 denominator) sample covariance."""
    if data.n < 2:
        raise ValidationError("covariance needs at least 2 points")
    centered = data.points - data.points.mean(axis=0)
    cov = centered.T @ centered / (data.n - 1)
    return 0.5 * (cov + cov.T)


def data_scale(data: Dataset) -> float:
    """Root mean per-coordinate variance; the package's unit of 'data scale'."""
    cov = empirical_cov(data)
    return float(np.sqrt(max(np.trace(cov) / data.dim, 0.0)))


def bounding_diameter(data: Dataset) -> float:
    """Diagonal of the axis-aligned bounding box (cheap diameter proxy)."""
    span = data.points.max(axis=0) - data.points.min(axis=0)
    return float(np.linalg.norm(span))


def _check_same_dim(a: Dataset, b: Dataset) -> None:
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")


def energy_distance(a: Dataset, b: Dataset) -> float:
    """V-statistic energy distance 2 E||A-B|| - E||A-A'|| - E||B-B'||.

    All three expectations run over all ordered pairs (diagonal included),
    so a dataset against itself gives exactly zero. Nonnegative, and zero at
    population level iff the distributions coincide.
    """
    _check_same_dim(a, b)
    dab = cdist(a.points, b.points).mean()
    daa = cdist(a.points, a.points).mean()
    dbb = cdist(b.points, b.points).mean()
    return float(2.0 * dab - daa - dbb)


@dataclass(frozen=True)
class PermutationTest:
    """Outcome of an energy-distance permutation test."""

    statistic: float
    p_value: float
    n_shuffles: int
    n_a: int
    n_b: int

    def rejects(self, level: float) -> bool:
        return self.p_value <= level


def _energy_from_indicator(dist: np.ndarray, s: np.ndarray, row_sums: np.ndarray,
                           total: float, n_a: int, n_b: int) -> float:
    # s is a 0/1 indicator of group A over the pooled sample.
    ds = dist @ s
    saa = float(s @ ds)
    sa_row = float(row_sums @ s)
    sab = sa_row - saa
    sbb = total - 2.0 * sa_row + saa
    return 2.0 * sab / (n_a * n_b) - saa / (n_a * n_a) - sbb / (n_b * n_b)


def energy_permutation_test(
    a: Dataset,
    b: Dataset,
    n_shuffles: int = 200,
    seed: int = 0,
    max_points: int | None = 2000,
) -> PermutationTest:
    """Two-sample energy test with a label-permutation null.

    Each group is subsampled (seeded, without replacement) to at most
    ``max_points`` so the pooled distance matrix stays small. The p-value
    uses the add-one convention (1 + #{perm >= observed}) / (1 + shuffles).
    """
    _check_same_dim(a, b)
    rng = make_rng(seed)
    pa, pb = a.points, b.points
    if max_points is not None and pa.shape[0] > max_points:
        pa = pa[rng.choice(pa.shape[0], size=max_points, replace=False)]
    if max_points is not None and pb.shape[0] > max_points:
        pb = pb[rng.choice(pb.shape[0], size=max_points, replace=False)]
    n_a, n_b = pa.shape[0], pb.shape[0]
    pooled = np.vstack([pa, pb])
    dist = cdist(pooled, pooled)
    row_sums = dist.sum(axis=1)
    total = float(row_sums.sum())

    s = np.zeros(n_a + n_b)
    s[:n_a] = 1.0
    observed = _energy_from_indicator(dist, s, row_sums, total, n_a, n_b)

    count = 0
    for _ in range(n_shuffles):
        perm = rng.permutation(n_a + n_b)
        sp = np.zeros(n_a + n_b)
        sp[perm[:n_a]] = 1.0
        stat = _energy_from_indicator(dist, sp, row_sums, total, n_a, n_b)
        if stat >= observed:
            count += 1
    p = (1.0 + count) / (1.0 + n_shuffles)
    return PermutationTest(float(observed), float(p), n_shuffles, n_a, n_b)


@dataclass(frozen=True)
class MemorizationReport:
    """Nearest-training-point distances for a generated sample.

    ratios are per-generated-point NN distances divided by the median
    nearest-neighbour distance within the training set itself; a point with
    ratio below ``threshold`` counts as memorized.
    """

    ratios: np.ndarray
    median_train_nn: float
    threshold: float
    memorized_fraction: float


def nn_memorization(
    generated: Dataset, train: Dataset, threshold: float = MEMORIZATION_RATIO
) -> MemorizationReport:
    """Distance-ratio memorization metric of ``generated`` against ``train``."""
    _check_same_dim(generated, train)
    d_gt = cdist(generated.points, train.points)
    nn_gen = d_gt.min(axis=1)
    d_tt = cdist(train.points, train.points)
    np.fill_diagonal(d_tt, np.inf)
    median_nn = float(np.median(d_tt.min(axis=1)))
    if median_nn <= 0.0:
        raise ValidationError("training set has duplicate points everywhere")
    ratios = nn_gen / median_nn
    frac = float(np.mean(ratios < threshold))
    return MemorizationReport(ratios, median_nn, threshold, frac)


def _pca_dim(cov: np.ndarray, variance_threshold: float) -> int:
    eig = eig_sym(cov)
    vals = np.clip(eig.eigenvalues, 0.0, None)
    total = float(vals.sum())
    if total <= 0.0:
        return 0
    cum = np.cumsum(vals) / total
    return int(np.searchsorted(cum, variance_threshold - 1e-12) + 1)


def intrinsic_dim(data: Dataset, variance_threshold: float) -> int:
    """Global PCA dimension: smallest k capturing >= threshold of variance."""
    if not 0.0 < variance_threshold < 1.0:
        raise ValidationError("variance_threshold must be in (0, 1)")
    if data.n < data.dim + 1:
        raise ValidationError("need at least d+1 points")
    return _pca_dim(empirical_cov(data), variance_threshold)


def local_intrinsic_dim(
    data: Dataset,
    variance_threshold: float,
    k_neighbors: int = 50,
    n_anchors: int = 100,
    seed: int = 0,
) -> int:
    """Local-PCA intrinsic dimension, averaged over anchor neighbourhoods.

    For each of ``n_anchors`` seeded anchor points, PCA runs on the anchor's
    ``k_neighbors`` nearest neighbours; the per-anchor dimensions are averaged
    and rounded. Manifolds are only locally linear, so this is the estimate
    used for curved supports.
    """
    if not 0.0 < variance_threshold < 1.0:
        raise ValidationError("variance_threshold must be in (0, 1)")
    if data.n <= k_neighbors:
        raise ValidationError("need more points than k_neighbors")
    rng = make_rng(seed)
    n_anchors = min(n_anchors, data.n)
    anchors = rng.choice(data.n, size=n_anchors, replace=False)
    dims = []
    dist = cdist(data.points[anchors], data.points)
    for row_i, anchor in enumerate(anchors):
        order = np.argsort(dist[row_i], kind="stable")
        neigh = [i for i in order if i != anchor][:k_neighbors]
        cloud = data.points[neigh]
        centered = cloud - cloud.mean(axis=0)
        cov = centered.T @ centered / (len(neigh) - 1)
        dims.append(_pca_dim(0.5 * (cov + cov.T), variance_threshold))
    return int(round(float(np.mean(dims))))
