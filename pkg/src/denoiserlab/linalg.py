"""Symmetric eigendecomposition and low-rank approximation.

The eigensolver is a cyclic Jacobi iteration. The matrices in this package
are small (a few hundred rows at most), where Jacobi is simple, accurate for
symmetric input, and easy to make deterministic: eigenvalues are returned in
descending order and each eigenvector is signed so that its largest-magnitude
entry is positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SYMMETRY_TOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix.

    Attributes
    ----------
    eigenvalues : (d,) ndarray
        Descending.
    eigenvectors : (d, d) ndarray
        Orthonormal columns; column i pairs with eigenvalues[i].
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return U diag(lambda) U^T."""
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def check_symmetric(m: np.ndarray, tol: float = SYMMETRY_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if float(np.abs(m - m.T).max()) > tol * scale:
        raise ValidationError("matrix is not symmetric within tolerance")
    return m


def _fix_signs(u: np.ndarray) -> None:
    # Largest-magnitude entry of each column made positive (first index on ties).
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]


def eig_sym(m: np.ndarray, tol: float = 1e-13, max_sweeps: int = 60) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    m : (d, d) array_like
        Symmetric within ``SYMMETRY_TOL``.
    tol : float
        Sweep until the off-diagonal Frobenius mass falls below
        ``tol * ||m||_F``.
    max_sweeps : int
        Safety cap; Jacobi converges quadratically so this is generous.

    Returns
    -------
    EigenDecomposition
        Descending eigenvalues, orthonormal eigenvectors, deterministic signs.
    """
    a = check_symmetric(m).copy()
    d = a.shape[0]
    u = np.eye(d)
    if d == 1:
        return EigenDecomposition(a[0].copy(), u)

    # Symmetrize exactly so rotations see a consistent matrix.
    a = 0.5 * (a + a.T)
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return EigenDecomposition(np.zeros(d), u)

    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(a * a) - np.sum(np.diag(a) ** 2)))
        if off <= tol * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # Stable rotation angle (Golub & Van Loan style).
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq

                up = u[:, p].copy()
                uq = u[:, q].copy()
                u[:, p] = c * up - s * uq
                u[:, q] = s * up + c * uq

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    u = u[:, order]
    _fix_signs(u)
    eigenvalues.setflags(write=False)
    u.setflags(write=False)
    return EigenDecomposition(eigenvalues, u)


def rank_k_approx(m: np.ndarray, k: int) -> np.ndarray:
    """Best rank-k approximation of a symmetric PSD matrix.

    Returns sum_{i<=k} lambda_i u_i u_i^T from the Jacobi eigendecomposition,
    which is Frobenius-optimal among rank-k matrices (Eckart-Young).
    """
    m = check_symmetric(m)
    d = m.shape[0]
    if not 1 <= k <= d:
        raise ValidationError(f"k must be in [1, {d}], got {k}")
    eig = eig_sym(m)
    uk = eig.eigenvectors[:, :k]
    return (uk * eig.eigenvalues[:k]) @ uk.T
