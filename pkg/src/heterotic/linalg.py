"""Rank, kernel and projection helpers with a relative singular-value cutoff."""
from __future__ import annotations

import numpy as np

RANK_RTOL = 1e-9


def rank(mat: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > rtol * s[0]).sum())


def column_space(mat: np.ndarray, rtol: float = RANK_RTOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (Euclidean) of the column space.

    Singular values below ``rtol * scale`` are dropped; ``scale`` defaults
    to the largest singular value.
    """
    if mat.size == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(mat, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((mat.shape[0], 0), dtype=complex)
    return u[:, s > rtol * (s[0] if scale is None else scale)]


def kernel(mat: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (Euclidean) of the null space."""
    cols = mat.shape[1]
    if mat.size == 0 or mat.shape[0] == 0:
        return np.eye(cols, dtype=complex)
    _, s, vh = np.linalg.svd(mat)
    if s.size == 0 or s[0] == 0:
        return np.eye(cols, dtype=complex)
    r = int((s > rtol * s[0]).sum())
    return vh[r:].conj().T


class GramSpace:
    """Coordinates in which a positive Gram matrix becomes the identity."""

    def __init__(self, gram: np.ndarray):
        gram = 0.5 * (gram + gram.conj().T)
        self.gram = gram
        self.chol = np.linalg.cholesky(gram)  # gram = L L^*

    def to_euclid(self, x: np.ndarray) -> np.ndarray:
        return self.chol.conj().T @ x

    def from_euclid(self, y: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.chol.conj().T, y)

    def project_off(self, x: np.ndarray, image: np.ndarray) -> np.ndarray:
        """Component of ``x`` orthogonal to the columns of ``image``."""
        y = self.to_euclid(x)
        q = column_space(self.to_euclid(image))
        y = y - q @ (q.conj().T @ y)
        return self.from_euclid(y)

    def complement(self, subspace: np.ndarray, within: np.ndarray | None = None) -> np.ndarray:
        """Basis of ``within`` (default: everything) orthogonal to ``subspace``."""
        dim = self.gram.shape[0]
        within = np.eye(dim, dtype=complex) if within is None else within
        w = column_space(self.to_euclid(within))
        q = column_space(self.to_euclid(subspace))
        w = w - q @ (q.conj().T @ w)
        # w started orthonormal, so an absolute cutoff is the right one
        w = column_space(w, scale=1.0) if w.size else w
        return self.from_euclid(w) if w.shape[1] else np.zeros((dim, 0), dtype=complex)

    def norm(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.to_euclid(x)))


def intersect(a: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Basis of the intersection of two column spaces."""
    if a.shape[1] == 0 or b.shape[1] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    ker = kernel(np.hstack([a, -b]), rtol)
    return column_space(a @ ker[: a.shape[1]], rtol)
