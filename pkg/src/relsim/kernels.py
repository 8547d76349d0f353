"""Parameterized similarity functions with dense, sparse, and centroid fast paths."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist


KERNEL_KINDS = ("rbf", "polynomial", "dot")

# Grid over which the RBF radius is searched during cross-validation.
SIGMA_GRID = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)


class KernelError(ValueError):
    """Invalid kernel parameters or operands."""


@dataclass(frozen=True)
class KernelSpec:
    """Which similarity function to use and its parameters.

    kind "rbf" uses ``exp(-||x - z||^2 / (2 sigma^2))``; "polynomial" uses
    ``(x . z + offset)^degree``; "dot" is the plain inner product.
    """

    kind: str = "rbf"
    sigma: float = 0.3
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise KernelError(f"rbf sigma must be positive, got {self.sigma}")
        if self.kind == "polynomial":
            if self.degree < 1:
                raise KernelError(f"polynomial degree must be >= 1, got {self.degree}")
            if self.offset < 0:
                raise KernelError(f"polynomial offset must be >= 0, got {self.offset}")


def similarity(spec, x, z):
    """Similarity of two dense vectors of equal length. Symmetric in (x, z)."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape or x.ndim != 1:
        raise KernelError(f"operands must be equal-length vectors, got {x.shape} and {z.shape}")
    if spec.kind == "rbf":
        diff = x - z
        return float(np.exp(-np.dot(diff, diff) / (2.0 * spec.sigma ** 2)))
    if spec.kind == "polynomial":
        return float((np.dot(x, z) + spec.offset) ** spec.degree)
    return float(np.dot(x, z))


def pairwise(spec, A, B):
    """Similarity matrix between the rows of A (a x d) and B (b x d)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape[1] != B.shape[1]:
        raise KernelError(f"column mismatch: {A.shape} vs {B.shape}")
    if spec.kind == "rbf":
        if A.shape[1] == 0:
            return np.ones((A.shape[0], B.shape[0]))
        d2 = cdist(A, B, "sqeuclidean")
        return np.exp(-d2 / (2.0 * spec.sigma ** 2))
    dots = A @ B.T
    if spec.kind == "polynomial":
        return (dots + spec.offset) ** spec.degree
    return dots


def _check_sparse(vec):
    idx, vals = vec
    idx = np.asarray(idx, dtype=int)
    vals = np.asarray(vals, dtype=float)
    if idx.shape != vals.shape or idx.ndim != 1:
        raise KernelError("sparse vector must be (indices, values) of equal length")
    if idx.size > 1 and not np.all(np.diff(idx) > 0):
        raise KernelError("sparse vector indices must be strictly increasing")
    return idx, vals


def _sparse_dot(xi, xv, zi, zv):
    # hash the smaller support, probe with the larger
    if xi.size > zi.size:
        xi, xv, zi, zv = zi, zv, xi, xv
    table = {int(i): v for i, v in zip(xi, xv)}
    total = 0.0
    for i, v in zip(zi, zv):
        w = table.get(int(i))
        if w is not None:
            total += w * v
    return total


def similarity_sparse(spec, x, z):
    """Similarity of two sparse vectors given as (indices, values) pairs.

    Cost is proportional to the nonzero counts: supports are intersected via a
    hashed lookup on the smaller vector. Equals :func:`similarity` on the
    densified inputs.
    """
    xi, xv = _check_sparse(x)
    zi, zv = _check_sparse(z)
    dot = _sparse_dot(xi, xv, zi, zv)
    if spec.kind == "rbf":
        d2 = float(np.dot(xv, xv) + np.dot(zv, zv) - 2.0 * dot)
        return float(np.exp(-max(d2, 0.0) / (2.0 * spec.sigma ** 2)))
    if spec.kind == "polynomial":
        return float((dot + spec.offset) ** spec.degree)
    return float(dot)


class MissingClassError(ValueError):
    """A class id has no training examples."""


def class_centroids(X, labels, class_count):
    """Per-class arithmetic-mean rows of X, for O(k d) per-test-point scoring.

    ``labels`` is an int array aligned with X's rows; every class in
    [0, class_count) must be represented.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.shape[0] != labels.shape[0]:
        raise KernelError(f"{X.shape[0]} rows but {labels.shape[0]} labels")
    cents = np.zeros((class_count, X.shape[1]))
    for c in range(class_count):
        mask = labels == c
        if not mask.any():
            raise MissingClassError(f"class {c} has no training examples")
        cents[c] = X[mask].mean(axis=0)
    return cents
