"""Local Gaussian embeddings of 2-D points.

Each point is mapped to the Gaussian that best fits its ecc_pts nearest
neighbors: the neighborhood's sample mean and covariance, regularized and then
rescaled so the covariance's largest eigenvalue is exactly 1.  Clustering then
happens between these Gaussians rather than between raw points, which is what
lets nearly-linear structures separate from their surroundings.
"""

from __future__ import annotations

import numpy as np

from . import neighbors
from .core import (
    EmbeddingSet,
    GaussianEmbedding,
    NeighborhoodTooSmallError,
    PointCloud,
    eig_sym2,
)

# Relative weight of the default covariance regularization.  Exactly collinear
# neighborhoods (synthetic lines) have a zero eigenvalue; the pipeline needs
# inverse square roots, so a small diagonal bump is always applied by default.
_DEFAULT_REG_SCALE = 1e-6


def _local_moments(points: np.ndarray, neighbor_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and packed population covariance of each neighbor row."""
    nb = points[neighbor_ids]                      # (n, k, 2)
    mu = nb.mean(axis=1)                           # (n, 2)
    d = nb - mu[:, None, :]
    a = np.mean(d[..., 0] * d[..., 0], axis=1)
    b = np.mean(d[..., 0] * d[..., 1], axis=1)
    c = np.mean(d[..., 1] * d[..., 1], axis=1)
    return mu, np.stack([a, b, c], axis=-1)


def _normalize_sigma(sigma_raw: np.ndarray, lambda_reg: float | None) -> np.ndarray:
    """Regularize then rescale packed covariances to unit spectral norm.

    ``lambda_reg=None`` applies the default relative rule per matrix;
    an explicit value (0 allowed, for the scale-invariance diagnostics) is
    used as an absolute diagonal addition.  A covariance that is still
    exactly zero afterwards (a neighborhood of identical points with
    ``lambda_reg=0``) normalizes to the identity by convention.
    """
    sigma_raw = np.atleast_2d(np.asarray(sigma_raw, dtype=np.float64))
    lam_max_raw = eig_sym2(sigma_raw)[0][..., 0]
    if lambda_reg is None:
        reg = _DEFAULT_REG_SCALE * (lam_max_raw + np.finfo(np.float64).eps)
    else:
        if lambda_reg < 0.0:
            raise ValueError(f"lambda_reg must be >= 0, got {lambda_reg}")
        reg = np.full_like(lam_max_raw, float(lambda_reg))

    sigma = sigma_raw.copy()
    sigma[..., 0] += reg
    sigma[..., 2] += reg
    lam_max = lam_max_raw + reg  # adding reg*I shifts both eigenvalues by reg
    zero = lam_max <= 0.0
    scale = np.where(zero, 1.0, lam_max)
    sigma /= scale[..., None]
    if np.any(zero):
        sigma[zero] = np.array([1.0, 0.0, 1.0])
    return sigma


def _check_size(n: int, ecc_pts: int, include_self: bool) -> None:
    if ecc_pts < 3:
        raise ValueError(f"ecc_pts must be >= 3, got {ecc_pts}")
    required = ecc_pts if include_self else ecc_pts + 1
    if n < required:
        raise NeighborhoodTooSmallError(
            f"cloud has {n} points but ecc_pts={ecc_pts} "
            f"(include_self={include_self}) needs at least {required}"
        )


def embed_point(
    cloud: PointCloud,
    index: neighbors.NeighborIndex,
    point_id: int,
    ecc_pts: int,
    lambda_reg: float | None = None,
    include_self: bool = True,
) -> GaussianEmbedding:
    """Fit the local Gaussian of one point's ecc_pts-neighborhood."""
    _check_size(len(cloud), ecc_pts, include_self)
    ids = neighbors.knn(index, point_id, ecc_pts, include_self=include_self)
    mu, sigma_raw = _local_moments(cloud.points, ids[None, :])
    sigma = _normalize_sigma(sigma_raw, lambda_reg)
    return GaussianEmbedding.from_moments(mu[0], sigma[0])


def embed_all(
    cloud: PointCloud,
    index: neighbors.NeighborIndex,
    ecc_pts: int,
    lambda_reg: float | None = None,
    include_self: bool = True,
) -> EmbeddingSet:
    """Fit all n local Gaussians; row i corresponds to point id i."""
    _check_size(len(cloud), ecc_pts, include_self)
    nbr = neighbors.knn_all(index, ecc_pts, include_self=include_self)
    mu, sigma_raw = _local_moments(cloud.points, nbr)
    sigma = _normalize_sigma(sigma_raw, lambda_reg)
    return EmbeddingSet.from_moments(mu, sigma)
