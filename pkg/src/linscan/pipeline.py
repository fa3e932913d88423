"""The embedding-space clustering pipeline and the post-hoc spectral filter.

``linscan`` chains the full run: neighbor index → per-point Gaussian
embeddings → OPTICS over the embedding distance → xi extraction.  Point i
inherits the label of embedding i (the embedding map is per-point, so the
pull-back is the identity on ids).

``spectral_filter`` then keeps only clusters elongated enough to be
line-like: a cluster whose covariance eigenvalue ratio λ₂/λ₁ exceeds tau is
demoted to noise.  Summaries (size, centroid, eigenvalues, ratio,
orientation) are reported for every input cluster, kept or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import density, embedding, neighbors
from .core import (
    NOISE,
    EmbeddingSet,
    LinscanParams,
    PointCloud,
    UndefinedOrientationError,
    eig_sym2,
)
from .oracles import EmbeddingOracle


class LinscanResult(NamedTuple):
    labels: np.ndarray
    optics_result: density.OpticsResult
    embeddings: EmbeddingSet


@dataclass(frozen=True)
class ClusterSummary:
    """Shape report for one input cluster of a labeling.

    ``cluster_id`` refers to the labeling passed to ``spectral_filter``.
    ``orientation_deg`` is the principal-axis angle folded to [0, 180), NaN
    when the cluster is isotropic (λ₁ = λ₂) or degenerate.  ``kept`` records
    the filter decision; clusters below 3 members are always discarded since
    their spectral ratio is undefined (``spectral_ratio`` is NaN there).
    """

    cluster_id: int
    size: int
    centroid: tuple[float, float]
    eigenvalues: tuple[float, float]
    spectral_ratio: float
    orientation_deg: float
    isotropic: bool
    kept: bool


def linscan(
    cloud: PointCloud,
    params: LinscanParams,
    prune: bool = True,
    lambda_reg: float | None = None,
    include_self: bool = True,
) -> LinscanResult:
    """Cluster a point cloud through its local-Gaussian embeddings.

    Returns the xi-extracted labeling (pre-filter; apply ``spectral_filter``
    for the line-only view), the OPTICS result over the embeddings (for
    reachability plots), and the embeddings themselves.
    """
    n = len(cloud)
    required = max(params.ecc_pts, params.min_pts)
    if n < required:
        raise ValueError(
            f"cloud has {n} points; at least max(ecc_pts, min_pts) = {required} required"
        )
    index = neighbors.build(cloud)
    embeddings = embedding.embed_all(
        cloud, index, params.ecc_pts, lambda_reg=lambda_reg, include_self=include_self
    )
    oracle = EmbeddingOracle(embeddings, prune=prune)
    optics_result = density.optics(oracle, n, params.eps, params.min_pts)
    labels = density.extract_xi(optics_result, params.xi, params.min_pts)
    return LinscanResult(labels=labels, optics_result=optics_result, embeddings=embeddings)


def _cluster_shape(points: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Centroid, eigenvalues (descending), and leading eigenvector."""
    mu = points.mean(axis=0)
    d = points - mu
    m = points.shape[0]
    a = float(np.dot(d[:, 0], d[:, 0])) / m
    b = float(np.dot(d[:, 0], d[:, 1])) / m
    c = float(np.dot(d[:, 1], d[:, 1])) / m
    w, v = eig_sym2(np.array([a, b, c]))
    return mu, w, v[:, 0]


def _fold_angle_deg(vec: np.ndarray) -> float:
    return math.degrees(math.atan2(vec[1], vec[0])) % 180.0


def cluster_orientation(points: np.ndarray) -> float:
    """Principal-axis angle of a point set, in degrees within [0, 180)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (m, 2) points, got shape {pts.shape}")
    if pts.shape[0] < 2 or np.all(pts == pts[0]):
        raise UndefinedOrientationError(
            "orientation needs at least 2 distinct points"
        )
    _, _, leading = _cluster_shape(pts)
    return _fold_angle_deg(leading)


def spectral_filter(
    cloud: PointCloud, labeling: np.ndarray, tau: float
) -> tuple[np.ndarray, list[ClusterSummary]]:
    """Demote non-elongated clusters to noise.

    Keeps clusters with spectral ratio ≤ tau and at least 3 members; the
    survivors are renumbered 0..K-1 in ascending input-cluster order (so the
    k-th kept summary row corresponds to output label k).  Never merges,
    splits, or revives noise.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    labels = np.asarray(labeling, dtype=np.int64)
    if labels.shape[0] != len(cloud):
        raise ValueError("labeling length must match the cloud")

    summaries: list[ClusterSummary] = []
    out = np.full(labels.shape, NOISE, dtype=np.int64)
    next_id = 0
    for cid in np.unique(labels[labels != NOISE]):
        members = np.flatnonzero(labels == cid)
        pts = cloud.points[members]
        mu, w, leading = _cluster_shape(pts)
        lam1, lam2 = float(w[0]), float(w[1])
        isotropic = not lam1 > lam2
        orientation = math.nan if isotropic else _fold_angle_deg(leading)
        if members.size < 3 or lam1 <= 0.0:
            ratio = math.nan
            kept = False
        else:
            ratio = lam2 / lam1
            kept = ratio <= tau
        if kept:
            out[members] = next_id
            next_id += 1
        summaries.append(
            ClusterSummary(
                cluster_id=int(cid),
                size=int(members.size),
                centroid=(float(mu[0]), float(mu[1])),
                eigenvalues=(lam1, lam2),
                spectral_ratio=ratio,
                orientation_deg=orientation,
                isotropic=isotropic,
                kept=kept,
            )
        )
    return out, summaries
