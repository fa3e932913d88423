"""Concrete distance oracles for the clustering engines.

``EuclideanOracle`` serves the classic baselines directly over point
coordinates.  ``EmbeddingOracle`` serves the Gaussian-embedding distance; for
finite eps it pre-filters candidates through a neighbor index over embedding
means using the √2·‖Δμ‖ lower bound, which can only discard pairs already
guaranteed to be out of range — results are identical with pruning on or off.

Both oracles cache the full pairwise matrix when the problem is small enough
(the embedding oracle only for infinite eps), purely as a speedup for repeated
sweeps; answers are the same either way.
"""

from __future__ import annotations

import numpy as np

from . import neighbors
from .core import EmbeddingSet, PointCloud
from .divergence import FULL_MATRIX_LIMIT, SQRT2, dist_matrix, dist_rows


class EuclideanOracle:
    """Pairwise Euclidean distances over a point cloud."""

    def __init__(self, cloud: PointCloud, index: neighbors.NeighborIndex | None = None):
        self.points = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, float)
        self.n = self.points.shape[0]
        self._index = index
        self._full: np.ndarray | None = None

    def _ensure_index(self) -> neighbors.NeighborIndex:
        if self._index is None:
            self._index = neighbors.build(self.points)
        return self._index

    def _row(self, i: int) -> np.ndarray:
        diff = self.points - self.points[i]
        return np.sqrt(np.sum(diff * diff, axis=1))

    def _ensure_full(self) -> np.ndarray | None:
        if self._full is None and self.n <= FULL_MATRIX_LIMIT:
            diff = self.points[:, None, :] - self.points[None, :, :]
            full = np.sqrt(np.sum(diff * diff, axis=-1))
            np.fill_diagonal(full, 0.0)
            self._full = full
        return self._full

    def distance(self, i: int, j: int) -> float:
        d = self.points[i] - self.points[j]
        return float(np.sqrt(d[0] * d[0] + d[1] * d[1]))

    def neighbors(self, i: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
        full = self._ensure_full()
        if full is not None:
            row = full[i]
            if np.isinf(eps):
                return np.arange(self.n, dtype=np.int64), row
            ids = np.flatnonzero(row <= eps)
            return ids, row[ids]
        if np.isinf(eps):
            return np.arange(self.n, dtype=np.int64), self._row(i)
        return neighbors.range_query_with_distances(self._ensure_index(), i, eps)


class EmbeddingOracle:
    """Divergence-based distances over a set of Gaussian embeddings."""

    def __init__(self, embeddings: EmbeddingSet, prune: bool = True):
        self.embeddings = embeddings
        self.n = len(embeddings)
        self.prune = prune
        self._mean_index: neighbors.NeighborIndex | None = None
        self._full: np.ndarray | None = None

    def _ensure_mean_index(self) -> neighbors.NeighborIndex:
        if self._mean_index is None:
            self._mean_index = neighbors.build(self.embeddings.mu)
        return self._mean_index

    def _ensure_full(self) -> np.ndarray | None:
        if self._full is None and self.n <= FULL_MATRIX_LIMIT:
            self._full = dist_matrix(self.embeddings)
        return self._full

    def distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        return float(dist_rows(self.embeddings, i, np.array([j]))[0])

    def neighbors(self, i: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
        if np.isinf(eps):
            full = self._ensure_full()
            if full is not None:
                return np.arange(self.n, dtype=np.int64), full[i]
            d = dist_rows(self.embeddings, i, np.arange(self.n, dtype=np.int64))
            d[i] = 0.0
            return np.arange(self.n, dtype=np.int64), d

        if self.prune:
            # Everything with dist <= eps has mean distance <= eps/sqrt(2);
            # the mean-space ball is a superset of the true neighborhood.
            cand = neighbors.range_query(self._ensure_mean_index(), i, eps / SQRT2)
        else:
            cand = np.arange(self.n, dtype=np.int64)
        d = dist_rows(self.embeddings, i, cand)
        d[cand == i] = 0.0
        keep = d <= eps
        return cand[keep], d[keep]
