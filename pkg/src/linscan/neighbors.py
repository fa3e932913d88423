"""Exact Euclidean neighbor search over a uniform grid.

The grid is acceleration only: every query returns exactly the ids a brute
force scan would, including tie order (distance ascending, then id ascending).
That exactness is load-bearing — the clustering engines' determinism
guarantees are anchored to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EmptyCloudError, PointCloud

# Sample size used for the median-spacing estimate that sets the cell size.
_SPACING_SAMPLE = 256
# Never allow more than this many cells along one axis.
_MAX_CELLS_PER_AXIS = 2048


@dataclass
class NeighborIndex:
    """Uniform-grid index over a fixed set of 2-D points."""

    points: np.ndarray
    cell_size: float
    origin: np.ndarray
    _cells: dict[tuple[int, int], np.ndarray] = field(repr=False)
    _cell_lo: np.ndarray = field(repr=False)
    _cell_hi: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]


def _as_points(cloud) -> np.ndarray:
    if isinstance(cloud, PointCloud):
        return cloud.points
    pts = np.ascontiguousarray(np.asarray(cloud, dtype=np.float64))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected (n, 2) coordinates, got shape {pts.shape}")
    return pts


def _estimate_cell_size(pts: np.ndarray) -> float:
    """Pick a cell size near a few typical nearest-neighbor spacings."""
    n = pts.shape[0]
    extent = float(np.max(np.ptp(pts, axis=0))) if n > 1 else 0.0
    if extent == 0.0:
        return 1.0  # all points coincide; a single cell holds everything

    m = min(n, _SPACING_SAMPLE)
    sample_ids = np.unique(np.linspace(0, n - 1, m).astype(np.int64))
    diff = pts[sample_ids, None, :] - pts[None, :, :]
    d = np.sqrt(np.sum(diff * diff, axis=-1))
    d[np.arange(len(sample_ids)), sample_ids] = np.inf
    nearest = np.min(d, axis=1)
    positive = nearest[(nearest > 0.0) & np.isfinite(nearest)]
    if positive.size:
        spacing = float(np.median(positive))
        cell = 4.0 * spacing
    else:
        cell = extent / 64.0  # duplicate-heavy cloud; fall back to extent
    cell = max(cell, extent / _MAX_CELLS_PER_AXIS)
    if not np.isfinite(cell) or cell <= 0.0:
        cell = 1.0
    return cell


def build(cloud) -> NeighborIndex:
    """Index a PointCloud (or a raw (n, 2) array, e.g. embedding means)."""
    pts = _as_points(cloud)
    n = pts.shape[0]
    if n == 0:
        raise EmptyCloudError("cannot index an empty point cloud")

    cell = _estimate_cell_size(pts)
    origin = pts.min(axis=0)
    ij = np.floor((pts - origin) / cell).astype(np.int64)

    # Group ids by cell through a collision-free 1-D code.
    width = int(ij[:, 1].max()) + 1
    code = ij[:, 0] * width + ij[:, 1]
    sid = np.argsort(code, kind="stable")  # within a cell: ids stay ascending
    sorted_code = code[sid]
    boundaries = np.flatnonzero(np.diff(sorted_code)) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [n]])
    cells: dict[tuple[int, int], np.ndarray] = {}
    for s, e in zip(starts, ends):
        ids = sid[s:e]
        key = (int(ij[ids[0], 0]), int(ij[ids[0], 1]))
        cells[key] = ids

    return NeighborIndex(
        points=pts,
        cell_size=cell,
        origin=origin,
        _cells=cells,
        _cell_lo=ij.min(axis=0),
        _cell_hi=ij.max(axis=0),
    )


def _ring_cells(index: NeighborIndex, ci: int, cj: int, ring: int):
    """Occupied cells at Chebyshev distance exactly `ring` from (ci, cj)."""
    lo, hi = index._cell_lo, index._cell_hi
    cells = index._cells
    found = []
    if ring == 0:
        ids = cells.get((ci, cj))
        if ids is not None:
            found.append(ids)
        return found
    for dj in range(-ring, ring + 1):
        for di in (-ring, ring):
            ids = cells.get((ci + di, cj + dj))
            if ids is not None:
                found.append(ids)
    for di in range(-ring + 1, ring):
        for dj in (-ring, ring):
            ids = cells.get((ci + di, cj + dj))
            if ids is not None:
                found.append(ids)
    return found


def _max_ring(index: NeighborIndex, ci: int, cj: int) -> int:
    lo, hi = index._cell_lo, index._cell_hi
    return int(
        max(ci - lo[0], hi[0] - ci, cj - lo[1], hi[1] - cj)
    )


def _cell_of(index: NeighborIndex, point: np.ndarray) -> tuple[int, int]:
    ij = np.floor((point - index.origin) / index.cell_size).astype(np.int64)
    return int(ij[0]), int(ij[1])


def knn(index: NeighborIndex, query_id: int, k: int, include_self: bool = True) -> np.ndarray:
    """Ids of the k nearest points to `query_id`, nearest first.

    The query point itself participates (at distance zero) unless
    ``include_self`` is False.  Ties are broken by ascending id.
    """
    n = index.n
    if not 0 <= query_id < n:
        raise ValueError(f"query_id {query_id} out of range [0, {n})")
    limit = n if include_self else n - 1
    if k < 1 or k > limit:
        raise ValueError(f"k must be in [1, {limit}] (n={n}, include_self={include_self}), got {k}")

    q = index.points[query_id]
    ci, cj = _cell_of(index, q)
    max_ring = _max_ring(index, ci, cj)
    pool_parts = []
    pool_count = 0
    ring = 0
    while True:
        if ring > 0 and 8 * ring > len(index._cells):
            # Walking empty rings would cost more than visiting every occupied
            # cell (sparse data with far outliers); finish the pool in one sweep.
            for (i, j), ids in index._cells.items():
                if max(abs(i - ci), abs(j - cj)) >= ring:
                    pool_parts.append(ids)
                    pool_count += len(ids)
            ring = max_ring
        else:
            for ids in _ring_cells(index, ci, cj, ring):
                pool_parts.append(ids)
                pool_count += len(ids)
        enough = pool_count - (0 if include_self else 1) >= k
        if enough or ring >= max_ring:
            pool = np.sort(np.concatenate(pool_parts))
            if not include_self:
                pool = pool[pool != query_id]
            diff = index.points[pool] - q
            d = np.sqrt(np.sum(diff * diff, axis=1))
            if pool.size >= k:
                kth = np.partition(d, k - 1)[k - 1]
                # Points in unvisited rings are at least ring*cell away; expand
                # further while they could still displace the kth neighbor.
                if kth < ring * index.cell_size or ring >= max_ring:
                    order = np.argsort(d, kind="stable")  # pool ascending => ties by id
                    return pool[order[:k]]
        ring += 1


def knn_all(index: NeighborIndex, k: int, include_self: bool = True) -> np.ndarray:
    """k nearest neighbors for every point, as an (n, k) id array.

    Row i equals ``knn(index, i, k, include_self)``; the batched path exists
    because fitting an embedding per point needs every row anyway.
    """
    n = index.n
    limit = n if include_self else n - 1
    if k < 1 or k > limit:
        raise ValueError(f"k must be in [1, {limit}] (n={n}, include_self={include_self}), got {k}")

    out = np.empty((n, k), dtype=np.int64)
    for (ci, cj), members in sorted(index._cells.items()):
        max_ring = _max_ring(index, ci, cj)
        ring = 0
        pool_parts = []
        pool_count = 0
        while True:
            if ring > 0 and 8 * ring > len(index._cells):
                # same sparse-grid escape as in knn
                for (i, j), ids in index._cells.items():
                    if max(abs(i - ci), abs(j - cj)) >= ring:
                        pool_parts.append(ids)
                        pool_count += len(ids)
                ring = max_ring
            else:
                for ids in _ring_cells(index, ci, cj, ring):
                    pool_parts.append(ids)
                    pool_count += len(ids)
            enough = pool_count - (0 if include_self else 1) >= k
            if enough or ring >= max_ring:
                pool = np.sort(np.concatenate(pool_parts))
                diff = index.points[members, None, :] - index.points[pool][None, :, :]
                d = np.sqrt(np.sum(diff * diff, axis=-1))
                if not include_self:
                    d[members[:, None] == pool[None, :]] = np.inf
                avail = pool.size - (0 if include_self else 1)
                if avail >= k:
                    kth = np.partition(d, k - 1, axis=1)[:, k - 1]
                    worst = float(np.max(kth))
                    if worst < ring * index.cell_size or ring >= max_ring:
                        order = np.argsort(d, axis=1, kind="stable")
                        out[members] = pool[order[:, :k]]
                        break
            ring += 1
    return out


def range_query(index: NeighborIndex, center_id: int, radius: float) -> np.ndarray:
    """Ids within the closed ball of `radius` around `center_id`, ascending."""
    ids, _ = range_query_with_distances(index, center_id, radius)
    return ids


def range_query_with_distances(
    index: NeighborIndex, center_id: int, radius: float
) -> tuple[np.ndarray, np.ndarray]:
    """Like range_query but also returns the matching distances.

    Callers that need both (the clustering oracles) avoid a second pass.
    """
    n = index.n
    if not 0 <= center_id < n:
        raise ValueError(f"center_id {center_id} out of range [0, {n})")
    if not radius >= 0.0:
        raise ValueError(f"radius must be >= 0, got {radius}")

    c = index.points[center_id]
    ci, cj = _cell_of(index, c)
    reach = int(radius / index.cell_size) + 1
    lo, hi = index._cell_lo, index._cell_hi
    i0, i1 = max(ci - reach, lo[0]), min(ci + reach, hi[0])
    j0, j1 = max(cj - reach, lo[1]), min(cj + reach, hi[1])
    parts = []
    if (i1 - i0 + 1) * (j1 - j0 + 1) > len(index._cells):
        # huge radius: visiting every box cell would dwarf the point count,
        # so walk the occupied cells instead
        for (i, j), ids in index._cells.items():
            if i0 <= i <= i1 and j0 <= j <= j1:
                parts.append(ids)
    else:
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                ids = index._cells.get((i, j))
                if ids is not None:
                    parts.append(ids)
    if not parts:
        return np.empty(0, dtype=np.int64), np.empty(0)
    cand = np.sort(np.concatenate(parts))
    diff = index.points[cand] - c
    d = np.sqrt(np.sum(diff * diff, axis=1))
    keep = d <= radius
    return cand[keep], d[keep]
