"""Distance-generic density clustering engines.

Both engines consume a ``DistanceOracle`` — anything that can answer
"distance between i and j" and "everything within eps of i" — so the same
code clusters raw points under the Euclidean metric and Gaussian embeddings
under the divergence-based distance.  The oracle's distance need not satisfy
the triangle inequality.

Determinism contract: seeds are taken in ascending id order, the OPTICS queue
pops the smallest (d_min, id) pair, and neighbor lists arrive id-ascending
from the oracles, so identical inputs give identical outputs bit for bit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .core import NOISE, canonicalize_labels


class DistanceOracle(Protocol):
    """Symmetric nonnegative pairwise distances over ids 0..n-1."""

    def distance(self, i: int, j: int) -> float:
        """d(i, j); symmetric, zero on the diagonal."""
        ...

    def neighbors(self, i: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
        """All ids j (ascending, including i) with d(i, j) <= eps, plus distances."""
        ...


@dataclass(frozen=True)
class OpticsResult:
    """Output of one OPTICS sweep.

    ``order`` is the visit order (a permutation of ids).  ``reachability`` and
    ``core_distance`` are indexed by point id; use ``order`` to view them in
    visit order.  The first point of every connected component has infinite
    reachability — its value is whatever d_min held at dequeue time.
    """

    order: np.ndarray
    reachability: np.ndarray
    core_distance: np.ndarray

    def __post_init__(self) -> None:
        n = self.order.shape[0]
        if self.reachability.shape[0] != n or self.core_distance.shape[0] != n:
            raise ValueError("order, reachability, core_distance must have equal length")


def dbscan(oracle: DistanceOracle, n: int, eps: float, min_pts: int) -> np.ndarray:
    """Classic DBSCAN over an abstract distance.

    A point is core when its closed eps-ball holds strictly more than min_pts
    points (itself included).  Clusters grow breadth-first from core seeds in
    ascending id order, so border points join the cluster that reaches them
    first under that canonical sweep.  Per the reference procedure, clusters
    that end up smaller than min_pts are relabeled noise — this can demote a
    late core seed whose neighborhood was already claimed as borders of
    earlier clusters.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not eps >= 0.0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")

    neighborhoods: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    core = np.zeros(n, dtype=bool)
    for i in range(n):
        ids, _ = oracle.neighbors(i, eps)
        neighborhoods[i] = ids
        core[i] = ids.shape[0] > min_pts

    labels = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if not core[seed] or labels[seed] != NOISE:
            continue
        labels[seed] = cluster
        queue = deque([seed])
        while queue:
            p = queue.popleft()
            if not core[p]:
                continue  # border point: belongs to the cluster, never expands
            for q in neighborhoods[p]:
                if labels[q] == NOISE:
                    labels[q] = cluster
                    queue.append(q)
        cluster += 1

    if cluster:
        sizes = np.bincount(labels[labels >= 0], minlength=cluster)
        too_small = np.flatnonzero(sizes < min_pts)
        if too_small.size:
            labels[np.isin(labels, too_small)] = NOISE
            labels = canonicalize_labels(labels)
    return labels


def optics(oracle: DistanceOracle, n: int, eps: float, min_pts: int) -> OpticsResult:
    """OPTICS sweep producing the reachability ordering.

    The seed queue is conceptually a priority queue keyed by (d_min, id) with
    decrease-key updates; realized as an argmin over the unprocessed d_min
    entries, which dequeues in exactly that order.  A point's core distance is
    the distance to its min_pts-th nearest other point, or +inf when fewer
    than min_pts others lie within eps — equivalently, the smallest radius at
    which the point would pass the strict DBSCAN core test.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if not eps > 0.0:
        raise ValueError(f"eps must be positive (or +inf), got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")

    reachability = np.full(n, np.inf)
    core_distance = np.full(n, np.inf)
    d_min = np.full(n, np.inf)
    processed = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)

    for step in range(n):
        unprocessed = np.flatnonzero(~processed)
        point = unprocessed[np.argmin(d_min[unprocessed])]  # first min = lowest id
        processed[point] = True
        order[step] = point
        reachability[point] = d_min[point]

        ids, dists = oracle.neighbors(point, eps)
        others = dists[ids != point]
        if others.shape[0] >= min_pts:
            core_distance[point] = np.partition(others, min_pts - 1)[min_pts - 1]
            reach = np.maximum(dists, core_distance[point])
            fresh = ~processed[ids]
            targets = ids[fresh]
            d_min[targets] = np.minimum(d_min[targets], reach[fresh])

    return OpticsResult(order=order, reachability=reachability, core_distance=core_distance)


def extract_dbscan(result: OpticsResult, eps_prime: float, min_pts: int) -> np.ndarray:
    """Flat clustering at threshold eps_prime from an OPTICS result.

    Scanning the visit order: a reachability jump above eps_prime starts a new
    cluster if the point's core distance is within eps_prime, and marks noise
    otherwise.  This reproduces DBSCAN's partition of core points at
    eps_prime, provided eps_prime does not exceed the eps the sweep was built
    with.  ``min_pts`` is accepted for signature parity with the direct scan;
    the core distances already encode it.  One caveat: the direct scan's
    final step relabels clusters smaller than min_pts as noise, which has no
    counterpart in this threshold sweep, so the two can disagree on the cores
    of such undersized clusters.
    """
    del min_pts
    if not eps_prime >= 0.0:
        raise ValueError(f"eps_prime must be >= 0, got {eps_prime}")
    order = result.order
    n = order.shape[0]
    r_ord = result.reachability[order]
    c_ord = result.core_distance[order]
    far = r_ord > eps_prime
    startable = c_ord <= eps_prime
    labels_ord = np.cumsum(far & startable) - 1  # prefix before any start => -1
    labels_ord[far & ~startable] = NOISE
    labels = np.empty(n, dtype=np.int64)
    labels[order] = labels_ord
    return labels


# ---------------------------------------------------------------------------
# xi-steep cluster extraction
# ---------------------------------------------------------------------------
# Steep-area extraction over the reachability plot: find maximal xi-steep
# down/up areas, pair them into candidate clusters, and keep the leaves of the
# resulting hierarchy as the flat labeling.  No predecessor correction.

def _steep_up(r: np.ndarray, p: int, ratio: float) -> bool:
    if np.isinf(r[p]) and np.isinf(r[p + 1]):
        return False
    return r[p] <= r[p + 1] * ratio


def _steep_down(r: np.ndarray, p: int, ratio: float) -> bool:
    if np.isinf(r[p]) and np.isinf(r[p + 1]):
        return False
    return r[p] * ratio >= r[p + 1]


@dataclass
class _SteepArea:
    start: int
    end: int
    maximum: float  # plot value at the start (down) / end (up) of the area
    mib: float      # maximum-in-between seen since the area ended


def _extend_down(r: np.ndarray, start: int, ratio: float, min_pts: int, n: int) -> tuple[int, int]:
    """Grow a steep-down area; returns (resume_index, last_steep_index)."""
    non_steep = 0
    index = start
    end = start
    while index < n:
        if _steep_down(r, index, ratio):
            non_steep = 0
            end = index
        elif r[index] >= r[index + 1]:
            # still descending, just not steeply; tolerate min_pts in a row
            non_steep += 1
            if non_steep > min_pts:
                break
        else:
            return index, end
        index += 1
    return min(index + 1, n), end


def _extend_up(r: np.ndarray, start: int, ratio: float, min_pts: int, n: int) -> tuple[int, int]:
    """Grow a steep-up area; returns (resume_index, last_steep_index)."""
    non_steep = 0
    index = start
    end = start
    while index < n:
        if _steep_up(r, index, ratio):
            non_steep = 0
            end = index
        elif r[index] <= r[index + 1]:
            non_steep += 1
            if non_steep > min_pts:
                break
        else:
            return index, end
        index += 1
    return min(index + 1, n), end


def _filter_sdas(sdas: list[_SteepArea], mib: float, ratio: float) -> list[_SteepArea]:
    """Drop steep-down areas invalidated by the new maximum-in-between."""
    kept = [sda for sda in sdas if mib <= sda.maximum * ratio]
    for sda in kept:
        sda.mib = max(sda.mib, mib)
    return kept


def _xi_cluster_ranges(
    plot: np.ndarray, xi: float, min_pts: int
) -> list[tuple[int, int]]:
    """Candidate clusters as inclusive (start, end) positions, smaller first
    within each up-area batch (so nested clusters precede their parents)."""
    n = plot.shape[0]
    r = np.concatenate([plot, [np.inf]])  # sentinel closes the final valley
    ratio = 1.0 - xi
    sdas: list[_SteepArea] = []
    clusters: list[tuple[int, int]] = []
    index = 0
    mib = 0.0
    # runs through index n-1 so the sentinel can close a valley that extends
    # to the end of the plot (the last cluster in visit order)
    while index < n:
        mib = max(mib, r[index])

        if _steep_down(r, index, ratio):
            sdas = _filter_sdas(sdas, mib, ratio)
            d_start = index
            index, end = _extend_down(r, d_start, ratio, min_pts, n)
            sdas.append(_SteepArea(start=d_start, end=end, maximum=r[d_start], mib=0.0))
            mib = r[index]

        elif _steep_up(r, index, ratio):
            sdas = _filter_sdas(sdas, mib, ratio)
            u_start = index
            index, end = _extend_up(r, u_start, ratio, min_pts, n)
            u_area = _SteepArea(start=u_start, end=end, maximum=r[end], mib=-1.0)
            mib = r[index]

            batch: list[tuple[int, int]] = []
            for d_area in sdas:
                c_start = d_area.start
                c_end = min(u_area.end, n - 1)

                # the down area's interior maximum must stay compatible with
                # the reachability right after the candidate cluster
                if r[c_end + 1] * ratio < d_area.mib:
                    continue
                # ... and with the current maximum-in-between
                if d_area.mib > mib * ratio:
                    continue

                # trim the shallower side toward comparable reachability
                if d_area.maximum * ratio >= r[c_end + 1]:
                    while r[c_start + 1] > r[c_end + 1] and c_start < c_end:
                        c_start += 1
                elif r[c_end] * ratio >= d_area.maximum:
                    while r[c_end] > d_area.maximum and c_end > c_start:
                        c_end -= 1

                if c_end - c_start + 1 < min_pts:
                    continue
                if c_start > d_area.end:
                    continue
                if c_end < u_area.start:
                    continue
                batch.append((c_start, c_end))

            batch.reverse()  # most recent down-area = innermost: smaller first
            clusters.extend(batch)

        else:
            index += 1

    return clusters


def extract_xi(result: OpticsResult, xi: float, min_pts: int) -> np.ndarray:
    """Flat labeling from xi-steep areas of the reachability plot.

    The candidate clusters form a hierarchy; only leaves (candidates whose
    span is untouched when they are placed, smallest first) become labels.
    Every candidate smaller than min_pts is discarded; unassigned points are
    noise.
    """
    if not 0.0 < xi < 1.0:
        raise ValueError(f"xi must lie in (0, 1), got {xi}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    order = result.order
    n = order.shape[0]
    ranges = _xi_cluster_ranges(result.reachability[order], xi, min_pts)

    labels_ord = np.full(n, NOISE, dtype=np.int64)
    label = 0
    for start, end in ranges:
        if np.all(labels_ord[start:end + 1] == NOISE):
            labels_ord[start:end + 1] = label
            label += 1
    labels = np.empty(n, dtype=np.int64)
    labels[order] = labels_ord
    return labels
