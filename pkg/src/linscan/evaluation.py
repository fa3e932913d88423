"""Scoring, synthetic benchmarks, and the hyperparameter search harness.

Scoring follows the pair-counting definitions: the Rand index is the fraction
of point pairs on which two labelings agree, and its adjusted form subtracts
the chance level attained by random partitions with the same cluster sizes
(closed form via the contingency table).  Noise points are turned into unique
singleton clusters before scoring, identically for every algorithm, so
over-reporting noise costs accuracy instead of being ignored.

The generator reproduces the benchmark family used throughout the package:
quasi-linear clusters, isotropic blobs, and crossing line pairs that share a
midpoint, laid out on a margin-spaced grid.  The search harness runs uniform
random parameter sampling for a fixed trial budget and scores candidates by
mean adjusted Rand index over validation sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import density
from .core import NOISE, LinscanParams, PointCloud, canonicalize_labels
from .oracles import EuclideanOracle
from .pipeline import linscan, spectral_filter

# ---------------------------------------------------------------------------
# Rand / adjusted Rand
# ---------------------------------------------------------------------------


def _as_partition(labels: np.ndarray) -> np.ndarray:
    """Replace each noise point with its own fresh singleton cluster id."""
    labels = np.asarray(labels, dtype=np.int64)
    out = labels.copy()
    noise = np.flatnonzero(labels == NOISE)
    if noise.size:
        start = labels.max() + 1 if labels.size else 0
        out[noise] = start + np.arange(noise.size)
    return out


def _comb2(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.float64)
    return x * (x - 1.0) / 2.0


def _pair_counts(a: np.ndarray, b: np.ndarray) -> tuple[float, float, float, float]:
    """(Σij C(nij,2), Σi C(ai,2), Σj C(bj,2), C(n,2)) of two partitions."""
    n = a.shape[0]
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    nb = int(ib.max()) + 1
    joint = np.bincount(ia.astype(np.int64) * nb + ib)
    sum_joint = float(_comb2(joint).sum())
    sum_a = float(_comb2(np.bincount(ia)).sum())
    sum_b = float(_comb2(np.bincount(ib)).sum())
    total = n * (n - 1) / 2.0
    return sum_joint, sum_a, sum_b, total


def _check_pair(label_a, label_b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(label_a, dtype=np.int64)
    b = np.asarray(label_b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"labelings must be equal-length 1-D, got {a.shape} vs {b.shape}")
    if a.shape[0] < 2:
        raise ValueError("need at least 2 points to count pairs")
    return _as_partition(a), _as_partition(b)


def rand_index(label_a, label_b) -> float:
    """Fraction of point pairs the two labelings treat the same way."""
    a, b = _check_pair(label_a, label_b)
    sum_joint, sum_a, sum_b, total = _pair_counts(a, b)
    together_both = sum_joint
    apart_both = total - sum_a - sum_b + sum_joint
    return (together_both + apart_both) / total


def adjusted_rand_index(label_a, label_b) -> float:
    """Chance-adjusted Rand index; 1 at identity, ~0 for independent labelings."""
    a, b = _check_pair(label_a, label_b)
    sum_joint, sum_a, sum_b, total = _pair_counts(a, b)
    degenerate = (sum_a == 0.0 and sum_b == 0.0) or (sum_a == total and sum_b == total)
    if degenerate:
        # both all-singletons or both one-cluster: chance level is undefined
        identical = np.array_equal(canonicalize_labels(a), canonicalize_labels(b))
        return 1.0 if identical else 0.0
    expected = sum_a * sum_b / total
    return (sum_joint - expected) / (0.5 * (sum_a + sum_b) - expected)


# ---------------------------------------------------------------------------
# Synthetic benchmark generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic benchmark dataset.

    Defaults give the standard mix: 10 quasi-linear clusters, 5 isotropic
    blobs, and 10 crossing pairs of lines sharing a midpoint (35 ground-truth
    clusters).  Cluster sites sit on a grid with `placement_margin` spacing,
    shuffled by the seed; a crossing pair occupies a single site.
    ``noise_fraction`` optionally sprinkles uniform background points
    (ground-truth label −1) over the padded data bounding box.
    """

    n_linear: int = 10
    n_isotropic: int = 5
    n_crossing_pairs: int = 10
    crossing_angle_range: tuple[float, float] = (0.1 * math.pi, 0.9 * math.pi)
    points_per_cluster: int = 100
    line_length: float = 1.0
    orthogonal_noise_sd: float = 0.02
    isotropic_sd: float = 0.1
    placement_margin: float = 3.0
    noise_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.n_linear, self.n_isotropic, self.n_crossing_pairs) < 0:
            raise ValueError("cluster counts must be >= 0")
        if self.n_linear + self.n_isotropic + self.n_crossing_pairs < 1:
            raise ValueError("need at least one cluster")
        if self.points_per_cluster < 1:
            raise ValueError("points_per_cluster must be >= 1")
        lo, hi = self.crossing_angle_range
        if not 0.0 < lo <= hi < math.pi:
            raise ValueError(f"crossing angles must satisfy 0 < lo <= hi < pi, got {lo}, {hi}")
        if not self.line_length > 0.0:
            raise ValueError("line_length must be positive")
        if self.orthogonal_noise_sd < 0.0 or self.isotropic_sd < 0.0:
            raise ValueError("noise standard deviations must be >= 0")
        if not self.placement_margin > 0.0:
            raise ValueError("placement_margin must be positive")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")


def _line_points(rng, center, angle, count, length, noise_sd) -> np.ndarray:
    t = rng.uniform(-length / 2.0, length / 2.0, count)
    w = rng.normal(0.0, noise_sd, count)
    u = np.array([math.cos(angle), math.sin(angle)])
    u_perp = np.array([-u[1], u[0]])
    return center + t[:, None] * u + w[:, None] * u_perp


def generate(spec: SyntheticSpec, with_details: bool = False):
    """Sample one dataset; returns (PointCloud, ground-truth labels).

    Deterministic for a fixed spec (including the seed).  With
    ``with_details=True`` a third element lists per-cluster construction
    facts (kind, site, drawn angles) for diagnostics.
    """
    rng = np.random.default_rng(spec.seed)
    n_entities = spec.n_linear + spec.n_isotropic + spec.n_crossing_pairs
    side = math.ceil(math.sqrt(n_entities))
    grid = np.array(
        [(i * spec.placement_margin, j * spec.placement_margin)
         for i in range(side) for j in range(side)][:n_entities]
    )
    site_of_entity = grid[rng.permutation(n_entities)]

    chunks: list[np.ndarray] = []
    labels: list[np.ndarray] = []
    details: list[dict] = []
    m = spec.points_per_cluster
    label = 0
    entity = 0

    for _ in range(spec.n_linear):
        center = site_of_entity[entity]
        angle = rng.uniform(0.0, math.pi)
        chunks.append(_line_points(rng, center, angle, m, spec.line_length, spec.orthogonal_noise_sd))
        labels.append(np.full(m, label, dtype=np.int64))
        details.append({"label": label, "kind": "linear", "site": tuple(center), "angle": angle})
        label += 1
        entity += 1

    for _ in range(spec.n_isotropic):
        center = site_of_entity[entity]
        chunks.append(center + rng.normal(0.0, spec.isotropic_sd, (m, 2)))
        labels.append(np.full(m, label, dtype=np.int64))
        details.append({"label": label, "kind": "isotropic", "site": tuple(center)})
        label += 1
        entity += 1

    for pair in range(spec.n_crossing_pairs):
        center = site_of_entity[entity]
        base = rng.uniform(0.0, math.pi)
        delta = rng.uniform(*spec.crossing_angle_range)
        for angle in (base, base + delta):
            chunks.append(_line_points(rng, center, angle, m, spec.line_length, spec.orthogonal_noise_sd))
            labels.append(np.full(m, label, dtype=np.int64))
            details.append({
                "label": label, "kind": "crossing", "site": tuple(center),
                "angle": angle % math.pi, "pair": pair, "pair_delta": delta,
            })
            label += 1
        entity += 1

    points = np.concatenate(chunks, axis=0)
    truth = np.concatenate(labels)

    if spec.noise_fraction > 0.0:
        n_noise = int(round(spec.noise_fraction * points.shape[0]))
        if n_noise:
            pad = spec.placement_margin / 2.0
            lo = points.min(axis=0) - pad
            hi = points.max(axis=0) + pad
            background = rng.uniform(lo, hi, (n_noise, 2))
            points = np.concatenate([points, background], axis=0)
            truth = np.concatenate([truth, np.full(n_noise, NOISE, dtype=np.int64)])

    cloud = PointCloud(points)
    if with_details:
        return cloud, truth, details
    return cloud, truth


# ---------------------------------------------------------------------------
# Random search and benchmark harness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParamRange:
    low: float
    high: float
    integer: bool = False

    def __post_init__(self) -> None:
        if not self.low <= self.high:
            raise ValueError(f"empty range [{self.low}, {self.high}]")

    def sample(self, rng: np.random.Generator):
        if self.integer:
            return int(rng.integers(int(self.low), int(self.high) + 1))
        return float(rng.uniform(self.low, self.high))


@dataclass(frozen=True)
class SearchSpace:
    params: dict[str, ParamRange] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.params:
            raise ValueError("search space needs at least one parameter")

    def sample(self, rng: np.random.Generator) -> dict:
        return {name: self.params[name].sample(rng) for name in sorted(self.params)}


def linscan_search_space() -> SearchSpace:
    """The tuned-parameter box for the embedding pipeline."""
    return SearchSpace({
        "min_pts": ParamRange(5, 50, integer=True),
        "ecc_pts": ParamRange(10, 100, integer=True),
        "xi": ParamRange(0.01, 0.5),
        "tau": ParamRange(0.05, 0.95),
    })


def optics_search_space(diameter: float) -> SearchSpace:
    """The tuned-parameter box for the Euclidean baseline."""
    if not diameter > 0.0:
        raise ValueError(f"diameter must be positive, got {diameter}")
    return SearchSpace({
        "min_pts": ParamRange(5, 50, integer=True),
        "eps": ParamRange(0.05 * diameter, diameter),
        "tau": ParamRange(0.05, 0.95),
    })


def data_diameter(datasets: Sequence) -> float:
    """Largest pairwise Euclidean distance across the given datasets.

    Accepts (cloud, truth) pairs or bare clouds; exact, computed blockwise.
    """
    best = 0.0
    for item in datasets:
        cloud = item[0] if isinstance(item, tuple) else item
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(item, float)
        n = pts.shape[0]
        for lo in range(0, n, 512):
            hi = min(lo + 512, n)
            diff = pts[lo:hi, None, :] - pts[None, :, :]
            d2 = np.sum(diff * diff, axis=-1)
            best = max(best, float(d2.max()))
    return math.sqrt(best)


def run_linscan(cloud: PointCloud, params: dict) -> np.ndarray:
    """Search-harness runner: full pipeline plus spectral filter."""
    lp = LinscanParams(
        ecc_pts=params["ecc_pts"],
        min_pts=params["min_pts"],
        xi=params["xi"],
        eps=params.get("eps", math.inf),
        tau=params["tau"],
    )
    result = linscan(cloud, lp)
    labels, _ = spectral_filter(cloud, result.labels, params["tau"])
    return labels


def run_optics_baseline(cloud: PointCloud, params: dict) -> np.ndarray:
    """Search-harness runner: Euclidean OPTICS, eps extraction, same filter."""
    n = len(cloud)
    oracle = EuclideanOracle(cloud)
    result = density.optics(oracle, n, eps=params["eps"], min_pts=params["min_pts"])
    labels = density.extract_dbscan(result, params["eps"], params["min_pts"])
    filtered, _ = spectral_filter(cloud, labels, params["tau"])
    return filtered


ALGORITHMS: dict[str, Callable[[PointCloud, dict], np.ndarray]] = {
    "linscan": run_linscan,
    "optics": run_optics_baseline,
}


def _resolve_algorithm(algorithm) -> Callable[[PointCloud, dict], np.ndarray]:
    if callable(algorithm):
        return algorithm
    try:
        return ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(
            f"unknown algorithm {algorithm!r}; expected one of {sorted(ALGORITHMS)} or a callable"
        ) from None


@dataclass(frozen=True)
class SearchResult:
    best_params: dict
    validation_ari: float
    trials: list[dict]


@dataclass(frozen=True)
class BenchmarkResult:
    mean_ari: float
    per_set: list[float]


def random_search(
    space: SearchSpace,
    trials: int,
    validation_sets: Sequence[tuple[PointCloud, np.ndarray]],
    algorithm,
    seed: int = 0,
) -> SearchResult:
    """Uniform random search scored by mean adjusted Rand index.

    Ties go to the earliest trial; the full trial log is returned so callers
    can persist one record per trial.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if not validation_sets:
        raise ValueError("need at least one validation set")
    runner = _resolve_algorithm(algorithm)
    rng = np.random.default_rng(seed)
    records: list[dict] = []
    best_params: dict | None = None
    best_score = -math.inf
    for trial in range(trials):
        params = space.sample(rng)
        per_set = [
            adjusted_rand_index(truth, runner(cloud, params))
            for cloud, truth in validation_sets
        ]
        mean = float(np.mean(per_set))
        records.append({"trial": trial, "params": params, "per_set": per_set, "mean_ari": mean})
        if mean > best_score:
            best_score = mean
            best_params = dict(params)
    return SearchResult(best_params=best_params, validation_ari=best_score, trials=records)


def benchmark(
    params: dict,
    test_sets: Sequence[tuple[PointCloud, np.ndarray]],
    algorithm,
) -> BenchmarkResult:
    """Evaluate one parameter set on held-out datasets."""
    if not test_sets:
        raise ValueError("need at least one test set")
    runner = _resolve_algorithm(algorithm)
    per_set = [
        float(adjusted_rand_index(truth, runner(cloud, params)))
        for cloud, truth in test_sets
    ]
    return BenchmarkResult(mean_ari=float(np.mean(per_set)), per_set=per_set)


def make_validation_sets(count: int, seed: int = 0, **overrides):
    """Datasets for tuning: seeds base, base+1, ..."""
    return [generate(SyntheticSpec(seed=seed + i, **overrides)) for i in range(count)]


def make_test_sets(count: int, seed: int = 0, **overrides):
    """Held-out datasets: a disjoint seed stream (base+10000, ...)."""
    return [generate(SyntheticSpec(seed=seed + 10_000 + i, **overrides)) for i in range(count)]
