"""Tests for the distance-generic DBSCAN/OPTICS engines and extraction."""

import numpy as np
import pytest

from linscan.core import NOISE, PointCloud, canonicalize_labels
from linscan.density import OpticsResult, dbscan, extract_dbscan, extract_xi, optics
from linscan.oracles import EuclideanOracle


class MatrixOracle:
    """Distance oracle straight off a precomputed matrix (test double)."""

    def __init__(self, m):
        self.m = np.asarray(m, dtype=np.float64)

    def distance(self, i, j):
        return float(self.m[i, j])

    def neighbors(self, i, eps):
        row = self.m[i]
        ids = np.flatnonzero(row <= eps)
        return ids, row[ids]


def euclid(points):
    pts = np.asarray(points, dtype=np.float64)
    return EuclideanOracle(PointCloud(pts)), len(pts)


def pairwise(points):
    pts = np.asarray(points, dtype=np.float64)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def core_mask(m, eps, min_pts):
    return (m <= eps).sum(axis=1) > min_pts


def brute_core_partition(m, eps, min_pts):
    """Connected components of the core-core graph: the reference clustering
    of core points, computed by a plain closure with no engine machinery."""
    core = core_mask(m, eps, min_pts)
    ids = np.flatnonzero(core)
    comp = {int(i): int(i) for i in ids}

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for a in ids:
        for b in ids:
            if a < b and m[a, b] <= eps:
                comp[find(int(a))] = find(int(b))
    return {int(i): find(int(i)) for i in ids}, core


def same_partition(labels_a, labels_b, mask):
    la = canonicalize_labels(np.asarray(labels_a)[mask])
    lb = canonicalize_labels(np.asarray(labels_b)[mask])
    return np.array_equal(la, lb)


def grid_blob(origin, rows=4, cols=5, spacing=0.3):
    xs, ys = np.meshgrid(np.arange(cols) * spacing, np.arange(rows) * spacing)
    return np.stack([xs.ravel(), ys.ravel()], axis=1) + np.asarray(origin, dtype=float)


# ---------------------------------------------------------------------------
# dbscan
# ---------------------------------------------------------------------------

def test_dbscan_single_point_is_noise():
    oracle, n = euclid([[0.0, 0.0]])
    np.testing.assert_array_equal(dbscan(oracle, n, eps=1.0, min_pts=2), [NOISE])


def test_dbscan_two_separated_blobs():
    # two 20-point grid blobs about ten blob-radii apart: every point is core
    # at eps just over the grid spacing, so exactly two clusters and no noise
    pts = np.concatenate([grid_blob([0.0, 0.0]), grid_blob([8.0, 0.0])])
    oracle, n = euclid(pts)
    labels = dbscan(oracle, n, eps=0.35, min_pts=2)
    assert set(labels.tolist()) == {0, 1}
    assert len(set(labels[:20].tolist())) == 1
    assert len(set(labels[20:].tolist())) == 1
    assert labels[0] != labels[20]


def test_dbscan_matches_brute_closure_on_cores():
    rng = np.random.default_rng(50)
    for trial in range(8):
        pts = rng.uniform(0, 4, size=(90, 2))
        m = pairwise(pts)
        eps, min_pts = 0.45, 4
        labels = dbscan(EuclideanOracle(PointCloud(pts)), 90, eps, min_pts)
        comp, core = brute_core_partition(m, eps, min_pts)
        # cores are never noise, and the engine's core partition matches the
        # brute-force reachability closure
        assert np.all(labels[core] != NOISE)
        for a in np.flatnonzero(core):
            for b in np.flatnonzero(core):
                same = comp[int(a)] == comp[int(b)]
                assert (labels[a] == labels[b]) == same, f"trial {trial}: {a} vs {b}"
        # non-core points not reached by any core are noise
        reach = (m[:, core] <= eps).any(axis=1)
        assert np.all(labels[~reach] == NOISE)


def test_dbscan_line_with_outlier():
    pts = [[float(i), 0.0] for i in range(10)] + [[30.0, 0.0]]
    oracle, n = euclid(pts)
    labels = dbscan(oracle, n, eps=1.0, min_pts=2)
    assert set(labels[:10].tolist()) == {0}
    assert labels[10] == NOISE


def test_dbscan_core_rule_is_strict():
    # three mutually-close points: each eps-ball holds exactly 3 members, so
    # min_pts=3 leaves nobody core (strictly-more-than test) but min_pts=2
    # clusters them all
    pts = [[0.0, 0.0], [0.1, 0.0], [0.0, 0.1]]
    oracle, n = euclid(pts)
    np.testing.assert_array_equal(dbscan(oracle, n, eps=0.5, min_pts=3), [NOISE] * 3)
    np.testing.assert_array_equal(dbscan(oracle, n, eps=0.5, min_pts=2), [0, 0, 0])


def test_dbscan_labels_are_dense_and_deterministic():
    rng = np.random.default_rng(51)
    pts = rng.uniform(0, 3, size=(60, 2))
    oracle = EuclideanOracle(PointCloud(pts))
    a = dbscan(oracle, 60, eps=0.4, min_pts=3)
    b = dbscan(EuclideanOracle(PointCloud(pts.copy())), 60, eps=0.4, min_pts=3)
    np.testing.assert_array_equal(a, b)
    # cluster ids are dense 0..K-1 (first appearance need not be in id order:
    # a border point can precede its cluster's seed)
    ids = np.unique(a[a >= 0])
    np.testing.assert_array_equal(ids, np.arange(ids.size))


def test_dbscan_core_partition_survives_permutation():
    rng = np.random.default_rng(52)
    pts = rng.uniform(0, 4, size=(120, 2))
    eps, min_pts = 0.5, 4
    base = dbscan(EuclideanOracle(PointCloud(pts)), 120, eps, min_pts)
    core = core_mask(pairwise(pts), eps, min_pts)
    for _ in range(5):
        perm = rng.permutation(120)
        permuted = dbscan(EuclideanOracle(PointCloud(pts[perm])), 120, eps, min_pts)
        back = np.empty(120, dtype=np.int64)
        back[perm] = permuted
        assert same_partition(base, back, core)
        # noise status is permutation-invariant for every point, not just cores
        np.testing.assert_array_equal(base == NOISE, back == NOISE)


def test_dbscan_validation():
    oracle, n = euclid([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        dbscan(oracle, n, eps=-1.0, min_pts=2)
    with pytest.raises(ValueError):
        dbscan(oracle, n, eps=1.0, min_pts=0)


# ---------------------------------------------------------------------------
# optics
# ---------------------------------------------------------------------------

def test_optics_all_far_points():
    pts = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]]
    oracle, n = euclid(pts)
    res = optics(oracle, n, eps=1.0, min_pts=2)
    np.testing.assert_array_equal(res.order, np.arange(4))
    assert np.all(np.isinf(res.reachability))
    assert np.all(np.isinf(res.core_distance))


def test_optics_chain_with_gap():
    # two 10-point unit-spaced chains separated by a gap of 11: one spike in
    # the ordered reachability, exactly where the second chain starts
    pts = [[float(i), 0.0] for i in range(10)] + [[20.0 + i, 0.0] for i in range(10)]
    oracle, n = euclid(pts)
    res = optics(oracle, n, eps=np.inf, min_pts=2)
    r_ord = res.reachability[res.order]
    assert np.isinf(r_ord[0])
    assert r_ord[10] == 11.0  # d(9, 10) dominates core distance
    finite_rest = np.concatenate([r_ord[1:10], r_ord[11:]])
    assert np.all(finite_rest <= 2.0)
    # core distance = smallest radius at which the strict core test passes:
    # interior points reach 3 members at radius 1, chain ends need radius 2
    assert res.core_distance[5] == 1.0
    assert res.core_distance[0] == 2.0
    assert res.core_distance[9] == 2.0


def test_optics_core_distance_is_minimal_core_radius():
    rng = np.random.default_rng(53)
    pts = rng.uniform(0, 2, size=(40, 2))
    m = pairwise(pts)
    min_pts = 4
    res = optics(EuclideanOracle(PointCloud(pts)), 40, eps=np.inf, min_pts=min_pts)
    for i in range(40):
        cd = res.core_distance[i]
        others = np.sort(m[i][np.arange(40) != i])
        assert cd == others[min_pts - 1]
        # at cd the strict DBSCAN core test passes; just below it, it fails
        assert (m[i] <= cd).sum() > min_pts
        assert (m[i] <= np.nextafter(cd, 0.0)).sum() <= min_pts


def test_optics_respects_eps_cap():
    pts = [[float(i), 0.0] for i in range(6)]
    oracle, n = euclid(pts)
    res = optics(oracle, n, eps=1.5, min_pts=2)
    # radius 1.5 reaches only 1 other from an endpoint: not enough for 2
    assert np.isinf(res.core_distance[0])
    assert res.core_distance[2] == 1.0


def test_optics_deterministic_and_valid_permutation():
    rng = np.random.default_rng(54)
    pts = rng.uniform(0, 3, size=(80, 2))
    a = optics(EuclideanOracle(PointCloud(pts)), 80, eps=np.inf, min_pts=5)
    b = optics(EuclideanOracle(PointCloud(pts.copy())), 80, eps=np.inf, min_pts=5)
    np.testing.assert_array_equal(a.order, b.order)
    np.testing.assert_array_equal(a.reachability, b.reachability)
    np.testing.assert_array_equal(a.core_distance, b.core_distance)
    np.testing.assert_array_equal(np.sort(a.order), np.arange(80))
    assert np.isinf(a.reachability[a.order[0]])


def test_optics_validation():
    oracle, n = euclid([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        optics(oracle, n, eps=0.0, min_pts=2)
    with pytest.raises(ValueError):
        optics(oracle, n, eps=1.0, min_pts=0)
    with pytest.raises(ValueError):
        OpticsResult(order=np.arange(3), reachability=np.zeros(2), core_distance=np.zeros(3))


# ---------------------------------------------------------------------------
# extract_dbscan
# ---------------------------------------------------------------------------

def test_extract_dbscan_all_unreachable_is_noise():
    res = OpticsResult(
        order=np.arange(4),
        reachability=np.full(4, np.inf),
        core_distance=np.full(4, np.inf),
    )
    np.testing.assert_array_equal(extract_dbscan(res, 1.0, 2), [NOISE] * 4)


def test_extract_dbscan_single_blob():
    rng = np.random.default_rng(55)
    pts = rng.normal(scale=0.3, size=(50, 2))
    oracle = EuclideanOracle(PointCloud(pts))
    res = optics(oracle, 50, eps=np.inf, min_pts=4)
    labels = extract_dbscan(res, eps_prime=2.0, min_pts=4)
    np.testing.assert_array_equal(labels, np.zeros(50, dtype=np.int64))


def test_extract_dbscan_two_blob_chain():
    pts = [[float(i), 0.0] for i in range(10)] + [[20.0 + i, 0.0] for i in range(10)]
    oracle, n = euclid(pts)
    res = optics(oracle, n, eps=np.inf, min_pts=2)
    labels = extract_dbscan(res, eps_prime=2.0, min_pts=2)
    assert set(labels[:10].tolist()) == {0}
    assert set(labels[10:].tolist()) == {1}


def test_extract_dbscan_matches_dbscan_core_partition():
    # the direct scan's final step relabels undersized clusters as noise,
    # which the threshold sweep does not mirror, so compare on the cores the
    # direct scan kept and check the demoted remainder is exactly that corner
    rng = np.random.default_rng(56)
    for _ in range(8):
        pts = rng.uniform(0, 4, size=(100, 2))
        oracle = EuclideanOracle(PointCloud(pts))
        eps_prime, min_pts = 0.5, 4
        res = optics(oracle, 100, eps=np.inf, min_pts=min_pts)
        via_optics = extract_dbscan(res, eps_prime, min_pts)
        direct = dbscan(EuclideanOracle(PointCloud(pts)), 100, eps_prime, min_pts)
        core = core_mask(pairwise(pts), eps_prime, min_pts)
        assert np.all(via_optics[core] != NOISE)
        kept = core & (direct != NOISE)
        assert same_partition(via_optics, direct, kept)
        for i in np.flatnonzero(core & (direct == NOISE)):
            # a demoted core sits in a sweep cluster made only of demoted cores
            same_cluster_cores = core & (via_optics == via_optics[i])
            assert np.all(direct[same_cluster_cores] == NOISE)


def test_extract_dbscan_validation():
    res = OpticsResult(
        order=np.arange(2), reachability=np.full(2, np.inf), core_distance=np.full(2, np.inf)
    )
    with pytest.raises(ValueError):
        extract_dbscan(res, -0.5, 2)


# ---------------------------------------------------------------------------
# extract_xi
# ---------------------------------------------------------------------------

def synthetic_result(reach):
    reach = np.asarray(reach, dtype=np.float64)
    return OpticsResult(
        order=np.arange(len(reach)),
        reachability=reach,
        core_distance=reach.copy(),
    )


def test_xi_flat_blob_single_cluster():
    labels = extract_xi(synthetic_result([np.inf] + [0.5] * 30), xi=0.05, min_pts=5)
    assert set(labels.tolist()) == {0}


def test_xi_two_valleys_two_clusters():
    plot = [np.inf] + [0.1] * 20 + [2.0] * 5 + [0.1] * 20
    labels = extract_xi(synthetic_result(plot), xi=0.5, min_pts=5)
    clusters = set(labels.tolist()) - {NOISE}
    assert len(clusters) == 2
    assert len(set(labels[1:21].tolist())) == 1          # first valley together
    assert len(set(labels[26:].tolist())) == 1           # second valley together
    assert labels[1] != labels[30]
    assert np.all(labels[22:25] == NOISE)                # plateau interior is noise


def test_xi_near_one_finds_nothing():
    plot = [5.0, 0.5, 0.4, 0.55, 0.5] * 8
    labels = extract_xi(synthetic_result(plot), xi=1.0 - 1e-9, min_pts=3)
    np.testing.assert_array_equal(labels, np.full(len(plot), NOISE))


def test_xi_min_pts_filters_small_valleys():
    plot = [np.inf] + [0.1] * 4 + [3.0] * 3 + [0.1] * 20
    small_ok = extract_xi(synthetic_result(plot), xi=0.5, min_pts=3)
    assert len(set(small_ok.tolist()) - {NOISE}) == 2
    big_only = extract_xi(synthetic_result(plot), xi=0.5, min_pts=10)
    assert len(set(big_only.tolist()) - {NOISE}) == 1
    assert np.all(big_only[1:5] == NOISE)


def test_xi_labels_follow_visit_order_not_id_order():
    # same plot, shuffled ids: labels must attach to the ordered positions
    plot = np.array([np.inf] + [0.1] * 10 + [2.0] * 3 + [0.1] * 10)
    rng = np.random.default_rng(57)
    order = rng.permutation(len(plot))
    reach = np.empty(len(plot))
    reach[order] = plot
    res = OpticsResult(order=order, reachability=reach, core_distance=reach.copy())
    labels = extract_xi(res, xi=0.5, min_pts=4)
    ordered = labels[order]
    assert len(set(ordered[1:11].tolist())) == 1
    assert len(set(ordered[14:].tolist())) == 1
    assert ordered[1] != ordered[14]


def test_xi_all_unreachable_is_noise():
    labels = extract_xi(synthetic_result([np.inf] * 6), xi=0.1, min_pts=2)
    np.testing.assert_array_equal(labels, np.full(6, NOISE))


def test_xi_on_real_sweep_separates_blobs():
    # uniform grids give a flat within-blob reachability plot (one valley per
    # blob); Gaussian blobs would fragment into micro-valleys at small xi
    blobs = [grid_blob(origin, rows=6, cols=6, spacing=0.3) for origin in ((0, 0), (8, 0), (0, 8))]
    pts = np.concatenate(blobs)
    res = optics(EuclideanOracle(PointCloud(pts)), 108, eps=np.inf, min_pts=5)
    labels = extract_xi(res, xi=0.05, min_pts=5)
    truth = np.repeat([0, 1, 2], 36)
    # every blob lands in one cluster, and different blobs stay separate
    for b in range(3):
        got = labels[truth == b]
        assert len(set(got[got != NOISE].tolist())) == 1
        assert (got != NOISE).mean() > 0.8
    reps = [int(labels[truth == b][18]) for b in range(3)]
    assert len(set(reps)) == 3
    assert NOISE not in reps


def test_xi_validation():
    res = synthetic_result([np.inf, 1.0, 1.0])
    with pytest.raises(ValueError):
        extract_xi(res, xi=0.0, min_pts=2)
    with pytest.raises(ValueError):
        extract_xi(res, xi=1.0, min_pts=2)
    with pytest.raises(ValueError):
        extract_xi(res, xi=0.5, min_pts=0)
