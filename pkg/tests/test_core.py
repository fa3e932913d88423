"""Tests for the domain types and the packed 2x2 symmetric kernel."""

import dataclasses
import math

import numpy as np
import pytest

from linscan import core
from linscan.core import (
    NOISE,
    DegenerateMatrixError,
    GaussianEmbedding,
    EmbeddingSet,
    LinscanParams,
    PointCloud,
    canonicalize_labels,
    commutator,
    conjugate_sym2,
    eig_sym2,
    frobenius_norm,
    frobenius_packed,
    spd_power,
    sym2_det,
    sym2_identity,
    sym2_pack,
    sym2_unpack,
)


def random_spd_packed(rng, n, log_range=(-3.0, 3.0)):
    """Random packed SPD matrices with controlled eigenvalues.

    Built from explicit eigenvalues and a rotation so tests know the spectrum
    independently of the code under test.
    """
    theta = rng.uniform(0.0, np.pi, size=n)
    lam = 10.0 ** rng.uniform(log_range[0], log_range[1], size=(n, 2))
    l1 = np.maximum(lam[:, 0], lam[:, 1])
    l2 = np.minimum(lam[:, 0], lam[:, 1])
    c, s = np.cos(theta), np.sin(theta)
    a = l1 * c * c + l2 * s * s
    b = (l1 - l2) * c * s
    cc = l1 * s * s + l2 * c * c
    return np.stack([a, b, cc], axis=-1), np.stack([l1, l2], axis=-1)


# ---------------------------------------------------------------------------
# PointCloud / LinscanParams / labels
# ---------------------------------------------------------------------------

def test_point_cloud_basic():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 2.0]]))
    assert len(cloud) == 2
    assert cloud.n == 2
    assert cloud.points.dtype == np.float64


def test_point_cloud_copies_and_freezes_input():
    raw = np.array([[0.0, 0.0], [1.0, 1.0]])
    cloud = PointCloud(raw)
    raw[0, 0] = 99.0  # mutating the source must not leak in
    assert cloud.points[0, 0] == 0.0
    with pytest.raises(ValueError):
        cloud.points[0, 0] = 5.0  # stored array is read-only
    with pytest.raises(dataclasses.FrozenInstanceError):
        cloud.points = np.zeros((1, 2))


@pytest.mark.parametrize(
    "bad",
    [
        np.zeros((3,)),
        np.zeros((3, 3)),
        np.array([[0.0, np.nan]]),
        np.array([[np.inf, 0.0]]),
    ],
)
def test_point_cloud_rejects_bad_input(bad):
    with pytest.raises(ValueError):
        PointCloud(bad)


def test_linscan_params_defaults_and_validation():
    p = LinscanParams(ecc_pts=20, min_pts=10, xi=0.05)
    assert p.eps == math.inf
    assert p.tau == 1.0
    assert p.seed == 0

    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=2, min_pts=10, xi=0.05)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=1, xi=0.05)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=0.0)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=1.0)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=0.05, eps=0.0)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=0.05, tau=0.0)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=0.05, tau=1.5)
    with pytest.raises(ValueError):
        LinscanParams(ecc_pts=20, min_pts=10, xi=0.05, seed=-1)


def test_canonicalize_labels_first_appearance_order():
    labels = np.array([5, 5, 2, NOISE, 2, 7])
    out = canonicalize_labels(labels)
    assert out.tolist() == [0, 0, 1, NOISE, 1, 2]


def test_canonicalize_labels_noise_and_empty():
    assert canonicalize_labels(np.array([NOISE, NOISE])).tolist() == [NOISE, NOISE]
    assert canonicalize_labels(np.array([], dtype=np.int64)).size == 0
    # already canonical stays put
    lab = np.array([0, 1, 1, 2, NOISE])
    assert canonicalize_labels(lab).tolist() == lab.tolist()


# ---------------------------------------------------------------------------
# Packed storage helpers
# ---------------------------------------------------------------------------

def test_pack_unpack_round_trip():
    rng = np.random.default_rng(0)
    p, _ = random_spd_packed(rng, 50)
    full = sym2_unpack(p)
    assert full.shape == (50, 2, 2)
    np.testing.assert_array_equal(sym2_pack(full), p)
    np.testing.assert_array_equal(full[..., 0, 1], full[..., 1, 0])


def test_sym2_det_matches_numpy():
    rng = np.random.default_rng(1)
    p, lam = random_spd_packed(rng, 200)
    expected = lam[:, 0] * lam[:, 1]
    # a*c - b*b cancels catastrophically when lambda_max >> lambda_min, so
    # the honest error bound scales with the products, not the determinant
    slack = 1e-12 * (np.abs(p[:, 0] * p[:, 2]) + p[:, 1] * p[:, 1])
    assert np.all(np.abs(sym2_det(p) - expected) <= slack + 1e-12 * np.abs(expected))
    np.testing.assert_allclose(
        sym2_det(p), np.linalg.det(sym2_unpack(p)), rtol=1e-9, atol=np.max(slack)
    )


def test_conjugate_sym2_matches_matmul():
    rng = np.random.default_rng(2)
    b, _ = random_spd_packed(rng, 100, log_range=(-1.0, 1.0))
    s, _ = random_spd_packed(rng, 100, log_range=(-1.0, 1.0))
    a_out, b_out, c_out = conjugate_sym2(b, s)
    got = sym2_unpack(np.stack([a_out, b_out, c_out], axis=-1))
    bf, sf = sym2_unpack(b), sym2_unpack(s)
    expected = bf @ sf @ bf
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-14)


# ---------------------------------------------------------------------------
# Eigendecomposition
# ---------------------------------------------------------------------------

def test_eig_identity():
    w, v = eig_sym2(sym2_identity())
    np.testing.assert_allclose(w, [1.0, 1.0])
    np.testing.assert_allclose(v @ v.T, np.eye(2), atol=1e-15)


def test_eig_diagonal():
    w, v = eig_sym2(np.array([2.0, 0.0, 1.0]))
    np.testing.assert_allclose(w, [2.0, 1.0])
    # leading eigenvector along +x, second along y
    np.testing.assert_allclose(np.abs(v[:, 0]), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(np.abs(v[:, 1]), [0.0, 1.0], atol=1e-15)
    assert v[0, 0] > 0  # canonical sign


def test_eig_rank_one():
    # [[1, 1], [1, 1]] has eigenpairs (2, (1,1)/sqrt2) and (0, (1,-1)/sqrt2)
    w, v = eig_sym2(np.array([1.0, 1.0, 1.0]))
    np.testing.assert_allclose(w, [2.0, 0.0], atol=1e-15)
    r = 1.0 / math.sqrt(2.0)
    np.testing.assert_allclose(v[:, 0], [r, r], atol=1e-15)
    np.testing.assert_allclose(np.abs(v[:, 1]), [r, r], atol=1e-15)
    assert abs(float(v[:, 0] @ v[:, 1])) < 1e-15


def test_eig_random_properties():
    rng = np.random.default_rng(3)
    p, lam = random_spd_packed(rng, 10_000)
    w, v = eig_sym2(p)
    # ordering and spectrum
    assert np.all(w[:, 0] >= w[:, 1])
    np.testing.assert_allclose(np.sort(w, axis=1), np.sort(lam, axis=1), rtol=1e-9)
    # orthonormality
    vtv = np.einsum("nij,nik->njk", v, v)
    assert np.max(np.abs(vtv - np.eye(2))) <= 1e-10
    # reconstruction V diag(w) V^T == M
    recon = np.einsum("nij,nj,nkj->nik", v, w, v)
    err = frobenius_norm(recon - sym2_unpack(p))
    scale = np.maximum(1.0, frobenius_norm(sym2_unpack(p)))
    assert np.max(err / scale) <= 1e-10


def test_eig_matches_numpy_eigh():
    rng = np.random.default_rng(4)
    p, _ = random_spd_packed(rng, 500)
    w, _ = eig_sym2(p)
    w_np = np.linalg.eigvalsh(sym2_unpack(p))  # ascending
    np.testing.assert_allclose(w[:, 0], w_np[:, 1], rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(w[:, 1], w_np[:, 0], rtol=1e-9, atol=1e-12)


def test_eig_sign_convention_is_deterministic():
    # same matrix through different but equivalent inputs -> same vectors
    m = np.array([1.0, -0.5, 2.0])
    w1, v1 = eig_sym2(m)
    w2, v2 = eig_sym2(np.stack([m, m]))
    np.testing.assert_array_equal(v1, v2[0])
    np.testing.assert_array_equal(v1, v2[1])
    assert v1[0, 0] > 0 or (v1[0, 0] == 0 and v1[1, 0] > 0)


# ---------------------------------------------------------------------------
# SPD powers
# ---------------------------------------------------------------------------

def test_spd_power_identity_inverse():
    np.testing.assert_allclose(spd_power(sym2_identity(), -1.0), sym2_identity(), atol=1e-15)


def test_spd_power_diagonal_sqrt():
    got = spd_power(np.array([4.0, 0.0, 1.0]), 0.5)
    np.testing.assert_allclose(got, [2.0, 0.0, 1.0], atol=1e-12)


def test_spd_power_near_singular_inverse_sqrt():
    # [[1,1],[1,1]] + 1e-6 I has lambda_min = 1e-6; its -1/2 power has
    # leading eigenvalue ~ 1000
    m = np.array([1.0 + 1e-6, 1.0, 1.0 + 1e-6])
    out = spd_power(m, -0.5)
    w, _ = eig_sym2(out)
    np.testing.assert_allclose(w[0], 1000.0, rtol=1e-3)


def test_spd_power_random_round_trips():
    rng = np.random.default_rng(5)
    p, _ = random_spd_packed(rng, 10_000)
    full = sym2_unpack(p)
    scale = np.maximum(1.0, frobenius_norm(full))

    sqrt = sym2_unpack(spd_power(p, 0.5))
    err = frobenius_norm(sqrt @ sqrt - full) / scale
    assert np.max(err) <= 1e-8

    inv = sym2_unpack(spd_power(p, -1.0))
    err = frobenius_norm(inv @ full - np.eye(2))
    assert np.max(err) <= 1e-8

    isq = sym2_unpack(spd_power(p, -0.5))
    err = frobenius_norm(isq @ full @ isq - np.eye(2))
    assert np.max(err) <= 1e-8


def test_spd_power_zero_and_one():
    rng = np.random.default_rng(6)
    p, _ = random_spd_packed(rng, 100)
    np.testing.assert_allclose(spd_power(p, 1.0), p, rtol=1e-12)
    ident = np.broadcast_to(sym2_identity(), p.shape)
    np.testing.assert_allclose(spd_power(p, 0.0), ident, atol=1e-12)


def test_spd_power_rejects_degenerate():
    with pytest.raises(DegenerateMatrixError):
        spd_power(np.array([1.0, 0.0, 1e-12]), -0.5)
    with pytest.raises(DegenerateMatrixError):
        spd_power(np.array([1.0, 1.0, 1.0]), 0.5)  # exactly singular
    with pytest.raises(DegenerateMatrixError):
        spd_power(np.array([1.0, 0.0, -0.5]), -1.0)  # not even PSD


# ---------------------------------------------------------------------------
# Commutator and norms
# ---------------------------------------------------------------------------

def test_commutator_with_identity_vanishes():
    rng = np.random.default_rng(7)
    p, _ = random_spd_packed(rng, 20)
    out = commutator(np.broadcast_to(sym2_identity(), p.shape), p)
    np.testing.assert_array_equal(out, np.zeros((20, 2, 2)))


def test_commutator_codiagonal_vanishes():
    # two diagonal matrices commute
    out = commutator(np.array([3.0, 0.0, 5.0]), np.array([2.0, 0.0, 7.0]))
    np.testing.assert_array_equal(out, np.zeros((2, 2)))


def test_commutator_example():
    out = commutator(np.array([1.0, 0.0, 2.0]), np.array([1.0, 1.0, 1.0]))
    np.testing.assert_allclose(out, [[0.0, -1.0], [1.0, 0.0]], atol=1e-15)


def test_commutator_matches_matmul_and_is_antisymmetric():
    rng = np.random.default_rng(8)
    a, _ = random_spd_packed(rng, 200, log_range=(-1.0, 1.0))
    b, _ = random_spd_packed(rng, 200, log_range=(-1.0, 1.0))
    got = commutator(a, b)
    af, bf = sym2_unpack(a), sym2_unpack(b)
    expected = af @ bf - bf @ af
    np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-13)
    np.testing.assert_array_equal(got[..., 0, 0], 0.0)
    np.testing.assert_array_equal(got[..., 1, 1], 0.0)
    np.testing.assert_array_equal(got[..., 0, 1], -got[..., 1, 0])


def test_frobenius_norm_matches_trace_form():
    rng = np.random.default_rng(9)
    m = rng.normal(size=(100, 2, 2))
    expected = np.sqrt(np.trace(np.swapaxes(m, -2, -1) @ m, axis1=-2, axis2=-1))
    np.testing.assert_allclose(frobenius_norm(m), expected, rtol=1e-12)


def test_frobenius_packed_matches_full():
    rng = np.random.default_rng(10)
    p, _ = random_spd_packed(rng, 100)
    np.testing.assert_allclose(frobenius_packed(p), frobenius_norm(sym2_unpack(p)), rtol=1e-12)


# ---------------------------------------------------------------------------
# Embedding containers
# ---------------------------------------------------------------------------

def test_gaussian_embedding_caches_consistent_factors():
    rng = np.random.default_rng(11)
    sigma, _ = random_spd_packed(rng, 1, log_range=(-2.0, 0.0))
    emb = GaussianEmbedding.from_moments([1.0, -2.0], sigma[0])
    full = sym2_unpack(emb.sigma)
    isq = sym2_unpack(emb.sigma_inv_sqrt)
    sq = sym2_unpack(emb.sigma_sqrt)
    inv = sym2_unpack(emb.sigma_inv)
    assert frobenius_norm(isq @ full @ isq - np.eye(2)) <= 1e-7
    assert frobenius_norm(sq @ sq - full) <= 1e-8
    assert frobenius_norm(inv @ full - np.eye(2)) <= 1e-8
    np.testing.assert_array_equal(emb.mu, [1.0, -2.0])


def test_embedding_set_round_trip_and_indexing():
    rng = np.random.default_rng(12)
    sigma, _ = random_spd_packed(rng, 5, log_range=(-2.0, 0.0))
    mu = rng.normal(size=(5, 2))
    batch = EmbeddingSet.from_moments(mu, sigma)
    assert len(batch) == 5
    one = batch[3]
    np.testing.assert_array_equal(one.mu, mu[3])
    np.testing.assert_array_equal(one.sigma, sigma[3])
    np.testing.assert_array_equal(one.sigma_inv, batch.sigma_inv[3])
    single = GaussianEmbedding.from_moments(mu[3], sigma[3])
    np.testing.assert_allclose(one.sigma_inv_sqrt, single.sigma_inv_sqrt, rtol=1e-12)


def test_embedding_set_rejects_mismatched_batches():
    with pytest.raises(ValueError):
        EmbeddingSet.from_moments(np.zeros((3, 2)), np.tile(sym2_identity(), (4, 1)))
