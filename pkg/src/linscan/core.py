"""Core domain types and the 2x2 symmetric-matrix kernel.

Conventions used throughout the package:

* A 2x2 symmetric matrix is stored "packed" as an array whose last axis holds
  ``(a, b, c)``, standing for ``[[a, b], [b, c]]``.  Packed storage keeps
  symmetry exact by construction and lets every routine broadcast over
  arbitrary batch shapes.
* Points live in float64 arrays of shape ``(n, 2)``; a point's id is its row
  index, everywhere in the package.
* Cluster labels are int64 with ``NOISE == -1``; real clusters are ``0..K-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NOISE = -1

# Eigenvalues below this are treated as a degenerate (non-SPD) matrix.  The
# embedding regularization keeps real covariances orders of magnitude above it,
# so hitting the floor signals a missing regularization step, not data.
LAMBDA_FLOOR = 1e-9


class DegenerateMatrixError(ValueError):
    """An SPD operation encountered an eigenvalue below ``LAMBDA_FLOOR``."""


class EmptyCloudError(ValueError):
    """An operation that needs at least one point got an empty cloud."""


class NeighborhoodTooSmallError(ValueError):
    """The cloud has fewer points than the requested neighborhood size."""


class UndefinedOrientationError(ValueError):
    """Orientation was requested for a degenerate (all-identical) point set."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """Immutable ordered collection of 2-D points.

    ``points`` is an ``(n, 2)`` float64 array; the id of a point is its row
    index and stays stable for the life of the cloud.
    """

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True, order="C")
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class LinscanParams:
    """Parameters of the embedding-space clustering pipeline.

    ecc_pts   size of the neighborhood each local Gaussian is fitted to
    min_pts   OPTICS core-point threshold (also the minimum cluster size
              used by the xi extraction)
    xi        steepness threshold for reachability-plot cluster extraction
    eps       optional cap on neighborhood radius in the embedded metric
              (+inf disables the cap)
    tau       spectral-ratio threshold of the post-hoc cluster filter
    seed      RNG seed recorded for reproducibility of driver code
    """

    ecc_pts: int
    min_pts: int
    xi: float
    eps: float = math.inf
    tau: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if int(self.ecc_pts) != self.ecc_pts or self.ecc_pts < 3:
            raise ValueError(f"ecc_pts must be an integer >= 3, got {self.ecc_pts}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 2:
            raise ValueError(f"min_pts must be an integer >= 2, got {self.min_pts}")
        if not 0.0 < self.xi < 1.0:
            raise ValueError(f"xi must lie in (0, 1), got {self.xi}")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive (or +inf), got {self.eps}")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed}")


def canonicalize_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber cluster ids to 0..K-1 by order of first appearance.

    Noise stays ``NOISE``.  Gives every labeling a canonical form, which makes
    partitions comparable with plain array equality.
    """
    labels = np.asarray(labels, dtype=np.int64)
    out = np.full(labels.shape, NOISE, dtype=np.int64)
    mask = labels != NOISE
    if mask.any():
        vals = labels[mask]
        _, first_idx, inverse = np.unique(vals, return_index=True, return_inverse=True)
        # rank each unique label by where it first appears
        appearance_rank = np.argsort(np.argsort(first_idx, kind="stable"), kind="stable")
        out[mask] = appearance_rank[inverse]
    return out


# ---------------------------------------------------------------------------
# Packed symmetric 2x2 kernel
# ---------------------------------------------------------------------------

def sym2_pack(m: np.ndarray) -> np.ndarray:
    """Pack full ``(..., 2, 2)`` symmetric matrices into ``(..., 3)``."""
    m = np.asarray(m, dtype=np.float64)
    return np.stack([m[..., 0, 0], m[..., 0, 1], m[..., 1, 1]], axis=-1)


def sym2_unpack(p: np.ndarray) -> np.ndarray:
    """Expand packed ``(..., 3)`` matrices to full ``(..., 2, 2)``."""
    p = np.asarray(p, dtype=np.float64)
    a, b, c = p[..., 0], p[..., 1], p[..., 2]
    row0 = np.stack([a, b], axis=-1)
    row1 = np.stack([b, c], axis=-1)
    return np.stack([row0, row1], axis=-2)


def sym2_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 1.0])


def eig_sym2(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form eigendecomposition of packed symmetric 2x2 matrices.

    Returns ``(w, v)`` where ``w`` is ``(..., 2)`` with ``w[..., 0] >=
    w[..., 1]`` and ``v`` is ``(..., 2, 2)`` with orthonormal eigenvector
    *columns* (``v[..., :, i]`` belongs to ``w[..., i]``).  The leading
    eigenvector's sign is canonicalized (positive x, or positive y when x
    is zero) so results are deterministic.
    """
    p = np.asarray(m, dtype=np.float64)
    a, b, c = p[..., 0], p[..., 1], p[..., 2]
    half_tr = 0.5 * (a + c)
    half_diff = 0.5 * (a - c)
    disc = np.hypot(half_diff, b)
    w1 = half_tr + disc
    w2 = half_tr - disc

    # Leading eigenvector from the better-conditioned row of (A - w1 I).
    pick = half_diff >= 0.0
    vx = np.where(pick, disc + half_diff, b)
    vy = np.where(pick, b, disc - half_diff)
    norm = np.hypot(vx, vy)
    degenerate = norm <= 0.0  # multiple of identity: any basis works
    vx = np.where(degenerate, 1.0, vx)
    vy = np.where(degenerate, 0.0, vy)
    norm = np.where(degenerate, 1.0, norm)
    vx = vx / norm
    vy = vy / norm
    flip = (vx < 0.0) | ((vx == 0.0) & (vy < 0.0))
    sign = np.where(flip, -1.0, 1.0)
    vx = vx * sign
    vy = vy * sign

    w = np.stack([w1, w2], axis=-1)
    col1 = np.stack([vx, vy], axis=-1)
    col2 = np.stack([-vy, vx], axis=-1)  # rotate 90 degrees: orthonormal pair
    v = np.stack([col1, col2], axis=-1)
    return w, v


def spd_power(m: np.ndarray, power: float) -> np.ndarray:
    """Matrix power of packed SPD matrices via eigendecomposition.

    Raises ``DegenerateMatrixError`` if any eigenvalue sits below
    ``LAMBDA_FLOOR`` — that means an upstream covariance skipped its
    regularization, and fractional/negative powers would explode.
    """
    w, v = eig_sym2(m)
    if np.any(w[..., 1] < LAMBDA_FLOOR):
        worst = float(np.min(w[..., 1]))
        raise DegenerateMatrixError(
            f"eigenvalue {worst:.3e} below floor {LAMBDA_FLOOR:.1e}; "
            "matrix is not usably positive definite"
        )
    wp = w ** float(power)
    vx, vy = v[..., 0, 0], v[..., 1, 0]
    w1, w2 = wp[..., 0], wp[..., 1]
    a = w1 * vx * vx + w2 * vy * vy
    b = (w1 - w2) * vx * vy
    c = w1 * vy * vy + w2 * vx * vx
    return np.stack([a, b, c], axis=-1)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """AB - BA for packed symmetric matrices; returns the full 2x2 result.

    For symmetric 2x2 inputs the commutator is antisymmetric, so it is
    [[0, w], [-w, 0]] for a single scalar w.
    """
    pa = np.asarray(a, dtype=np.float64)
    pb = np.asarray(b, dtype=np.float64)
    a1, b1, c1 = pa[..., 0], pa[..., 1], pa[..., 2]
    a2, b2, c2 = pb[..., 0], pb[..., 1], pb[..., 2]
    w = a1 * b2 + b1 * c2 - a2 * b1 - b2 * c1
    z = np.zeros_like(w)
    row0 = np.stack([z, w], axis=-1)
    row1 = np.stack([-w, z], axis=-1)
    return np.stack([row0, row1], axis=-2)


def frobenius_norm(m: np.ndarray) -> np.ndarray:
    """Frobenius norm of full ``(..., 2, 2)`` matrices (not only symmetric)."""
    m = np.asarray(m, dtype=np.float64)
    return np.sqrt(np.sum(m * m, axis=(-2, -1)))


def frobenius_packed(p: np.ndarray) -> np.ndarray:
    """Frobenius norm straight from packed storage (off-diagonal counted twice)."""
    p = np.asarray(p, dtype=np.float64)
    a, b, c = p[..., 0], p[..., 1], p[..., 2]
    return np.sqrt(a * a + 2.0 * b * b + c * c)


def sym2_det(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return p[..., 0] * p[..., 2] - p[..., 1] * p[..., 1]


def conjugate_sym2(b: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Entries (a, b, c) of B·S·B for packed symmetric B and S.

    The congruence at the heart of every covariance comparison here; computed
    entrywise so batches broadcast and the result stays exactly symmetric.
    """
    pb = np.asarray(b, dtype=np.float64)
    ps = np.asarray(s, dtype=np.float64)
    p, q, r = pb[..., 0], pb[..., 1], pb[..., 2]
    sa, sb, sc = ps[..., 0], ps[..., 1], ps[..., 2]
    t11 = p * sa + q * sb
    t12 = p * sb + q * sc
    t21 = q * sa + r * sb
    t22 = q * sb + r * sc
    out_a = t11 * p + t12 * q
    out_b = t11 * q + t12 * r
    out_c = t21 * q + t22 * r
    return out_a, out_b, out_c


# ---------------------------------------------------------------------------
# Gaussian embeddings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianEmbedding:
    """A point's local Gaussian: mean plus packed covariance and its factors.

    ``sigma`` is spectrally normalized (largest eigenvalue 1) when produced by
    the embedding module; the divergence functions accept any SPD ``sigma``.
    The inverse and the two square-root factors are cached because distance
    evaluations reuse them O(n·k) times.
    """

    mu: np.ndarray
    sigma: np.ndarray
    sigma_inv: np.ndarray
    sigma_inv_sqrt: np.ndarray
    sigma_sqrt: np.ndarray

    @classmethod
    def from_moments(cls, mu: np.ndarray, sigma: np.ndarray) -> "GaussianEmbedding":
        """Build an embedding from a mean and a packed SPD covariance."""
        mu = np.asarray(mu, dtype=np.float64).reshape(2)
        sigma = np.asarray(sigma, dtype=np.float64).reshape(3)
        return cls(
            mu=mu,
            sigma=sigma,
            sigma_inv=spd_power(sigma, -1.0),
            sigma_inv_sqrt=spd_power(sigma, -0.5),
            sigma_sqrt=spd_power(sigma, 0.5),
        )


@dataclass(frozen=True)
class EmbeddingSet:
    """Columnar batch of Gaussian embeddings aligned with point ids."""

    mu: np.ndarray              # (n, 2)
    sigma: np.ndarray           # (n, 3)
    sigma_inv: np.ndarray       # (n, 3)
    sigma_inv_sqrt: np.ndarray  # (n, 3)
    sigma_sqrt: np.ndarray      # (n, 3)

    @classmethod
    def from_moments(cls, mu: np.ndarray, sigma: np.ndarray) -> "EmbeddingSet":
        mu = np.asarray(mu, dtype=np.float64).reshape(-1, 2)
        sigma = np.asarray(sigma, dtype=np.float64).reshape(-1, 3)
        if mu.shape[0] != sigma.shape[0]:
            raise ValueError("mu and sigma batches must have equal length")
        return cls(
            mu=mu,
            sigma=sigma,
            sigma_inv=spd_power(sigma, -1.0),
            sigma_inv_sqrt=spd_power(sigma, -0.5),
            sigma_sqrt=spd_power(sigma, 0.5),
        )

    def __len__(self) -> int:
        return self.mu.shape[0]

    def __getitem__(self, i: int) -> GaussianEmbedding:
        return GaussianEmbedding(
            mu=self.mu[i],
            sigma=self.sigma[i],
            sigma_inv=self.sigma_inv[i],
            sigma_inv_sqrt=self.sigma_inv_sqrt[i],
            sigma_sqrt=self.sigma_sqrt[i],
        )
