"""Distances between Gaussian embeddings.

The clustering metric ``dist`` is a symmetrized blend of covariance-shape
mismatch (two whitened Frobenius terms) and Mahalanobis mean offsets (one per
covariance).  It is symmetric and vanishes only at equality, but it is *not* a
metric — ``triangle_slack`` quantifies exactly how far triples can stray from
the triangle inequality, including the commutator-driven slack term.

``kl_gaussian`` / ``kl_approx`` give the exact closed-form Gaussian KL
divergence and its quadratic surrogate whose error is third order in the
covariance perturbation.  ``can_prune`` is the Euclidean lower bound used to
skip distance evaluations for spectrally normalized embeddings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateMatrixError,
    EmbeddingSet,
    GaussianEmbedding,
    conjugate_sym2,
    eig_sym2,
    frobenius_norm,
    sym2_unpack,
)

SQRT2 = math.sqrt(2.0)

# Full pairwise matrices are materialized only below this many points
# (memory: n^2 * 8 bytes; 4500 -> ~160 MB).
FULL_MATRIX_LIMIT = 4500


def _conj_minus_identity_fro(b: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Frobenius norm of B·S·B − I for packed inputs, batched."""
    ca, cb, cc = conjugate_sym2(b, s)
    return np.sqrt((ca - 1.0) ** 2 + 2.0 * cb * cb + (cc - 1.0) ** 2)


def _quad_form(inv: np.ndarray, dx: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """dᵀ Σ⁻¹ d from a packed inverse; clamped at zero against fp noise."""
    q = inv[..., 0] * dx * dx + 2.0 * inv[..., 1] * dx * dy + inv[..., 2] * dy * dy
    return np.maximum(q, 0.0)


def _dist_kernel(mu1, sigma1, mu2, sigma2) -> np.ndarray:
    """Batched distance evaluation on packed (mu, sigma) pairs (broadcastable).

    The whitened Frobenius terms are evaluated through 2×2 trace/determinant
    identities instead of forming the conjugated matrices:
    ``‖Q^(-1/2)·P·Q^(-1/2) − I‖F² = tr((Q⁻¹P)²) − 2·tr(Q⁻¹P) + 2`` with
    ``tr(M²) = (tr M)² − 2·det M``.  Every operation is elementwise and the
    whole expression is operand-order symmetric, so swapping the arguments
    returns bitwise-identical values and subsetting one side commutes with
    evaluation (pruned and unpruned paths see the same numbers).
    """
    pa, pb, pc = sigma1[..., 0], sigma1[..., 1], sigma1[..., 2]
    qa, qb, qc = sigma2[..., 0], sigma2[..., 1], sigma2[..., 2]
    detp = pa * pc - pb * pb
    detq = qa * qc - qb * qb
    cross = (pa * qc + pc * qa) - 2.0 * (pb * qb)  # detQ·tr(Q⁻¹P) = detP·tr(P⁻¹Q)
    s1 = cross / detq
    s2 = cross / detp
    f1 = np.maximum(s1 * s1 - 2.0 * (detp / detq) - 2.0 * s1 + 2.0, 0.0)
    f2 = np.maximum(s2 * s2 - 2.0 * (detq / detp) - 2.0 * s2 + 2.0, 0.0)
    dx = mu1[..., 0] - mu2[..., 0]
    dy = mu1[..., 1] - mu2[..., 1]
    dxx = dx * dx
    dxy = dx * dy
    dyy = dy * dy
    m1 = np.sqrt(np.maximum(qc * dxx - 2.0 * (qb * dxy) + qa * dyy, 0.0) / detq)
    m2 = np.sqrt(np.maximum(pc * dxx - 2.0 * (pb * dxy) + pa * dyy, 0.0) / detp)
    return 0.5 * np.sqrt(f1) + 0.5 * np.sqrt(f2) + (m1 + m2) / SQRT2


def dist(p: GaussianEmbedding, q: GaussianEmbedding) -> float:
    """Symmetric embedding distance between two Gaussians."""
    return float(_dist_kernel(p.mu, p.sigma, q.mu, q.sigma))


def dist_rows(embeddings: EmbeddingSet, i: int, ids: np.ndarray) -> np.ndarray:
    """Distances from embedding i to each embedding in `ids`."""
    e = embeddings
    return _dist_kernel(e.mu[i], e.sigma[i], e.mu[ids], e.sigma[ids])


def dist_matrix(embeddings: EmbeddingSet, block: int = 192) -> np.ndarray:
    """Full pairwise distance matrix, computed in row blocks.

    Identical values to `dist` pair by pair.  Only the upper triangle is
    evaluated (the kernel is bitwise symmetric, so mirroring is exact) and
    the diagonal is set to the analytic zero.
    """
    e = embeddings
    n = len(e)
    out = np.empty((n, n))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        seg = _dist_kernel(
            e.mu[lo:hi, None, :], e.sigma[lo:hi, None, :],
            e.mu[None, lo:, :], e.sigma[None, lo:, :],
        )
        out[lo:hi, lo:] = seg
        out[lo:, lo:hi] = seg.T
    np.fill_diagonal(out, 0.0)
    return out


def can_prune(p: GaussianEmbedding, q: GaussianEmbedding, eps: float) -> bool:
    """True when the pair is guaranteed farther apart than eps.

    For spectrally normalized covariances every Σ⁻¹ dominates the identity,
    so the two Mahalanobis terms alone give dist ≥ √2·‖Δμ‖.  Sound: never
    true for a pair with dist ≤ eps.
    """
    dmu = p.mu - q.mu
    return SQRT2 * float(np.hypot(dmu[0], dmu[1])) > eps


def _logdet(sigma: np.ndarray) -> float:
    """log det of a packed SPD matrix via eigenvalues (stable near singular)."""
    w, _ = eig_sym2(sigma)
    if w[..., 1] <= 0.0:
        raise DegenerateMatrixError("covariance is not positive definite")
    return float(np.log(w[..., 0]) + np.log(w[..., 1]))


def kl_gaussian(p: GaussianEmbedding, q: GaussianEmbedding) -> float:
    """Exact KL divergence KL(P‖Q) between two Gaussian embeddings."""
    trace_term = (
        q.sigma_inv[0] * p.sigma[0]
        + 2.0 * q.sigma_inv[1] * p.sigma[1]
        + q.sigma_inv[2] * p.sigma[2]
    )
    dx, dy = p.mu[0] - q.mu[0], p.mu[1] - q.mu[1]
    quad = float(_quad_form(q.sigma_inv, np.asarray(dx), np.asarray(dy)))
    return 0.5 * (_logdet(q.sigma) - _logdet(p.sigma) + float(trace_term) - 2.0 + quad)


def kl_approx(p: GaussianEmbedding, q: GaussianEmbedding) -> float:
    """Quadratic surrogate of KL(P‖Q).

    Quarter of the squared whitened-covariance Frobenius mismatch plus half
    the Mahalanobis mean term; the mean part is exact, the covariance part
    carries a third-order remainder (good while the whitened mismatch stays
    under 1).
    """
    fro = float(_conj_minus_identity_fro(q.sigma_inv_sqrt, p.sigma))
    dx, dy = p.mu[0] - q.mu[0], p.mu[1] - q.mu[1]
    quad = float(_quad_form(q.sigma_inv, np.asarray(dx), np.asarray(dy)))
    return 0.25 * fro * fro + 0.5 * quad


@dataclass(frozen=True)
class TriangleReport:
    """Diagnostic record for one (P, Q, K) triangle-defect check.

    ``slack_bound`` is the epsilon-driven allowance √2ε + √2ε√(1+ε) + ε²;
    ``commutator_term`` is the exact commutator slack of the triple (zero when the
    three covariances commute).  ``hypothesis_met`` records whether the
    caller's premise d(P,Q) ≤ ε and d(Q,K) ≤ ε actually held.
    """

    d_pq: float
    d_qk: float
    d_pk: float
    epsilon: float
    slack_bound: float
    commutator_term: float
    hypothesis_met: bool

    @property
    def satisfied(self) -> bool:
        """Whether d(P,K) stayed within the relaxed triangle bound."""
        return self.d_pk <= self.d_pq + self.d_qk + self.slack_bound + self.commutator_term


def triangle_slack(
    p: GaussianEmbedding, q: GaussianEmbedding, k: GaussianEmbedding, epsilon: float
) -> TriangleReport:
    """Evaluate the relaxed triangle inequality on one embedding triple.

    Not on the clustering hot path — plain 2x2 matrix algebra, kept close to
    the defining expressions for auditability.
    """
    sp = sym2_unpack(p.sigma)
    sq = sym2_unpack(q.sigma)
    sk = sym2_unpack(k.sigma)
    q_is = sym2_unpack(q.sigma_inv_sqrt)
    q_s = sym2_unpack(q.sigma_sqrt)
    k_is = sym2_unpack(k.sigma_inv_sqrt)
    p_is = sym2_unpack(p.sigma_inv_sqrt)

    def comm(x, y):
        return x @ y - y @ x

    a_mid = q_is @ sp @ q_is
    b_mid = q_is @ sk @ q_is
    commutator_term = float(
        0.5 * frobenius_norm(k_is @ comm(sp, q_is) @ q_s @ k_is)
        + 0.5 * frobenius_norm(comm(k_is, a_mid) @ sq @ k_is)
        + 0.5 * frobenius_norm(p_is @ comm(sk, q_is) @ q_s @ p_is)
        + 0.5 * frobenius_norm(comm(p_is, b_mid) @ sq @ p_is)
    )

    eps = float(epsilon)
    slack_bound = SQRT2 * eps + SQRT2 * eps * math.sqrt(1.0 + eps) + eps * eps
    d_pq = dist(p, q)
    d_qk = dist(q, k)
    d_pk = dist(p, k)
    return TriangleReport(
        d_pq=d_pq,
        d_qk=d_qk,
        d_pk=d_pk,
        epsilon=eps,
        slack_bound=slack_bound,
        commutator_term=commutator_term,
        hypothesis_met=(d_pq <= eps and d_qk <= eps),
    )
