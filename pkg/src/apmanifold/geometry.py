"""Metric layer for the SPD manifold.

Implements the one-parameter alpha family of metrics (log-Euclidean at
``alpha=0``, scaled Bures-Wasserstein at ``alpha=0.5``, the robust
``alpha=1`` geometry) together with the affine-invariant baseline. Every
operation routes through the cached eigendecomposition of the base point:
the defining linear operator, metric weights and inner products, Riemannian
gradients, exponential maps, geodesic distances and eigen-adapted tangent
coordinates.

For a base point ``P = Q diag(lam) Q.T``, all alpha-family objects are
entrywise multipliers in the eigenbasis. With ``dd`` the first divided
difference of ``t -> t**(2 alpha)`` over the spectrum (``t -> log t`` when
``alpha == 0``):

* operator coefficients  ``c_ij = dd_ij / (2 alpha (lam_i**2a + lam_j**2a))``
  (``dd_ij / 2`` at ``alpha == 0``), one formula covering the diagonal
  ``1 / (2 lam_i)`` and the coincident-eigenvalue limit ``1 / (2 lam_i)``;
* metric weights ``w_ii = lam_i**(2a - 2)`` and
  ``w_ij = dd_ij**2 / (alpha**2 (lam_i**2a + lam_j**2a))``
  (``2 dd_ij**2`` at ``alpha == 0``).
"""

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ExpDomainViolation
from .linalg import (
    MERGE_TOL,
    SpdPoint,
    eigh_desc,
    frechet_from_eig,
    frob,
    loewner,
    sym,
)

# Smallest admissible eigenvalue of I + Y inside the alpha exponential map.
EXP_DOMAIN_EPS = 1e-12

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MetricSpec:
    """Selects a geometry: one member of the alpha family, or affine-invariant.

    ``alpha`` is meaningful only for the alpha family; ``alpha == 0``
    selects the log-Euclidean formulas.
    """

    family: str
    alpha: float = float("nan")

    ALPHA = "alpha"
    AFFINE_INVARIANT = "affine_invariant"

    def __post_init__(self):
        if self.family not in (self.ALPHA, self.AFFINE_INVARIANT):
            raise ValueError(f"unknown metric family {self.family!r}")
        if self.family == self.ALPHA and not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite for the alpha family")

    @classmethod
    def from_alpha(cls, alpha):
        return cls(family=cls.ALPHA, alpha=float(alpha))

    @classmethod
    def affine_invariant(cls):
        return cls(family=cls.AFFINE_INVARIANT)

    @property
    def is_alpha(self):
        return self.family == self.ALPHA

    @property
    def label(self):
        if not self.is_alpha:
            return "AI"
        if self.alpha == 0.0:
            return "LE (alpha=0)"
        if self.alpha == 0.5:
            return "BW (alpha=0.5)"
        return f"alpha={self.alpha:g}"


AI = MetricSpec.affine_invariant()


@dataclass(frozen=True)
class MetricWeights:
    """Spectral weights of the alpha-family metric operator at a point.

    ``w_diag[i]`` is the eigenvalue on the rotated diagonal basis element
    ``E^(ii)``; the metric operator acts on the off-diagonal element
    ``E^(ij)`` with eigenvalue ``w_offdiag[i, j] / 2``. Entries of
    ``w_offdiag`` with ``i >= j`` are zero.
    """

    w_diag: np.ndarray
    w_offdiag: np.ndarray
    basis_q: np.ndarray


def _dd_power(lam, alpha, merge_tol):
    """Divided differences of ``t -> t**(2 alpha)`` over the spectrum."""
    a2 = 2.0 * alpha
    return loewner(
        lambda t: t**a2, lambda t: a2 * t ** (a2 - 1.0), lam, merge_tol
    )


def _dd_log(lam, merge_tol):
    return loewner(np.log, lambda t: 1.0 / t, lam, merge_tol)


def _l_coeff(lam, alpha, merge_tol):
    """Entrywise eigenbasis coefficients of the defining operator."""
    if alpha == 0.0:
        return 0.5 * _dd_log(lam, merge_tol)
    psum = lam[:, None] ** (2.0 * alpha) + lam[None, :] ** (2.0 * alpha)
    return _dd_power(lam, alpha, merge_tol) / (2.0 * alpha * psum)


def weight_matrix(p, metric, merge_tol=MERGE_TOL):
    """Full n-by-n coefficient matrix of the metric in the eigenbasis.

    Entry ``(i, i)`` is ``w_ii`` and entry ``(i, j)`` for ``i != j`` is
    ``w_ij / 2``, so that for symmetric ``X, Y`` written in the eigenbasis
    the inner product is ``sum(W * X~ * Y~)``. The same matrix inverts the
    metric entrywise: the Riemannian gradient in the eigenbasis is the
    Euclidean one divided by ``W``.
    """
    lam = p.lam
    if not metric.is_alpha:
        return 1.0 / np.multiply.outer(lam, lam)
    alpha = metric.alpha
    if alpha == 0.0:
        return _dd_log(lam, merge_tol) ** 2
    psum = lam[:, None] ** (2.0 * alpha) + lam[None, :] ** (2.0 * alpha)
    return _dd_power(lam, alpha, merge_tol) ** 2 / (2.0 * alpha**2 * psum)


def l_operator(p, alpha, y, merge_tol=MERGE_TOL):
    """Apply the defining operator of the alpha metric to a tangent vector.

    Returns the unique symmetric ``H`` solving the Frechet-derivative
    relation that characterizes the metric, computed entrywise in the
    eigenbasis of ``p``.

    Parameters
    ----------
    p : SpdPoint
    alpha : float
    y : ndarray, shape (n, n)
        Symmetric matrix.

    Returns
    -------
    ndarray, shape (n, n)
    """
    c = _l_coeff(p.lam, alpha, merge_tol)
    return sym(p.from_eigenbasis(c * p.to_eigenbasis(y)))


def metric_weights(p, alpha, merge_tol=MERGE_TOL):
    """Spectral weights of the alpha-family metric operator.

    ``w_diag[i] = lam_i**(2 alpha - 2)`` and, for ``i < j``,
    ``w_offdiag[i, j]`` follows the closed form with the coincident-
    eigenvalue limit ``2 lam_i**(2 alpha - 2)``. All weights are positive.
    """
    w = weight_matrix(p, MetricSpec.from_alpha(alpha), merge_tol)
    return MetricWeights(
        w_diag=w.diagonal().copy(),
        w_offdiag=np.triu(2.0 * w, k=1),
        basis_q=p.q,
    )


def metric_inner(p, metric, x, y, merge_tol=MERGE_TOL):
    """Riemannian inner product of two tangent vectors at ``p``."""
    w = weight_matrix(p, metric, merge_tol)
    return float(np.sum(w * p.to_eigenbasis(x) * p.to_eigenbasis(y)))


def metric_norm(p, metric, x, merge_tol=MERGE_TOL):
    """Riemannian norm ``sqrt(g_P(x, x))``."""
    w = weight_matrix(p, metric, merge_tol)
    xt = p.to_eigenbasis(x)
    return math.sqrt(max(float(np.sum(w * xt * xt)), 0.0))


def riemannian_gradient(p, metric, egrad, merge_tol=MERGE_TOL):
    """Riemannian gradient from the Euclidean gradient.

    Defining property: ``g_P(grad, V) = <egrad, V>_F`` for every symmetric
    ``V``. For the alpha family this is an entrywise division by the weight
    matrix in the eigenbasis; for affine-invariant it is ``P egrad P``.
    """
    if not metric.is_alpha:
        return sym(p.mat @ egrad @ p.mat)
    w = weight_matrix(p, metric, merge_tol)
    return sym(p.from_eigenbasis(p.to_eigenbasis(egrad) / w))


def exp_map(p, metric, x, exp_domain_eps=EXP_DOMAIN_EPS, merge_tol=MERGE_TOL):
    """Exponential map: follow the geodesic from ``p`` with velocity ``x``.

    Parameters
    ----------
    p : SpdPoint
    metric : MetricSpec
    x : ndarray, shape (n, n)
        Symmetric tangent vector.
    exp_domain_eps : float, default=1e-12
        For the alpha family with ``alpha != 0`` the geodesic formula
        requires ``I + Y`` positive definite where
        ``Y = L(2 alpha x)``; below this eigenvalue floor the step is
        rejected so the caller can shrink it.

    Returns
    -------
    SpdPoint

    Raises
    ------
    ExpDomainViolation
        If the step leaves the admissible region (``alpha != 0`` only).
    """
    if not np.any(x):
        return p
    if not metric.is_alpha:
        ph = p.power(0.5)
        pih = p.power(-0.5)
        qw, lw = eigh_desc(pih @ x @ pih)
        inner = (qw * np.exp(lw)) @ qw.T
        qr, lr = eigh_desc(ph @ inner @ ph)
        return SpdPoint.from_eig(qr, lr)
    alpha = metric.alpha
    if alpha == 0.0:
        z = p.logm() + frechet_from_eig(
            p.q, p.lam, np.log, lambda t: 1.0 / t, x, merge_tol
        )
        qz, lz = eigh_desc(z)
        return SpdPoint.from_eig(qz, np.exp(lz))
    y = l_operator(p, alpha, 2.0 * alpha * x, merge_tol)
    iy = sym(np.eye(p.n) + y)
    lam_min = float(np.linalg.eigvalsh(iy)[0])
    if lam_min <= exp_domain_eps:
        raise ExpDomainViolation(lam_min)
    qm, mu = eigh_desc(iy @ p.power(2.0 * alpha) @ iy)
    if mu[-1] <= 0.0:
        raise ExpDomainViolation(float(mu[-1]))
    return SpdPoint.from_eig(qm, mu ** (1.0 / (2.0 * alpha)))


def retract(p, metric, x, merge_tol=MERGE_TOL):
    """First-order retraction used for trust-region trial points.

    Coincides with :func:`exp_map` on the exponential map's domain. For the
    alpha family with ``alpha != 0`` it keeps evaluating the closed-form
    geodesic expression when ``I + Y`` turns indefinite: the congruence
    still produces an SPD point, so the map remains a smooth retraction
    into the manifold where the geodesic itself would have left the
    admissible region. Raises only when the evaluation degenerates to a
    numerically singular point.
    """
    if not metric.is_alpha or metric.alpha == 0.0:
        return exp_map(p, metric, x, merge_tol=merge_tol)
    if not np.any(x):
        return p
    alpha = metric.alpha
    y = l_operator(p, alpha, 2.0 * alpha * x, merge_tol)
    iy = sym(np.eye(p.n) + y)
    qm, mu = eigh_desc(iy @ p.power(2.0 * alpha) @ iy)
    if mu[-1] <= 0.0:
        raise ExpDomainViolation(float(mu[-1]))
    return SpdPoint.from_eig(qm, mu ** (1.0 / (2.0 * alpha)))


def distance(p, r, metric):
    """Geodesic distance between two SPD points under the chosen metric.

    Closed forms: for ``alpha != 0`` a scaled Procrustes-type expression in
    the ``2 alpha`` powers (the trace argument is clamped at zero against
    removable negativity); for ``alpha == 0`` the log-Euclidean distance
    ``||log P - log R||_F``; for affine-invariant
    ``||log(P^{-1/2} R P^{-1/2})||_F``.
    """
    if not metric.is_alpha:
        pih = p.power(-0.5)
        mu = np.linalg.eigvalsh(sym(pih @ r.mat @ pih))
        return float(np.linalg.norm(np.log(mu)))
    alpha = metric.alpha
    if alpha == 0.0:
        return frob(p.logm() - r.logm())
    pa = p.power(alpha)
    mu = np.linalg.eigvalsh(sym(pa @ r.power(2.0 * alpha) @ pa))
    cross = np.sqrt(np.clip(mu, 0.0, None)).sum()
    tr_arg = float(
        np.sum(p.lam ** (2.0 * alpha)) + np.sum(r.lam ** (2.0 * alpha)) - 2.0 * cross
    )
    return math.sqrt(max(tr_arg, 0.0)) / abs(alpha)


def tangent_dim(n):
    """Dimension of the tangent space, ``n (n + 1) / 2``."""
    return n * (n + 1) // 2


def to_coords(p, y):
    """Coordinates of a symmetric matrix in the eigen-adapted basis.

    The basis is Frobenius-orthonormal: rotated diagonal elements first,
    then rotated off-diagonal pairs in row-major ``(i, j)`` order with
    ``i < j``. Round trip with :func:`from_coords` is the identity and
    Frobenius inner products become dot products of coordinates.
    """
    yt = p.to_eigenbasis(y)
    iu = np.triu_indices(p.n, 1)
    return np.concatenate([np.diagonal(yt), _SQRT2 * yt[iu]])


def from_coords(p, c):
    """Inverse of :func:`to_coords`."""
    n = p.n
    c = np.asarray(c, dtype=float)
    yt = np.zeros((n, n))
    yt[np.diag_indices(n)] = c[:n]
    iu = np.triu_indices(n, 1)
    yt[iu] = c[n:] / _SQRT2
    yt = yt + np.triu(yt, 1).T
    return sym(p.from_eigenbasis(yt))


def basis_mats(p):
    """Stack of the eigen-adapted orthonormal basis of symmetric matrices.

    Returns an array of shape ``(d, n, n)`` in coordinate slot order.
    """
    q = p.q
    n = p.n
    diag = np.einsum("ik,jk->kij", q, q)
    iu, ju = np.triu_indices(n, 1)
    qi = q[:, iu]
    qj = q[:, ju]
    off = (np.einsum("ik,jk->kij", qi, qj) + np.einsum("ik,jk->kij", qj, qi)) / _SQRT2
    return np.concatenate([diag, off], axis=0)


def metric_coord_diag(p, metric, merge_tol=MERGE_TOL):
    """Diagonal of the metric matrix in eigen-adapted coordinates.

    The metric matrix is diagonal in this basis: entries ``w_ii`` on the
    diagonal slots and ``w_ij / 2`` on the off-diagonal slots.
    """
    w = weight_matrix(p, metric, merge_tol)
    iu = np.triu_indices(p.n, 1)
    return np.concatenate([w.diagonal(), w[iu]])
