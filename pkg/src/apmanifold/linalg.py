"""Dense symmetric linear algebra kernels.

Everything downstream (metrics, exponential maps, Hessian diagnostics) is
built on the primitives in this module: guarded eigendecomposition of
symmetric matrices, spectral matrix functions, first divided differences,
Daleckii-Krein Frechet derivatives, and Lyapunov solves in an eigenbasis.

All functions are pure and all returned objects are immutable in spirit:
nothing here mutates its inputs, and :class:`SpdPoint` caches one
eigendecomposition that every later operation on the same point reuses.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, NotPositiveDefinite

# Relative gap below which two eigenvalues are treated as coincident and
# divided differences switch to their analytic limit.
MERGE_TOL = 1e-9


def sym(m):
    """Symmetric part ``(m + m.T) / 2`` of a square matrix."""
    return 0.5 * (m + m.T)


def frob(m):
    """Frobenius norm."""
    return float(np.linalg.norm(m))


def eigh_desc(m):
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Parameters
    ----------
    m : ndarray, shape (n, n)
        Symmetric matrix (symmetrized internally before factorization).

    Returns
    -------
    q : ndarray, shape (n, n)
        Orthogonal eigenvector matrix, columns matching ``lam``.
    lam : ndarray, shape (n,)
        Eigenvalues in descending order.
    """
    lam, q = np.linalg.eigh(sym(np.asarray(m, dtype=float)))
    return q[:, ::-1], lam[::-1]


@dataclass(frozen=True)
class SpdPoint:
    """A point on the SPD manifold with its cached eigendecomposition.

    Attributes
    ----------
    mat : ndarray, shape (n, n)
        The SPD matrix itself (exactly symmetric).
    q : ndarray, shape (n, n)
        Orthogonal eigenvector matrix.
    lam : ndarray, shape (n,)
        Positive eigenvalues, sorted descending.
    """

    mat: np.ndarray
    q: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.mat.setflags(write=False)
        self.q.setflags(write=False)
        self.lam.setflags(write=False)

    @property
    def n(self):
        return self.lam.shape[0]

    @property
    def cond(self):
        """Condition number ``lam_max / lam_min``."""
        return float(self.lam[0] / self.lam[-1])

    @classmethod
    def from_eig(cls, q, lam):
        """Build a point from an eigenpair without refactorizing.

        Eigenvalues are sorted descending (columns of ``q`` permuted to
        match) and the matrix is reassembled symmetrically.
        """
        lam = np.asarray(lam, dtype=float)
        order = np.argsort(-lam, kind="stable")
        lam = lam[order]
        q = np.ascontiguousarray(np.asarray(q, dtype=float)[:, order])
        if lam[-1] <= 0.0:
            raise NotPositiveDefinite(lam[-1])
        mat = sym((q * lam) @ q.T)
        return cls(mat=mat, q=q, lam=lam)

    def power(self, s):
        """Fractional power ``P**s`` as a plain symmetric matrix."""
        return sym((self.q * self.lam**s) @ self.q.T)

    def power_point(self, s):
        """Fractional power ``P**s`` as an :class:`SpdPoint` (no new eigh)."""
        return SpdPoint.from_eig(self.q, self.lam**s)

    def logm(self):
        """Principal matrix logarithm as a plain symmetric matrix."""
        return sym((self.q * np.log(self.lam)) @ self.q.T)

    def to_eigenbasis(self, m):
        """Conjugate ``m`` into the eigenbasis: ``q.T @ m @ q``."""
        return self.q.T @ m @ self.q

    def from_eigenbasis(self, m_tilde):
        """Conjugate ``m_tilde`` back out of the eigenbasis: ``q @ m_tilde @ q.T``."""
        return self.q @ m_tilde @ self.q.T


def eig_sym(m, spd_floor=0.0):
    """Eigendecompose a symmetric matrix and certify positive definiteness.

    Parameters
    ----------
    m : ndarray, shape (n, n)
        Symmetric matrix. Inputs are symmetrized via ``(m + m.T) / 2`` so
        floating-point drift from optimizer updates cannot accumulate.
    spd_floor : float, default=0.0
        Eigenvalues at or below this value raise; the default demands
        strict positivity.

    Returns
    -------
    SpdPoint

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue is <= ``spd_floor``. This is the signal
        that an optimizer iterate left the manifold.
    """
    m = sym(np.asarray(m, dtype=float))
    q, lam = eigh_desc(m)
    if lam[-1] <= spd_floor:
        raise NotPositiveDefinite(lam[-1], spd_floor)
    return SpdPoint(mat=m, q=q, lam=lam)


def matrix_function(p, f):
    """Classical spectral matrix function ``f(P) = Q f(Lambda) Q.T``.

    Parameters
    ----------
    p : SpdPoint
    f : callable
        Scalar function applied to the eigenvalues. Must be defined on the
        whole spectrum.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric matrix.

    Raises
    ------
    DomainError
        If ``f`` produces a non-finite value on some eigenvalue.
    """
    with np.errstate(all="ignore"):
        vals = np.asarray(f(p.lam), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"function undefined on part of the spectrum {p.lam}")
    return sym((p.q * vals) @ p.q.T)


def loewner(f, f_prime, lam, merge_tol=MERGE_TOL):
    """Matrix of first divided differences of ``f`` over a spectrum.

    ``F[i, j] = (f(lam_i) - f(lam_j)) / (lam_i - lam_j)`` when the gap
    ``|lam_i - lam_j|`` exceeds ``merge_tol * (|lam_i| + |lam_j|)``, and
    ``f'((lam_i + lam_j) / 2)`` otherwise. The switch avoids catastrophic
    cancellation at (near-)coincident eigenvalues while staying within
    O(merge_tol) of the exact value.

    Parameters
    ----------
    f, f_prime : callable
        Scalar function and its derivative, defined on the spectrum and
        vectorized over ndarrays (numpy ufuncs or expressions built from
        them).
    lam : ndarray, shape (n,)
    merge_tol : float, default=1e-9
        Relative gap threshold.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric; diagonal entries equal ``f'(lam_i)``.
    """
    lam = np.asarray(lam, dtype=float)
    li = lam[:, None]
    lj = lam[None, :]
    gap = li - lj
    merged = np.abs(gap) <= merge_tol * (np.abs(li) + np.abs(lj))
    with np.errstate(all="ignore"):
        fi = np.asarray(f(lam), dtype=float)
        quot = (fi[:, None] - fi[None, :]) / np.where(merged, 1.0, gap)
        limit = np.asarray(f_prime(0.5 * (li + lj)), dtype=float)
    out = np.where(merged, limit, quot)
    if not np.all(np.isfinite(out)):
        raise DomainError("divided differences are not finite on this spectrum")
    return out


def frechet_from_eig(q, lam, f, f_prime, e, merge_tol=MERGE_TOL):
    """Daleckii-Krein Frechet derivative given an explicit eigenpair.

    Computes ``(Df)(Q diag(lam) Q.T)[e] = Q (F ∘ (Q.T e Q)) Q.T`` with ``F``
    the divided-difference matrix of ``f`` over ``lam``. The base point only
    needs a real spectrum, not positivity, so this low-level form also
    serves derivatives of ``exp`` at matrix logarithms.
    """
    fdd = loewner(f, f_prime, lam, merge_tol)
    return q @ (fdd * (q.T @ e @ q)) @ q.T


def frechet_derivative(p, f, f_prime, e, merge_tol=MERGE_TOL):
    """Frechet derivative of the matrix function ``f`` at an SPD point.

    Parameters
    ----------
    p : SpdPoint
    f, f_prime : callable
        Scalar function and derivative, defined on the spectrum of ``p``.
    e : ndarray, shape (n, n)
        Symmetric direction.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric matrix ``(Df)(P)[E]``.
    """
    return sym(frechet_from_eig(p.q, p.lam, f, f_prime, e, merge_tol))


def lyapunov_solve(m, rhs):
    """Solve ``S M + M S = RHS`` for symmetric ``S`` with ``M`` SPD.

    Works in the eigenbasis of ``M`` where the equation is entrywise:
    ``S~[i, j] = RHS~[i, j] / (lam_i + lam_j)``. The denominator is always
    positive, so the solution exists and is unique.

    Parameters
    ----------
    m : SpdPoint
    rhs : ndarray, shape (n, n)
        Symmetric right-hand side.

    Returns
    -------
    ndarray, shape (n, n)
        Symmetric solution.
    """
    rt = m.to_eigenbasis(rhs)
    st = rt / (m.lam[:, None] + m.lam[None, :])
    return sym(m.from_eigenbasis(st))


def haar_orthogonal(n, seed):
    """Draw an orthogonal matrix from the Haar distribution.

    QR factorization of an n-by-n standard Gaussian matrix with the sign of
    the R diagonal folded into Q, which makes the draw Haar-distributed and
    deterministic for a fixed seed.

    Parameters
    ----------
    n : int
    seed : int or numpy.random.Generator

    Returns
    -------
    ndarray, shape (n, n)
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    signs = np.where(np.diag(r) >= 0.0, 1.0, -1.0)
    return q * signs
