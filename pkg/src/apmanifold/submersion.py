"""Quotient-map machinery behind the alpha geometry.

The alpha metric arises from a Riemannian submersion of the general linear
group (with the flat Frobenius metric) onto the SPD manifold,
``A -> (alpha^2 A A')^(1/(2 alpha))``. This module implements the map, its
differential, the horizontal projection of ambient directions, horizontal
lifts of tangent vectors, and a finite-difference Riemannian Hessian built
by differentiating the lifted Euclidean gradient upstairs and projecting
back down.

The Hessian here is a test oracle: it exists to cross-check the dense
Hessian matrices assembled elsewhere, not to sit in solver hot paths.
"""

import math

import numpy as np

from .exceptions import NotPositiveDefinite, SingularInput
from .linalg import SpdPoint, eig_sym, eigh_desc, frechet_from_eig, frob, lyapunov_solve, sym

_SQRT2 = math.sqrt(2.0)

# Relative spectral floor below which A A' counts as numerically singular.
SINGULAR_RTOL = 1e-13


def pi_alpha(a, alpha):
    """Project an invertible matrix to the SPD manifold.

    Computes ``(alpha^2 A A')^(1/(2 alpha))`` through the eigendecomposition
    of the Gram matrix.

    Raises
    ------
    SingularInput
        If ``A A'`` is numerically singular.
    """
    if alpha == 0.0:
        raise ValueError("alpha must be nonzero")
    q, mu = eigh_desc(alpha * alpha * (a @ a.T))
    if mu[-1] <= SINGULAR_RTOL * mu[0]:
        raise SingularInput("A A' is numerically singular")
    return SpdPoint.from_eig(q, mu ** (1.0 / (2.0 * alpha)))


def _chain_exp_log(p, alpha, s):
    """Apply ``D exp(log P) o D log(P^(2 alpha))`` to a symmetric matrix."""
    t = frechet_from_eig(p.q, p.lam ** (2.0 * alpha), np.log, lambda v: 1.0 / v, s)
    return frechet_from_eig(p.q, np.log(p.lam), np.exp, np.exp, t)


def d_pi_alpha(a, alpha, x):
    """Differential of the projection at ``A`` in an ambient direction.

    ``(alpha / 2) Dexp(log P) o Dlog(P^(2 alpha)) [X A' + A X']`` with
    ``P`` the projected point. Vanishes exactly on the vertical space
    ``Skew(n) (A')^{-1}``.
    """
    p = pi_alpha(a, alpha)
    s = x @ a.T + a @ x.T
    return sym(0.5 * alpha * _chain_exp_log(p, alpha, s))


def horizontal_project(a, z):
    """Orthogonal projection of an ambient direction onto ``Sym(n) A``.

    The symmetric factor solves the Lyapunov equation
    ``S M + M S = Z A' + A Z'`` with ``M = A A'``; the projection is then
    ``S A``. Idempotent and Frobenius-self-adjoint.
    """
    try:
        m = eig_sym(a @ a.T)
    except NotPositiveDefinite as err:
        raise SingularInput("A A' is numerically singular") from err
    if m.lam[-1] <= SINGULAR_RTOL * m.lam[0]:
        raise SingularInput("A A' is numerically singular")
    s = lyapunov_solve(m, z @ a.T + a @ z.T)
    return s @ a


def _sym_to_vec(y):
    n = y.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([np.diagonal(y), _SQRT2 * y[iu]])


def _vec_to_sym(v, n):
    y = np.zeros((n, n))
    y[np.diag_indices(n)] = v[:n]
    iu = np.triu_indices(n, 1)
    y[iu] = v[n:] / _SQRT2
    return y + np.triu(y, 1).T


def horizontal_lift(a, alpha, x):
    """Horizontal lift of a tangent vector at ``pi_alpha(A)``.

    Finds the symmetric ``S`` with ``D pi_alpha(A)[S A] = X`` by assembling
    the linear map in an orthonormal basis of the symmetric matrices and
    solving the dense system; the lift is ``S A``. Dense and O(d^2)
    differentials, intended for small test problems.
    """
    n = a.shape[0]
    d = n * (n + 1) // 2
    t = np.empty((d, d))
    for l in range(d):
        e = np.zeros(d)
        e[l] = 1.0
        t[:, l] = _sym_to_vec(d_pi_alpha(a, alpha, _vec_to_sym(e, n) @ a))
    s_vec = np.linalg.solve(t, _sym_to_vec(x))
    return _vec_to_sym(s_vec, n) @ a


def lifted_gradient(problem, a, alpha):
    """Euclidean gradient of the pulled-back cost on the ambient group.

    For ``f~ = f o pi_alpha`` the gradient at ``A`` is
    ``alpha * (Dexp o Dlog)[grad f(P)] * A`` by the chain rule and the
    self-adjointness of the spectral multiplier; at a fiber point it is the
    horizontal lift of the Riemannian gradient.
    """
    p = pi_alpha(a, alpha)
    w = _chain_exp_log(p, alpha, problem.egrad(p.mat))
    return alpha * sym(w) @ a


def lifted_hessian_oracle(problem, p, alpha, x, fd_step_rel=1e-5):
    """Riemannian Hessian-vector product via the submersion, for tests.

    Lifts ``x`` horizontally at the symmetric fiber representative
    ``A0 = P^alpha / alpha``, differentiates the lifted Euclidean gradient
    by central finite differences along the lift, projects the result to
    the horizontal space and pushes it back down.

    Parameters
    ----------
    problem : objective with ``egrad``
    p : SpdPoint
    alpha : float, nonzero
    x : ndarray, shape (n, n)
        Symmetric tangent direction.
    fd_step_rel : float, default=1e-5
        Finite-difference step relative to ``||A0||_F / ||lift||_F``.
    """
    if alpha == 0.0:
        raise ValueError("alpha must be nonzero")
    if not np.any(x):
        return np.zeros_like(x)
    a0 = p.power(alpha) / alpha
    x_lift = horizontal_lift(a0, alpha, x)
    h = fd_step_rel * frob(a0) / frob(x_lift)
    g_plus = lifted_gradient(problem, a0 + h * x_lift, alpha)
    g_minus = lifted_gradient(problem, a0 - h * x_lift, alpha)
    dgrad = (g_plus - g_minus) / (2.0 * h)
    return d_pi_alpha(a0, alpha, horizontal_project(a0, dgrad))
