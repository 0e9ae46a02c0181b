"""Spectrum diagnostics of the Riemannian Hessian at (near-)critical points.

At a critical point the Riemannian Hessian matrix in the eigen-adapted
basis is the inverse metric matrix times the Euclidean Hessian matrix.
This module assembles both dense matrices, extracts extreme eigenvalues
through an SPD-congruent symmetrization (the plain product is not
symmetric), and packages the numbers that govern local convergence rates:
condition numbers, the steepest-descent contraction factor at a given step
size, and the trust-region constant when its Lipschitz inputs are supplied.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import NotCritical
from .geometry import basis_mats, metric_coord_diag
from .linalg import frob, sym

REPORT_GRAD_TOL = 1e-6


@dataclass(frozen=True)
class HessianReport:
    """Spectral summary of the Riemannian Hessian at a critical point.

    ``rho_star`` is the predicted steepest-descent contraction factor
    ``max(|1 - eta mu|, |1 - eta L|)`` at the supplied step size.
    ``c_alpha`` is the trust-region local constant; it is only filled when
    the Lipschitz-type inputs are supplied, since they have no constructive
    recipe.
    """

    metric_label: str
    alpha: float  # nan for the affine-invariant baseline
    n: int
    kappa_p: float
    lambda_min: float
    lambda_max: float
    kappa_hess: float
    mu_lower: float
    l_upper: float
    eta: float
    rho_star: float
    c_alpha: float = float("nan")

    def to_dict(self):
        """Flat key-value record for CSV/JSON emission."""
        return {
            "metric": self.metric_label,
            "alpha": self.alpha,
            "n": self.n,
            "kappa_p": self.kappa_p,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "kappa_hess": self.kappa_hess,
            "mu_lower": self.mu_lower,
            "l_upper": self.l_upper,
            "eta": self.eta,
            "rho_star": self.rho_star,
            "c_alpha": self.c_alpha,
        }


def euclidean_hessian_matrix(problem, p):
    """Dense matrix of the Euclidean Hessian in the eigen-adapted basis.

    Entry ``(k, l)`` is the Frobenius pairing of basis element ``k`` with
    the Hessian applied to basis element ``l``; the result is symmetrized
    against round-off. Assembly is dense, O(d) Hessian-vector products
    plus one d-by-d Gram product, which is fine at desk scale (n <= 60).
    """
    basis = basis_mats(p)
    d = basis.shape[0]
    applied = np.empty_like(basis)
    for l in range(d):
        applied[l] = problem.ehess(p.mat, basis[l])
    flat = basis.reshape(d, -1)
    return sym(flat @ applied.reshape(d, -1).T)


def riemannian_hessian_matrix(problem, p, metric, ehess_matrix=None):
    """Matrix of the Riemannian Hessian in the eigen-adapted basis.

    Valid at critical points, where the connection term vanishes; the
    result is the inverse (diagonal) metric matrix times the Euclidean
    Hessian matrix. Pass ``ehess_matrix`` to reuse an assembled Euclidean
    Hessian across metrics.
    """
    if ehess_matrix is None:
        ehess_matrix = euclidean_hessian_matrix(problem, p)
    m_diag = metric_coord_diag(p, metric)
    return ehess_matrix / m_diag[:, None]


def riemannian_hessian_eigs(problem, p, metric, ehess_matrix=None):
    """Eigenvalues of the Riemannian Hessian matrix, ascending.

    Computed on the congruent symmetrization
    ``M^{-1/2} [ehess] M^{-1/2}``, which shares the spectrum of the
    non-symmetric product but keeps the eigenvalues exactly real.
    """
    if ehess_matrix is None:
        ehess_matrix = euclidean_hessian_matrix(problem, p)
    m_half = 1.0 / np.sqrt(metric_coord_diag(p, metric))
    s = sym(m_half[:, None] * ehess_matrix * m_half[None, :])
    return np.linalg.eigvalsh(s)


def rtr_constant(mu, l, beta_l2, beta_h, theta):
    """Trust-region local constant from Hessian extremes and Lipschitz inputs."""
    return (1.0 / mu) * (beta_l2 / mu**2 + beta_h / mu) * l**2 + l ** (1.0 + theta) / mu


def spectrum_report(
    problem,
    p_star,
    metric,
    eta,
    report_grad_tol=REPORT_GRAD_TOL,
    ehess_matrix=None,
    constants=None,
):
    """Full spectral report of the Riemannian Hessian at a critical point.

    Parameters
    ----------
    problem : objective with ``cost`` / ``egrad`` / ``ehess``
    p_star : SpdPoint
        Must be a numerical critical point: the Euclidean gradient norm has
        to be at most ``report_grad_tol``, otherwise the Hessian identity
        used here is meaningless and the report refuses.
    metric : MetricSpec
    eta : float
        Step size at which the steepest-descent factor is evaluated.
    ehess_matrix : ndarray, optional
        Previously assembled Euclidean Hessian matrix at ``p_star``.
    constants : tuple (beta_l2, beta_h, theta), optional
        Fills the trust-region constant when given.

    Raises
    ------
    NotCritical
    """
    gn = frob(problem.egrad(p_star.mat))
    if gn > report_grad_tol:
        raise NotCritical(gn, report_grad_tol)
    if ehess_matrix is None:
        ehess_matrix = euclidean_hessian_matrix(problem, p_star)
    eigs = riemannian_hessian_eigs(problem, p_star, metric, ehess_matrix)
    eucl = np.linalg.eigvalsh(ehess_matrix)
    lo, hi = float(eigs[0]), float(eigs[-1])
    c_alpha = float("nan")
    if constants is not None:
        beta_l2, beta_h, theta = constants
        c_alpha = rtr_constant(lo, hi, beta_l2, beta_h, theta)
    return HessianReport(
        metric_label=metric.label,
        alpha=metric.alpha if metric.is_alpha else float("nan"),
        n=p_star.n,
        kappa_p=p_star.cond,
        lambda_min=lo,
        lambda_max=hi,
        kappa_hess=hi / lo,
        mu_lower=float(eucl[0]),
        l_upper=float(eucl[-1]),
        eta=float(eta),
        rho_star=max(abs(1.0 - eta * lo), abs(1.0 - eta * hi)),
        c_alpha=c_alpha,
    )


def fit_loglog_slope(kappas, values):
    """Least-squares slope of ``log(values)`` against ``log(kappas)``.

    Used to measure how fast the Hessian condition number degrades with
    the conditioning of the optimum; the expected slope is
    ``2 |alpha - 1|``.
    """
    x = np.log(np.asarray(kappas, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
