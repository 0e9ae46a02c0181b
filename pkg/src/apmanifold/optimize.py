"""Riemannian steepest descent and trust-region solvers.

Both solvers work over any metric and any objective exposing ``cost``,
``egrad`` and ``ehess``. Steepest descent follows the exponential map of
the negated Riemannian gradient with a fixed or Armijo step; the
trust-region method solves its subproblem with a Steihaug-Toint truncated
conjugate gradient run directly in the metric inner product, using the
metric-preconditioned Euclidean Hessian as model Hessian (the connection
term it omits is proportional to the gradient, which is exactly the model
error the local theory tolerates).

Runs are single-threaded and deterministic; stopping is on the Euclidean
gradient norm, which is the metric-independent stationarity certificate.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ExpDomainViolation, NotCritical, StepFailure
from .geometry import exp_map, retract, riemannian_gradient, weight_matrix
from .hessian import riemannian_hessian_eigs
from .linalg import frob, sym


@dataclass(frozen=True)
class FixedStep:
    """Fixed step size; halved only on exponential-map domain violations."""

    eta: float
    max_backtracks: int = 30

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError("eta must be positive")


@dataclass(frozen=True)
class ArmijoStep:
    """Backtracking line search with a sufficient-decrease test."""

    initial: float = 1.0
    shrink: float = 0.5
    c1: float = 1e-4
    max_backtracks: int = 30

    def __post_init__(self):
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must lie in (0, 1)")


@dataclass(frozen=True)
class RsdConfig:
    step_rule: object = field(default_factory=ArmijoStep)
    max_iters: int = 1000
    grad_tol: float = 1e-6
    record_every: int = 1

    def __post_init__(self):
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1 or self.record_every < 1:
            raise ValueError("max_iters and record_every must be >= 1")


@dataclass(frozen=True)
class RtrConfig:
    delta0: float = 1.0
    delta_max: float = 10.0
    rho_accept: float = 0.1
    rho_expand: float = 0.75
    shrink_factor: float = 0.25
    expand_factor: float = 2.0
    tcg_kappa: float = 0.1
    tcg_theta: float = 1.0
    max_iters: int = 100
    max_inner: int = 0  # 0 means the matrix dimension n
    grad_tol: float = 1e-6
    record_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.delta0 <= self.delta_max:
            raise ValueError("need 0 < delta0 <= delta_max")
        if not 0.0 < self.rho_accept < self.rho_expand < 1.0:
            raise ValueError("need 0 < rho_accept < rho_expand < 1")
        if self.grad_tol <= 0.0:
            raise ValueError("grad_tol must be positive")


@dataclass
class RunTrace:
    """Per-iteration records and run summary of a solver run.

    ``dist_pstar`` is the Frobenius distance to the supplied optimum, NaN
    when no optimum was supplied. ``wall_ms`` is cumulative monotonic wall
    time; it never enters any correctness decision. The trust-region
    solver additionally records the model decrease of each accepted step
    next to the decrease of the corresponding Cauchy point.
    """

    iteration: np.ndarray
    cost: np.ndarray
    egrad_norm: np.ndarray
    dist_pstar: np.ndarray
    wall_ms: np.ndarray
    converged: bool
    iters: int
    total_ms: float
    final: object
    model_decrease: np.ndarray = None
    cauchy_decrease: np.ndarray = None

    @property
    def has_dist(self):
        return bool(np.any(np.isfinite(self.dist_pstar)))


class _Recorder:
    def __init__(self, p_star, record_every):
        self.p_star = p_star
        self.every = record_every
        self.rows = []
        self.t0 = time.perf_counter()

    def record(self, k, cost, gn, p, force=False):
        if k % self.every and not force:
            return
        dist = frob(p.mat - self.p_star.mat) if self.p_star is not None else math.nan
        self.rows.append(
            (k, cost, gn, dist, (time.perf_counter() - self.t0) * 1000.0)
        )

    def finish(self, converged, iters, p):
        cols = list(zip(*self.rows))
        return RunTrace(
            iteration=np.array(cols[0], dtype=int),
            cost=np.array(cols[1]),
            egrad_norm=np.array(cols[2]),
            dist_pstar=np.array(cols[3]),
            wall_ms=np.array(cols[4]),
            converged=converged,
            iters=iters,
            total_ms=(time.perf_counter() - self.t0) * 1000.0,
            final=p,
        )


def rsd_solve(problem, metric, p0, cfg=None, p_star=None, callback=None):
    """Riemannian steepest descent.

    Parameters
    ----------
    problem : objective with ``cost`` / ``egrad``
    metric : MetricSpec
    p0 : SpdPoint
        Starting iterate (the benchmark protocol starts at the identity).
    cfg : RsdConfig
    p_star : SpdPoint, optional
        Known optimum; enables the distance column of the trace.
    callback : callable, optional
        Called as ``callback(k, p)`` at every iterate (before stepping).

    Returns
    -------
    RunTrace

    Raises
    ------
    StepFailure
        If no admissible step exists within the backtracking budget.
    """
    cfg = cfg or RsdConfig()
    rule = cfg.step_rule
    rec = _Recorder(p_star, cfg.record_every)
    p = p0
    converged = False
    k = 0
    while True:
        cost = problem.cost(p.mat)
        eg = problem.egrad(p.mat)
        gn = frob(eg)
        stopping = gn < cfg.grad_tol or k >= cfg.max_iters
        rec.record(k, cost, gn, p, force=stopping)
        if callback is not None:
            callback(k, p)
        if gn < cfg.grad_tol:
            converged = True
            break
        if k >= cfg.max_iters:
            break
        grad = riemannian_gradient(p, metric, eg)
        try:
            p = _rsd_step(problem, metric, p, grad, cost, eg, rule)
        except StepFailure as err:
            err.trace = rec.finish(False, k, p)
            raise
        k += 1
    return rec.finish(converged, k, p)


def _rsd_step(problem, metric, p, grad, cost, eg, rule):
    if isinstance(rule, FixedStep):
        eta = rule.eta
        for _ in range(rule.max_backtracks + 1):
            try:
                return exp_map(p, metric, -eta * grad)
            except ExpDomainViolation:
                eta *= 0.5
        raise StepFailure("no admissible fixed step after halving budget")
    # Armijo: sufficient decrease measured against the metric norm of the
    # gradient, so the guarantee is geometry-consistent.
    gg = float(np.sum(eg * grad))  # g(grad, grad) = <egrad, grad>_F
    eta = rule.initial
    for _ in range(rule.max_backtracks + 1):
        try:
            cand = exp_map(p, metric, -eta * grad)
        except ExpDomainViolation:
            eta *= rule.shrink
            continue
        if problem.cost(cand.mat) <= cost - rule.c1 * eta * gg:
            return cand
        eta *= rule.shrink
    raise StepFailure("Armijo search exhausted its backtracking budget")


def _tcg(grad_t, h_apply, gdot, delta, kappa, theta, max_inner):
    """Steihaug-Toint truncated CG in the metric inner product.

    Operates on eigenbasis representations. Returns the step, its model
    decrease, the decrease of the Cauchy point, and whether the boundary
    was hit.
    """

    def boundary_tau(x, d, xx, xd, dd):
        # positive root of ||x + tau d||_g = delta
        return (-xd + math.sqrt(xd * xd + dd * (delta * delta - xx))) / dd

    x = np.zeros_like(grad_t)
    r = grad_t.copy()
    d = -r
    rr = gdot(r, r)
    r0 = math.sqrt(rr)
    stop_res = r0 * min(kappa, r0**theta)
    hit_boundary = False

    hg = h_apply(grad_t)
    ghg = gdot(grad_t, hg)
    if ghg > 0.0:
        t_unc = rr / ghg
        t_star = min(t_unc, delta / r0)
    else:
        t_star = delta / r0
    cauchy_dec = t_star * rr - 0.5 * t_star**2 * ghg

    xx = 0.0
    for _ in range(max_inner):
        hd = h_apply(d)
        dhd = gdot(d, hd)
        xd = gdot(x, d)
        dd = gdot(d, d)
        if dhd <= 0.0:
            tau = boundary_tau(x, d, xx, xd, dd)
            x = x + tau * d
            hit_boundary = True
            break
        a = rr / dhd
        xx_next = xx + 2.0 * a * xd + a * a * dd
        if xx_next >= delta * delta:
            tau = boundary_tau(x, d, xx, xd, dd)
            x = x + tau * d
            hit_boundary = True
            break
        x = x + a * d
        xx = xx_next
        r = r + a * hd
        rr_new = gdot(r, r)
        if math.sqrt(rr_new) <= stop_res:
            rr = rr_new
            break
        d = -r + (rr_new / rr) * d
        rr = rr_new

    model_dec = -(gdot(grad_t, x) + 0.5 * gdot(h_apply(x), x))
    return x, model_dec, cauchy_dec, hit_boundary


def rtr_solve(problem, metric, p0, cfg=None, p_star=None, callback=None):
    """Riemannian trust-region method with truncated CG subproblem solves.

    The subproblem at each iterate minimizes the quadratic model over the
    metric ball of radius ``delta``; trial points go through the
    closed-form retraction, and a degenerate retraction rejects the step
    and shrinks the radius, preserving the decrease accounting.

    Raises
    ------
    StepFailure
        If the radius underflows below ``1e-14 * delta_max``.
    """
    cfg = cfg or RtrConfig()
    rec = _Recorder(p_star, cfg.record_every)
    p = p0
    delta = cfg.delta0
    max_inner = cfg.max_inner or p.n
    converged = False
    model_rows = []
    k = 0
    cost = problem.cost(p.mat)
    eg = problem.egrad(p.mat)
    while True:
        gn = frob(eg)
        stopping = gn < cfg.grad_tol or k >= cfg.max_iters
        rec.record(k, cost, gn, p, force=stopping)
        if callback is not None:
            callback(k, p)
        if gn < cfg.grad_tol:
            converged = True
            break
        if k >= cfg.max_iters:
            break

        w = weight_matrix(p, metric)
        q = p.q

        def gdot(u, v):
            return float(np.sum(w * u * v))

        def h_apply(u_t):
            u = q @ u_t @ q.T
            return (q.T @ problem.ehess(p.mat, u) @ q) / w

        grad_t = (q.T @ eg @ q) / w
        x_t, model_dec, cauchy_dec, hit_boundary = _tcg(
            grad_t, h_apply, gdot, delta, cfg.tcg_kappa, cfg.tcg_theta, max_inner
        )

        accepted = False
        if model_dec > 0.0:
            try:
                cand = retract(p, metric, sym(q @ x_t @ q.T))
            except ExpDomainViolation:
                cand = None
            if cand is not None:
                cand_cost = problem.cost(cand.mat)
                # Regularize the ratio against cancellation once the actual
                # reduction approaches the rounding floor of the cost.
                reg = 1e3 * np.finfo(float).eps * max(1.0, abs(cost))
                rho = ((cost - cand_cost) + reg) / (model_dec + reg)
                if rho >= cfg.rho_accept:
                    accepted = True
                    p = cand
                    cost = cand_cost
                    eg = problem.egrad(p.mat)
                    model_rows.append((model_dec, cauchy_dec))
                if rho > cfg.rho_expand and hit_boundary:
                    delta = min(cfg.expand_factor * delta, cfg.delta_max)
        if not accepted:
            delta *= cfg.shrink_factor
            if delta < 1e-14 * cfg.delta_max:
                err = StepFailure("trust radius underflow")
                err.trace = rec.finish(False, k, p)
                raise err
        k += 1
    trace = rec.finish(converged, k, p)
    if model_rows:
        md, cd = zip(*model_rows)
        trace.model_decrease = np.array(md)
        trace.cauchy_decrease = np.array(cd)
    return trace


def make_step_rule_reference(metric, problem, p_star, report_grad_tol=1e-6):
    """Theory-matched fixed step size ``1 / lambda_max`` of the Hessian.

    Used by the fixed-step steepest-descent mode that the local rate
    measurements run with. Requires ``p_star`` to be a critical point.
    """
    gn = frob(problem.egrad(p_star.mat))
    if gn > report_grad_tol:
        raise NotCritical(gn, report_grad_tol)
    eigs = riemannian_hessian_eigs(problem, p_star, metric)
    return 1.0 / float(eigs[-1])
