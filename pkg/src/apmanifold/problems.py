"""Benchmark objectives and spectral instance generators.

Three objectives over the SPD manifold, each with closed-form Euclidean
gradient and Hessian-vector product:

* weighted least squares  ``f(P) = 0.5 ||A o P - B||_F^2`` (``o`` is the
  Hadamard product);
* trace regression with rank-one sensing,
  ``f(P) = (1/2m) sum_i (a_i' P a_i - y_i)^2``;
* the Sylvester quadratic ``f(P) = 0.5 <P, AP + PB>_F - <C, P>_F``.

Instance generators draw targets with prescribed condition numbers using a
seeded PCG64 generator (``numpy.random.default_rng``); Gaussian variates
come from numpy's ziggurat-based ``standard_normal``, so instances are
bit-reproducible for a fixed seed on a fixed numpy version.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import SpdPoint, haar_orthogonal, sym


@dataclass(frozen=True)
class WlsProblem:
    """Hadamard-weighted least squares toward a target matrix."""

    a: np.ndarray
    b: np.ndarray

    def cost(self, p):
        return 0.5 * float(np.sum((self.a * p - self.b) ** 2))

    def egrad(self, p):
        return (self.a * p - self.b) * self.a

    def ehess(self, p, u):
        return self.a * u * self.a


@dataclass(frozen=True)
class TraceRegressionProblem:
    """Rank-one trace regression: sensing vectors in columns of ``vecs``."""

    vecs: np.ndarray  # shape (n, m)
    y: np.ndarray  # shape (m,)

    @property
    def m(self):
        return self.y.shape[0]

    def _quad(self, p):
        return np.einsum("im,im->m", self.vecs, p @ self.vecs)

    def cost(self, p):
        r = self._quad(p) - self.y
        return 0.5 * float(r @ r) / self.m

    def egrad(self, p):
        r = self._quad(p) - self.y
        return sym((self.vecs * r) @ self.vecs.T) / self.m

    def ehess(self, p, u):
        t = np.einsum("im,im->m", self.vecs, u @ self.vecs)
        return sym((self.vecs * t) @ self.vecs.T) / self.m


@dataclass(frozen=True)
class SylvesterProblem:
    """Convex quadratic whose stationarity condition is a Sylvester equation.

    ``a`` and ``b`` are SPD, so the objective is strictly convex on the
    symmetric matrices and the minimizer is unique. The gradient is the
    symmetric part of ``AP + PB - C``; the cost only sees that part on the
    tangent space, so the pair stays consistent.
    """

    a: SpdPoint
    b: SpdPoint
    c: np.ndarray

    def cost(self, p):
        ap_pb = self.a.mat @ p + p @ self.b.mat
        return 0.5 * float(np.sum(p * ap_pb)) - float(np.sum(self.c * p))

    def egrad(self, p):
        return sym(self.a.mat @ p + p @ self.b.mat) - self.c

    def ehess(self, p, u):
        return sym(self.a.mat @ u + u @ self.b.mat)


@dataclass(frozen=True)
class SpectrumRecipe:
    """Recipe for a target point with a prescribed condition number.

    ``style`` is either ``"decay"`` (geometric interpolation from 1 down to
    ``1 / kappa``) or ``"centered"`` (geometric interpolation from
    ``kappa**(1/2)`` down to ``kappa**(-1/2)``; more generally
    ``lam_i = c tau**(s/2 - s (i-1)/(n-1))`` with ``kappa = tau**s``).
    """

    n: int
    kappa: float
    style: str = "decay"
    seed: int = 0
    c: float = 1.0
    s: float = 1.5

    def __post_init__(self):
        if self.kappa < 1.0:
            raise ValueError("kappa must be >= 1")
        if self.style not in ("decay", "centered"):
            raise ValueError(f"unknown spectrum style {self.style!r}")

    def eigenvalues(self):
        n, kappa = self.n, self.kappa
        if n == 1:
            return np.array([1.0 if self.style == "decay" else self.c])
        t = np.arange(n) / (n - 1)
        if self.style == "decay":
            return kappa**-t
        tau = kappa ** (1.0 / self.s)
        return self.c * tau ** (self.s / 2.0 - self.s * t)


def make_pstar(recipe):
    """Target SPD point with the recipe's spectrum in a Haar-random basis."""
    lam = recipe.eigenvalues()
    q = haar_orthogonal(recipe.n, recipe.seed)
    return SpdPoint.from_eig(q, lam)


def spd_with_condition(n, kappa, rng):
    """Random SPD matrix with eigenvalues geometric from 1 down to 1/kappa."""
    t = np.arange(n) / max(n - 1, 1)
    lam = kappa**-t if n > 1 else np.array([1.0])
    return SpdPoint.from_eig(haar_orthogonal(n, rng), lam)


@dataclass(frozen=True)
class Instance:
    """A generated benchmark instance.

    ``p_star`` is the exact minimizer for the weighted-least-squares and
    Sylvester problems; for noisy trace regression it is the noiseless
    target and ``noiseless`` holds the variant whose minimizer it is.
    """

    kind: str
    problem: object
    p_star: SpdPoint
    params: dict = field(default_factory=dict)
    noiseless: object = None


def make_instances(kind, n, kappa_pstar, seed, style="decay", **aux):
    """Generate a benchmark instance, deterministically in ``seed``.

    Parameters
    ----------
    kind : {"wls", "trace", "sylvester"}
    n : int
    kappa_pstar : float
        Target condition number of the optimum.
    seed : int
    style : {"decay", "centered"}
        Spectrum recipe for the optimum.
    **aux
        Problem-specific knobs. ``trace``: ``m`` (default ``10 n``),
        ``sigma`` (default 1.0, with unit-variance scaling of the
        0.01-variance noise draws). ``sylvester``: ``kappa_a`` (default 30),
        ``kappa_b`` (default 20). ``centered`` style: ``c`` and ``s``.

    Returns
    -------
    Instance
    """
    rng = np.random.default_rng(seed)
    recipe = SpectrumRecipe(
        n=n,
        kappa=kappa_pstar,
        style=style,
        seed=seed,
        c=aux.get("c", 1.0),
        s=aux.get("s", 1.5),
    )
    p_star = SpdPoint.from_eig(haar_orthogonal(n, rng), recipe.eigenvalues())
    params = {
        "kind": kind,
        "n": n,
        "kappa_pstar": kappa_pstar,
        "seed": seed,
        "style": style,
        **aux,
    }

    if kind == "wls":
        a = np.ones((n, n))
        problem = WlsProblem(a=a, b=a * p_star.mat)
        return Instance(kind=kind, problem=problem, p_star=p_star, params=params)

    if kind == "trace":
        m = int(aux.get("m", 10 * n))
        sigma = float(aux.get("sigma", 1.0))
        vecs = rng.standard_normal((n, m))
        exact = np.einsum("im,im->m", vecs, p_star.mat @ vecs)
        noise = 0.1 * rng.standard_normal(m)  # N(0, 0.01) draws
        clean = TraceRegressionProblem(vecs=vecs, y=exact)
        noisy = TraceRegressionProblem(vecs=vecs, y=exact + sigma * noise)
        problem = clean if sigma == 0.0 else noisy
        return Instance(
            kind=kind,
            problem=problem,
            p_star=p_star,
            params=dict(params, m=m, sigma=sigma),
            noiseless=clean,
        )

    if kind == "sylvester":
        kappa_a = float(aux.get("kappa_a", 30.0))
        kappa_b = float(aux.get("kappa_b", 20.0))
        a = spd_with_condition(n, kappa_a, rng)
        b = spd_with_condition(n, kappa_b, rng)
        c = sym(a.mat @ p_star.mat + p_star.mat @ b.mat)
        problem = SylvesterProblem(a=a, b=b, c=c)
        return Instance(
            kind=kind,
            problem=problem,
            p_star=p_star,
            params=dict(params, kappa_a=kappa_a, kappa_b=kappa_b),
        )

    raise ValueError(f"unknown problem kind {kind!r}")


def save_instance_spec(instance, path):
    """Persist the generating parameters of an instance as JSON.

    Only the recipe is stored, never matrices: :func:`load_instance`
    regenerates the full instance from it.
    """
    with open(path, "w") as fh:
        json.dump(instance.params, fh, indent=2, sort_keys=True)


def load_instance(path):
    """Regenerate an instance from a saved parameter file."""
    with open(path) as fh:
        params = dict(json.load(fh))
    kind = params.pop("kind")
    n = params.pop("n")
    kappa = params.pop("kappa_pstar")
    seed = params.pop("seed")
    style = params.pop("style")
    return make_instances(kind, n, kappa, seed, style=style, **params)
