"""Unit tests for the metric layer.

The hard correctness anchors are the two oracles: the defining-relation
round trip for the metric operator and the brute-force Gram matrix of the
basis elements, both checked here at small scale and again at acceptance
scale in test_acceptance.py.
"""

import math

import numpy as np
import pytest

from apmanifold.exceptions import ExpDomainViolation
from apmanifold.geometry import (
    AI,
    MetricSpec,
    basis_mats,
    distance,
    exp_map,
    from_coords,
    l_operator,
    metric_coord_diag,
    metric_inner,
    metric_norm,
    metric_weights,
    retract,
    riemannian_gradient,
    to_coords,
    weight_matrix,
)
from apmanifold.linalg import SpdPoint, eig_sym, frechet_from_eig, frob, haar_orthogonal, sym

ALPHAS = (0.0, 0.5, 0.75, 1.0, 1.25, 1.5)


def random_spd(n, seed, lo=0.3, hi=4.0):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(lo, hi, size=n)
    return SpdPoint.from_eig(haar_orthogonal(n, rng), lam)


def random_sym(n, seed):
    rng = np.random.default_rng(seed)
    return sym(rng.standard_normal((n, n)))


def apply_defining_relation(p, alpha, h):
    """Left-hand side of the relation that defines the metric operator."""
    if alpha == 0.0:
        return frechet_from_eig(p.q, np.log(p.lam), np.exp, np.exp, 2.0 * h)
    p2a = p.power(2.0 * alpha)
    s = h @ p2a + p2a @ h
    t = frechet_from_eig(p.q, p.lam ** (2.0 * alpha), np.log, lambda v: 1.0 / v, s)
    return frechet_from_eig(p.q, np.log(p.lam), np.exp, np.exp, t)


class TestMetricSpec:
    def test_labels(self):
        assert AI.label == "AI"
        assert MetricSpec.from_alpha(0.0).label == "LE (alpha=0)"
        assert MetricSpec.from_alpha(0.5).label == "BW (alpha=0.5)"
        assert MetricSpec.from_alpha(1.25).label == "alpha=1.25"

    def test_rejects_nonfinite_alpha(self):
        with pytest.raises(ValueError):
            MetricSpec.from_alpha(float("inf"))


class TestLOperator:
    def test_identity_point_alpha_one(self):
        # at P = I the defining relation reads 2H = Y for every entry
        p = eig_sym(np.eye(3))
        y = random_sym(3, seed=0)
        np.testing.assert_allclose(l_operator(p, 1.0, y), y / 2.0, atol=1e-14)

    def test_identity_point_log_euclidean(self):
        p = eig_sym(np.eye(3))
        y = random_sym(3, seed=1)
        np.testing.assert_allclose(l_operator(p, 0.0, y), y / 2.0, atol=1e-14)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_defining_relation_round_trip(self, alpha):
        p = random_spd(5, seed=2)
        y = random_sym(5, seed=3)
        h = l_operator(p, alpha, y)
        rec = apply_defining_relation(p, alpha, h)
        assert frob(rec - y) / frob(y) <= 1e-9

    def test_coincident_spectrum_continuity(self):
        # near-coincident eigenvalues approach the merged value smoothly
        y = random_sym(2, seed=4)
        merged = l_operator(eig_sym(np.diag([2.0, 2.0])), 0.75, y)
        close = l_operator(eig_sym(np.diag([2.0, 2.0 + 1e-8])), 0.75, y)
        assert frob(merged - close) <= 1e-7 * frob(y)


class TestMetricWeights:
    def test_alpha_one_diag_exactly_one(self):
        p = random_spd(5, seed=5, lo=1e-4, hi=1e4)
        w = metric_weights(p, 1.0)
        assert np.all(w.w_diag == 1.0)

    def test_alpha_one_offdiag_closed_form(self):
        p = random_spd(4, seed=6)
        w = metric_weights(p, 1.0)
        lam = p.lam
        for i in range(4):
            for j in range(i + 1, 4):
                expect = (lam[i] + lam[j]) ** 2 / (lam[i] ** 2 + lam[j] ** 2)
                assert w.w_offdiag[i, j] == pytest.approx(expect, rel=1e-12)
                assert 1.0 <= w.w_offdiag[i, j] <= 2.0

    def test_equal_eigenvalues_alpha_one(self):
        w = metric_weights(eig_sym(np.eye(2)), 1.0)
        assert w.w_offdiag[0, 1] == pytest.approx(2.0)

    def test_half_alpha_known_value(self):
        # lam = (8, 2): (2 - 8)^2 / (0.25 * 36 * 10) = 0.4 = 4 / (lam_1 + lam_2)
        w = metric_weights(eig_sym(np.diag([2.0, 8.0])), 0.5)
        assert w.w_offdiag[0, 1] == pytest.approx(0.4, rel=1e-12)

    def test_log_euclidean_formulas(self):
        p = random_spd(4, seed=7)
        w = metric_weights(p, 0.0)
        lam = p.lam
        np.testing.assert_allclose(w.w_diag, lam**-2.0, rtol=1e-12)
        for i in range(4):
            for j in range(i + 1, 4):
                dd = (math.log(lam[i]) - math.log(lam[j])) / (lam[i] - lam[j])
                assert w.w_offdiag[i, j] == pytest.approx(2.0 * dd * dd, rel=1e-10)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_positive(self, alpha):
        p = random_spd(5, seed=8, lo=1e-3, hi=1e3)
        w = metric_weights(p, alpha)
        assert np.all(w.w_diag > 0)
        iu = np.triu_indices(5, 1)
        assert np.all(w.w_offdiag[iu] > 0)

    def test_continuity_in_alpha_at_zero(self):
        p = eig_sym(np.diag([3.0, 1.0, 0.4]))
        w0 = weight_matrix(p, MetricSpec.from_alpha(0.0))
        devs = [np.max(np.abs(weight_matrix(p, MetricSpec.from_alpha(a)) - w0))
                for a in (1e-2, 1e-3, 1e-4)]
        assert devs[0] > devs[1] > devs[2]
        assert devs[2] < 1e-3


class TestMetricInner:
    def test_unit_offdiag_element_at_identity(self):
        p = eig_sym(np.eye(2))
        e12 = np.array([[0.0, 1.0], [1.0, 0.0]]) / math.sqrt(2.0)
        val = metric_inner(p, MetricSpec.from_alpha(1.0), e12, e12)
        assert val == pytest.approx(1.0, rel=1e-12)  # half of w_12 = 2

    def test_affine_invariant_at_identity_is_frobenius(self):
        p = eig_sym(np.eye(3))
        x, y = random_sym(3, seed=9), random_sym(3, seed=10)
        assert metric_inner(p, AI, x, y) == pytest.approx(np.sum(x * y), rel=1e-12)

    @pytest.mark.parametrize("alpha", (0.0, 0.5, 1.0))
    def test_gram_matrix_is_diagonal_with_weights(self, alpha):
        p = random_spd(3, seed=11)
        basis = basis_mats(p)
        d = basis.shape[0]
        p2a = p.power(2.0 * alpha)
        gram = np.empty((d, d))
        lb = [l_operator(p, alpha, basis[k]) for k in range(d)]
        for k in range(d):
            for l in range(d):
                gram[k, l] = 4.0 * np.trace(lb[k] @ p2a @ lb[l])
        expect = np.diag(metric_coord_diag(p, MetricSpec.from_alpha(alpha)))
        assert np.max(np.abs(gram - expect)) <= 1e-9

    def test_positive_definite(self):
        p = random_spd(4, seed=12, lo=1e-3, hi=1e2)
        for metric in (AI, MetricSpec.from_alpha(0.5), MetricSpec.from_alpha(1.5)):
            for seed in range(3):
                x = random_sym(4, seed=200 + seed)
                assert metric_inner(p, metric, x, x) > 0


class TestRiemannianGradient:
    def test_alpha_one_identity_point(self):
        p = eig_sym(np.eye(3))
        g = random_sym(3, seed=13)
        grad = riemannian_gradient(p, MetricSpec.from_alpha(1.0), g)
        np.testing.assert_allclose(np.diag(grad), np.diag(g), atol=1e-13)
        off = ~np.eye(3, dtype=bool)
        np.testing.assert_allclose(grad[off], 2.0 * g[off], atol=1e-13)

    def test_affine_invariant_identity_point(self):
        p = eig_sym(np.eye(3))
        g = random_sym(3, seed=14)
        np.testing.assert_allclose(riemannian_gradient(p, AI, g), g, atol=1e-14)

    @pytest.mark.parametrize("metric", [AI] + [MetricSpec.from_alpha(a) for a in ALPHAS])
    def test_duality(self, metric):
        p = random_spd(6, seed=15)
        g = random_sym(6, seed=16)
        grad = riemannian_gradient(p, metric, g)
        rng = np.random.default_rng(17)
        for _ in range(20):
            v = sym(rng.standard_normal((6, 6)))
            lhs = metric_inner(p, metric, grad, v)
            rhs = float(np.sum(g * v))
            assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1.0)


class TestExpMap:
    @pytest.mark.parametrize("metric", [AI] + [MetricSpec.from_alpha(a) for a in ALPHAS])
    def test_zero_velocity_is_identity(self, metric):
        p = random_spd(4, seed=18)
        assert exp_map(p, metric, np.zeros((4, 4))) is p

    @pytest.mark.parametrize("alpha", (1.0, 0.5, -0.5, 2.0))
    def test_scalar_specialization(self, alpha):
        p = eig_sym(np.array([[2.0]]))
        x = np.array([[0.6]])
        got = exp_map(p, MetricSpec.from_alpha(alpha), x).mat[0, 0]
        want = 2.0 * (1.0 + alpha * 0.6 / 2.0) ** (1.0 / alpha)
        assert got == pytest.approx(want, rel=1e-12)

    def test_log_euclidean_formula(self):
        p = random_spd(3, seed=19)
        x = 0.3 * random_sym(3, seed=20)
        got = exp_map(p, MetricSpec.from_alpha(0.0), x)
        z = p.logm() + frechet_from_eig(p.q, p.lam, np.log, lambda t: 1.0 / t, x)
        w, v = np.linalg.eigh(z)
        np.testing.assert_allclose(got.mat, (v * np.exp(w)) @ v.T, atol=1e-12)

    @pytest.mark.parametrize("metric", [AI] + [MetricSpec.from_alpha(a) for a in (0.0, 0.5, 1.0)])
    def test_initial_velocity(self, metric):
        p = random_spd(4, seed=21)
        x = random_sym(4, seed=22)
        h = 1e-6
        fd = (exp_map(p, metric, h * x).mat - exp_map(p, metric, -h * x).mat) / (2.0 * h)
        assert frob(fd - x) / frob(x) <= 1e-6

    def test_domain_violation(self):
        p = eig_sym(np.eye(3))
        with pytest.raises(ExpDomainViolation):
            exp_map(p, MetricSpec.from_alpha(1.0), -2.0 * np.eye(3))

    def test_result_is_spd(self):
        p = random_spd(4, seed=23, lo=0.5, hi=2.0)
        x = 0.4 * random_sym(4, seed=24)
        for metric in (AI, MetricSpec.from_alpha(0.0), MetricSpec.from_alpha(0.75)):
            r = exp_map(p, metric, x)
            assert np.all(r.lam > 0)


class TestRetract:
    def test_matches_exp_map_on_domain(self):
        p = random_spd(4, seed=25)
        x = 0.2 * random_sym(4, seed=26)
        m = MetricSpec.from_alpha(0.75)
        np.testing.assert_allclose(retract(p, m, x).mat, exp_map(p, m, x).mat,
                                   atol=1e-14)

    def test_defined_past_the_exp_domain(self):
        p = eig_sym(np.eye(3))
        x = -2.0 * np.eye(3)  # I + Y = -I: outside the geodesic domain
        m = MetricSpec.from_alpha(1.0)
        with pytest.raises(ExpDomainViolation):
            exp_map(p, m, x)
        r = retract(p, m, x)
        assert np.all(r.lam > 0)


class TestDistance:
    @pytest.mark.parametrize("metric", [AI] + [MetricSpec.from_alpha(a) for a in ALPHAS])
    def test_zero_on_diagonal(self, metric):
        p = random_spd(4, seed=27)
        assert distance(p, p, metric) <= 1e-8

    @pytest.mark.parametrize("alpha", (0.5, 1.0, 1.5, -0.75))
    def test_commuting_case(self, alpha):
        lam = np.array([2.0, 5.0, 0.7])
        mu = np.array([3.0, 1.0, 0.7])
        p, r = eig_sym(np.diag(lam)), eig_sym(np.diag(mu))
        want = np.linalg.norm(lam**alpha - mu**alpha) / abs(alpha)
        assert distance(p, r, MetricSpec.from_alpha(alpha)) == pytest.approx(want, rel=1e-10)

    def test_symmetry(self):
        p, r = random_spd(4, seed=28), random_spd(4, seed=29)
        for metric in (AI, MetricSpec.from_alpha(0.0), MetricSpec.from_alpha(0.75)):
            assert distance(p, r, metric) == pytest.approx(distance(r, p, metric),
                                                           rel=1e-10)

    def test_alpha_to_zero_limit(self):
        p, r = random_spd(4, seed=30), random_spd(4, seed=31)
        le = distance(p, r, MetricSpec.from_alpha(0.0))
        near = distance(p, r, MetricSpec.from_alpha(1e-4))
        assert abs(near - le) / le <= 1e-3

    def test_affine_invariant_closed_form(self):
        lam = np.array([4.0, 0.25])
        d = distance(eig_sym(np.eye(2)), eig_sym(np.diag(lam)), AI)
        assert d == pytest.approx(np.linalg.norm(np.log(lam)), rel=1e-12)

    def test_geodesic_speed(self):
        p = random_spd(4, seed=32)
        x = random_sym(4, seed=33)
        m = MetricSpec.from_alpha(0.5)
        speed = metric_norm(p, m, x)
        errs = [abs(distance(p, exp_map(p, m, t * x), m) - t * speed)
                for t in (1e-3, 1e-4)]
        assert 50.0 <= errs[0] / errs[1] <= 200.0

    def test_geodesic_additivity_at_half(self):
        p = random_spd(3, seed=34)
        x = random_sym(3, seed=35)
        m = MetricSpec.from_alpha(0.5)
        s, t = 2e-3, 3e-3
        gs = exp_map(p, m, s * x)
        gst = exp_map(p, m, (s + t) * x)
        lhs = distance(p, gst, m)
        rhs = distance(p, gs, m) + distance(gs, gst, m)
        assert abs(lhs - rhs) <= 1e-8


class TestCoords:
    def test_diagonal_unit_element(self):
        p = random_spd(3, seed=36)
        e11 = p.q[:, [0]] @ p.q[:, [0]].T
        c = to_coords(p, sym(e11))
        expect = np.zeros(6)
        expect[0] = 1.0
        np.testing.assert_allclose(c, expect, atol=1e-12)

    def test_offdiag_normalization_at_identity(self):
        p = eig_sym(np.eye(3))
        y = np.zeros((3, 3))
        y[0, 1] = y[1, 0] = 1.0
        c = to_coords(p, y)
        # slots: (11)(22)(33) then (12)(13)(23)
        np.testing.assert_allclose(c, [0, 0, 0, math.sqrt(2.0), 0, 0], atol=1e-14)

    def test_round_trip(self):
        p = random_spd(5, seed=37)
        y = random_sym(5, seed=38)
        assert frob(from_coords(p, to_coords(p, y)) - y) <= 1e-14 * max(frob(y), 1.0)

    def test_isometry_to_dot_product(self):
        p = random_spd(5, seed=39)
        y, z = random_sym(5, seed=40), random_sym(5, seed=41)
        assert float(np.sum(y * z)) == pytest.approx(
            float(to_coords(p, y) @ to_coords(p, z)), rel=1e-12)

    def test_basis_stack_matches_coords(self):
        p = random_spd(4, seed=42)
        basis = basis_mats(p)
        for k in range(basis.shape[0]):
            c = to_coords(p, basis[k])
            expect = np.zeros(basis.shape[0])
            expect[k] = 1.0
            np.testing.assert_allclose(c, expect, atol=1e-12)
