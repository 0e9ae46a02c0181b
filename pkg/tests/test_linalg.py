"""Unit tests for the symmetric linear algebra kernels."""

import math

import numpy as np
import pytest

from apmanifold.exceptions import DomainError, NotPositiveDefinite
from apmanifold.linalg import (
    MERGE_TOL,
    SpdPoint,
    eig_sym,
    frechet_derivative,
    frechet_from_eig,
    frob,
    haar_orthogonal,
    loewner,
    lyapunov_solve,
    matrix_function,
    sym,
)


def random_spd(n, seed, shift=1.0):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    return eig_sym(g @ g.T + shift * np.eye(n))


def random_sym(n, seed):
    rng = np.random.default_rng(seed)
    return sym(rng.standard_normal((n, n)))


class TestEigSym:
    def test_identity(self):
        p = eig_sym(np.eye(2))
        np.testing.assert_allclose(p.lam, [1.0, 1.0])
        np.testing.assert_allclose(p.q @ p.q.T, np.eye(2), atol=1e-14)

    def test_diagonal_sorted_descending(self):
        p = eig_sym(np.diag([4.0, 1.0]))
        np.testing.assert_allclose(p.lam, [4.0, 1.0])
        # eigenvectors of a diagonal matrix form a signed permutation
        np.testing.assert_allclose(np.abs(p.q), np.eye(2), atol=1e-14)

    def test_reconstruction_residual(self):
        p = random_spd(5, seed=0)
        resid = frob(p.q @ np.diag(p.lam) @ p.q.T - p.mat)
        assert resid <= 1e-12 * (1.0 + frob(p.mat))
        assert frob(p.q.T @ p.q - np.eye(5)) <= 1e-12 * 5

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            eig_sym(np.diag([1.0, -0.5]))

    def test_spd_floor(self):
        m = np.diag([1.0, 1e-9])
        eig_sym(m)  # strict positivity passes
        with pytest.raises(NotPositiveDefinite):
            eig_sym(m, spd_floor=1e-6)

    def test_symmetrizes_input(self):
        rng = np.random.default_rng(1)
        m = np.diag([3.0, 2.0, 1.0]) + 1e-14 * rng.standard_normal((3, 3))
        p = eig_sym(m)
        assert np.array_equal(p.mat, p.mat.T)

    def test_from_eig_sorts(self):
        q = np.eye(3)
        p = SpdPoint.from_eig(q, np.array([1.0, 3.0, 2.0]))
        np.testing.assert_allclose(p.lam, [3.0, 2.0, 1.0])
        np.testing.assert_allclose(p.mat, np.diag([1.0, 3.0, 2.0]))


class TestMatrixFunction:
    def test_identity_function(self):
        p = random_spd(4, seed=2)
        np.testing.assert_allclose(matrix_function(p, lambda t: t), p.mat, atol=1e-12)

    def test_log_of_diagonal(self):
        p = eig_sym(np.diag([math.e, math.e**2]))
        np.testing.assert_allclose(matrix_function(p, np.log), np.diag([1.0, 2.0]),
                                   atol=1e-13)

    def test_sqrt_of_diagonal(self):
        p = eig_sym(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(matrix_function(p, np.sqrt), np.diag([2.0, 3.0]),
                                   atol=1e-13)

    def test_domain_error(self):
        p = eig_sym(np.diag([4.0, 1.0]))
        with pytest.raises(DomainError):
            matrix_function(p, lambda t: np.log(t - 2.0))

    @pytest.mark.parametrize("seed", range(5))
    def test_exp_log_round_trip(self, seed):
        p = random_spd(6, seed=seed)
        logp = matrix_function(p, np.log)
        back = matrix_function(eig_sym(p.mat), np.log)
        np.testing.assert_allclose(back, logp, atol=1e-12)
        q, lam = np.linalg.eigh(logp)[1], np.linalg.eigh(logp)[0]
        rebuilt = (q * np.exp(lam)) @ q.T
        assert frob(rebuilt - p.mat) <= 1e-10 * frob(p.mat)


class TestLoewner:
    def test_log_equal_eigenvalues(self):
        f = loewner(np.log, lambda t: 1.0 / t, np.array([1.0, 1.0]))
        np.testing.assert_allclose(f, np.ones((2, 2)))

    def test_log_distinct(self):
        f = loewner(np.log, lambda t: 1.0 / t, np.array([math.e, 1.0]))
        expect = (1.0 - 0.0) / (math.e - 1.0)  # = 0.5819767...
        assert f[0, 1] == pytest.approx(expect, abs=1e-15)
        assert f[0, 1] == pytest.approx(0.58198, abs=5e-6)
        assert f[0, 0] == pytest.approx(1.0 / math.e)

    def test_exp_at_zero(self):
        f = loewner(np.exp, np.exp, np.array([0.0, 0.0]))
        np.testing.assert_allclose(f, np.ones((2, 2)))

    def test_continuity_across_merge_boundary(self):
        # a doubled eigenvalue perturbed by 10 * merge_tol moves entries O(merge_tol)
        lam0 = np.array([1.0, 1.0])
        lam1 = np.array([1.0, 1.0 + 10.0 * MERGE_TOL])
        f0 = loewner(np.log, lambda t: 1.0 / t, lam0)
        f1 = loewner(np.log, lambda t: 1.0 / t, lam1)
        assert np.max(np.abs(f1 - f0)) <= 100.0 * MERGE_TOL

    def test_symmetry(self):
        lam = np.array([3.0, 1.0, 0.2])
        f = loewner(np.log, lambda t: 1.0 / t, lam)
        np.testing.assert_allclose(f, f.T)
        np.testing.assert_allclose(np.diag(f), 1.0 / lam)


class TestFrechetDerivative:
    def test_identity_function(self):
        p = random_spd(4, seed=3)
        e = random_sym(4, seed=4)
        np.testing.assert_allclose(
            frechet_derivative(p, lambda t: t, lambda t: np.ones_like(t), e),
            e, atol=1e-12)

    def test_log_at_identity(self):
        p = eig_sym(np.eye(2))
        e = random_sym(2, seed=5)
        np.testing.assert_allclose(
            frechet_derivative(p, np.log, lambda t: 1.0 / t, e), e, atol=1e-14)

    def test_exp_log_inverse_round_trip(self):
        p = random_spd(5, seed=6)
        e = random_sym(5, seed=7)
        de = frechet_derivative(p, np.log, lambda t: 1.0 / t, e)
        back = frechet_from_eig(p.q, np.log(p.lam), np.exp, np.exp, de)
        assert frob(back - e) <= 1e-10 * frob(e)

    def test_linearity(self):
        p = random_spd(5, seed=8)
        e1, e2 = random_sym(5, seed=9), random_sym(5, seed=10)
        a, b = 0.7, -2.3
        lhs = frechet_derivative(p, np.log, lambda t: 1.0 / t, a * e1 + b * e2)
        rhs = (a * frechet_derivative(p, np.log, lambda t: 1.0 / t, e1)
               + b * frechet_derivative(p, np.log, lambda t: 1.0 / t, e2))
        assert frob(lhs - rhs) <= 1e-12 * max(frob(lhs), 1.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_matches_central_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(2, 9))
        # well-separated spectrum keeps the finite differences clean
        lam = np.sort(rng.uniform(0.5, 6.0, size=n))[::-1]
        lam += 0.3 * np.arange(n)[::-1]
        p = SpdPoint.from_eig(haar_orthogonal(n, rng), lam)
        e = sym(rng.standard_normal((n, n)))
        h = 1e-5 * frob(p.mat) / frob(e)
        def logm(m):
            w, v = np.linalg.eigh(m)
            return (v * np.log(w)) @ v.T
        fd = (logm(p.mat + h * e) - logm(p.mat - h * e)) / (2.0 * h)
        an = frechet_derivative(p, np.log, lambda t: 1.0 / t, e)
        assert frob(fd - an) / frob(an) <= 1e-6


class TestLyapunovSolve:
    def test_identity_coefficient(self):
        m = eig_sym(np.eye(3))
        r = random_sym(3, seed=11)
        np.testing.assert_allclose(lyapunov_solve(m, r), r / 2.0, atol=1e-14)

    def test_known_two_by_two(self):
        m = eig_sym(np.diag([1.0, 3.0]))
        rhs = np.array([[2.0, 4.0], [4.0, 6.0]])
        s = lyapunov_solve(m, rhs)
        np.testing.assert_allclose(s, np.ones((2, 2)), atol=1e-14)
        np.testing.assert_allclose(s @ m.mat + m.mat @ s, rhs, atol=1e-13)

    def test_residual_random(self):
        m = random_spd(6, seed=12)
        rhs = random_sym(6, seed=13)
        s = lyapunov_solve(m, rhs)
        assert frob(s @ m.mat + m.mat @ s - rhs) <= 1e-11 * frob(rhs)


class TestHaarOrthogonal:
    def test_scalar_is_sign(self):
        q = haar_orthogonal(1, seed=0)
        assert q.shape == (1, 1)
        assert abs(abs(q[0, 0]) - 1.0) < 1e-15

    def test_orthogonality(self):
        q = haar_orthogonal(8, seed=42)
        assert frob(q.T @ q - np.eye(8)) <= 1e-12

    def test_determinism(self):
        a = haar_orthogonal(6, seed=7)
        b = haar_orthogonal(6, seed=7)
        assert np.array_equal(a, b)
