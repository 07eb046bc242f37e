"""Operator calculus: psi(A), subordination, proof operators."""

import numpy as np
import pytest
from scipy.linalg import expm

from bpcalc.bernstein import (cone_combine, diagonal_lift, direct_sum, eval_psi,
                              fractional_power, linear, log1m, poisson)
from bpcalc.calculus import (CatalogGapError, apply_psi, apply_psi_spectral,
                             factorization_check, generator_limit_check,
                             laplace_identity_error, subordinated, v_operator,
                             w_operator, w_operator_bound)
from bpcalc.semigroup import (SpectralData, make_commuting_random,
                              make_jordan_polynomial, make_tuple,
                              semigroup_apply)
from bpcalc._integrate import QuadratureError


def scalar_tuple(value):
    return make_tuple([np.array([[value]], dtype=complex)], bounds=(1.0,))


def opnorm(M):
    return float(np.linalg.norm(M, 2))


def shifted(A, eps):
    # A - eps*I on every generator; joint eigenvalues shift the same way
    gens = tuple(G - eps * np.eye(A.d) for G in A.generators)
    spec = None
    if A.spectral is not None:
        spec = SpectralData(joint=A.spectral.joint - eps,
                            basis=A.spectral.basis, cond=A.spectral.cond)
    return make_tuple(gens, spectral=spec, bounds=A.bounds)


CATALOG_PAIRS = [
    ("frac03", lambda: fractional_power(0.3), 1),
    ("frac05", lambda: fractional_power(0.5), 1),
    ("drift", lambda: fractional_power(1.0), 1),
    ("poisson", poisson, 1),
    ("log1m", log1m, 1),
    ("lift", lambda: diagonal_lift(fractional_power(0.5), [1.0, 0.6]), 2),
    ("dsum", lambda: direct_sum(poisson(), log1m()), 2),
    ("cone", lambda: cone_combine([(0.5, poisson()), (1.2, log1m())]), 1),
]


class TestApplyPsi:
    def test_poisson_atom_identity(self):
        A = make_commuting_random(2, 5, seed=11)
        psi = diagonal_lift(poisson(), [1.0, 0.5])
        lhs = apply_psi(psi, A)
        rhs = semigroup_apply(A, np.array([1.0, 0.5])) - np.eye(5)
        assert opnorm(lhs - rhs) <= 1e-10 * opnorm(rhs)

    def test_linear_is_generator_combination(self):
        A = make_commuting_random(2, 4, seed=3)
        psi = linear([0.7, 0.2])
        expected = 0.7 * A.generators[0] + 0.2 * A.generators[1]
        assert opnorm(apply_psi(psi, A) - expected) <= 1e-12

    @pytest.mark.parametrize("name,build,n", CATALOG_PAIRS)
    def test_integral_route_matches_spectral_route(self, name, build, n):
        psi = build()
        for d, seed in ((3, 5), (6, 17)):
            A = make_commuting_random(n, d, seed=seed)
            via_measure = apply_psi(psi, A, tol=1e-9)
            via_spectrum = apply_psi_spectral(psi, A)
            scale = max(1.0, opnorm(via_spectrum))
            assert opnorm(via_measure - via_spectrum) <= 1e-6 * scale

    def test_commutes_with_semigroup(self):
        rng = np.random.default_rng(29)
        A = make_commuting_random(2, 5, seed=29)
        psi = diagonal_lift(log1m(), [0.8, 0.4])
        F = apply_psi(psi, A)
        for _ in range(5):
            u = rng.uniform(0.0, 2.0, size=2)
            T = semigroup_apply(A, u)
            assert opnorm(F @ T - T @ F) <= 1e-8 * max(1.0, opnorm(F))

    def test_arity_mismatch_rejected(self):
        A = make_commuting_random(2, 3, seed=1)
        with pytest.raises(ValueError):
            apply_psi(log1m(), A)
        with pytest.raises(ValueError):
            apply_psi_spectral(log1m(), A)

    def test_spectral_route_needs_spectral_data(self):
        A = make_jordan_polynomial(1, 4, seed=2)
        with pytest.raises(ValueError):
            apply_psi_spectral(fractional_power(0.5), A)

    def test_shift_approximation_converges(self):
        A = make_commuting_random(1, 4, seed=41)
        psi = fractional_power(0.5)
        rng = np.random.default_rng(41)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        base = apply_psi_spectral(psi, A) @ x
        errs = [np.linalg.norm(apply_psi_spectral(psi, shifted(A, eps)) @ x - base)
                for eps in (0.4, 0.2, 0.1, 0.05)]
        assert errs[-1] <= 0.2 * errs[0]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_jordan_tolerance_self_consistency(self):
        # no spectral oracle for a nilpotent part: halving the tolerance
        # must not move the answer by more than 10x the coarse tolerance
        A = make_jordan_polynomial(1, 4, seed=8)
        psi = fractional_power(0.5)
        coarse = apply_psi(psi, A, tol=1e-8)
        fine = apply_psi(psi, A, tol=5e-9)
        assert opnorm(coarse - fine) <= 1e-7

    def test_undamped_rotation_raises(self):
        # pure-imaginary spectrum gives the tail bound nothing to decay with
        from bpcalc.semigroup import fourier_translation_model
        A = fourier_translation_model(3)
        with pytest.raises(QuadratureError):
            apply_psi(fractional_power(0.5), A)


class TestSubordinated:
    def test_time_zero_is_identity(self):
        A = make_commuting_random(1, 3, seed=4)
        assert opnorm(subordinated(poisson(), A, 0.0) - np.eye(3)) == 0.0

    def test_negative_time_rejected(self):
        A = make_commuting_random(1, 3, seed=4)
        with pytest.raises(ValueError):
            subordinated(poisson(), A, -0.5)

    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_poisson_matches_exponential(self, t):
        A = make_commuting_random(1, 5, seed=13)
        delta = semigroup_apply(A, np.array([1.0])) - np.eye(5)
        expected = expm(t * delta)
        got = subordinated(poisson(), A, t)
        assert opnorm(got - expected) <= 1e-9 * max(1.0, opnorm(expected))

    def test_log1m_scalar_quarter(self):
        # gamma subordinator at t=2 against the closed form (1-s)^{-t}
        g = subordinated(log1m(), scalar_tuple(-1.0), 2.0)
        assert abs(g[0, 0] - 0.25) <= 1e-9

    @pytest.mark.parametrize("name,build,n", CATALOG_PAIRS)
    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_exponential_consistency(self, name, build, n, t):
        psi = build()
        if name == "frac03":
            pytest.skip("no closed-form subordination density")
        A = make_commuting_random(n, 4, seed=19)
        got = subordinated(psi, A, t, tol=1e-9)
        expected = expm(t * apply_psi(psi, A, tol=1e-10))
        assert opnorm(got - expected) <= 1e-6 * max(1.0, opnorm(expected))

    @pytest.mark.parametrize("build", [poisson, lambda: fractional_power(0.5), log1m])
    def test_semigroup_property(self, build):
        psi = build()
        A = make_commuting_random(1, 4, seed=23)
        t, r = 0.4, 1.1
        lhs = subordinated(psi, A, t) @ subordinated(psi, A, r)
        rhs = subordinated(psi, A, t + r)
        assert opnorm(lhs - rhs) <= 1e-8

    def test_missing_family_raises(self):
        A = make_commuting_random(1, 3, seed=2)
        with pytest.raises(CatalogGapError):
            subordinated(fractional_power(0.3), A, 1.0)

    def test_missing_family_exponential_fallback(self):
        A = make_commuting_random(1, 3, seed=2)
        psi = fractional_power(0.3)
        with pytest.warns(RuntimeWarning):
            got = subordinated(psi, A, 1.0, on_gap="expm")
        expected = expm(apply_psi(psi, A))
        assert opnorm(got - expected) <= 1e-8

    @pytest.mark.parametrize("name,build,n", CATALOG_PAIRS)
    def test_laplace_identity(self, name, build, n):
        if name == "frac03":
            pytest.skip("no closed-form subordination density")
        psi = build()
        pts = np.linspace(-10.0, -0.1, 7)
        grid = [np.full(n, s) for s in pts]
        for t in (0.1, 1.0, 5.0):
            assert laplace_identity_error(psi, t, grid) <= 1e-6


class TestGeneratorLimit:
    def test_scalar_first_order_rate(self):
        # (e^{-t}-1)/t -> -1 with error t/2 + O(t^2)
        A = scalar_tuple(-1.0)
        ts = [2.0 ** -k for k in range(3, 9)]
        res = generator_limit_check(fractional_power(1.0), A, np.array([1.0]), ts)
        ratios = res[1:] / res[:-1]
        assert np.all(np.abs(ratios - 0.5) < 0.05)

    def test_poisson_series_bound(self):
        A = make_commuting_random(1, 4, seed=31)
        delta = semigroup_apply(A, np.array([1.0])) - np.eye(4)
        x = np.ones(4) / 2.0
        for t in (1e-2, 1e-3):
            res = generator_limit_check(poisson(), A, x, [t])
            assert res[0] <= t * opnorm(delta @ delta) / 2.0 * 1.1

    def test_residuals_decrease_on_random_tuple(self):
        A = make_commuting_random(1, 4, seed=37)
        rng = np.random.default_rng(37)
        x = rng.standard_normal(4)
        ts = [0.1 * 2.0 ** -k for k in range(5)]
        res = generator_limit_check(fractional_power(0.5), A, x, ts)
        assert np.all(np.diff(res) < 0)
        assert res[-1] < res[0] / 8.0


class TestProofOperators:
    def test_v_zero_upper_limit(self):
        A = make_commuting_random(1, 3, seed=5)
        assert opnorm(v_operator(-1.0 + 0.2j, A, 0, 0.0)) == 0.0

    def test_v_scalar_value(self):
        V = v_operator(-2.0, scalar_tuple(-1.0), 0, 1.0)
        assert abs(V[0, 0] - (np.exp(-1) - np.exp(-2))) <= 1e-12

    @pytest.mark.parametrize("seed", range(6))
    def test_v_defining_identity(self, seed):
        A = make_commuting_random(2, 5, seed=seed)
        rng = np.random.default_rng(seed)
        lam = complex(rng.uniform(-3, -0.2), rng.uniform(-1, 1))
        u = float(rng.uniform(0.1, 3.0))
        j = int(rng.integers(0, 2))
        T = semigroup_apply(A, u * np.eye(2)[j])
        lhs = np.exp(lam * u) * np.eye(5) - T
        rhs = (lam * np.eye(5) - A.generators[j]) @ v_operator(lam, A, j, u)
        assert opnorm(lhs - rhs) <= 1e-8 * max(1.0, opnorm(lhs))

    def test_v_defining_identity_without_spectrum(self):
        A = make_jordan_polynomial(1, 4, seed=9)
        lam, u = -1.2 + 0.4j, 1.7
        T = semigroup_apply(A, np.array([u]))
        lhs = np.exp(lam * u) * np.eye(4) - T
        rhs = (lam * np.eye(4) - A.generators[0]) @ v_operator(lam, A, 0, u)
        assert opnorm(lhs - rhs) <= 1e-8 * max(1.0, opnorm(lhs))

    def test_w_linear_is_drift_coefficient(self):
        A = make_commuting_random(2, 4, seed=7)
        W = w_operator(linear([0.7, 0.2]), A, [-1.0, -0.5], 1)
        assert opnorm(W - 0.2 * np.eye(4)) <= 1e-12

    def test_w_scalar_poisson_single_atom(self):
        # atom at u=1 makes W = V^{-1}(1); the integrand e^{-(1-s)}e^{-s}
        # is constant, so the value is exactly e^{-1}
        W = w_operator(poisson(), scalar_tuple(-1.0), [-1.0], 0)
        assert abs(W[0, 0] - np.exp(-1.0)) <= 1e-12

    def test_w_needs_left_half_plane(self):
        A = make_commuting_random(1, 3, seed=3)
        with pytest.raises(ValueError):
            w_operator(poisson(), A, [0.5], 0)
        with pytest.raises(ValueError):
            w_operator_bound(poisson(), A, [0.5], 0)

    def test_w_norm_within_stated_bound(self):
        rng = np.random.default_rng(43)
        builds = [poisson, log1m, lambda: fractional_power(0.5),
                  lambda: fractional_power(1.0)]
        for k in range(8):
            psi1 = builds[k % len(builds)]()
            psi = diagonal_lift(psi1, [1.0, rng.uniform(0.3, 1.0)])
            A = make_commuting_random(2, 4, seed=100 + k)
            lam = rng.uniform(-3, -0.3, size=2) + 1j * rng.uniform(-1, 1, size=2)
            for j in range(2):
                W = w_operator(psi, A, lam, j)
                bound = w_operator_bound(psi, A, lam, j)
                assert opnorm(W) <= bound * (1.0 + 1e-9)

    def test_factorization_degenerate_point(self):
        A = scalar_tuple(-1.5)
        assert factorization_check(poisson(), A, [-1.5]) <= 1e-12

    def test_factorization_at_joint_eigenvalue(self):
        A = make_commuting_random(2, 4, seed=47)
        lam = A.spectral.joint[1]
        assert factorization_check(log1m_pair(), A, lam) <= 1e-6

    def test_factorization_random_pair(self):
        A = make_commuting_random(2, 4, seed=53)
        res = factorization_check(log1m_pair(), A, [-1.0, -0.5])
        assert res <= 1e-6

    @pytest.mark.parametrize("name,build,n", CATALOG_PAIRS)
    def test_factorization_across_catalog(self, name, build, n):
        psi = build()
        rng = np.random.default_rng(abs(hash(name)) % 2 ** 31)
        A = make_commuting_random(n, 4, seed=int(rng.integers(1000)))
        lam = rng.uniform(-2.5, -0.3, size=n) + 1j * rng.uniform(-0.8, 0.8, size=n)
        assert factorization_check(psi, A, lam) <= 1e-6

    def test_factorization_without_spectrum(self):
        # atoms only, so the nilpotent-block path stays cheap
        A = make_jordan_polynomial(1, 3, seed=6)
        res = factorization_check(poisson(), A, [-0.9 + 0.1j])
        assert res <= 1e-6


def log1m_pair():
    return direct_sum(log1m(), log1m())
