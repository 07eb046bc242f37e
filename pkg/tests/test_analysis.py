"""Holomorphy criterion, moment inequality, corollary experiments."""

import numpy as np
import pytest

from bpcalc.analysis import (boundedness_experiment, convergence_experiment,
                             holomorphy_criterion, k_constant, moment_check,
                             step_bound_check)
from bpcalc.bernstein import (cone_combine, diagonal_lift, fractional_power,
                              linear, log1m, poisson)
from bpcalc.semigroup import (DiagonalRayModel, make_commuting_random,
                              make_tuple)


def scalar_tuple(value):
    return make_tuple([np.array([[value]], dtype=complex)], bounds=(1.0,))


class TestKConstant:
    def test_unit_bound_value(self):
        assert abs(k_constant(1.0) - 2.0 / -np.expm1(-2.0)) <= 1e-15
        assert abs(k_constant(1.0) - 2.3130352854993312) <= 1e-15

    def test_large_bound_limit(self):
        M = 1e8
        assert abs(k_constant(M) / (M + 1.0) - 1.0 / -np.expm1(-1.0)) <= 1e-6

    def test_always_above_one(self):
        for M in np.linspace(1.0, 100.0, 25):
            assert k_constant(M) > 1.0

    def test_domain(self):
        with pytest.raises(ValueError):
            k_constant(0.5)


class TestMomentCheck:
    def test_scalar_fractional_half(self):
        rep = moment_check(fractional_power(0.5), scalar_tuple(-1.0), [1.0])
        assert abs(rep.lhs - 1.0) <= 4e-9
        assert abs(rep.rhs - k_constant(1.0)) <= 1e-12
        assert rep.slack > 0

    def test_linear_triangle(self):
        A = make_commuting_random(2, 4, seed=3)
        rng = np.random.default_rng(3)
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        rep = moment_check(linear([1.0, 1.0]), A, x)
        assert rep.slack >= -1e-9 * max(1.0, rep.rhs)

    @pytest.mark.parametrize("builder", [
        poisson, log1m, lambda: fractional_power(0.5),
        lambda: fractional_power(0.3)])
    def test_random_sweep_nonnegative_slack(self, builder):
        rng = np.random.default_rng(11)
        for trial in range(40):
            n = int(rng.integers(1, 4))
            d = int(rng.integers(2, 9))
            psi1 = builder()
            psi = psi1 if n == 1 else diagonal_lift(
                psi1, rng.uniform(0.2, 1.0, size=n))
            A = make_commuting_random(n, d, seed=1000 + trial)
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            rep = moment_check(psi, A, x)
            assert rep.slack >= -1e-9 * max(1.0, rep.rhs, rep.lhs)

    def test_zero_face_flagged(self):
        # x in the kernel of the second generator
        A = make_tuple([np.diag([-1.0 + 0j, -2.0]), np.diag([0j, -3.0])])
        rep = moment_check(diagonal_lift(log1m(), [1.0, 1.0]), A,
                           np.array([1.0, 0.0]))
        assert rep.zero_face
        assert rep.slack >= 0

    def test_nonzero_vector_required(self):
        with pytest.raises(ValueError):
            moment_check(poisson(), scalar_tuple(-1.0), [0.0])

    def test_tightness_not_vacuous(self):
        rep = moment_check(fractional_power(0.5), scalar_tuple(-1.0), [1.0])
        assert 0.2 < rep.ratio <= 1.0


class TestStepBound:
    def test_scalar_oracle(self):
        res = step_bound_check(scalar_tuple(-1.0), [1.0], [1.0])
        want = (k_constant(1.0) - 1.0) * -np.expm1(-1.0)
        assert abs(res - want) <= 1e-12

    def test_vanishing_step(self):
        A = make_commuting_random(2, 4, seed=7)
        x = np.zeros(4)
        x[0] = 1.0
        res = [step_bound_check(A, x, [u, u]) for u in (1e-2, 1e-4, 1e-6)]
        assert all(r >= 0 for r in res)
        assert res[2] < res[1] < res[0]
        assert res[2] <= 1e-2
        assert step_bound_check(A, x, [0.0, 0.0]) == 0.0

    def test_random_sweep_no_violation(self):
        rng = np.random.default_rng(13)
        for trial in range(50):
            n = int(rng.integers(1, 4))
            d = int(rng.integers(2, 7))
            A = make_commuting_random(n, d, seed=2000 + trial)
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            x = x / np.linalg.norm(x)
            u = rng.uniform(0.0, 2.0, size=n)
            assert step_bound_check(A, x, u) >= -1e-12

    def test_unit_vector_required(self):
        A = make_commuting_random(1, 3, seed=1)
        with pytest.raises(ValueError):
            step_bound_check(A, [2.0, 0.0, 0.0], [1.0])


class TestHolomorphyCriterion:
    def test_matrix_tuples_trivial(self):
        blocks = [make_commuting_random(1, 3, seed=s) for s in (1, 2)]
        rep = holomorphy_criterion(blocks, [1.0, 1.0])
        assert rep.weighted_sum == 0.0
        assert rep.satisfied

    def test_single_ray_pi(self):
        rep = holomorphy_criterion([np.pi], [1.0])
        assert abs(rep.defects[0] - 1.0) <= 1e-6
        assert rep.weighted_sum < 2.0 and rep.satisfied

    def test_two_rays_with_weight(self):
        theta = 0.6 * np.pi
        rep = holomorphy_criterion([theta, theta], [2.0, 1.0])
        b = rep.defects[0]
        assert abs(rep.weighted_sum - (b + 2.0 * b)) <= 1e-12
        assert rep.satisfied == (rep.weighted_sum < 2.0)

    def test_vertical_ray_fails_criterion(self):
        # b(pi/2) = 2 saturates the threshold on its own
        rep = holomorphy_criterion([np.pi / 2], [1.0])
        assert not rep.satisfied
        assert rep.measured_limsup is None

    def test_measured_limsup_under_weighted_sum(self):
        rep = holomorphy_criterion([np.pi], [1.0], psi=fractional_power(0.5))
        assert rep.measured_limsup is not None
        assert rep.measured_limsup <= rep.weighted_sum + 0.05
        # unbounded psi on an unbounded ray: the defect is actually attained
        assert rep.measured_limsup >= 0.9

    def test_two_rays_never_satisfy(self):
        # every ray defect is at least 1, so two rays reach the threshold
        rep = holomorphy_criterion([np.pi, 0.75 * np.pi], [1.0, 1.0])
        assert not rep.satisfied

    def test_measured_limsup_two_generators(self):
        # one unbounded ray plus a finite point source keeps the sum below 2
        psi = diagonal_lift(log1m(), [1.0, 0.5])
        model = DiagonalRayModel(points=(-2.0 + 1.0j, -0.3))
        rep = holomorphy_criterion([np.pi, model], [1.0, 1.0], psi=psi)
        assert rep.satisfied
        assert rep.measured_limsup <= rep.weighted_sum + 0.05

    def test_point_model_and_matrix_mix(self):
        model = DiagonalRayModel(points=(-1.0 + 2.0j, -0.5))
        A = make_commuting_random(1, 3, seed=9)
        rep = holomorphy_criterion([model, A], [1.0, 1.5])
        assert rep.defects == (0.0, 0.0)
        assert rep.satisfied

    def test_unknown_source_rejected(self):
        with pytest.raises(TypeError):
            holomorphy_criterion(["ray"], [1.0])

    def test_bounds_validated(self):
        with pytest.raises(ValueError):
            holomorphy_criterion([np.pi], [0.5])


class TestBoundedness:
    def test_poisson_stays_below_two(self):
        norms = boundedness_experiment(poisson(), [10, 50, 100])
        assert np.all(norms <= 2.0 + 1e-12)
        assert np.max(norms) / np.min(norms) < 10.0

    def test_fractional_grows_like_sqrt(self):
        norms = boundedness_experiment(fractional_power(0.5), [1, 100])
        assert abs(norms[-1] - 10.0) <= 1e-6
        assert norms[-1] > 10.0 * norms[0] - 1e-9

    def test_linear_diverges(self):
        norms = boundedness_experiment(linear([1.0]), [1, 10, 100])
        assert np.allclose(norms, [1.0, 10.0, 100.0])

    def test_bounded_composite(self):
        psi = cone_combine([(0.5, poisson()), (0.25, poisson())])
        norms = boundedness_experiment(psi, [10, 100])
        assert np.max(norms) / np.min(norms) < 10.0


class TestConvergence:
    def test_rescaled_poisson_first_order(self):
        ks = [1, 10, 100, 1000, 10000]
        seq = [diagonal_lift(poisson(), [1.0 / k]) for k in ks]
        A = make_commuting_random(1, 6, seed=17)
        rng = np.random.default_rng(17)
        x = rng.standard_normal(6)
        x = x / np.linalg.norm(x)
        res = convergence_experiment(seq, A, x)
        assert res[-1] <= 1e-3
        # first-order decay once e^{s/k}-1 is close to s/k; k=1 is
        # pre-asymptotic so only the later decade ratios sit near 10
        ratios = res[:-1] / res[1:]
        assert np.all(ratios[1:] > 5.0)
        assert abs(ratios[-1] - 10.0) < 1.0

    def test_scaled_fractional_linear_decay(self):
        ks = [1, 4, 16, 64]
        seq = [cone_combine([(1.0 / k, fractional_power(0.5))]) for k in ks]
        A = make_commuting_random(1, 4, seed=19)
        x = np.ones(4)
        res = convergence_experiment(seq, A, x)
        assert np.allclose(res[:-1] / res[1:], 4.0, rtol=1e-10)

    def test_non_decaying_sequence_rejected(self):
        seq = [poisson(), poisson()]
        A = make_commuting_random(1, 3, seed=2)
        with pytest.raises(ValueError):
            convergence_experiment(seq, A, np.ones(3))
