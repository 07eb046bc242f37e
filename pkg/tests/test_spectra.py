"""Joint spectra and the mapping theorem checks."""

import numpy as np
import pytest

from bpcalc.bernstein import (diagonal_lift, eval_psi, fractional_power,
                              linear, log1m, poisson)
from bpcalc.calculus import apply_psi, apply_psi_spectral
from bpcalc.semigroup import (fourier_translation_model,
                              make_commuting_random, make_jordan_polynomial,
                              make_tuple)
from bpcalc.spectra import (joint_approximate_spectrum, joint_point_spectrum,
                            joint_residual_spectrum, joint_spectrum,
                            mapping_check, stacked_residual)


def diag_pair():
    return make_tuple([np.diag([-1.0, -2.0]).astype(complex),
                       np.diag([-3.0, -4.0]).astype(complex)])


def jordan_block(lam=-1.0, d=2):
    J = lam * np.eye(d, dtype=complex) + np.diag(np.ones(d - 1), 1)
    return make_tuple([J])


def values_set(result):
    return sorted(tuple(np.round(p.value, 8)) for p in result.points)


class TestPointSpectrum:
    def test_paired_diagonals(self):
        got = values_set(joint_point_spectrum(diag_pair()))
        assert got == [((-2 + 0j), (-4 + 0j)), ((-1 + 0j), (-3 + 0j))]

    def test_jordan_block_single_point(self):
        res = joint_point_spectrum(jordan_block())
        assert len(res.points) == 1
        p = res.points[0]
        assert abs(p.value[0] + 1.0) <= 1e-12
        assert p.multiplicity == 1

    @pytest.mark.parametrize("seed", range(8))
    def test_random_tuple_recovers_construction(self, seed):
        A = make_commuting_random(2, 6, seed=seed)
        res = joint_point_spectrum(A)
        assert len(res.points) == 6
        got = np.array(sorted(map(tuple, res.values()),
                              key=lambda t: (t[0].real, t[0].imag)))
        want = np.array(sorted(map(tuple, A.spectral.joint),
                               key=lambda t: (t[0].real, t[0].imag)))
        assert np.max(np.abs(got - want)) <= 1e-8

    def test_certificates_hold(self):
        A = make_commuting_random(3, 5, seed=5)
        for p in joint_point_spectrum(A).points:
            x = p.right_vector
            res = max(np.linalg.norm(G @ x - p.value[j] * x)
                      for j, G in enumerate(A.generators))
            assert res <= 1e-8

    def test_jordan_polynomial_tuple(self):
        A = make_jordan_polynomial(2, 6, seed=3)
        res = joint_point_spectrum(A)
        assert len(res.points) == 1
        want = np.array([A.generators[j][0, 0] for j in range(2)])
        assert np.max(np.abs(res.points[0].value - want)) <= 1e-10


class TestResidualSpectrum:
    def test_normal_tuple_self_dual(self):
        A = diag_pair()
        assert values_set(joint_residual_spectrum(A)) == values_set(
            joint_point_spectrum(A))

    def test_jordan_left_vector(self):
        res = joint_residual_spectrum(jordan_block())
        assert len(res.points) == 1
        p = res.points[0]
        assert abs(p.value[0] + 1.0) <= 1e-10
        # left null direction of J(-1)+1 is the last coordinate
        assert abs(abs(p.left_vector[1]) - 1.0) <= 1e-10

    def test_corank_certificate(self):
        A = make_commuting_random(2, 5, seed=9)
        scale = max(np.linalg.norm(G, 2) for G in A.generators)
        for p in joint_residual_spectrum(A).points:
            assert p.corank <= 1e-8 * max(1.0, scale)

    def test_duality_two_routes(self):
        # left-eigenvector solve against the adjoint-tuple route
        A = make_commuting_random(2, 5, seed=21)
        res = joint_residual_spectrum(A)
        assert len(res.points) == 5
        for p in res.points:
            f = p.left_vector
            for j, G in enumerate(A.generators):
                assert np.linalg.norm(f.conj() @ G - p.value[j] * f.conj()) <= 1e-8


class TestApproximateSpectrum:
    def test_diagonal_residual_zero(self):
        for p in joint_approximate_spectrum(diag_pair()).points:
            assert p.residual <= 1e-12

    def test_collapse_to_point_spectrum(self):
        A = make_commuting_random(2, 6, seed=13)
        assert values_set(joint_approximate_spectrum(A)) == values_set(
            joint_point_spectrum(A))

    def test_negative_certificate_off_spectrum(self):
        A = make_commuting_random(2, 4, seed=17)
        lam = A.spectral.joint[0] + np.array([0.5, 0.0])
        res, _ = stacked_residual(A, lam)
        assert res > 1e-3

    def test_jordan_residual(self):
        res = joint_approximate_spectrum(jordan_block())
        assert len(res.points) == 1
        assert res.points[0].residual <= 1e-12

    def test_sum_certificate(self):
        A = make_commuting_random(3, 5, seed=25)
        for p in joint_approximate_spectrum(A).points:
            res, x = stacked_residual(A, p.value)
            total = sum(np.linalg.norm(G @ x - p.value[j] * x)
                        for j, G in enumerate(A.generators))
            assert total <= 1e-8


class TestJointSpectrum:
    def test_normal_tuple_equals_point(self):
        A = diag_pair()
        assert values_set(joint_spectrum(A)) == values_set(joint_point_spectrum(A))

    def test_jordan_merged(self):
        res = joint_spectrum(jordan_block())
        assert len(res.points) == 1
        p = res.points[0]
        assert p.right_vector is not None and p.left_vector is not None

    def test_contained_in_product_of_spectra(self):
        A = make_commuting_random(2, 6, seed=29)
        per_axis = [np.linalg.eigvals(G) for G in A.generators]
        for p in joint_spectrum(A).points:
            for j in range(A.n):
                assert np.min(np.abs(per_axis[j] - p.value[j])) <= 1e-8


class TestMappingCheck:
    def test_part_two_spectral_equality(self):
        A = make_commuting_random(2, 5, seed=31)
        psi = diagonal_lift(log1m(), [1.0, 0.5])
        rep = mapping_check(psi, A, 2)
        assert rep.applicable and rep.passed
        assert len(rep.rows) == 5
        # equality of sets: every eigenvalue of psi(A) is matched by some row
        F = apply_psi_spectral(psi, A)
        evals = np.linalg.eigvals(F)
        mapped = np.array([r.mapped for r in rep.rows])
        for ev in evals:
            assert np.min(np.abs(mapped - ev)) <= 1e-6 * (1 + abs(ev))

    def test_jordan_poisson_point_mapping(self):
        A = jordan_block()
        rep = mapping_check(poisson(), A, 2)
        assert rep.passed
        assert abs(rep.rows[0].mapped - (np.exp(-1) - 1)) <= 1e-9

    @pytest.mark.parametrize("part", [1, 2, 4, 5])
    def test_parts_hold_on_random_tuples(self, part):
        psi = diagonal_lift(fractional_power(0.5), [1.0, 0.8])
        for seed in range(4):
            A = make_commuting_random(2, 5, seed=40 + seed)
            rep = mapping_check(psi, A, part)
            assert rep.applicable
            assert rep.passed, [r for r in rep.rows if r.verdict != "pass"]

    @pytest.mark.parametrize("part", [1, 2, 4, 5])
    def test_parts_hold_on_jordan_tuples(self, part):
        psi = diagonal_lift(log1m(), [0.9, 0.4])
        for seed in range(3):
            A = make_jordan_polynomial(2, 5, seed=60 + seed)
            rep = mapping_check(psi, A, part)
            assert rep.applicable
            assert rep.passed, [r for r in rep.rows if r.verdict != "pass"]

    def test_part_three_nondegenerate(self):
        psi = diagonal_lift(poisson(), [1.0, 0.3])
        A = make_commuting_random(2, 5, seed=71)
        rep = mapping_check(psi, A, 3)
        assert rep.passed
        assert len(rep.rows) == 5
        assert all(r.evidence > 1e-3 for r in rep.rows)

    def test_fourier_boundary_spectrum_applicable_for_poisson(self):
        A = fourier_translation_model(2)
        rep = mapping_check(poisson(), A, 4)
        assert rep.applicable
        assert "finite" in rep.reason
        assert rep.passed

    def test_fourier_boundary_inapplicable_for_fractional(self):
        A = fourier_translation_model(2)
        rep = mapping_check(fractional_power(0.5), A, 4, operator=np.zeros((5, 5)))
        assert not rep.applicable
        assert rep.rows == ()
        assert rep.passed

    def test_left_half_plane_hypothesis_reason(self):
        A = make_commuting_random(1, 4, seed=77)
        rep = mapping_check(fractional_power(0.5), A, 5)
        assert rep.applicable
        assert "left half-plane" in rep.reason

    def test_linear_mapping_exact(self):
        A = make_commuting_random(2, 4, seed=83)
        rep = mapping_check(linear([0.6, 0.3]), A, 5)
        assert rep.passed
        for r in rep.rows:
            lam = np.array(r.source)
            assert abs(r.mapped - eval_psi(linear([0.6, 0.3]), lam)) <= 1e-12

    def test_bad_part_rejected(self):
        A = make_commuting_random(1, 3, seed=2)
        with pytest.raises(ValueError):
            mapping_check(poisson(), A, 6)
