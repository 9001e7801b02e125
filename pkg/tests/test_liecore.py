import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm as scipy_expm
from scipy.linalg import polar

from geotrack.liecore import (
    Ad_matrix,
    AlgebraBasis,
    AlgebraElement,
    GroupElement,
    GroupSpec,
    Family,
    LieError,
    ad_matrix,
    bracket,
    expm,
    expm_raw,
    killing_gram,
    orthonormalize_killing,
    project_to_group,
    random_algebra,
    random_group,
    standard_basis,
)

from conftest import SO3, SU2, SU3, U2

SPECS = [SO3, SU2, SU3]
PAULI = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def rodrigues(axis, theta):
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(theta) * k + (1 - math.cos(theta)) * k @ k


seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestTypes:
    def test_dimensions(self):
        assert SO3.dim == 3 and SU2.dim == 3 and SU3.dim == 8 and U2.dim == 4

    def test_rejects_non_unitary(self):
        with pytest.raises(LieError):
            GroupElement(SO3, 2 * np.eye(3))

    def test_rejects_wrong_determinant(self):
        with pytest.raises(LieError):
            GroupElement(SU2, np.diag([1j, 1j]))

    def test_rejects_non_skew(self):
        with pytest.raises(LieError):
            AlgebraElement(SO3, np.eye(3))

    def test_su_requires_traceless(self):
        with pytest.raises(LieError):
            AlgebraElement(SU2, 1j * np.eye(2))
        AlgebraElement(U2, 1j * np.eye(2))

    def test_values_are_read_only(self):
        x = GroupElement.identity(SO3)
        with pytest.raises(ValueError):
            x.mat[0, 0] = 2.0

    def test_dependent_basis_rejected(self):
        b = standard_basis(SO3).stack
        with pytest.raises(LieError):
            AlgebraBasis(SO3, (b[0], b[1], b[0] + b[1]))


class TestBracket:
    def test_self_bracket_vanishes(self, rng):
        a = random_algebra(SU3, rng)
        assert np.linalg.norm(bracket(a, a).mat) == 0.0

    def test_so3_structure(self, bases):
        e1, e2, e3 = bases[SO3].elems
        assert np.allclose(bracket(e1, e2).mat, e3.mat, atol=1e-15)

    def test_su2_structure_from_pauli_products(self, bases):
        f = [-0.5j * s for s in PAULI]
        assert np.allclose(bases[SU2].stack, np.array(f))
        got = bracket(bases[SU2].elems[0], bases[SU2].elems[1]).mat
        # sigma_1 sigma_2 - sigma_2 sigma_1 = 2 i sigma_3
        expected = (-0.5j) ** 2 * (PAULI[0] @ PAULI[1] - PAULI[1] @ PAULI[0])
        assert np.allclose(got, expected) and np.allclose(got, f[2])

    def test_spec_mismatch(self, bases):
        with pytest.raises(LieError):
            bracket(bases[SO3].elems[0], bases[SU2].elems[0])

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, k=st.sampled_from(range(3)))
    def test_antisymmetry_and_jacobi(self, seed, k):
        rng = np.random.default_rng(seed)
        spec = SPECS[k]
        a, b, c = (random_algebra(spec, rng) for _ in range(3))
        assert np.linalg.norm((bracket(a, b) + bracket(b, a)).mat) <= 1e-12
        jac = bracket(a, bracket(b, c)) + bracket(b, bracket(c, a)) + bracket(c, bracket(a, b))
        assert np.linalg.norm(jac.mat) <= 1e-12


class TestExp:
    def test_zero(self):
        assert np.array_equal(expm(AlgebraElement.zero(SU3)).mat, np.eye(3))

    @pytest.mark.parametrize("theta", [0.1, 1.0, 2.5, -3.0, 7.0])
    def test_rotation_about_z_matches_rodrigues(self, bases, theta):
        got = expm(theta * bases[SO3].elems[2]).mat
        assert np.allclose(got, rodrigues([0, 0, 1], theta), atol=1e-14, rtol=0)

    def test_random_axis_rodrigues(self, rng, bases):
        for _ in range(20):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            theta = rng.uniform(-6, 6)
            got = expm(bases[SO3].element(theta * axis)).mat
            assert np.max(np.abs(got - rodrigues(axis, theta))) <= 1e-13

    def test_inverse(self, rng):
        for spec in SPECS:
            a = random_algebra(spec, rng, 3.0)
            prod = expm(a).mat @ expm(-a).mat
            assert np.linalg.norm(prod - np.eye(spec.d)) <= 1e-12

    @pytest.mark.parametrize("scale", [1e-3, 1.0, 5.0, 10.0])
    def test_agrees_with_scipy(self, rng, scale):
        for spec in SPECS:
            a = random_algebra(spec, rng).mat
            a = scale * a / np.linalg.norm(a)
            ref = scipy_expm(a)
            assert np.linalg.norm(expm_raw(a) - ref) <= 1e-13 * max(1.0, np.linalg.norm(ref))

    def test_batched_matches_single(self, rng):
        stack = np.array([random_algebra(SU3, rng, s).mat for s in (0.01, 1.0, 4.0)])
        out = expm_raw(stack)
        for a, e in zip(stack, out):
            assert np.linalg.norm(e - scipy_expm(a)) <= 1e-13


class TestAdjointMatrices:
    def test_ad_zero(self, bases):
        assert np.array_equal(ad_matrix(AlgebraElement.zero(SU3), bases[SU3]), np.zeros((8, 8)))

    def test_so3_ad_is_self_representation(self, bases):
        basis = bases[SO3]
        e1 = basis.elems[0]
        brute = np.column_stack([basis.coords(bracket(e1, ej).mat) for ej in basis.elems])
        assert np.allclose(ad_matrix(e1, basis), brute)
        assert np.allclose(ad_matrix(e1, basis), e1.mat.real)

    def test_Ad_identity(self, bases):
        for spec in SPECS:
            assert np.allclose(Ad_matrix(GroupElement.identity(spec), bases[spec]), np.eye(spec.dim), atol=1e-15)

    def test_Ad_columns_by_conjugation(self, rng, bases):
        basis = bases[SU3]
        x = random_group(SU3, rng)
        M = Ad_matrix(x, basis)
        for j, e in enumerate(basis.stack):
            conj = x.mat @ e @ x.mat.conj().T
            # column j recombines to x E_j x^-1
            assert np.allclose(np.tensordot(M[:, j], basis.stack, axes=1), conj, atol=1e-13)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, k=st.sampled_from(range(3)))
    def test_traceless_ad(self, seed, k):
        spec = SPECS[k]
        a = random_algebra(spec, np.random.default_rng(seed), 3.0)
        assert abs(np.trace(ad_matrix(a, standard_basis(spec)))) <= 1e-10

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, k=st.sampled_from(range(3)))
    def test_ad_is_a_lie_homomorphism(self, seed, k):
        spec = SPECS[k]
        basis = standard_basis(spec)
        rng = np.random.default_rng(seed)
        a, b = random_algebra(spec, rng), random_algebra(spec, rng)
        A, B = ad_matrix(a, basis), ad_matrix(b, basis)
        assert np.linalg.norm(ad_matrix(bracket(a, b), basis) - (A @ B - B @ A)) <= 1e-10

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, k=st.sampled_from(range(3)))
    def test_equivariance(self, seed, k):
        spec = SPECS[k]
        basis = standard_basis(spec)
        rng = np.random.default_rng(seed)
        x, X = random_group(spec, rng), random_algebra(spec, rng)
        Adx = Ad_matrix(x, basis)
        lhs = ad_matrix(AlgebraElement(spec, x.mat @ X.mat @ x.mat.conj().T), basis)
        assert np.linalg.norm(lhs - Adx @ ad_matrix(X, basis) @ np.linalg.inv(Adx)) <= 1e-10

    def test_Ad_of_exp_is_exp_of_ad(self, rng, bases):
        for spec in SPECS:
            a = random_algebra(spec, rng, 2.0)
            assert np.linalg.norm(Ad_matrix(expm(a), bases[spec]) - scipy_expm(ad_matrix(a, bases[spec]))) <= 1e-10

    def test_Ad_homomorphism(self, rng, bases):
        for spec in SPECS:
            x, y = random_group(spec, rng), random_group(spec, rng)
            b = bases[spec]
            assert np.linalg.norm(Ad_matrix(x @ y, b) - Ad_matrix(x, b) @ Ad_matrix(y, b)) <= 1e-10

    def test_trace_is_basis_independent(self, rng):
        for spec in SPECS:
            std = standard_basis(spec)
            M = rng.standard_normal((spec.dim, spec.dim))
            other = AlgebraBasis(spec, tuple(np.tensordot(M, std.stack, axes=1)))
            x = random_group(spec, rng)
            assert abs(np.trace(Ad_matrix(x, std)) - np.trace(Ad_matrix(x, other))) <= 1e-10

    def test_Ad_orthogonal_in_killing_orthonormal_basis(self, rng):
        for spec in SPECS:
            basis = orthonormalize_killing(standard_basis(spec))
            for _ in range(10):
                M = Ad_matrix(random_group(spec, rng), basis)
                assert np.linalg.norm(M.T @ M - np.eye(spec.dim)) <= 1e-10


class TestKilling:
    def test_so3(self, bases):
        # tr(ad E_i ad E_j) computed entry by entry from 3x3 matrices
        b = bases[SO3].stack.real
        brute = np.array([[np.trace(bi @ bj) for bj in b] for bi in b])
        assert np.allclose(brute, -2 * np.eye(3))
        assert np.allclose(killing_gram(bases[SO3]), -2 * np.eye(3))

    def test_su2(self, bases):
        assert np.allclose(killing_gram(bases[SU2]), -2 * np.eye(3))

    def test_su3_is_minus_six_times_reference_gram(self, bases):
        basis = bases[SU3]
        assert np.allclose(basis.gram_ref, 0.5 * np.eye(8))
        assert np.allclose(killing_gram(basis), -6 * basis.gram_ref)

    def test_su3_formula_2d_trace(self, rng, bases):
        # B(X, Y) = 2 d tr(XY) on su(d)
        a, b = random_algebra(SU3, rng), random_algebra(SU3, rng)
        ca, cb = bases[SU3].coords(a.mat), bases[SU3].coords(b.mat)
        assert np.isclose(ca @ killing_gram(bases[SU3]) @ cb, 6 * np.trace(a.mat @ b.mat).real)

    def test_u2_has_central_zero(self, bases):
        basis = bases[U2]
        central = [i for i, e in enumerate(basis.stack) if np.allclose(e, e[0, 0] * np.eye(2))]
        assert len(central) == 1
        k = killing_gram(basis)
        assert np.allclose(k[central[0]], 0) and np.allclose(k[:, central[0]], 0)

    def test_abelian_zero(self):
        spec = GroupSpec(Family.U, 2)
        basis = standard_basis(spec)
        diag = AlgebraElement(spec, 1j * np.eye(2))
        assert np.allclose(ad_matrix(diag, basis), 0)

    def test_negative_semidefinite(self, bases):
        for spec, basis in bases.items():
            assert np.max(np.linalg.eigvalsh(killing_gram(basis))) <= 1e-9


class TestOrthonormalize:
    def test_so3_scaled_standard(self, bases):
        on = orthonormalize_killing(bases[SO3])
        assert np.allclose(on.stack, bases[SO3].stack / math.sqrt(2))

    @pytest.mark.parametrize("spec", SPECS)
    def test_minus_killing_is_identity(self, spec):
        on = orthonormalize_killing(standard_basis(spec))
        assert np.allclose(-killing_gram(on), np.eye(spec.dim), atol=1e-12)

    def test_idempotent(self, bases):
        on = orthonormalize_killing(bases[SU3])
        again = orthonormalize_killing(on)
        assert np.allclose(on.stack, again.stack, atol=1e-12)

    def test_u2_degenerate(self, bases):
        with pytest.raises(LieError, match="Killing form degenerate"):
            orthonormalize_killing(bases[U2])


class TestProjection:
    def test_fixed_point(self, rng):
        for spec in SPECS + [U2]:
            g = random_group(spec, rng)
            assert np.linalg.norm(project_to_group(g.mat, spec).mat - g.mat) <= 1e-14

    def test_scaled_identity(self):
        assert np.allclose(project_to_group(1.01 * np.eye(3), SO3).mat, np.eye(3), atol=1e-15)

    def test_small_perturbation(self, rng):
        for spec in SPECS:
            g = random_group(spec, rng)
            noise = 1e-6 * (rng.standard_normal((spec.d, spec.d)) + 1j * rng.standard_normal((spec.d, spec.d)))
            if spec.family is Family.SO:
                noise = noise.real
            assert np.linalg.norm(project_to_group(g.mat + noise, spec).mat - g.mat) <= 1e-5

    def test_nearest_point_against_brute_force(self, rng, bases):
        """Local minimization of |U - x| over U = g exp(s . E) does no better."""
        from scipy.optimize import minimize

        g = random_group(SO3, rng)
        x = g.mat.real + 1e-3 * rng.standard_normal((3, 3))
        p = project_to_group(x, SO3).mat
        f = lambda s: np.linalg.norm(g.mat @ expm_raw(bases[SO3].from_coords(s)) - x)
        best = minimize(f, np.zeros(3), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
        assert np.linalg.norm(p - x) <= best.fun + 1e-10

    def test_polar_oracle(self, rng):
        x = random_group(U2, rng).mat + 0.01 * rng.standard_normal((2, 2))
        u, _ = polar(x)
        assert np.allclose(project_to_group(x, U2).mat, u)

    def test_too_far(self):
        with pytest.raises(LieError):
            project_to_group(np.diag([1.0, 1.0, 5.0]), SO3)

    def test_singular(self):
        with pytest.raises(LieError):
            project_to_group(np.zeros((3, 3)), SO3)
