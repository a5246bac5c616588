"""Fiber-level linear algebra: structure axioms, shifts, types,
compatible companions and the bihermitian split."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcverify import fiber

RNG = np.random.default_rng(20240811)

J2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # standard complex structure on R^2
W2 = np.array([[0.0, -1.0], [1.0, 0.0]])  # interior-product map of dx^dy

# frozen by scripts/derive_expectations.py (direct block substitution)
J_OMEGA_STANDARD = np.array([
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
])


def e(i, d=2):
    v = np.zeros(d)
    v[i] = 1.0
    return v


class TestPairing:
    def test_dual_pairing_halved(self):
        a = fiber.SplitElement(e(0), np.zeros(2))
        b = fiber.SplitElement(np.zeros(2), e(0))
        assert fiber.pairing(a, b) == 0.5

    def test_diagonal_element(self):
        a = fiber.SplitElement(e(0), e(0))
        assert fiber.pairing(a, a) == 1.0

    def test_tangent_isotropic(self):
        a = fiber.SplitElement(e(0), np.zeros(2))
        b = fiber.SplitElement(e(1), np.zeros(2))
        assert fiber.pairing(a, b) == 0.0

    def test_symmetric(self):
        a = fiber.SplitElement(RNG.standard_normal(3), RNG.standard_normal(3))
        b = fiber.SplitElement(RNG.standard_normal(3), RNG.standard_normal(3))
        assert fiber.pairing(a, b) == pytest.approx(fiber.pairing(b, a))

    def test_dimension_mismatch(self):
        a = fiber.SplitElement(e(0, 2), np.zeros(2))
        b = fiber.SplitElement(e(0, 3), np.zeros(3))
        with pytest.raises(ValueError, match="dimension mismatch"):
            fiber.pairing(a, b)

    def test_matrix_reproduces_pairing(self):
        q = fiber.pairing_matrix(3)
        a = fiber.SplitElement(RNG.standard_normal(3), RNG.standard_normal(3))
        b = fiber.SplitElement(RNG.standard_normal(3), RNG.standard_normal(3))
        assert a.stacked @ q @ b.stacked == pytest.approx(fiber.pairing(a, b))

    def test_signature(self):
        eigs = np.linalg.eigvalsh(fiber.pairing_matrix(4))
        assert np.sum(eigs > 0) == 4 and np.sum(eigs < 0) == 4


class TestStructureAxioms:
    def test_symplectic_passes(self):
        assert fiber.is_generalized_structure(fiber.from_symplectic(W2)).ok

    def test_identity_fails(self):
        assert not fiber.is_generalized_structure(np.eye(4)).ok

    def test_complex_passes(self):
        assert fiber.is_generalized_structure(fiber.from_complex_structure(J2)).ok

    def test_odd_side_rejected(self):
        with pytest.raises(ValueError, match="even"):
            fiber.is_generalized_structure(np.eye(3))


class TestFromSymplectic:
    def test_standard_matrix(self):
        assert np.allclose(fiber.from_symplectic(W2), J_OMEGA_STANDARD)

    def test_type_zero(self):
        assert fiber.type_of(fiber.from_symplectic(W2)) == 0

    def test_eigenspace_graph_of_omega(self):
        # columns should span {X - i w X}
        j = fiber.from_symplectic(W2)
        basis = fiber.eigenspace_basis(j)
        graph = np.vstack([np.eye(2), -1j * W2])
        assert fiber.subspace_residual(basis, graph) < 1e-12

    def test_rejects_non_antisymmetric(self):
        with pytest.raises(ValueError, match="antisymmetric"):
            fiber.from_symplectic(np.eye(2))

    def test_rejects_singular(self):
        with pytest.raises(ValueError, match="singular"):
            fiber.from_symplectic(np.zeros((2, 2)))


class TestFromComplex:
    def test_block_form(self):
        j = fiber.from_complex_structure(J2)
        assert np.allclose(j[:2, :2], J2)
        assert np.allclose(j[2:, 2:], -J2.T)
        assert np.allclose(j[:2, 2:], 0) and np.allclose(j[2:, :2], 0)

    def test_type_is_half_dim(self):
        assert fiber.type_of(fiber.from_complex_structure(J2)) == 1
        j4 = fiber.random_complex_structure(4, RNG)
        assert fiber.type_of(fiber.from_complex_structure(j4)) == 2

    def test_eigenspace_is_t10_plus_t01(self):
        j = fiber.from_complex_structure(J2)
        vals, vecs = np.linalg.eig(J2.astype(complex))
        t10 = vecs[:, np.isclose(vals, 1j)]
        vals_d, vecs_d = np.linalg.eig(-J2.T.astype(complex))
        t01_forms = vecs_d[:, np.isclose(vals_d, 1j)]
        stacked = np.block([
            [t10, np.zeros_like(t01_forms)],
            [np.zeros_like(t10), t01_forms],
        ])
        assert fiber.subspace_residual(fiber.eigenspace_basis(j), stacked) < 1e-12

    def test_rejects_non_complex(self):
        with pytest.raises(ValueError, match="square to -I"):
            fiber.from_complex_structure(np.eye(2))


class TestBShift:
    def test_zero_shift_is_identity(self):
        j = fiber.from_symplectic(W2)
        assert np.allclose(fiber.b_shift(j, np.zeros((2, 2))), j)

    def test_preserves_axioms_and_type(self):
        b = fiber.random_antisymmetric(2, RNG)
        for j in (fiber.from_symplectic(W2), fiber.from_complex_structure(J2)):
            shifted = fiber.b_shift(j, b)
            assert fiber.is_generalized_structure(shifted).ok
            assert fiber.type_of(shifted) == fiber.type_of(j)

    def test_eigenspace_shift_law(self):
        # shifted eigenspace = {X + f + i_X b} for X + f in the original
        j = fiber.from_symplectic(W2)
        b = fiber.random_antisymmetric(2, RNG)
        sheared = fiber.shear(b) @ fiber.eigenspace_basis(j)
        assert fiber.subspace_residual(
            fiber.eigenspace_basis(fiber.b_shift(j, b)), sheared) < 1e-10

    def test_group_action(self):
        j = fiber.random_structure(4, RNG)
        b1 = fiber.random_antisymmetric(4, RNG)
        b2 = fiber.random_antisymmetric(4, RNG)
        lhs = fiber.b_shift(fiber.b_shift(j, b1), b2)
        rhs = fiber.b_shift(j, b1 + b2)
        assert np.abs(lhs - rhs).max() < 1e-12

    def test_rejects_non_antisymmetric(self):
        with pytest.raises(ValueError, match="antisymmetric"):
            fiber.b_shift(fiber.from_symplectic(W2), np.eye(2))

    def test_type_invariant_under_many_shifts(self):
        catalog = [fiber.from_symplectic(W2),
                   fiber.from_complex_structure(J2),
                   fiber.from_complex_structure(fiber.random_complex_structure(4, RNG)),
                   fiber.from_symplectic(fiber.random_antisymmetric(4, RNG))]
        rng = np.random.default_rng(7)
        for j in catalog:
            t = fiber.type_of(j)
            d = j.shape[0] // 2
            for _ in range(100):
                b = fiber.random_antisymmetric(d, rng)
                assert fiber.type_of(fiber.b_shift(j, b)) == t


class TestEigenspace:
    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_isotropy_and_transversality(self, d):
        rng = np.random.default_rng(d)
        q = fiber.pairing_matrix(d)
        for _ in range(50):
            j = fiber.random_structure(d, rng)
            basis = fiber.eigenspace_basis(j)
            assert np.abs(j @ basis - 1j * basis).max() < 1e-9
            assert np.abs(basis.T @ q @ basis).max() < 1e-10
            stacked = np.hstack([basis, basis.conj()])
            s = np.linalg.svd(stacked, compute_uv=False)
            assert s[-1] > 1e-8 * s[0]


class TestCompatibleStructure:
    def test_flat_recovers_complex_type(self):
        # frozen by scripts/derive_expectations.py (hand polar decomposition)
        jprime = fiber.compatible_structure(fiber.from_symplectic(W2), np.eye(2))
        assert np.allclose(jprime, fiber.from_complex_structure(J2), atol=1e-12)

    @pytest.mark.parametrize("d", [2, 4, 6])
    def test_polar_properties(self, d):
        rng = np.random.default_rng(100 + d)
        q = fiber.pairing_matrix(d)
        for _ in range(40):
            j = fiber.random_structure(d, rng)
            g = fiber.random_spd(d, rng)
            jp = fiber.compatible_structure(j, g)
            assert fiber.is_generalized_structure(jp, tol=1e-9).ok
            assert np.abs(jp @ j - j @ jp).max() < 1e-9
            metric = -(j @ jp).T @ q
            assert np.linalg.eigvalsh(0.5 * (metric + metric.T)).min() > 0
            gg = -j @ jp
            assert np.abs(gg @ gg - np.eye(2 * d)).max() < 1e-9

    def test_rejects_non_spd_metric(self):
        with pytest.raises(ValueError, match="positive definite"):
            fiber.compatible_structure(fiber.from_symplectic(W2), -np.eye(2))


class TestBihermitian:
    def test_flat_kaehler_pair(self):
        # frozen by scripts/derive_expectations.py
        parts = fiber.bihermitian_decompose(
            fiber.from_complex_structure(J2), fiber.from_symplectic(W2))
        assert np.allclose(parts.g, np.eye(2), atol=1e-12)
        assert np.allclose(parts.b, 0, atol=1e-12)
        assert np.allclose(parts.jplus, J2, atol=1e-12)
        assert np.allclose(parts.jminus, J2, atol=1e-12)

    @pytest.mark.parametrize("d", [2, 4])
    def test_round_trip(self, d):
        rng = np.random.default_rng(200 + d)
        for _ in range(40):
            j1 = fiber.random_structure(d, rng)
            j2 = fiber.compatible_structure(j1, fiber.random_spd(d, rng))
            parts = fiber.bihermitian_decompose(j1, j2)
            r1, r2 = fiber.reconstruct_pair(parts)
            assert np.abs(r1 - j1).max() < 1e-9
            assert np.abs(r2 - j2).max() < 1e-9
            # J+- are g-orthogonal almost complex structures
            for jj in (parts.jplus, parts.jminus):
                assert np.abs(jj @ jj + np.eye(d)).max() < 1e-9
                assert np.abs(jj.T @ parts.g @ jj - parts.g).max() < 1e-8

    def test_omega_pm_invertible(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            j = fiber.random_structure(4, rng)
            jp = fiber.compatible_structure(j, fiber.random_spd(4, rng))
            parts = fiber.bihermitian_decompose(j, jp)
            assert np.linalg.cond(parts.omega_plus) < 1e8
            assert np.linalg.cond(parts.omega_minus) < 1e8

    def test_rejects_non_commuting(self):
        j1 = fiber.from_symplectic(W2)
        b = fiber.random_antisymmetric(2, RNG)
        j2 = fiber.b_shift(fiber.from_complex_structure(J2), b)
        if np.abs(j1 @ j2 - j2 @ j1).max() > 1e-6:
            with pytest.raises(ValueError, match="commute"):
                fiber.bihermitian_decompose(j1, j2)

    def test_rejects_indefinite(self):
        j = fiber.from_symplectic(W2)
        with pytest.raises(ValueError, match="positive definite"):
            fiber.bihermitian_decompose(j, -j)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_random_structures_satisfy_axioms(half, seed):
    d = 2 * half
    rng = np.random.default_rng(seed)
    j = fiber.random_structure(d, rng)
    check = fiber.is_generalized_structure(j, tol=1e-9)
    assert check.ok, (check.square_residual, check.pairing_residual)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2 ** 31 - 1))
def test_shift_commutes_with_eigenspace_shear(half, seed):
    d = 2 * half
    rng = np.random.default_rng(seed)
    j = fiber.random_structure(d, rng)
    b = fiber.random_antisymmetric(d, rng)
    assert fiber.subspace_residual(
        fiber.eigenspace_basis(fiber.b_shift(j, b)),
        fiber.shear(b) @ fiber.eigenspace_basis(j)) < 1e-8
