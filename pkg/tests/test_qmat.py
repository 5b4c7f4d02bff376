import numpy as np
import pytest

from spinforge import qmat
from spinforge.qmat import (
    AxisAngle,
    DensityMatrix,
    DimensionError,
    DomainError,
    axis_angle_of_su2,
    compose_axis_angle,
    expm_hermitian,
    partial_trace,
    rotation_matrix,
    tensor,
)

from conftest import random_density, random_hermitian


def taylor_expm(h, t, terms=40):
    """Scaling-and-squaring series oracle for exp(-i h t)."""
    a = -1j * h * t
    norm = np.linalg.norm(a, ord=np.inf)
    squarings = max(0, int(np.ceil(np.log2(max(norm, 1e-30)))) + 1)
    a = a / (2 ** squarings)
    out = np.eye(h.shape[0], dtype=complex)
    term = np.eye(h.shape[0], dtype=complex)
    for k in range(1, terms + 1):
        term = term @ a / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


class TestExpmHermitian:
    def test_zero_generator(self):
        assert np.allclose(expm_hermitian(np.zeros((2, 2)), 1.23), np.eye(2))

    def test_z_rotation_by_pi(self):
        omega = 2 * np.pi * 1e6
        h = (omega / 2) * qmat.SIGMA_Z
        u = expm_hermitian(h, np.pi / omega)
        assert np.allclose(u, np.diag([-1j, 1j]), atol=1e-12)

    def test_matches_series_oracle(self, rng):
        h = random_hermitian(rng, 4)
        u = expm_hermitian(h, 0.37)
        assert np.max(np.abs(u - taylor_expm(h, 0.37))) < 1e-9

    def test_rejects_non_hermitian(self, rng):
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        with pytest.raises(DomainError):
            expm_hermitian(m, 1.0)

    def test_unitarity_property(self, rng):
        for dim in (2, 4, 8, 16):
            for _ in range(5):
                h = random_hermitian(rng, dim)
                u = expm_hermitian(h, rng.uniform(-2, 2))
                assert np.max(np.abs(u @ u.conj().T - np.eye(dim))) < 1e-10


class TestAxisAngle:
    def test_canonical_angle_range(self, rng):
        for _ in range(200):
            axis = rng.normal(size=3)
            angle = rng.uniform(-20, 20)
            r = AxisAngle(axis, angle)
            assert 0.0 <= r.angle <= np.pi
            assert abs(np.linalg.norm(r.axis) - 1) < 1e-12

    def test_zero_angle_axis_is_z(self):
        r = AxisAngle([0.3, 0.5, 0.1], 0.0)
        assert np.allclose(r.axis, [0, 0, 1])
        assert r.angle == 0.0

    def test_same_axis_addition(self):
        r = compose_axis_angle(AxisAngle([0, 0, 1], np.pi / 2),
                               AxisAngle([0, 0, 1], np.pi / 2))
        assert r.isclose(AxisAngle([0, 0, 1], np.pi))

    def test_pauli_algebra(self):
        r = compose_axis_angle(AxisAngle([1, 0, 0], np.pi),
                               AxisAngle([0, 1, 0], np.pi))
        assert r.isclose(AxisAngle([0, 0, 1], np.pi))

    def test_matches_matrix_product(self, rng):
        for _ in range(1000):
            a1 = AxisAngle(rng.normal(size=3), rng.uniform(-np.pi, np.pi))
            a2 = AxisAngle(rng.normal(size=3), rng.uniform(-np.pi, np.pi))
            composed = compose_axis_angle(a1, a2)
            product = a1.as_matrix() @ a2.as_matrix()
            expected = axis_angle_of_su2(product)
            assert composed.isclose(expected, tol=1e-10)

    def test_associativity_through_matrices(self, rng):
        for _ in range(100):
            rs = [AxisAngle(rng.normal(size=3), rng.uniform(-np.pi, np.pi))
                  for _ in range(3)]
            left = compose_axis_angle(compose_axis_angle(rs[0], rs[1]), rs[2])
            right = compose_axis_angle(rs[0], compose_axis_angle(rs[1], rs[2]))
            assert left.isclose(right, tol=1e-9)

    def test_roundtrip_through_matrix(self, rng):
        for _ in range(100):
            r = AxisAngle(rng.normal(size=3), rng.uniform(-np.pi, np.pi))
            assert r.isclose(axis_angle_of_su2(r.as_matrix()))


class TestTensorPartialTrace:
    def test_tensor_identity(self):
        assert np.allclose(tensor(np.eye(2), np.eye(2)), np.eye(4))

    def test_partial_trace_product_state(self):
        ket00 = np.zeros(4)
        ket00[0] = 1.0
        rho = np.outer(ket00, ket00).astype(complex)
        reduced = partial_trace(rho, 1)
        assert np.allclose(reduced, np.diag([1.0, 0.0]))

    def test_construct_and_recover(self, rng):
        for _ in range(20):
            rho_a = random_density(rng, 2)
            rho_b = random_density(rng, 2)
            joint = tensor(rho_a, rho_b)
            assert np.max(np.abs(partial_trace(joint, 1) - rho_a)) < 1e-10
            assert np.max(np.abs(partial_trace(joint, 0) - rho_b)) < 1e-10

    def test_trace_preserved(self, rng):
        rho = random_density(rng, 8)
        for idx in range(3):
            assert abs(np.trace(partial_trace(rho, idx)) - 1) < 1e-12

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            tensor(np.eye(3), np.eye(2))
        with pytest.raises(DimensionError):
            partial_trace(np.eye(4, dtype=complex) / 4, 2)


class TestDensityMatrix:
    def test_accepts_valid(self, rng):
        DensityMatrix(random_density(rng, 4))

    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex)
        with pytest.raises(DomainError):
            DensityMatrix(m)

    def test_rejects_bad_trace(self):
        with pytest.raises(DomainError):
            DensityMatrix(np.eye(2, dtype=complex))

    def test_rejects_negative_eigenvalue(self):
        m = np.diag([1.2, -0.2]).astype(complex)
        with pytest.raises(DomainError):
            DensityMatrix(m)

    def test_pure_and_mixed_constructors(self):
        pure = DensityMatrix.pure([1, 1])
        assert abs(pure.expectation(qmat.SIGMA_X) - 1.0) < 1e-12
        mixed = DensityMatrix.maximally_mixed(4)
        assert mixed.dim == 4


def test_rotation_matrix_special_values():
    assert np.allclose(rotation_matrix([1, 0, 0], np.pi), -1j * qmat.SIGMA_X)
    assert np.allclose(rotation_matrix([0, 0, 1], np.pi / 2),
                       np.diag([np.exp(-1j * np.pi / 4),
                                np.exp(1j * np.pi / 4)]))
