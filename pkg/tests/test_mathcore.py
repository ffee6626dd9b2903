from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import DATA
from etppc.errors import InvalidInputError, SingularityError
from etppc.mathcore import (as_unit_quaternion, cross_matrix, diag_span, jacobian_Fs, jacobian_Fs_inverse,
                            quat_conj, quat_error, quat_identity, quat_mul, quat_norm_defect, quat_normalize)
from oracles import oracle_quaternion_product

rng = np.random.default_rng(7)


def random_unit(n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)


def unit_with_scalar(q0):
    v = rng.normal(size=3)
    v *= np.sqrt(1 - q0 ** 2) / np.linalg.norm(v)
    return np.array([*v, q0])


class TestCrossMatrix:
    def test_zero(self):
        assert np.array_equal(cross_matrix([0, 0, 0]), np.zeros((3, 3)))

    def test_basis(self):
        assert np.allclose(cross_matrix([1, 0, 0]) @ [0, 1, 0], [0, 0, 1])

    def test_skew_and_cross(self):
        for _ in range(50):
            a, b = rng.normal(size=3), rng.normal(size=3)
            A = cross_matrix(a)
            assert np.array_equal(A.T, -A)
            assert np.allclose(A @ b, np.cross(a, b), atol=1e-15)
            assert np.allclose(A @ a, 0.0, atol=1e-15)


def test_diag_span():
    D = diag_span([1.0, 2.0, 3.0])
    assert np.array_equal(np.diag(D), [1, 2, 3])
    assert np.count_nonzero(D - np.diag(np.diag(D))) == 0


class TestQuaternion:
    def test_product_matches_oracle(self):
        for a, b in zip(random_unit(200), random_unit(200)):
            assert np.allclose(quat_mul(a, b), oracle_quaternion_product(a, b), atol=1e-15)

    def test_identity_and_inverse(self):
        q = random_unit(1)[0]
        assert np.allclose(quat_mul(quat_identity(), q), q)
        assert np.allclose(quat_mul(q, quat_conj(q)), quat_identity(), atol=1e-15)

    def test_error_of_equal_attitudes_is_identity(self):
        q = random_unit(1)[0]
        assert np.allclose(quat_error(q, q), [0, 0, 0, 1], atol=1e-15)

    def test_error_norm_closure(self):
        for a, b in zip(random_unit(500), random_unit(500)):
            qe = quat_error(a, b)
            assert quat_norm_defect(qe) <= 1e-9
            assert qe[3] >= 0

    def test_reference_initial_error_matches_golden(self, ref_cfg):
        golden = json.loads((DATA / "golden_qe0.json").read_text())
        assert np.allclose(ref_cfg.q_e0, golden["q_e0"], atol=1e-14)

    def test_non_unit_input_rejected(self):
        with pytest.raises(InvalidInputError):
            quat_error([0, 0, 0, 2.0], [0, 0, 0, 1])
        with pytest.raises(InvalidInputError):
            as_unit_quaternion([0, 0, 0.1, 1.0])

    def test_normalize_threshold(self):
        q = np.array([0.0, 0.0, 0.0, 1.0 + 1e-13])
        assert quat_normalize(q)[3] == q[3]  # below threshold: untouched
        assert quat_norm_defect(quat_normalize(np.array([0.0, 0, 0, 1.0 + 1e-9]))) < 1e-15


class TestJacobian:
    def test_identity(self):
        assert np.allclose(jacobian_Fs([0, 0, 0, 1]), 0.5 * np.eye(3))

    def test_inverse_norm(self):
        for _ in range(20):
            q = unit_with_scalar(0.5)
            assert abs(np.linalg.norm(jacobian_Fs_inverse(q), 2) - 4.0) <= 1e-9

    def test_inverse_identity(self):
        for q in random_unit(300):
            if abs(q[3]) <= 0.1:
                continue
            err = np.abs(jacobian_Fs_inverse(q) @ jacobian_Fs(q) - np.eye(3)).max()
            assert err <= 1e-10

    def test_singularity(self):
        with pytest.raises(SingularityError):
            jacobian_Fs_inverse([1.0, 0.0, 0.0, 0.0])
