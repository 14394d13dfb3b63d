import numpy as np
import pytest

from maqed.errors import NegativeEigenvalue, NotOrthogonal, NotSymmetric
from maqed.tensor_core import (
    apply_gauge,
    cross_matrix,
    double_epsilon_contract,
    psd_sqrt,
)

from oracles import epsilon_contract_explicit, random_orthogonal, random_psd


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3), atol=1e-14)

    def test_diagonal(self):
        assert np.allclose(psd_sqrt(np.diag([4.0, 1.0, 0.0])), np.diag([2.0, 1.0, 0.0]))

    def test_eigendecomposition_oracle(self):
        s = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
        r3 = np.sqrt(3.0)
        expected = np.array(
            [
                [(r3 + 1) / 2, (r3 - 1) / 2, 0.0],
                [(r3 - 1) / 2, (r3 + 1) / 2, 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        assert np.allclose(psd_sqrt(s), expected, atol=1e-12)

    def test_reconstruction_property(self, rng):
        # spec-level property: R R^t = S to 1e-10 over >= 1000 samples
        for _ in range(1000):
            s = random_psd(rng, scale=rng.uniform(0.1, 10.0))
            r = psd_sqrt(s)
            scale = max(np.linalg.norm(s), 1e-300)
            assert np.linalg.norm(r @ r.T - s) / scale < 1e-10
            assert np.linalg.norm(r - r.T) / max(np.linalg.norm(r), 1e-300) < 1e-12

    def test_clamps_small_negatives(self):
        s = np.diag([1.0, 1e-14, -1e-14])
        r = psd_sqrt(s)
        assert np.all(np.linalg.eigvalsh(r) >= 0.0)

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(NegativeEigenvalue):
            psd_sqrt(np.diag([1.0, 1.0, -0.5]))

    def test_asymmetric_rejected(self):
        bad = np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(NotSymmetric):
            psd_sqrt(bad)


class TestApplyGauge:
    def test_identity_gauge(self, rng):
        f = rng.normal(size=(3, 3))
        assert np.array_equal(apply_gauge(f, np.eye(3)), f)

    def test_rotation_example(self):
        f = np.diag([2.0, 1.0, 1.0])
        rot = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        out = apply_gauge(f, rot)
        assert np.allclose(out, np.array([[0, 2, 0], [-1, 0, 0], [0, 0, 1.0]]))
        assert np.allclose(out @ out.T, np.diag([4.0, 1.0, 1.0]))

    def test_zero_absorbs_gauge(self, rng):
        a = random_orthogonal(rng)
        assert np.array_equal(apply_gauge(np.zeros((3, 3)), a), np.zeros((3, 3)))

    def test_self_product_preserved(self, rng):
        for _ in range(200):
            f = rng.normal(size=(3, 3))
            a = random_orthogonal(rng)
            g = apply_gauge(f, a)
            scale = max(np.linalg.norm(f @ f.T), 1e-300)
            assert np.linalg.norm(g @ g.T - f @ f.T) / scale < 1e-12

    def test_non_orthogonal_rejected(self):
        with pytest.raises(NotOrthogonal):
            apply_gauge(np.eye(3), np.diag([1.0, 2.0, 1.0]))


class TestDoubleEpsilonContract:
    def test_transverse_projector(self):
        out = double_epsilon_contract(np.array([0.0, 0.0, 1.0]), np.eye(3))
        assert np.allclose(out, np.diag([-1.0, -1.0, 0.0]))

    def test_zero_wavevector(self, rng):
        m = rng.normal(size=(3, 3))
        assert np.allclose(double_epsilon_contract(np.zeros(3), m), 0.0)

    def test_diagonal_medium_oracle(self):
        out = double_epsilon_contract(np.array([0.0, 0.0, 1.0]), np.diag([2.0, 3.0, 7.0]))
        assert np.allclose(out, np.diag([-3.0, -2.0, 0.0]))

    def test_explicit_sum_oracle(self, rng):
        for _ in range(50):
            k = rng.normal(size=3)
            m = rng.normal(size=(3, 3))
            assert np.allclose(
                double_epsilon_contract(k, m), epsilon_contract_explicit(k, m), atol=1e-12
            )

    def test_curl_curl_symbol(self, rng):
        # dec(k, 1) + |k|^2 1 - k k^t = 0
        for _ in range(100):
            k = rng.normal(size=3)
            out = double_epsilon_contract(k, np.eye(3))
            resid = out + (k @ k) * np.eye(3) - np.outer(k, k)
            assert np.abs(resid).max() < 1e-12 * max(1.0, k @ k)


def test_cross_matrix(rng):
    for _ in range(20):
        k, v = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(cross_matrix(k) @ v, np.cross(k, v))
