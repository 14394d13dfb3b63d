import numpy as np
import pytest

from maqed.constants import NATURAL
from maqed.errors import ZeroWavevector
from maqed.mode_space import (
    BoxGeometry,
    FieldSample,
    decompose_field,
    enumerate_modes,
    transverse_delta,
)

from oracles import helmholtz_split_green

TWO_PI = 2.0 * np.pi


@pytest.fixture
def cube():
    return BoxGeometry(TWO_PI, TWO_PI, TWO_PI, 1)


class TestEnumerateModes:
    def test_mode_count_nmax1(self, cube):
        modes = enumerate_modes(cube)
        assert len(modes) == 26

    def test_zero_mode_absent(self, cube):
        assert all(m.n != (0, 0, 0) for m in enumerate_modes(cube))

    def test_wavevector_definition(self):
        geo = BoxGeometry(1.0, 1.0, 1.0, 3)
        mode = [m for m in enumerate_modes(geo) if m.n == (1, 2, 3)][0]
        assert np.allclose(mode.k, TWO_PI * np.array([1.0, 2.0, 3.0]))

    def test_frequency_and_order(self, cube):
        modes = enumerate_modes(cube, NATURAL)
        m100 = [m for m in modes if m.n == (1, 0, 0)][0]
        assert np.allclose(m100.k, [1.0, 0.0, 0.0])
        assert m100.omega == pytest.approx(1.0)
        assert [m.n for m in modes] == sorted(m.n for m in modes)

    def test_triad_orthonormality(self):
        geo = BoxGeometry(1.0, 2.0, 3.0, 2)
        for m in enumerate_modes(geo):
            g = np.vstack([m.e1, m.e2, m.khat])
            assert np.abs(g @ g.T - np.eye(3)).max() < 1e-12
            assert abs(m.e1 @ m.k) < 1e-12 * np.linalg.norm(m.k)
            assert abs(m.e2 @ m.k) < 1e-12 * np.linalg.norm(m.k)
            # s_nu = khat x e_nu for nu = 1, 2; v_3 = s_3 = khat
            assert np.allclose(m.s_triad[0], np.cross(m.khat, m.e1))
            assert np.allclose(m.s_triad[1], np.cross(m.khat, m.e2))
            assert np.allclose(m.v_triad[2], m.khat)
            assert np.allclose(m.s_triad[2], m.khat)

    def test_triad_completeness(self):
        geo = BoxGeometry(1.0, 2.0, 3.0, 1)
        for m in enumerate_modes(geo):
            comp = sum(np.outer(v, v) for v in m.v_triad)
            assert np.abs(comp - np.eye(3)).max() < 1e-12


class TestTransverseDelta:
    def test_z_axis(self):
        assert np.allclose(transverse_delta([0.0, 0.0, 1.0]), np.diag([1.0, 1.0, 0.0]))

    def test_annihilates_k(self, rng):
        for _ in range(50):
            k = rng.normal(size=3)
            assert np.abs(transverse_delta(k) @ k).max() < 1e-12 * np.linalg.norm(k)

    def test_diagonal_formula(self):
        k = np.array([1.0, 1.0, 0.0]) / np.sqrt(2.0)
        expected = np.array([[0.5, -0.5, 0.0], [-0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])
        assert np.allclose(transverse_delta(k), expected)

    def test_idempotent(self, rng):
        for _ in range(50):
            p = transverse_delta(rng.normal(size=3))
            assert np.abs(p @ p - p).max() < 1e-12

    def test_zero_rejected(self):
        with pytest.raises(ZeroWavevector):
            transverse_delta(np.zeros(3))


def _grid_field(geometry, shape, fn):
    axes = [np.arange(nn) * ll / nn for nn, ll in zip(shape, geometry.lengths)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    return FieldSample(fn(grid), geometry)


class TestDecomposeField:
    def test_constant_field_is_transverse(self, cube):
        f = _grid_field(cube, (8, 8, 8), lambda g: np.broadcast_to([1.0, -2.0, 0.5], g.shape).copy())
        perp, par = decompose_field(f)
        assert np.abs(perp.values - f.values).max() < 1e-12
        assert np.abs(par.values).max() < 1e-12

    def test_gradient_field_is_longitudinal(self, cube):
        def fn(g):
            out = np.zeros(g.shape)
            out[..., 0] = np.cos(g[..., 0])  # grad of sin(x), L = 2 pi
            return out

        perp, par = decompose_field(_grid_field(cube, (16, 8, 8), fn))
        assert np.abs(perp.values).max() < 1e-12
        assert np.abs(par.values - np.cos(_grid_field(cube, (16, 8, 8), fn).grid_points()[..., 0])[..., None] * np.array([1.0, 0, 0])).max() < 1e-12

    def test_plane_wave_transverse(self, cube):
        k = np.array([1.0, 0.0, 0.0])
        e = np.array([0.0, 1.0, 0.0])

        def fn(g):
            return np.cos(g @ k)[..., None] * e

        perp, par = decompose_field(_grid_field(cube, (8, 8, 8), fn))
        assert np.abs(par.values).max() < 1e-12

    def test_sum_and_projection(self, cube, rng):
        f = _grid_field(cube, (8, 8, 8), lambda g: rng.normal(size=g.shape))
        perp, par = decompose_field(f)
        assert np.abs(perp.values + par.values - f.values).max() < 1e-10
        perp2, par2 = decompose_field(perp)
        assert np.abs(perp2.values - perp.values).max() < 1e-12
        assert np.abs(par2.values).max() < 1e-12

    def test_parseval(self, cube, rng):
        vals = rng.normal(size=(8, 8, 8, 3))
        fhat = np.fft.fftn(vals, axes=(0, 1, 2)) / (8 * 8 * 8)
        lhs = np.sum(np.abs(fhat) ** 2)
        rhs = np.mean(np.sum(vals**2, axis=-1))
        assert abs(lhs - rhs) / rhs < 1e-10

    def test_green_function_oracle(self, cube):
        # band-limited field vs real-space Green convolution with analytic
        # divergence; both routes are exact here, so the match is tight
        shape = (6, 6, 6)
        k1 = np.array([1.0, 0.0, 0.0])
        k2 = np.array([0.0, 1.0, 1.0])
        a_vec = np.array([0.3, 1.0, 0.0])
        b_vec = np.array([0.0, 0.5, -1.0])

        def fn(g):
            return (
                np.sin(g @ k1)[..., None] * a_vec
                + np.cos(g @ k2)[..., None] * b_vec
            )

        f = _grid_field(cube, shape, fn)
        _, par = decompose_field(f)
        g = f.grid_points()
        div = (k1 @ a_vec) * np.cos(g @ k1) - (k2 @ b_vec) * np.sin(g @ k2)
        par_green = helmholtz_split_green(div, cube.lengths, shape, n_max=1)
        assert np.abs(par.values - par_green).max() < 1e-10
