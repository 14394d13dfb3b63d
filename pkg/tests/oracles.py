"""Independent oracles for the test suite.

Each oracle deliberately takes a different computational route from the
implementation it checks: explicit index sums instead of einsum, direct
quadrature instead of closed forms, real-space Green-function convolution
instead of FFT projection, RK4 time stepping instead of Laplace inversion.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

_EPS = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS[_i, _j, _k] = 1.0
    _EPS[_k, _j, _i] = -1.0


def epsilon_contract_explicit(k, m):
    """Six-term Levi-Civita sum written out as bare loops."""
    k = np.asarray(k, dtype=float)
    m = np.asarray(m)
    out = np.zeros((3, 3), dtype=m.dtype)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for mu in range(3):
                for nu in range(3):
                    for al in range(3):
                        for be in range(3):
                            acc += (
                                _EPS[i, mu, nu]
                                * _EPS[al, be, j]
                                * m[nu, al]
                                * k[mu]
                                * k[be]
                            )
            out[i, j] = acc
    return out


def helmholtz_split_green(div_values, lengths, shape, n_max=1):
    """Longitudinal part by real-space convolution with the box Green function.

    F_par(r) = -int dr' div F(r') grad G(r, r') with G the truncated
    lattice mode sum and the convolution a trapezoid over the periodic
    grid.  Exact (to roundoff) for band-limited fields whose modes lie
    within the truncation and below the aliasing threshold.  O(N^6).
    """
    lengths = np.asarray(lengths, dtype=float)
    axes = [np.arange(nn) * ll / nn for nn, ll in zip(shape, lengths)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    ks = []
    for n1 in range(-n_max, n_max + 1):
        for n2 in range(-n_max, n_max + 1):
            for n3 in range(-n_max, n_max + 1):
                if n1 == n2 == n3 == 0:
                    continue
                ks.append(2.0 * np.pi * np.array([n1, n2, n3]) / lengths)
    ks = np.array(ks)
    vol = float(np.prod(lengths))
    cell = vol / np.prod(shape)
    pts = grid.reshape(-1, 3)
    div_flat = np.asarray(div_values, dtype=float).reshape(-1)
    f_par = np.zeros((pts.shape[0], 3))
    # grad_r G(r, r') = sum_k (i k / |k|^2 V) e^{i k (r - r')}
    for idx, r in enumerate(pts):
        phase = np.exp(1j * ((r @ ks.T) - pts @ ks.T))  # e^{ik(r - r')}
        gradg = np.real(1j * phase @ (ks / (ks**2).sum(axis=1)[:, None])) / vol
        f_par[idx] = -(div_flat @ gradg) * cell
    return f_par.reshape(tuple(shape) + (3,))


def sine_transform_quad(im_chi_fn, t, omega_max, pieces=200):
    """(2/pi) int_0^W Im chi(w) sin(w t) dw by adaptive panel quadrature."""
    edges = np.linspace(0.0, omega_max, pieces + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = quad(lambda w: im_chi_fn(w) * np.sin(w * t), a, b, limit=200)
        total += val
    return 2.0 / np.pi * total


def rect_chi_freq_quad(chi0, delta, omega):
    """Direct quadrature of int_0^delta (1/delta) e^{i w t} dt."""
    re, _ = quad(lambda t: np.cos(omega * t) / delta, 0.0, delta)
    im, _ = quad(lambda t: np.sin(omega * t) / delta, 0.0, delta)
    return (re + 1j * im) * np.asarray(chi0)


def laplace_quad(chi_time_fn, s, t_max=80.0):
    """Term-by-term Laplace transform of a scalar kernel by quadrature."""
    re, _ = quad(lambda t: np.real(chi_time_fn(t) * np.exp(-s * t)), 0.0, t_max, limit=400)
    im, _ = quad(lambda t: np.imag(chi_time_fn(t) * np.exp(-s * t)), 0.0, t_max, limit=400)
    return re + 1j * im


def rk4_maxwell_constant(chi0, k, d0, b0, t_grid, eps0=1.0, mu0=1.0, substeps=8):
    """Classical anisotropic Maxwell with instantaneous response, single mode.

    Evolves the (D, B) Fourier coefficients with RK4 and returns E(t) =
    (1+chi0)^-1 D / eps0 at the grid times, plus the relative drift of the
    conserved quadratic energy.
    """
    chi0 = np.asarray(chi0, dtype=float)
    inv_eps = np.linalg.inv(np.eye(3) + chi0)
    k = np.asarray(k, dtype=float)

    def rhs(y):
        d, b = y[:3], y[3:]
        e = inv_eps @ d / eps0
        return np.concatenate([1j * np.cross(k, b) / mu0, -1j * np.cross(k, e)])

    def energy(y):
        d, b = y[:3], y[3:]
        return np.real(np.conj(d) @ (inv_eps @ d) / eps0 + np.conj(b) @ b / mu0)

    y = np.concatenate([np.asarray(d0, dtype=complex), np.asarray(b0, dtype=complex)])
    e_series = np.zeros((t_grid.size, 3), dtype=complex)
    e0 = energy(y)
    drift = 0.0
    for it in range(t_grid.size):
        e_series[it] = inv_eps @ y[:3] / eps0
        drift = max(drift, abs(energy(y) - e0) / e0)
        if it < t_grid.size - 1:
            h = (t_grid[it + 1] - t_grid[it]) / substeps
            for _ in range(substeps):
                k1 = rhs(y)
                k2 = rhs(y + 0.5 * h * k1)
                k3 = rhs(y + 0.5 * h * k2)
                k4 = rhs(y + h * k3)
                y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return e_series, drift


def random_orthogonal(rng):
    """Haar-ish orthogonal matrix from QR of a Gaussian sample."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    return q * np.sign(np.diag(r))


def random_psd(rng, scale=1.0, floor=0.0):
    a = rng.normal(size=(3, 3))
    return scale * (a @ a.T) + floor * np.eye(3)
