"""Laplace-domain field dynamics for a homogeneous anisotropic bulk.

The wave operator symbol is

    Lambda(k, s) = -DEC(k, 1 - chi_m_tilde(s)) + mu0 eps0 s^2 (1 + chi_e_tilde(s))

with DEC the double Levi-Civita contraction (Fourier symbol of
-curl(m curl .)).  Its inverse propagates three families of initial data
into the electric field through the kernels

    eta+-(k, +-t)  = L^-1{ Lambda^-1 [(i s +- w_n) 1 +- w_n DEC(khat, chi_m_tilde)] }
    xi+-(w_q)      = L^-1{ Lambda^-1 s^2/(s +- i w_q) } f(w_q)
    zeta+-(w_q)    = L^-1{ Lambda^-1 s/(s +- i w_q) } [k x] g(w_q)

where the upper (lower) sign propagates t > 0 (t < 0) data.  For rational
susceptibilities everything is assembled as matrix polynomials and
inverted by exact residues; otherwise the Talbot contour is used.
Inhomogeneous media need a boundary-value Green tensor and are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import polynomial as npp

from maqed.constants import NATURAL, PhysicalConstants
from maqed.coupling import CouplingSpectrum
from maqed.errors import (
    MissingKernel,
    SingularAtDispersion,
    UnsupportedGeometry,
)
from maqed.laplace import (
    RationalMatrix,
    matpoly_adjugate,
    matpoly_det,
    matpoly_mul,
    matpoly_scalar_mul,
    residue_inverse_laplace,
    talbot_inverse_laplace,
    trim_poly,
)
from maqed.medium import Medium, chi_laplace
from maqed.mode_space import WaveMode
from maqed.tensor_core import cross_matrix, double_epsilon_contract

__all__ = [
    "LambdaOperator",
    "KernelSet",
    "InitialState",
    "assemble_lambda",
    "invert_lambda",
    "lambda_rational",
    "dressed_pole_polynomial",
    "compute_kernels",
    "noise_current",
    "evolve_field_expectation",
    "q_measure_weights",
    "write_kernel_csv",
    "write_field_csv",
]

_I3 = np.eye(3)


@dataclass
class LambdaOperator:
    """Wave-operator symbol for one wavevector in a homogeneous medium."""

    k: np.ndarray
    medium: Medium
    consts: PhysicalConstants = NATURAL
    chi_e_laplace: Callable = field(init=False, repr=False)
    chi_m_laplace: Callable = field(init=False, repr=False)

    def __post_init__(self):
        if not self.medium.is_homogeneous():
            raise UnsupportedGeometry(
                "plane-wave diagonalization requires a homogeneous medium"
            )
        self.k = np.asarray(self.k, dtype=float)
        origin = np.zeros(3)
        self.chi_e_laplace = lambda s: chi_laplace(self.medium.electric, origin, s)
        self.chi_m_laplace = lambda s: chi_laplace(self.medium.magnetic, origin, s)


def assemble_lambda(op: LambdaOperator, s: complex) -> np.ndarray:
    """Lambda(k, s); reduces to |k|^2 1 - k k^t + (s^2/c^2) 1 in vacuum."""
    chi_m = op.chi_m_laplace(s)
    chi_e = op.chi_e_laplace(s)
    mu_eps = op.consts.mu0 * op.consts.eps0
    return (
        -double_epsilon_contract(op.k, _I3 - chi_m)
        + mu_eps * s * s * (_I3 + chi_e)
    )


def invert_lambda(op: LambdaOperator, s: complex) -> np.ndarray:
    """Lambda^-1(k, s); raises SingularAtDispersion on a dressed mode."""
    lam = assemble_lambda(op, s)
    scale = np.linalg.norm(lam)
    det = np.linalg.det(lam)
    if scale == 0.0 or abs(det) < 1e-12 * (scale / np.sqrt(3.0)) ** 3:
        raise SingularAtDispersion(
            f"det Lambda = {det!r} at s = {s!r}; s is a medium-dressed mode"
        )
    return np.linalg.inv(lam)


def _rational_or_none(model, s_scale):
    if model is None:
        return np.zeros((1, 3, 3)), np.array([1.0])
    if not model.is_rational():
        return None
    return model.laplace_rational(s_scale)


def lambda_rational(op: LambdaOperator, s_scale: float):
    """Lambda(s_scale*sigma) = A(sigma)/q(sigma) as matrix polynomials.

    Returns (A, q, (P_e, q_e), (P_m, q_m)) or None when a susceptibility is
    not rational in s (Talbot path).
    """
    rat_e = _rational_or_none(op.medium.electric, s_scale)
    rat_m = _rational_or_none(op.medium.magnetic, s_scale)
    if rat_e is None or rat_m is None:
        return None
    p_e, q_e = rat_e
    p_m, q_m = rat_m
    mu_eps = op.consts.mu0 * op.consts.eps0
    q = npp.polymul(q_e, q_m)
    dec_unit = double_epsilon_contract(op.k, _I3)
    dec_pm = np.stack([double_epsilon_contract(op.k, p_m[d]) for d in range(p_m.shape[0])])
    s2 = np.array([0.0, 0.0, mu_eps * s_scale**2])
    a = matpoly_scalar_mul(q, -dec_unit[None])
    a = _mp_add(a, matpoly_scalar_mul(q_e, dec_pm))
    a = _mp_add(a, matpoly_scalar_mul(npp.polymul(s2, q), _I3[None]))
    a = _mp_add(a, matpoly_scalar_mul(s2, matpoly_scalar_mul(q_m, p_e)))
    return a, q, (p_e, q_e), (p_m, q_m)


def _mp_add(a, b):
    n = max(a.shape[0], b.shape[0])
    dtype = np.result_type(a.dtype, b.dtype)
    out = np.zeros((n, 3, 3), dtype=dtype)
    out[: a.shape[0]] += a
    out[: b.shape[0]] += b
    return out


def dressed_pole_polynomial(op: LambdaOperator, s_scale: float = 1.0):
    """det Lambda cleared of denominators, in sigma = s/s_scale.

    Roots are the medium-dressed modes (plus the kinematic double root at
    sigma = 0 from the static longitudinal mode).
    """
    parts = lambda_rational(op, s_scale)
    if parts is None:
        raise UnsupportedGeometry("dressed-pole polynomial needs a rational medium")
    a, _q, _e, _m = parts
    return matpoly_det(a)


@dataclass
class KernelSet:
    """Evolution kernels for one mode on a time grid.

    eta has shape (nt, 3, 3); xi and zeta have shape (nq, nt, 3, 3) with
    nq the number of medium frequency nodes.  ``branch`` records which
    sign of the two-sided evolution the kernels propagate.
    """

    mode: WaveMode
    t: np.ndarray
    branch: str
    eta: np.ndarray
    omega_q: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    method: str = "residue"


def _bracket_rational(op, mode, sign, s_scale, q_m, p_m):
    """Numerator of (i s +- w)1 +- w DEC(khat, chi_m) over q_m, in sigma."""
    w = mode.omega
    lin = np.zeros((2, 3, 3), dtype=complex)
    lin[0] = sign * w * _I3
    lin[1] = 1j * s_scale * _I3
    b = matpoly_scalar_mul(q_m, lin)
    dec_pm_hat = np.stack(
        [double_epsilon_contract(mode.khat, p_m[d]) for d in range(p_m.shape[0])]
    )
    return _mp_add(b, sign * w * dec_pm_hat)


def _factors_at(spectrum: Optional[CouplingSpectrum], medium, omega_q, consts):
    """Coupling factors f, g at the requested nodes, shape (nq, 3, 3)."""
    from maqed.coupling import build_spectrum, factorize_spectrum

    omega_q = np.asarray(omega_q, dtype=float)
    if omega_q.size == 0:
        z = np.zeros((0, 3, 3))
        return z, z
    if spectrum is None:
        spectrum = factorize_spectrum(build_spectrum(medium, omega_q, consts))
        return spectrum.factor_f, spectrum.factor_g
    if spectrum.factor_f is None:
        from maqed.coupling import factorize_spectrum as _fact

        spectrum = _fact(spectrum)
    f = np.stack([_node_factor(spectrum, w, "f") for w in omega_q])
    g = np.stack([_node_factor(spectrum, w, "g") for w in omega_q])
    return f, g


def _node_factor(spectrum, omega, which):
    i = spectrum.node_index(float(omega))
    return (spectrum.factor_f if which == "f" else spectrum.factor_g)[i]


def compute_kernels(
    op: LambdaOperator,
    mode: WaveMode,
    omega_q: np.ndarray,
    t: np.ndarray,
    spectrum: Optional[CouplingSpectrum] = None,
    branch: str = "forward",
    method: str = "auto",
    talbot_degree: int = 32,
) -> KernelSet:
    """Evolution kernels eta/xi/zeta for one mode on a time grid.

    ``branch='forward'`` gives the upper-sign kernels evaluated at +t;
    ``'backward'`` the lower-sign kernels at -t (t is the positive grid in
    both cases).  ``method='auto'`` uses exact residues for rational media
    and the Talbot contour otherwise.
    """
    t = np.asarray(t, dtype=float)
    omega_q = np.asarray(omega_q, dtype=float)
    sign = {"forward": +1.0, "backward": -1.0}[branch]
    s_scale = max(mode.omega, 1e-300)
    parts = lambda_rational(op, s_scale)
    if method == "auto":
        method = "residue" if parts is not None else "talbot"
    factor_f, factor_g = _factors_at(spectrum, op.medium, omega_q, op.consts)
    kx = cross_matrix(mode.k)
    no_e = _is_zero_factor(factor_f)
    no_m = _is_zero_factor(factor_g)

    if method == "residue":
        if parts is None:
            raise UnsupportedGeometry("residue path requires rational chi(s)")
        a, q, (p_e, q_e), (p_m, q_m) = parts
        adj = matpoly_adjugate(a)
        det = matpoly_det(a)
        bracket = _bracket_rational(op, mode, sign, s_scale, q_m, p_m)
        num_eta = matpoly_scalar_mul(q_e, matpoly_mul(adj, bracket))
        tau = s_scale * t
        w = mode.omega

        # structured evaluators for the cluster contours: the expanded
        # num/den lose digits in the deep valleys at nearly-multiple poles
        def eta_eval(sig):
            s = s_scale * sig
            br = (1j * s + sign * w) * _I3 + sign * w * double_epsilon_contract(
                mode.khat, op.chi_m_laplace(s)
            )
            return np.linalg.solve(assemble_lambda(op, s), br)

        eta = s_scale * residue_inverse_laplace(num_eta, det, tau, eval_fn=eta_eval)
        core = matpoly_scalar_mul(q, adj)
        xi = np.zeros((omega_q.size, t.size, 3, 3), dtype=complex)
        zeta = np.zeros_like(xi)
        for j, wq in enumerate(omega_q):
            pole = np.array([sign * 1j * wq / s_scale, 1.0])
            den_j = npp.polymul(det, pole)

            def pole_eval(sig, power):
                s = s_scale * sig
                lam_inv = np.linalg.inv(assemble_lambda(op, s))
                return lam_inv * (s**power / (s + sign * 1j * wq))

            if not no_e:
                num_xi = matpoly_scalar_mul(np.array([0.0, 0.0, s_scale]), core)
                base = s_scale * residue_inverse_laplace(
                    num_xi, den_j, tau, eval_fn=lambda sig: pole_eval(sig, 2)
                )
                xi[j] = base @ factor_f[j]
            if not no_m:
                num_zeta = matpoly_scalar_mul(np.array([0.0, 1.0]), core)
                base = s_scale * residue_inverse_laplace(
                    num_zeta, den_j, tau, eval_fn=lambda sig: pole_eval(sig, 1)
                )
                zeta[j] = base @ (kx @ factor_g[j])
        return KernelSet(mode, t, branch, eta, omega_q, xi, zeta, method)

    if method != "talbot":
        raise ValueError(f"unknown kernel method {method!r}")

    def lam_inv(s):
        return invert_lambda(op, s)

    w = mode.omega

    def f_eta(s):
        br = (1j * s + sign * w) * _I3 + sign * w * double_epsilon_contract(
            mode.khat, op.chi_m_laplace(s)
        )
        return lam_inv(s) @ br

    eta = talbot_inverse_laplace(f_eta, t, degree=talbot_degree)
    xi = np.zeros((omega_q.size, t.size, 3, 3), dtype=complex)
    zeta = np.zeros_like(xi)
    for j, wq in enumerate(omega_q):
        if not no_e:
            base = talbot_inverse_laplace(
                lambda s: lam_inv(s) * (s * s / (s + sign * 1j * wq)),
                t,
                degree=talbot_degree,
            )
            xi[j] = base @ factor_f[j]
        if not no_m:
            base = talbot_inverse_laplace(
                lambda s: lam_inv(s) * (s / (s + sign * 1j * wq)),
                t,
                degree=talbot_degree,
            )
            zeta[j] = base @ (kx @ factor_g[j])
    return KernelSet(mode, t, branch, eta, omega_q, xi, zeta, "talbot")


def _is_zero_factor(factor):
    return factor.size == 0 or not np.any(np.abs(factor) > 0.0)


@dataclass
class InitialState:
    """Coherent-state initial data keyed by the mode integer triple.

    photon[(n, lam)] are the photon amplitudes alpha (lam in {1, 2});
    d_amp[n] / b_amp[n] are (3, nq) arrays of medium amplitude densities
    over ``omega_q`` (rows are the polarization index nu = 1..3);
    d_field/b_field hold initial D(k, 0), B(k, 0) Fourier coefficients.
    """

    omega_q: np.ndarray = field(default_factory=lambda: np.zeros(0))
    photon: dict = field(default_factory=dict)
    d_amp: dict = field(default_factory=dict)
    b_amp: dict = field(default_factory=dict)
    d_field: dict = field(default_factory=dict)
    b_field: dict = field(default_factory=dict)

    def alpha(self, n, lam) -> complex:
        return complex(self.photon.get((tuple(n), int(lam)), 0.0))

    def medium_amp(self, which, n) -> np.ndarray:
        table = self.d_amp if which == "d" else self.b_amp
        arr = table.get(tuple(n))
        if arr is None:
            return np.zeros((3, max(self.omega_q.size, 0)), dtype=complex)
        return np.asarray(arr, dtype=complex)

    def field_coeff(self, which, n) -> np.ndarray:
        table = self.d_field if which == "d" else self.b_field
        return np.asarray(table.get(tuple(n), np.zeros(3)), dtype=complex)

    def active_modes(self):
        keys = {n for (n, _lam) in self.photon}
        keys |= set(self.d_amp) | set(self.b_amp)
        keys |= set(self.d_field) | set(self.b_field)
        return sorted(keys)


def q_measure_weights(omega_q: np.ndarray, consts: PhysicalConstants) -> np.ndarray:
    """Trapezoid weights for int d^3 q -> 4 pi int omega^2 d omega / c^3."""
    omega_q = np.asarray(omega_q, dtype=float)
    if omega_q.size == 0:
        return np.zeros(0)
    if omega_q.size == 1:
        dw = np.array([1.0])
    else:
        dw = np.empty_like(omega_q)
        dw[0] = 0.5 * (omega_q[1] - omega_q[0])
        dw[-1] = 0.5 * (omega_q[-1] - omega_q[-2])
        dw[1:-1] = 0.5 * (omega_q[2:] - omega_q[:-2])
    return 4.0 * np.pi * omega_q**2 / consts.c**3 * dw


def noise_current(
    mode: WaveMode,
    s: complex,
    init: InitialState,
    spectrum: Optional[CouplingSpectrum],
    branch: str,
    medium: Medium,
    consts: PhysicalConstants = NATURAL,
    mirror_mode: Optional[WaveMode] = None,
) -> np.ndarray:
    """Laplace-domain noise current J(k, s) for one mode.

    J = +-i k x B0 - mu0 s^2 P_N - (+-) mu0 s i k x M_N - (+-) i k x
    chi_m_tilde(s) B0 + mu0 s D0, with the noise polarizations built from
    the coherent medium amplitudes and the coupling factors; the h.c. part
    of the mode expansion pulls in the mirror mode -n amplitudes.
    """
    sign = {"forward": +1.0, "backward": -1.0}[branch]
    n = tuple(mode.n)
    n_mir = tuple(-x for x in mode.n)
    b0 = init.field_coeff("b", n)
    d0 = init.field_coeff("d", n)
    omega_q = init.omega_q
    w = q_measure_weights(omega_q, consts)
    factor_f, factor_g = _factors_at(spectrum, medium, omega_q, consts)

    p_n = np.zeros(3, dtype=complex)
    m_n = np.zeros(3, dtype=complex)
    if omega_q.size:
        d_here = init.medium_amp("d", n)
        b_here = init.medium_amp("b", n)
        d_mir = init.medium_amp("d", n_mir)
        b_mir = init.medium_amp("b", n_mir)
        if mirror_mode is None:
            from maqed.mode_space import polarization_triads

            e1m, e2m, khm = polarization_triads(-mode.k)
            v_mir = np.vstack([e1m, e2m, khm])
            s_mir = np.vstack([np.cross(khm, e1m), np.cross(khm, e2m), khm])
        else:
            v_mir, s_mir = mirror_mode.v_triad, mirror_mode.s_triad
        pos = 1.0 / (s + sign * 1j * omega_q)  # e^{-i w t} branch
        neg = 1.0 / (s - sign * 1j * omega_q)  # h.c. branch
        for nu in range(3):
            p_n += np.einsum("q,qij,j->i", w * pos * d_here[nu], factor_f, mode.v_triad[nu])
            p_n += np.einsum("q,qij,j->i", w * neg * np.conj(d_mir[nu]), factor_f, v_mir[nu])
            m_n += 1j * np.einsum("q,qij,j->i", w * pos * b_here[nu], factor_g, mode.s_triad[nu])
            m_n -= 1j * np.einsum("q,qij,j->i", w * neg * np.conj(b_mir[nu]), factor_g, s_mir[nu])

    chi_m = chi_laplace(medium.magnetic, np.zeros(3), s)
    ikx = 1j * cross_matrix(mode.k)
    return (
        sign * ikx @ b0
        - consts.mu0 * s * s * p_n
        - sign * consts.mu0 * s * (ikx @ m_n)
        - sign * ikx @ (chi_m @ b0)
        + consts.mu0 * s * d0
    )


def evolve_field_expectation(
    modes: list[WaveMode],
    kernels: dict,
    init: InitialState,
    r_points: np.ndarray,
    t: np.ndarray,
    volume: float,
    consts: PhysicalConstants = NATURAL,
) -> np.ndarray:
    """Coherent-state expectation <E(r, t)> from precomputed kernels.

    kernels maps the mode integer triple to its KernelSet (forward for
    t >= 0 grids).  Returns a real array of shape (nt, npoints, 3).  The
    q integral uses the same 4 pi omega^2/c^3 measure as the coupling
    transform.
    """
    r_points = np.atleast_2d(np.asarray(r_points, dtype=float))
    t = np.asarray(t, dtype=float)
    out = np.zeros((t.size, r_points.shape[0], 3))
    active = set(init.active_modes())
    w_q = q_measure_weights(init.omega_q, consts)
    for mode in modes:
        n = tuple(mode.n)
        if n not in active:
            continue
        ks = kernels.get(n)
        if ks is None:
            raise MissingKernel(f"no kernels computed for mode {n}")
        sign = +1.0 if ks.branch == "forward" else -1.0
        phase = np.exp(1j * (r_points @ mode.k))  # (npoints,)
        pref = np.sqrt(consts.hbar * mode.omega * consts.mu0 / (2.0 * consts.c * volume))
        for lam, e_lam in ((1, mode.e1), (2, mode.e2)):
            alpha = init.alpha(n, lam)
            if alpha == 0.0:
                continue
            vec = np.einsum("tij,j->ti", ks.eta, e_lam)  # (nt, 3)
            out += pref * 2.0 * np.real(
                vec[:, None, :] * (alpha * phase)[None, :, None]
            )
        if init.omega_q.size == 0:
            continue
        d_here = init.medium_amp("d", n)
        b_here = init.medium_amp("b", n)
        mu_v = consts.mu0 / np.sqrt(volume)
        for nu in range(3):
            if np.any(d_here[nu] != 0.0):
                amp = w_q * d_here[nu]  # (nq,)
                vec = np.einsum("qtij,j->qti", ks.xi, mode.v_triad[nu])
                contrib = np.einsum("qti,q,p->tpi", vec, amp, phase)
                out -= mu_v * 2.0 * np.real(contrib)
            if np.any(b_here[nu] != 0.0):
                amp = w_q * b_here[nu]
                vec = np.einsum("qtij,j->qti", ks.zeta, mode.s_triad[nu])
                contrib = np.einsum("qti,q,p->tpi", vec, amp, phase)
                out += sign * mu_v * 2.0 * np.real(contrib)
    return out


def write_kernel_csv(ks: KernelSet, path):
    """Export the eta kernel time series for one mode as CSV."""
    cols = ["t"]
    for i in (1, 2, 3):
        for j in (1, 2, 3):
            cols += [f"Re_eta_{i}{j}", f"Im_eta_{i}{j}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for it, tv in enumerate(ks.t):
            row = [f"{tv:.17g}"]
            for i in range(3):
                for j in range(3):
                    z = ks.eta[it, i, j]
                    row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            fh.write(",".join(row) + "\n")


def write_field_csv(path, t, r_points, field):
    """Export an <E(r, t)> series as CSV rows (t, x, y, z, Ex, Ey, Ez)."""
    r_points = np.atleast_2d(r_points)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,x,y,z,Ex,Ey,Ez\n")
        for it, tv in enumerate(np.asarray(t, dtype=float)):
            for ip, r in enumerate(r_points):
                vals = [tv, r[0], r[1], r[2], *field[it, ip]]
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")
