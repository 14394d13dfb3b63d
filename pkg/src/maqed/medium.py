"""Causal susceptibility models and the constitutive convolution evaluators.

Frequency convention
--------------------
chi(omega) = int_0^inf chi(t) exp(+i omega t) dt, so a passive medium has a
positive-semidefinite Im chi(omega) for omega > 0 and the sine transform of
the kernel is exactly Im chi.  The Laplace image is the analytic
continuation chi_tilde(-i omega + 0) = chi(omega).

Models
------
Lorentz     anisotropic bound-charge oscillator: restoring tensor K
            (rad^2/s^2), damping gamma, strength plasma = N e^2 / (m eps0).
RectPulse   box kernel chi0/delta on (0, delta); the delta -> 0 limit is the
            instantaneous (nonabsorptive) medium.
Constant    instantaneous response chi0 (the realized delta -> 0 limit).
Tabulated   Im chi samples on a frequency grid; Re chi and the Laplace
            image are reconstructed by dispersion integrals.

Inhomogeneity is piecewise constant per spatial region; every evaluator
takes the position r and dispatches through the region map when present.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from maqed.constants import PhysicalConstants
from maqed.errors import (
    InsufficientHistory,
    NonPassive,
    NotSymmetric,
    SingularResonance,
)
from maqed.quadrature import (
    filon_sine_transform,
    kramers_kronig_real,
    laplace_from_im_spectrum,
)
from maqed.tensor_core import require_symmetric, symmetrize

__all__ = [
    "Lorentz",
    "RectPulse",
    "Constant",
    "Tabulated",
    "Region",
    "InhomogeneousModel",
    "Medium",
    "FieldHistory",
    "chi_time",
    "chi_freq",
    "chi_laplace",
    "polarization_response",
    "magnetization_response",
    "passivity_windows",
    "load_tabulated_csv",
]

_TABULATED_CSV_HEADER = (
    "omega,im_chi_11,im_chi_12,im_chi_13,im_chi_21,im_chi_22,im_chi_23,"
    "im_chi_31,im_chi_32,im_chi_33"
)


def _as_symmetric_tensor(t, what):
    t = np.array(t, dtype=float)
    if t.shape != (3, 3):
        raise ValueError(f"{what} must be a 3x3 tensor")
    require_symmetric(t, tol=1e-10, what=what)
    return symmetrize(t)


@dataclass(frozen=True)
class Lorentz:
    """Damped anisotropic oscillator model.

    chi(omega) = plasma * [(K - omega^2 - 2 i gamma omega) * 1]^-1 in the
    eigenbasis sense; the time kernel is plasma * e^{-gamma t} sin(Omega_i
    t)/Omega_i on each eigenvector of K, Omega_i = sqrt(kappa_i - gamma^2).
    """

    plasma: float
    gamma: float
    K: np.ndarray

    def __post_init__(self):
        if self.plasma < 0.0:
            raise ValueError("plasma strength must be >= 0")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        K = _as_symmetric_tensor(self.K, "Lorentz K")
        kappa, vecs = np.linalg.eigh(K)
        if np.any(kappa < -1e-12 * max(1.0, float(np.max(np.abs(kappa))))):
            raise ValueError("Lorentz K must be PSD (real eigenfrequencies)")
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "_kappa", np.clip(kappa, 0.0, None))
        object.__setattr__(self, "_vecs", vecs)

    @property
    def eigenfrequencies(self) -> np.ndarray:
        """Resonance frequencies sqrt(kappa_i) of the restoring tensor."""
        return np.sqrt(self._kappa)

    def chi_time(self, r, t):
        t = np.asarray(t, dtype=float)
        om = np.sqrt(self._kappa.astype(complex) - self.gamma**2)
        tt = t[..., None]
        arg = om * tt
        small = np.abs(arg) < 1e-8
        osc = np.where(
            small,
            tt * (1.0 - arg**2 / 6.0),
            np.sin(arg) / np.where(np.abs(om) == 0.0, 1.0, om),
        )
        diag = self.plasma * np.exp(-self.gamma * tt) * osc
        diag = np.where(tt > 0.0, diag, 0.0)
        out = np.einsum("il,...l,jl->...ij", self._vecs, diag, self._vecs)
        return out.real

    def chi_freq(self, r, omega):
        omega = np.asarray(omega, dtype=float)
        if self.gamma == 0.0:
            gap = np.min(
                np.abs(self._kappa - np.atleast_1d(omega)[..., None] ** 2), axis=-1
            )
            scale = max(float(np.max(self._kappa)), 1e-300)
            if np.any(gap < 1e-12 * scale):
                raise SingularResonance(
                    "gamma = 0 and omega^2 hits an eigenvalue of K"
                )
        den = self._kappa - omega[..., None] ** 2 - 2j * self.gamma * omega[..., None]
        diag = self.plasma / den
        return np.einsum("il,...l,jl->...ij", self._vecs, diag, self._vecs)

    def chi_laplace(self, r, s):
        s = np.asarray(s, dtype=complex)
        den = s[..., None] ** 2 + 2.0 * self.gamma * s[..., None] + self._kappa
        diag = self.plasma / den
        return np.einsum("il,...l,jl->...ij", self._vecs, diag, self._vecs)

    def laplace_rational(self, s_scale: float = 1.0):
        """(num, den) with chi_tilde(s_scale*sigma) = num(sigma)/den(sigma).

        num is a matrix polynomial (deg+1, 3, 3), den a scalar polynomial,
        both in ascending coefficient order in sigma.  Repeated eigenvalues
        of K are collapsed so the representation is already reduced (an
        isotropic K yields a single quadratic denominator).
        """
        from numpy.polynomial import polynomial as npp

        scale = max(float(np.max(self._kappa)), 1.0)
        groups: list[tuple[float, np.ndarray]] = []  # (kappa, projector)
        for kap, v in zip(self._kappa, self._vecs.T):
            for g, (kap_g, proj) in enumerate(groups):
                if abs(kap - kap_g) <= 1e-12 * scale:
                    groups[g] = (kap_g, proj + np.outer(v, v))
                    break
            else:
                groups.append((kap, np.outer(v, v)))
        quad = np.array([0.0, 2.0 * self.gamma * s_scale, s_scale**2])
        factors = [quad + np.array([kap, 0.0, 0.0]) for kap, _ in groups]
        den = np.array([1.0])
        for f in factors:
            den = npp.polymul(den, f)
        num = np.zeros((max(den.size - 2, 1), 3, 3))
        for i, (_, proj) in enumerate(groups):
            rest = np.array([self.plasma])
            for j, f in enumerate(factors):
                if j != i:
                    rest = npp.polymul(rest, f)
            num[: rest.size] += rest[:, None, None] * proj[None, :, :]
        return num, den

    def is_rational(self) -> bool:
        return True

    def is_homogeneous(self) -> bool:
        return True


@dataclass(frozen=True)
class RectPulse:
    """Rectangular memory kernel chi0/delta on (0, delta).

    Im chi(omega) = chi0 * sin^2(omega delta/2) / (omega delta/2), which is
    PSD exactly when chi0 is; an indefinite chi0 is non-passive on every
    window (2 pi m, 2 pi (m+1))/delta between the kernel zeros.
    """

    chi0: np.ndarray
    delta: float

    def __post_init__(self):
        if self.delta <= 0.0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "chi0", _as_symmetric_tensor(self.chi0, "RectPulse chi0"))

    def chi_time(self, r, t):
        t = np.asarray(t, dtype=float)
        box = ((t > 0.0) & (t < self.delta)).astype(float) / self.delta
        return box[..., None, None] * self.chi0

    def chi_freq(self, r, omega):
        omega = np.asarray(omega, dtype=float)
        x = omega * self.delta
        small = np.abs(x) < 1e-8
        xs = np.where(small, 1.0, x)
        re = np.where(small, 1.0 - x**2 / 6.0, np.sin(xs) / xs)
        im = np.where(small, x / 2.0, (1.0 - np.cos(xs)) / xs)
        return (re + 1j * im)[..., None, None] * self.chi0

    def chi_laplace(self, r, s):
        s = np.asarray(s, dtype=complex)
        x = s * self.delta
        small = np.abs(x) < 1e-6
        xs = np.where(small, 1.0, x)
        val = np.where(small, 1.0 - x / 2.0 + x**2 / 6.0, (1.0 - np.exp(-xs)) / xs)
        return val[..., None, None] * self.chi0

    def is_rational(self) -> bool:
        return False

    def is_homogeneous(self) -> bool:
        return True


@dataclass(frozen=True)
class Constant:
    """Instantaneous response: the realized delta -> 0 limit of RectPulse.

    The time kernel is chi0 * delta(t); pointwise evaluation returns zero
    and the constitutive laws use P = eps0 chi0 E(t) directly.  Im chi = 0,
    so the coupling spectrum and the noise densities vanish identically.
    """

    chi0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "chi0", _as_symmetric_tensor(self.chi0, "Constant chi0"))

    def chi_time(self, r, t):
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (3, 3))

    def chi_freq(self, r, omega):
        omega = np.asarray(omega, dtype=float)
        return np.broadcast_to(
            self.chi0.astype(complex), omega.shape + (3, 3)
        ).copy()

    def chi_laplace(self, r, s):
        s = np.asarray(s, dtype=complex)
        return np.broadcast_to(self.chi0.astype(complex), s.shape + (3, 3)).copy()

    def laplace_rational(self, s_scale: float = 1.0):
        return self.chi0[None, :, :].astype(float), np.array([1.0])

    def is_rational(self) -> bool:
        return True

    def is_homogeneous(self) -> bool:
        return True


@dataclass(frozen=True)
class Tabulated:
    """Im chi sampled on a frequency grid (the fundamental datum).

    Re chi is reconstructed by the Kramers-Kronig integral on the table
    support and the Laplace image by the equivalent Cauchy integral; both
    carry an O(Im chi(omega_max)) tail error from the grid truncation.
    """

    omega: np.ndarray
    im_chi: np.ndarray

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        im = np.asarray(self.im_chi, dtype=float)
        if omega.ndim != 1 or np.any(np.diff(omega) <= 0.0) or omega[0] <= 0.0:
            raise ValueError("omega grid must be 1-D, positive, increasing")
        if im.shape != omega.shape + (3, 3):
            raise ValueError("im_chi must have shape (n, 3, 3)")
        scale = max(float(np.max(np.abs(im))), 1e-300)
        for j, m in enumerate(im):
            if np.linalg.norm(m - m.T) > 1e-10 * scale:
                raise NotSymmetric(f"Im chi at node {j} is not symmetric")
            if np.min(np.linalg.eigvalsh(symmetrize(m))) < -1e-10 * scale:
                raise NonPassive(
                    f"tabulated Im chi not PSD at omega = {omega[j]!r}",
                    omega=float(omega[j]),
                )
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "im_chi", np.array([symmetrize(m) for m in im]))

    def _im_at(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.zeros(omega.shape + (3, 3))
        aomega = np.abs(omega)
        inside = (aomega >= self.omega[0]) & (aomega <= self.omega[-1])
        if np.any(inside):
            idx = np.clip(np.searchsorted(self.omega, aomega[inside]) - 1, 0, self.omega.size - 2)
            lam = (aomega[inside] - self.omega[idx]) / (self.omega[idx + 1] - self.omega[idx])
            vals = (1.0 - lam)[:, None, None] * self.im_chi[idx] + lam[:, None, None] * self.im_chi[idx + 1]
            out[inside] = vals
        return out * np.sign(omega)[..., None, None]

    def chi_time(self, r, t):
        t = np.asarray(t, dtype=float)
        pos = np.clip(t, 0.0, None)
        vals = (2.0 / np.pi) * filon_sine_transform(self.omega, self.im_chi, pos)
        return np.where((t > 0.0)[..., None, None], vals, 0.0)

    def chi_freq(self, r, omega):
        omega_arr = np.atleast_1d(np.asarray(omega, dtype=float))
        re = kramers_kronig_real(np.abs(omega_arr), self.omega, self.im_chi)
        out = re + 1j * self._im_at(omega_arr)
        if np.ndim(omega) == 0:
            return out[0]
        return out

    def chi_laplace(self, r, s):
        s_arr = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.stack(
            [laplace_from_im_spectrum(sv, self.omega, self.im_chi) for sv in s_arr]
        )
        if np.ndim(s) == 0:
            return out[0]
        return out

    def is_rational(self) -> bool:
        return False

    def is_homogeneous(self) -> bool:
        return True


@dataclass(frozen=True)
class Region:
    """Axis-aligned box [lo, hi) carrying one homogeneous model."""

    lo: np.ndarray
    hi: np.ndarray
    model: object

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))

    def contains(self, r) -> bool:
        r = np.asarray(r, dtype=float)
        return bool(np.all(r >= self.lo) and np.all(r < self.hi))


@dataclass(frozen=True)
class InhomogeneousModel:
    """Piecewise-constant position dependence: spatial cell -> model."""

    regions: tuple

    def __init__(self, regions: Sequence[Region]):
        object.__setattr__(self, "regions", tuple(regions))
        if not self.regions:
            raise ValueError("at least one region required")

    def _select(self, r):
        for region in self.regions:
            if region.contains(r):
                return region.model
        raise ValueError(f"position {r!r} not covered by any region")

    def chi_time(self, r, t):
        return self._select(r).chi_time(r, t)

    def chi_freq(self, r, omega):
        return self._select(r).chi_freq(r, omega)

    def chi_laplace(self, r, s):
        return self._select(r).chi_laplace(r, s)

    def is_rational(self) -> bool:
        return False

    def is_homogeneous(self) -> bool:
        return False


_ORIGIN = np.zeros(3)


def chi_time(model, r, t):
    """Causal memory kernel chi(r, t); exactly zero for t <= 0."""
    if model is None:
        t = np.asarray(t, dtype=float)
        return np.zeros(t.shape + (3, 3))
    return model.chi_time(r if r is not None else _ORIGIN, t)


def chi_freq(model, r, omega):
    """Frequency image chi(r, omega); Hermitian in omega."""
    if model is None:
        omega = np.asarray(omega, dtype=float)
        return np.zeros(omega.shape + (3, 3), dtype=complex)
    return model.chi_freq(r if r is not None else _ORIGIN, omega)


def chi_laplace(model, r, s):
    """Laplace image chi_tilde(r, s) for Re(s) > 0."""
    if model is None:
        s = np.asarray(s, dtype=complex)
        return np.zeros(s.shape + (3, 3), dtype=complex)
    return model.chi_laplace(r if r is not None else _ORIGIN, s)


@dataclass(frozen=True)
class Medium:
    """Electric/magnetic model pair; either side may be absent (vacuum)."""

    electric: Optional[object] = None
    magnetic: Optional[object] = None

    def is_homogeneous(self) -> bool:
        return all(
            m is None or m.is_homogeneous() for m in (self.electric, self.magnetic)
        )

    def is_rational(self) -> bool:
        return all(m is None or m.is_rational() for m in (self.electric, self.magnetic))

    def is_vacuum(self) -> bool:
        return self.electric is None and self.magnetic is None


@dataclass
class FieldHistory:
    """Uniformly sampled field time series at one spatial point.

    values[j] is the field at t' = j*dt, j = 0..n-1.  For the backward
    (t < 0) branch the caller supplies samples of E(-t') on the same grid.
    """

    values: np.ndarray
    dt: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] != 3:
            raise ValueError("history values must have shape (n, 3)")
        if self.dt <= 0.0 or not np.all(np.isfinite(self.values)):
            raise ValueError("dt must be positive and samples finite")

    @property
    def t_max(self) -> float:
        return (self.values.shape[0] - 1) * self.dt

    def index_of(self, t_abs: float) -> int:
        j = int(round(t_abs / self.dt))
        if abs(j * self.dt - t_abs) > 1e-9 * max(self.dt, t_abs):
            raise InsufficientHistory(
                f"t = {t_abs!r} is not a sample instant of the history grid"
            )
        if j >= self.values.shape[0]:
            raise InsufficientHistory(
                f"history covers [0, {self.t_max!r}] but t = {t_abs!r} requested"
            )
        return j


def _memory_convolution(model, history: FieldHistory, t_abs: float) -> np.ndarray:
    """Trapezoidal int_0^{t} chi(t - t') F(t') dt' on the sample grid."""
    j = history.index_of(t_abs)
    if j == 0:
        return np.zeros(3)
    tp = np.arange(j + 1) * history.dt
    kernel = chi_time(model, _ORIGIN, t_abs - tp)
    integrand = np.einsum("nij,nj->ni", kernel, history.values[: j + 1])
    return np.trapezoid(integrand, dx=history.dt, axis=0)


def polarization_response(model, noise, e_history: FieldHistory, t: float, consts: PhysicalConstants) -> np.ndarray:
    """P(t) = P_N(t) + eps0 * int_0^{|t|} chi_e(|t|-t') E(+-t') dt'.

    The upper/lower sign rule is carried by the history: for t < 0 the
    caller provides samples of E(-t').  ``noise`` is a (n, 3) P_N series on
    the history grid (or None).
    """
    t_abs = abs(float(t))
    j = e_history.index_of(t_abs)
    p_n = np.zeros(3) if noise is None else np.asarray(noise, dtype=float)[j]
    if isinstance(model, Constant):
        return p_n + consts.eps0 * model.chi0 @ e_history.values[j]
    if model is None:
        return p_n
    return p_n + consts.eps0 * _memory_convolution(model, e_history, t_abs)


def magnetization_response(model, noise, b_history: FieldHistory, t: float, consts: PhysicalConstants) -> np.ndarray:
    """M(t) = M_N(t) + (1/mu0) * int_0^{|t|} chi_m(|t|-t') B(+-t') dt'."""
    t_abs = abs(float(t))
    j = b_history.index_of(t_abs)
    m_n = np.zeros(3) if noise is None else np.asarray(noise, dtype=float)[j]
    if isinstance(model, Constant):
        return m_n + model.chi0 @ b_history.values[j] / consts.mu0
    if model is None:
        return m_n
    return m_n + _memory_convolution(model, b_history, t_abs) / consts.mu0


def passivity_windows(model, r, omega_grid, tol: float = 1e-10) -> list[tuple[float, float]]:
    """Maximal omega windows where Im chi(omega) fails to be PSD.

    A node is non-passive when the smallest eigenvalue of Im chi drops
    below -tol relative to the largest |Im chi| on the grid; window edges
    are refined by linear interpolation to the threshold crossing.  A
    looser tol (say 1e-6) resolves the touch points where Im chi vanishes
    (the 2 pi m / delta zeros of an indefinite rectangular kernel) as
    window boundaries.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    im = np.imag(chi_freq(model, r, omega_grid))
    lam = np.array([np.min(np.linalg.eigvalsh(symmetrize(m))) for m in im])
    scale = max(float(np.max(np.abs(im))), 1e-300)
    thresh = -tol * scale
    bad = lam < thresh
    windows = []
    i = 0
    n = omega_grid.size
    while i < n:
        if not bad[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and bad[j + 1]:
            j += 1
        lo = _cross(omega_grid, lam, i - 1, i, thresh) if i > 0 else omega_grid[0]
        hi = _cross(omega_grid, lam, j, j + 1, thresh) if j + 1 < n else omega_grid[-1]
        windows.append((float(lo), float(hi)))
        i = j + 1
    return windows


def _cross(x, y, i, j, level):
    if y[j] == y[i]:
        return x[i]
    lam = (y[i] - level) / (y[i] - y[j])
    return x[i] + lam * (x[j] - x[i])


def load_tabulated_csv(path) -> Tabulated:
    """Read a Tabulated model from CSV (header omega,im_chi_11,...,im_chi_33)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _TABULATED_CSV_HEADER:
            raise ValueError(
                f"unexpected tabulated-susceptibility header {header!r}"
            )
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Tabulated(omega=data[:, 0], im_chi=data[:, 1:10].reshape(-1, 3, 3))
