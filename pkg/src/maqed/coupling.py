"""Susceptibility <-> coupling-tensor transform pair.

The absorptive part of the susceptibility fixes the self-products of the
coupling tensors,

    ff^t(omega, r) = hbar c^3 eps0 / (4 pi^2 omega^2) * Im chi_e(r, omega)
    gg^t(omega, r) = hbar c^3 / (4 pi^2 mu0 omega^2) * Im chi_m(r, omega)

for omega > 0 (zero at omega = 0), and conversely the causal kernel is the
sine transform

    chi_e(r, t) = 8 pi / (hbar c^3 eps0) *
                  int_0^inf d omega omega^2 ff^t(omega, r) sin(omega t)

for t > 0.  A coupling factor f with f f^t = ff^t is fixed only up to a
right orthogonal gauge; the canonical factor used here is the unique
symmetric PSD square root.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from maqed.constants import PhysicalConstants
from maqed.errors import NonPassive, TailTruncation
from maqed.medium import Lorentz, Medium, chi_freq
from maqed.quadrature import filon_sine_transform, sine_transform_tail_estimate
from maqed.tensor_core import apply_gauge, psd_sqrt, symmetrize

__all__ = [
    "CouplingSpectrum",
    "ff_t_from_chi",
    "gg_t_from_chi",
    "build_spectrum",
    "chi_from_coupling",
    "chi_m_from_coupling",
    "factorize_spectrum",
    "lorentz_ff_t_closed",
    "lorentz_delta_weights",
    "default_omega_grid",
    "write_spectrum_csv",
    "read_spectrum_csv",
]

SPECTRUM_CSV_HEADER = "omega," + ",".join(
    f"{name}_{i}{j}" for name in ("ffT", "ggT") for i in (1, 2, 3) for j in (1, 2, 3)
)


def default_omega_grid(omega_ref: float, num: int = 2048, span: float = 1e3) -> np.ndarray:
    """Log-spaced grid from omega_ref/span to omega_ref*span."""
    return np.geomspace(omega_ref / span, omega_ref * span, num)


def _psd_or_raise(im: np.ndarray, omega: float, what: str) -> np.ndarray:
    sym = symmetrize(im)
    scale = float(np.max(np.abs(sym)))
    if scale == 0.0:
        return sym
    lam_min = float(np.min(np.linalg.eigvalsh(sym)))
    if lam_min < -1e-10 * scale:
        raise NonPassive(
            f"Im {what} at omega = {omega!r} has eigenvalue {lam_min:.3e} < 0",
            omega=omega,
        )
    return sym


def ff_t_from_chi(chi_model, r, omega: float, consts: PhysicalConstants) -> np.ndarray:
    """Electric coupling self-product ff^t(omega, r) from Im chi_e."""
    if omega < 0.0:
        raise ValueError("omega must be >= 0")
    if omega == 0.0:
        return np.zeros((3, 3))
    im = np.imag(chi_freq(chi_model, r, omega))
    im = _psd_or_raise(im, omega, "chi_e")
    pref = consts.hbar * consts.c**3 * consts.eps0 / (4.0 * np.pi**2 * omega**2)
    return pref * im


def gg_t_from_chi(chi_model, r, omega: float, consts: PhysicalConstants) -> np.ndarray:
    """Magnetic coupling self-product gg^t(omega, r) from Im chi_m."""
    if omega < 0.0:
        raise ValueError("omega must be >= 0")
    if omega == 0.0:
        return np.zeros((3, 3))
    im = np.imag(chi_freq(chi_model, r, omega))
    im = _psd_or_raise(im, omega, "chi_m")
    pref = consts.hbar * consts.c**3 / (4.0 * np.pi**2 * consts.mu0 * omega**2)
    return pref * im


@dataclass
class CouplingSpectrum:
    """Sampled ff^t / gg^t with optional factorizations on an omega grid."""

    omega: np.ndarray
    ffT: np.ndarray
    ggT: np.ndarray
    consts: PhysicalConstants
    r: np.ndarray = field(default_factory=lambda: np.zeros(3))
    factor_f: Optional[np.ndarray] = None
    factor_g: Optional[np.ndarray] = None

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float)
        self.ffT = np.asarray(self.ffT, dtype=float)
        self.ggT = np.asarray(self.ggT, dtype=float)
        n = self.omega.size
        if self.ffT.shape != (n, 3, 3) or self.ggT.shape != (n, 3, 3):
            raise ValueError("ffT/ggT must have shape (n, 3, 3)")

    def node_index(self, omega: float) -> int:
        i = int(np.argmin(np.abs(self.omega - omega)))
        if abs(self.omega[i] - omega) > 1e-9 * max(abs(omega), self.omega[i]):
            raise ValueError(f"omega = {omega!r} is not a node of the spectrum grid")
        return i

    def interp_ffT(self, omega: float) -> np.ndarray:
        return _interp_tensor(self.omega, self.ffT, omega)

    def interp_ggT(self, omega: float) -> np.ndarray:
        return _interp_tensor(self.omega, self.ggT, omega)


def _interp_tensor(grid, table, omega):
    if omega <= grid[0]:
        return table[0] * (omega / grid[0]) ** 2 if omega >= 0 else table[0]
    if omega >= grid[-1]:
        return np.zeros((3, 3))
    i = int(np.searchsorted(grid, omega)) - 1
    lam = (omega - grid[i]) / (grid[i + 1] - grid[i])
    return (1.0 - lam) * table[i] + lam * table[i + 1]


def build_spectrum(
    medium: Medium,
    omega_grid: np.ndarray,
    consts: PhysicalConstants,
    r=None,
) -> CouplingSpectrum:
    """Sample ff^t and gg^t for a medium on a positive omega grid."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    if np.any(omega_grid <= 0.0):
        raise ValueError("spectrum grid must be strictly positive")
    r = np.zeros(3) if r is None else np.asarray(r, dtype=float)
    ffT = np.empty((omega_grid.size, 3, 3))
    ggT = np.empty((omega_grid.size, 3, 3))
    im_e = np.imag(chi_freq(medium.electric, r, omega_grid))
    im_m = np.imag(chi_freq(medium.magnetic, r, omega_grid))
    pref_e = consts.hbar * consts.c**3 * consts.eps0 / (4.0 * np.pi**2 * omega_grid**2)
    pref_m = consts.hbar * consts.c**3 / (4.0 * np.pi**2 * consts.mu0 * omega_grid**2)
    for i, w in enumerate(omega_grid):
        ffT[i] = pref_e[i] * _psd_or_raise(im_e[i], float(w), "chi_e")
        ggT[i] = pref_m[i] * _psd_or_raise(im_m[i], float(w), "chi_m")
    return CouplingSpectrum(omega=omega_grid, ffT=ffT, ggT=ggT, consts=consts, r=r)


def _sine_reconstruct(spectrum, table, prefactor, t, tail_tol):
    t = np.asarray(t, dtype=float)
    amp = prefactor * spectrum.omega[:, None, None] ** 2 * table
    t_flat = np.atleast_1d(t)
    pos = np.clip(t_flat, 0.0, None)
    vals = filon_sine_transform(spectrum.omega, amp, pos)
    vals[t_flat <= 0.0] = 0.0
    if tail_tol is not None:
        scale = max(float(np.max(np.abs(vals))), 1e-300)
        live = t_flat > 0.0
        if np.any(live):
            est = float(np.max(sine_transform_tail_estimate(spectrum.omega, amp, t_flat[live])))
            if est > tail_tol * scale:
                raise TailTruncation(
                    f"estimated tail {est:.3e} exceeds {tail_tol:.1e} of the "
                    f"result scale {scale:.3e}; extend the omega grid",
                    estimate=est,
                    tolerance=tail_tol * scale,
                )
    if t.ndim == 0:
        return vals[0]
    return vals.reshape(t.shape + (3, 3))


def chi_from_coupling(
    spectrum: CouplingSpectrum,
    r,
    t,
    consts: PhysicalConstants | None = None,
    tail_tol: float | None = 0.05,
) -> np.ndarray:
    """Reconstruct chi_e(r, t) from the sampled ff^t by the sine transform.

    Cutoff-averaged Filon quadrature (see maqed.quadrature); the estimated
    tail beyond the top of the grid raises TailTruncation when it exceeds
    ``tail_tol`` of the reconstructed scale.
    """
    consts = consts or spectrum.consts
    pref = 8.0 * np.pi / (consts.hbar * consts.c**3 * consts.eps0)
    return _sine_reconstruct(spectrum, spectrum.ffT, pref, t, tail_tol)


def chi_m_from_coupling(
    spectrum: CouplingSpectrum,
    r,
    t,
    consts: PhysicalConstants | None = None,
    tail_tol: float | None = 0.05,
) -> np.ndarray:
    """Reconstruct chi_m(r, t) from the sampled gg^t."""
    consts = consts or spectrum.consts
    pref = 8.0 * np.pi * consts.mu0 / (consts.hbar * consts.c**3)
    return _sine_reconstruct(spectrum, spectrum.ggT, pref, t, tail_tol)


def factorize_spectrum(
    spectrum: CouplingSpectrum, gauge: Optional[np.ndarray] = None
) -> CouplingSpectrum:
    """Fill factor_f/factor_g with psd_sqrt(ffT) @ gauge (gauge optional).

    The reconstruction factor @ factor.T reproduces the inputs regardless
    of the gauge; every observable downstream depends on the factors only
    through that product.
    """
    n = spectrum.omega.size
    factor_f = np.empty((n, 3, 3))
    factor_g = np.empty((n, 3, 3))
    for i in range(n):
        factor_f[i] = psd_sqrt(spectrum.ffT[i])
        factor_g[i] = psd_sqrt(spectrum.ggT[i])
        if gauge is not None:
            factor_f[i] = apply_gauge(factor_f[i], gauge)
            factor_g[i] = apply_gauge(factor_g[i], gauge)
    return CouplingSpectrum(
        omega=spectrum.omega,
        ffT=spectrum.ffT,
        ggT=spectrum.ggT,
        consts=spectrum.consts,
        r=spectrum.r,
        factor_f=factor_f,
        factor_g=factor_g,
    )


def lorentz_ff_t_closed(model: Lorentz, omega, consts: PhysicalConstants) -> np.ndarray:
    """Closed-form electric spectral density of the Lorentz model.

    ff^t(omega) = hbar c^3 eps0/(4 pi^2 omega^2) * plasma * 2 gamma omega *
    [(K - omega^2)^2 + 4 gamma^2 omega^2]^-1, evaluated in the eigenbasis
    of K.  Zero at omega = 0.
    """
    omega = np.asarray(omega, dtype=float)
    kappa = model._kappa
    vecs = model._vecs
    w = omega[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (
            model.plasma
            * 2.0
            * model.gamma
            * w
            / ((kappa - w**2) ** 2 + 4.0 * model.gamma**2 * w**2)
        )
        pref = consts.hbar * consts.c**3 * consts.eps0 / (4.0 * np.pi**2 * w**2)
        diag = np.where(w == 0.0, 0.0, pref * diag)
    return np.einsum("il,...l,jl->...ij", vecs, diag, vecs)


def lorentz_delta_weights(model: Lorentz, consts: PhysicalConstants):
    """gamma -> 0 resonance weights of ff^t as delta-peak coefficients.

    Integrating the closed-form density across the resonance at
    omega_i = sqrt(kappa_i) gives the weight

        W_i = hbar c^3 eps0 * plasma / (8 pi omega_i^3) * Rhat_i Rhat_i^t

    on unit eigenvectors Rhat_i; equivalently hbar c^3 eps0/(4 pi
    omega_i^2) * R_i R_i^t with eigenvectors normalized to |R_i|^2 =
    plasma/(2 omega_i).  Returns a list of (omega_i, W_i).
    """
    out = []
    for kap, v in zip(model._kappa, model._vecs.T):
        if kap <= 0.0:
            continue
        w_i = float(np.sqrt(kap))
        weight = (
            consts.hbar
            * consts.c**3
            * consts.eps0
            * model.plasma
            / (8.0 * np.pi * w_i**3)
        )
        out.append((w_i, weight * np.outer(v, v)))
    return out


def write_spectrum_csv(spectrum: CouplingSpectrum, csv_path, sidecar_path=None, provenance=None):
    """Write the spectrum as CSV plus a JSON sidecar for constants/provenance."""
    n = spectrum.omega.size
    rows = np.column_stack(
        [spectrum.omega, spectrum.ffT.reshape(n, 9), spectrum.ggT.reshape(n, 9)]
    )
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(SPECTRUM_CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if sidecar_path is not None:
        c = spectrum.consts
        meta = {
            "constants": {"hbar": c.hbar, "eps0": c.eps0, "mu0": c.mu0, "c": c.c},
            "position": [float(x) for x in spectrum.r],
            "columns": SPECTRUM_CSV_HEADER.split(","),
            "provenance": provenance or {},
        }
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_spectrum_csv(csv_path, consts: PhysicalConstants, r=None) -> CouplingSpectrum:
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SPECTRUM_CSV_HEADER:
            raise ValueError(f"unexpected spectrum header {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return CouplingSpectrum(
        omega=data[:, 0],
        ffT=data[:, 1:10].reshape(-1, 3, 3),
        ggT=data[:, 10:19].reshape(-1, 3, 3),
        consts=consts,
        r=np.zeros(3) if r is None else np.asarray(r, dtype=float),
    )
