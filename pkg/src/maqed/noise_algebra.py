"""Noise polarization spectral densities and the commutator consistency check.

The Fourier-domain noise polarization commutators are fixed by the coupling
tensors: collapsing the ladder commutators with the triad completeness and
the continuum measure 4 pi omega^2/c^3 gives the density tensors

    S_P(omega, r) = 4 pi omega^2 / c^3 * (f f^t)(omega, r)
    S_M(omega, r) = 4 pi omega^2 / c^3 * (g g^t)(omega, r)

which must equal (hbar eps0/pi) Im chi_e and (hbar/(mu0 pi)) Im chi_m.
That identity is an exact algebraic consequence of the coupling-tensor
definition, so the dual-path check below is asserted at near machine
precision: a looser failure indicates a real defect (wrong measure or a
factorization bug), not quadrature error.
"""

from __future__ import annotations

import json

import numpy as np

from maqed.constants import PhysicalConstants
from maqed.coupling import CouplingSpectrum, build_spectrum, factorize_spectrum
from maqed.errors import IdentityViolated
from maqed.medium import Medium, chi_freq, passivity_windows
from maqed.mode_space import polarization_triads

__all__ = [
    "noise_density_from_coupling",
    "verify_commutator_identity",
    "write_verification_report",
]


def _construction_density(factor: np.ndarray, omega: float, triad: np.ndarray, consts):
    """Mode-expansion route: sum_nu (f v_nu)(f v_nu)^t times the q measure.

    The triad completeness sum_nu v_nu v_nu^t = 1 collapses this to
    f f^t; it is computed through the factors on purpose, so a gauge or
    factorization bug breaks the identity instead of cancelling out.
    """
    dev = np.linalg.norm(triad.T @ triad - np.eye(3))
    if dev > 1e-12:
        raise ValueError(f"triad completeness violated by {dev:.3e}")
    measure = 4.0 * np.pi * omega**2 / consts.c**3
    fv = factor @ triad.T  # columns f v_nu
    return measure * (fv @ fv.T), dev


def noise_density_from_coupling(
    spectrum: CouplingSpectrum,
    omega: float,
    r,
    consts: PhysicalConstants,
    triad: np.ndarray | None = None,
):
    """(S_P, S_M) at a spectrum node, built from the coupling factors."""
    if omega <= 0.0:
        raise ValueError("noise densities are defined for omega > 0")
    if spectrum.factor_f is None:
        spectrum = factorize_spectrum(spectrum)
    if triad is None:
        e1, e2, khat = polarization_triads(np.array([0.0, 0.0, 1.0]))
        triad = np.vstack([e1, e2, khat])
    i = spectrum.node_index(omega)
    s_p, _ = _construction_density(spectrum.factor_f[i], omega, triad, consts)
    s_m, _ = _construction_density(spectrum.factor_g[i], omega, triad, consts)
    return s_p, s_m


def verify_commutator_identity(
    medium: Medium,
    omega_grid: np.ndarray,
    r,
    consts: PhysicalConstants,
    tol: float = 1e-10,
    spectrum: CouplingSpectrum | None = None,
    triads: list[np.ndarray] | None = None,
) -> dict:
    """Dual-path check of the noise-commutator identity on a frequency grid.

    Path A builds S_P/S_M from the factorized coupling spectrum with the
    continuum measure; path B evaluates (hbar eps0/pi) Im chi_e and
    (hbar/(mu0 pi)) Im chi_m directly.  Frequencies where Im chi is not
    PSD (possible for indefinite RectPulse tensors) are excluded from the
    identity check and reported as non-passive windows.

    Returns the report dict; raises IdentityViolated (report attached)
    when the maximal relative deviation exceeds ``tol``.
    """
    omega_grid = np.asarray(omega_grid, dtype=float)
    r = np.zeros(3) if r is None else np.asarray(r, dtype=float)
    windows_e = passivity_windows(medium.electric, r, omega_grid)
    windows_m = passivity_windows(medium.magnetic, r, omega_grid)
    mask = np.ones(omega_grid.size, dtype=bool)
    for lo, hi in windows_e + windows_m:
        mask &= ~((omega_grid > lo) & (omega_grid < hi))
    grid = omega_grid[mask]

    if spectrum is None:
        spectrum = factorize_spectrum(build_spectrum(medium, grid, consts, r))
    elif spectrum.factor_f is None:
        spectrum = factorize_spectrum(spectrum)
    if triads is None:
        triads = []
        for kvec in (np.array([0.0, 0.0, 1.0]), np.array([1.0, 1.0, 1.0])):
            e1, e2, khat = polarization_triads(kvec)
            triads.append(np.vstack([e1, e2, khat]))

    im_e = np.imag(chi_freq(medium.electric, r, grid))
    im_m = np.imag(chi_freq(medium.magnetic, r, grid))
    target_p = (consts.hbar * consts.eps0 / np.pi) * im_e
    target_m = (consts.hbar / (consts.mu0 * np.pi)) * im_m
    scale_p = max(float(np.max(np.abs(target_p))), 1e-300)
    scale_m = max(float(np.max(np.abs(target_m))), 1e-300)

    dev_p = np.zeros(grid.size)
    dev_m = np.zeros(grid.size)
    triad_dev = 0.0
    for idx, w in enumerate(grid):
        i = spectrum.node_index(float(w))
        for triad in triads:
            s_p, d1 = _construction_density(spectrum.factor_f[i], float(w), triad, consts)
            s_m, d2 = _construction_density(spectrum.factor_g[i], float(w), triad, consts)
            triad_dev = max(triad_dev, d1, d2)
            dev_p[idx] = max(dev_p[idx], float(np.max(np.abs(s_p - target_p[idx]))) / scale_p)
            dev_m[idx] = max(dev_m[idx], float(np.max(np.abs(s_m - target_m[idx]))) / scale_m)

    max_p = float(dev_p.max()) if grid.size else 0.0
    max_m = float(dev_m.max()) if grid.size else 0.0
    max_dev = max(max_p, max_m)
    loc = float(grid[int(np.argmax(np.maximum(dev_p, dev_m)))]) if grid.size else None
    report = {
        "tolerance": tol,
        "passed": bool(max_dev <= tol),
        "max_deviation": max_dev,
        "max_deviation_omega": loc,
        "triad_completeness_max_deviation": triad_dev,
        "checked_nodes": int(grid.size),
        "electric": {
            "max_deviation": max_p,
            "nonpassive_windows": [list(w) for w in windows_e],
        },
        "magnetic": {
            "max_deviation": max_m,
            "nonpassive_windows": [list(w) for w in windows_m],
        },
    }
    if not report["passed"]:
        raise IdentityViolated(
            f"noise-commutator deviation {max_dev:.3e} exceeds {tol:.1e} "
            f"at omega = {loc!r}",
            report=report,
        )
    return report


def write_verification_report(report: dict, path, provenance: dict | None = None):
    """Write a verification report as JSON with an isolated provenance block."""
    payload = dict(report)
    payload["provenance"] = provenance or {}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
