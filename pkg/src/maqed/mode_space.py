"""Discrete box modes, polarization triads and transverse/longitudinal split.

Plane-wave modes live on the reciprocal lattice of a periodic box; the zero
mode n = (0,0,0) is excluded everywhere because omega = 0 breaks both the
triad construction and the 1/sqrt(omega) mode normalization (the coupling
spectral density also vanishes at omega = 0).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from maqed.constants import NATURAL, PhysicalConstants
from maqed.errors import IncompatibleGrid, ZeroWavevector

__all__ = [
    "BoxGeometry",
    "WaveMode",
    "FieldSample",
    "enumerate_modes",
    "transverse_delta",
    "polarization_triads",
    "decompose_field",
]


@dataclass(frozen=True)
class BoxGeometry:
    """Periodic box with edge lengths L1..L3 and mode truncation N_max."""

    L1: float
    L2: float
    L3: float
    n_max: int

    def __post_init__(self):
        if min(self.L1, self.L2, self.L3) <= 0.0:
            raise ValueError("box edge lengths must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def volume(self) -> float:
        return self.L1 * self.L2 * self.L3

    @property
    def lengths(self) -> np.ndarray:
        return np.array([self.L1, self.L2, self.L3])

    def wavevector(self, n: tuple[int, int, int]) -> np.ndarray:
        return 2.0 * np.pi * np.asarray(n, dtype=float) / self.lengths


@dataclass(frozen=True)
class WaveMode:
    """One discrete mode: integer triple, wavevector, frequency and triads.

    e1, e2 are the transverse polarization vectors, khat the unit
    wavevector.  v_triad rows are (e1, e2, khat); s_triad rows are
    (khat x e1, khat x e2, khat): the expansion bases of the medium's
    electric and magnetic polarization densities.
    """

    n: tuple[int, int, int]
    k: np.ndarray
    omega: float
    e1: np.ndarray
    e2: np.ndarray
    khat: np.ndarray
    v_triad: np.ndarray = field(repr=False)
    s_triad: np.ndarray = field(repr=False)


def polarization_triads(k: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic (e1, e2, khat) for a nonzero wavevector.

    Rule: take the coordinate axis least aligned with khat, Gram-Schmidt it
    against khat to get e1, then e2 = khat x e1.  The physics fixes the
    triad only up to a rotation about khat; a fixed rule makes every
    downstream artifact reproducible.
    """
    k = np.asarray(k, dtype=float)
    norm = np.linalg.norm(k)
    if norm == 0.0:
        raise ZeroWavevector("polarization triad undefined at k = 0")
    khat = k / norm
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(khat)))] = 1.0
    e1 = axis - (axis @ khat) * khat
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    return e1, e2, khat


def enumerate_modes(
    geometry: BoxGeometry, consts: PhysicalConstants = NATURAL
) -> list[WaveMode]:
    """All modes with 0 < max|n_i| <= N_max in lexicographic order on n."""
    modes = []
    r = range(-geometry.n_max, geometry.n_max + 1)
    for n1 in r:
        for n2 in r:
            for n3 in r:
                if n1 == n2 == n3 == 0:
                    continue
                n = (n1, n2, n3)
                k = geometry.wavevector(n)
                e1, e2, khat = polarization_triads(k)
                v = np.vstack([e1, e2, khat])
                s = np.vstack([np.cross(khat, e1), np.cross(khat, e2), khat])
                modes.append(
                    WaveMode(
                        n=n,
                        k=k,
                        omega=consts.c * float(np.linalg.norm(k)),
                        e1=e1,
                        e2=e2,
                        khat=khat,
                        v_triad=v,
                        s_triad=s,
                    )
                )
    return modes


def transverse_delta(k: np.ndarray) -> np.ndarray:
    """Transverse projector delta_lj - k_l k_j / |k|^2."""
    k = np.asarray(k, dtype=float)
    k2 = k @ k
    if k2 == 0.0:
        raise ZeroWavevector("transverse delta undefined at k = 0")
    return np.eye(3) - np.outer(k, k) / k2


@dataclass
class FieldSample:
    """Vector field sampled on the uniform periodic grid of a box.

    values has shape (N1, N2, N3, 3); spacing is the grid step per axis.
    """

    values: np.ndarray
    geometry: BoxGeometry

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.ndim != 4 or self.values.shape[-1] != 3:
            raise IncompatibleGrid(
                f"field grid must have shape (N1,N2,N3,3), got {self.values.shape}"
            )

    @property
    def spacing(self) -> np.ndarray:
        return self.geometry.lengths / np.array(self.values.shape[:3])

    def grid_points(self) -> np.ndarray:
        """Physical coordinates of the sample nodes, shape (N1,N2,N3,3)."""
        axes = [
            np.arange(nn) * ll / nn
            for nn, ll in zip(self.values.shape[:3], self.geometry.lengths)
        ]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _grid_wavevectors(shape, lengths):
    ks = [2.0 * np.pi * np.fft.fftfreq(nn, d=ll / nn) for nn, ll in zip(shape, lengths)]
    return np.stack(np.meshgrid(*ks, indexing="ij"), axis=-1)


def decompose_field(
    f: FieldSample, geometry: BoxGeometry | None = None
) -> tuple[FieldSample, FieldSample]:
    """Split F into transverse (divergence-free) and longitudinal parts.

    Implemented in Fourier space with the transverse projector applied per
    lattice wavevector.  The constant (k = 0) component is assigned to the
    transverse part by convention, and so are bins with an axis at the
    Nyquist frequency of an even grid: their +-k assignment is ambiguous
    for real data and a one-sided projector would break the conjugate
    symmetry.  Band-limited fields are unaffected.  F = F_perp + F_par
    holds pointwise.
    """
    if geometry is None:
        geometry = f.geometry
    elif geometry != f.geometry:
        raise IncompatibleGrid("sample geometry does not match the requested geometry")
    vals = np.asarray(f.values, dtype=complex)
    shape = vals.shape[:3]
    fhat = np.fft.fftn(vals, axes=(0, 1, 2))
    kk = _grid_wavevectors(shape, geometry.lengths)
    k2 = np.sum(kk * kk, axis=-1)
    k2safe = np.where(k2 == 0.0, 1.0, k2)
    coeff = np.sum(kk * fhat, axis=-1) / k2safe
    f_par_hat = coeff[..., None] * kk
    f_par_hat[k2 == 0.0] = 0.0
    for ax, nn in enumerate(shape):
        if nn % 2 == 0:
            sl = [slice(None)] * 3
            sl[ax] = nn // 2
            f_par_hat[tuple(sl)] = 0.0
    f_perp_hat = fhat - f_par_hat
    real_in = not np.iscomplexobj(f.values)

    def _back(x):
        out = np.fft.ifftn(x, axes=(0, 1, 2))
        return out.real if real_in else out

    return (
        FieldSample(_back(f_perp_hat), geometry),
        FieldSample(_back(f_par_hat), geometry),
    )
