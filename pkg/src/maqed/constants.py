"""Physical constants with an enforced vacuum dispersion relation."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar, eps0, mu0 and c with mu0*eps0*c**2 = 1 enforced.

    The linear dispersion omega_q = c|q| used for the medium quantum fields
    relies on c being exactly 1/sqrt(eps0*mu0); construction fails if the
    supplied values violate that to more than 1e-14 relative.
    """

    hbar: float
    eps0: float
    mu0: float
    c: float

    def __post_init__(self):
        for name in ("hbar", "eps0", "mu0", "c"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        c_ref = 1.0 / math.sqrt(self.eps0 * self.mu0)
        if abs(self.c - c_ref) > 1e-14 * c_ref:
            raise ValueError(
                f"c = {self.c!r} inconsistent with 1/sqrt(eps0*mu0) = {c_ref!r}"
            )


NATURAL = PhysicalConstants(hbar=1.0, eps0=1.0, mu0=1.0, c=1.0)

# SI: c and eps0 taken from CODATA-2018, mu0 derived so the identity holds
# exactly in floating point.
_C_SI = 299792458.0
_EPS0_SI = 8.8541878128e-12
SI = PhysicalConstants(
    hbar=1.054571817e-34,
    eps0=_EPS0_SI,
    mu0=1.0 / (_EPS0_SI * _C_SI**2),
    c=_C_SI,
)

_BY_NAME = {"natural": NATURAL, "si": SI}


def constants_by_name(name: str) -> PhysicalConstants:
    """Look up a unit system by its config-file tag ('natural' or 'SI')."""
    try:
        return _BY_NAME[name.lower()]
    except KeyError:
        raise ValueError(f"unknown unit system {name!r}") from None
