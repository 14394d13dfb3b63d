"""3x3 real/complex tensor algebra for the quantization pipeline.

Tensors are plain numpy arrays of shape (3, 3) (real ``Tensor3`` or complex
``CTensor3`` in the docs); vectors are shape (3,).  All operations are pure
functions, safe for concurrent use.
"""

from __future__ import annotations

import numpy as np

from maqed.errors import NegativeEigenvalue, NotOrthogonal, NotSymmetric

__all__ = [
    "LEVI_CIVITA",
    "asymmetry",
    "require_symmetric",
    "symmetrize",
    "psd_sqrt",
    "apply_gauge",
    "double_epsilon_contract",
    "cross_matrix",
]

#: epsilon_{ijk}, used by the wave-operator assembly and the zeta kernels.
LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_k, _j, _i] = -1.0


def asymmetry(t: np.ndarray) -> float:
    """Relative Frobenius asymmetry ||T - T^t|| / max(||T||, tiny)."""
    t = np.asarray(t)
    scale = np.linalg.norm(t)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(t - t.T) / scale)


def require_symmetric(t: np.ndarray, tol: float = 1e-12, what: str = "tensor") -> None:
    """Raise NotSymmetric when the relative asymmetry exceeds ``tol``."""
    a = asymmetry(t)
    if a > tol:
        raise NotSymmetric(f"{what} asymmetry {a:.3e} exceeds tolerance {tol:.3e}")


def symmetrize(t: np.ndarray) -> np.ndarray:
    return 0.5 * (t + np.swapaxes(t, -1, -2))


def psd_sqrt(s: np.ndarray, tol: float | None = None) -> np.ndarray:
    """Unique symmetric PSD square root R of a symmetric PSD tensor S.

    R satisfies R @ R.T = S.  Eigenvalues in [-tol, 0] are clamped to zero;
    an eigenvalue below -tol raises NegativeEigenvalue (the signature of a
    non-passive susceptibility input).  ``tol`` defaults to 1e-10 times the
    largest eigenvalue magnitude, absorbing quadrature noise in sampled
    Im chi data.
    """
    s = np.asarray(s, dtype=float)
    require_symmetric(s, tol=1e-8 if tol is None else max(tol, 1e-12), what="psd_sqrt input")
    w, v = np.linalg.eigh(symmetrize(s))
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if tol is None:
        tol = 1e-10 * max(scale, 1.0e-300)
    if np.any(w < -tol):
        raise NegativeEigenvalue(
            f"eigenvalue {w.min():.6e} below -tol = {-tol:.3e}; input is not PSD"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def apply_gauge(f: np.ndarray, gauge: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Post-multiply a coupling factor by an orthogonal gauge: f -> f @ A.

    The product with its own transpose is gauge independent,
    (fA)(fA)^t = f f^t, which is why all observable outputs are too.
    """
    gauge = np.asarray(gauge, dtype=float)
    dev = np.linalg.norm(gauge @ gauge.T - np.eye(3))
    if dev > tol:
        raise NotOrthogonal(f"gauge deviates from orthogonality by {dev:.3e}")
    return np.asarray(f) @ gauge


def double_epsilon_contract(k: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Contraction eps_{i mu nu} eps_{alpha beta j} m_{nu alpha} k^mu k^beta.

    This is the Fourier symbol of -curl(m curl(.)); for m = identity it
    equals k k^t - |k|^2 * identity.  Bilinear in k, linear in m.
    """
    k = np.asarray(k, dtype=complex if np.iscomplexobj(m) else float)
    m = np.asarray(m)
    return np.einsum("imn,abj,na,m,b->ij", LEVI_CIVITA, LEVI_CIVITA, m, k, k)


def cross_matrix(k: np.ndarray) -> np.ndarray:
    """Matrix [k x] with (k x v) = cross_matrix(k) @ v."""
    kx, ky, kz = np.asarray(k, dtype=float)
    return np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
