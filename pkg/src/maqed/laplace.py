"""Inverse Laplace machinery: exact residues for rational transforms and a
fixed-Talbot contour for sampled ones.

Rational transforms are held as a matrix-polynomial numerator over a scalar
polynomial denominator (ascending coefficients).  Poles are the denominator
roots from the companion matrix; residues of well-separated simple poles
use the product-form derivative, while clustered (numerically multiple)
poles are integrated by a small contour circle around the cluster, which is
spectrally exact and handles any multiplicity without derivative formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp

from maqed.errors import DegreeMismatch, PoleOnContour

__all__ = [
    "RationalMatrix",
    "matpoly_mul",
    "matpoly_scalar_mul",
    "matpoly_det",
    "matpoly_adjugate",
    "trim_poly",
    "residue_inverse_laplace",
    "talbot_inverse_laplace",
    "inverse_laplace",
]

_TRIM_REL = 1e-12
_CLUSTER_REL = 1e-3
_CONTOUR_POINTS = 96


def trim_poly(c: np.ndarray, rel: float = _TRIM_REL) -> np.ndarray:
    """Drop trailing coefficients below ``rel`` of the largest magnitude."""
    c = np.atleast_1d(np.asarray(c))
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    if scale == 0.0:
        return c[:1] * 0.0
    keep = np.nonzero(np.abs(c) > rel * scale)[0]
    return c[: keep[-1] + 1]


def matpoly_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product of matrix polynomials, shapes (da+1,3,3) x (db+1,3,3)."""
    da, db = a.shape[0], b.shape[0]
    dtype = np.result_type(a.dtype, b.dtype)
    out = np.zeros((da + db - 1, 3, 3), dtype=dtype)
    for i in range(da):
        for j in range(db):
            out[i + j] += a[i] @ b[j]
    return out


def matpoly_scalar_mul(p: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Scalar polynomial times matrix polynomial."""
    p = np.atleast_1d(p)
    dtype = np.result_type(p.dtype, a.dtype)
    out = np.zeros((p.shape[0] + a.shape[0] - 1, 3, 3), dtype=dtype)
    for i in range(p.shape[0]):
        out[i : i + a.shape[0]] += p[i] * a
    return out


def _entry(a, i, j):
    return a[:, i, j]


def _det2(a, r0, r1, c0, c1):
    return npp.polysub(
        npp.polymul(_entry(a, r0, c0), _entry(a, r1, c1)),
        npp.polymul(_entry(a, r0, c1), _entry(a, r1, c0)),
    )


def matpoly_det(a: np.ndarray) -> np.ndarray:
    """Determinant (scalar polynomial) by cofactor expansion on row 0."""
    d = npp.polymul(_entry(a, 0, 0), _det2(a, 1, 2, 1, 2))
    d = npp.polysub(d, npp.polymul(_entry(a, 0, 1), _det2(a, 1, 2, 0, 2)))
    d = npp.polyadd(d, npp.polymul(_entry(a, 0, 2), _det2(a, 1, 2, 0, 1)))
    return trim_poly(d)


def matpoly_adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate matrix polynomial: adj(A)_{ij} = cofactor_{ji}."""
    rows = [1, 2], [0, 2], [0, 1]
    pieces = {}
    deg = 0
    for i in range(3):
        for j in range(3):
            r = rows[j]
            c = rows[i]
            minor = _det2(a, r[0], r[1], c[0], c[1])
            sign = -1.0 if (i + j) % 2 else 1.0
            pieces[(i, j)] = sign * minor
            deg = max(deg, minor.shape[0])
    out = np.zeros((deg, 3, 3), dtype=a.dtype)
    for (i, j), poly in pieces.items():
        out[: poly.shape[0], i, j] = poly
    return out


@dataclass
class RationalMatrix:
    """num(s)/den(s) with matrix numerator and scalar denominator."""

    num: np.ndarray  # (dn+1, 3, 3) or (dn+1,) for scalar transforms
    den: np.ndarray  # (dd+1,)

    def __post_init__(self):
        self.num = np.asarray(self.num)
        self.den = trim_poly(np.asarray(self.den))

    def __call__(self, s):
        return self.eval(s)

    def eval(self, s):
        num = npp.polyval(s, self.num, tensor=True)
        den = npp.polyval(s, self.den)
        if self.num.ndim == 3:
            num = np.moveaxis(num, (0, 1), (-2, -1))
        return num / (den[..., None, None] if self.num.ndim == 3 else den)


def _newton_polish(roots: np.ndarray, den: np.ndarray, rel: float) -> np.ndarray:
    """Two Newton steps on isolated simple roots.

    Roots with a neighbor inside the cluster tolerance are left untouched:
    Newton would drag both members of a near-degenerate pair toward the
    same point, corrupting the product-form denominator.
    """
    if roots.size < 2:
        isolated = np.ones(roots.size, dtype=bool)
    else:
        dist = np.abs(roots[:, None] - roots[None, :])
        np.fill_diagonal(dist, np.inf)
        nn = dist.min(axis=1)
        isolated = nn > rel * np.maximum(1.0, np.abs(roots))
    dden = npp.polyder(den)
    out = roots.copy()
    for _ in range(2):
        pv = npp.polyval(out, den)
        dv = npp.polyval(out, dden)
        ok = isolated & (np.abs(dv) > 0.0)
        step = np.zeros_like(out)
        step[ok] = pv[ok] / dv[ok]
        small = np.abs(step) < 0.1 * rel * np.maximum(1.0, np.abs(out))
        out[ok & small] -= step[ok & small]
    return out


def _cluster_roots(roots: np.ndarray, rel: float):
    """Single-linkage clusters under distance rel*max(1, |root|).

    Guarantees every non-member of a cluster is farther than the linkage
    tolerance from each member, so a contour circle of a few cluster radii
    encloses exactly the cluster.
    """
    n = roots.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        pi, pj = find(i), find(j)
        if pi != pj:
            parent[pi] = pj

    for i in range(n):
        for j in range(i + 1, n):
            tol = rel * max(1.0, abs(roots[i]), abs(roots[j]))
            if abs(roots[i] - roots[j]) < tol:
                union(i, j)
    # grow clusters while a contour circle could not separate them
    changed = True
    while changed:
        changed = False
        groups = {}
        for i in range(n):
            groups.setdefault(find(i), []).append(i)
        clusters = [np.array(g) for g in groups.values()]
        for g in clusters:
            if g.size == 1:
                continue
            center = roots[g].mean()
            spread = float(np.max(np.abs(roots[g] - center)))
            others = np.setdiff1d(np.arange(n), g)
            if others.size == 0:
                continue
            dmin = np.abs(roots[others] - center)
            nearest = others[int(np.argmin(dmin))]
            if 2.5 * spread >= 0.45 * float(dmin.min()):
                union(g[0], nearest)
                changed = True
                break
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return [np.array(g) for g in groups.values()]




def residue_inverse_laplace(
    num: np.ndarray,
    den: np.ndarray,
    t: np.ndarray,
    cluster_rel: float = _CLUSTER_REL,
    eval_fn=None,
):
    """L^-1 of num(s)/den(s) on a time grid by residue summation.

    num may be scalar (dn+1,) or matrix (dn+1, 3, 3) valued; requires
    deg num < deg den.  Exact up to root-finding tolerance; numerically
    multiple poles are detected by clustering and integrated by a small
    contour circle (see module docstring).

    ``eval_fn``, when given, evaluates the transform F(s) directly on the
    cluster contours in place of the expanded num/den ratio.  Near a deep
    polynomial valley (nearly multiple roots) the expanded coefficients
    amplify roundoff by sum|c_k||s|^k / |den(s)|, while a structured
    evaluation (assemble and solve) stays locally well conditioned; the
    expanded polynomials are still used to locate the poles.
    """
    t = np.asarray(t, dtype=float)
    t_arr = np.atleast_1d(t)
    num = np.asarray(num)
    matrix = num.ndim == 3
    num = num if matrix else np.atleast_1d(num)
    num_t = trim_poly(num.reshape(num.shape[0], -1))
    den_t = trim_poly(den)
    comp = (3, 3) if matrix else ()
    out_shape = t_arr.shape + comp
    if num_t.size == 0 or not np.any(num_t):
        out = np.zeros(out_shape, dtype=complex)
        return out if t.ndim else out[0]
    if den_t.shape[0] < 2:
        raise DegreeMismatch("denominator is constant; transform is not strictly proper")
    if num_t.shape[0] >= den_t.shape[0]:
        raise DegreeMismatch(
            f"numerator degree {num_t.shape[0] - 1} >= denominator degree "
            f"{den_t.shape[0] - 1}"
        )
    roots = _newton_polish(npp.polyroots(den_t), den_t, cluster_rel)
    clusters = _cluster_roots(roots, cluster_rel)
    t_max = float(np.max(t_arr)) if t_arr.size else 1.0
    dden = npp.polyder(den_t)

    out = np.zeros((t_arr.size,) + comp, dtype=complex)
    for group in clusters:
        if group.size == 1 and eval_fn is None:
            # isolated simple pole: direct residue num(r)/den'(r)
            r = roots[group[0]]
            res = npp.polyval(r, num) / npp.polyval(r, dden)
            phase = np.exp(r * t_arr)
            out += (
                np.moveaxis(np.multiply.outer(res, phase), -1, 0)
                if matrix
                else np.multiply.outer(phase, res).reshape(t_arr.size)
            )
            continue
        # contour circle around the group (root positions only place the
        # circle; with eval_fn every group is integrated this way, which
        # sidesteps the ill conditioning of expanded coefficients)
        center = roots[group].mean()
        spread = float(np.max(np.abs(roots[group] - center)))
        others = np.delete(np.arange(roots.size), group)
        dist = (
            float(np.min(np.abs(roots[others] - center)))
            if others.size
            else max(1.0, abs(center))
        )
        rho = 0.35 * dist
        if t_max > 0.0:
            rho = max(min(rho, 4.0 / t_max), 4.0 * spread + 1e-12)
        rho = min(rho, 0.45 * dist)
        theta = 2.0 * np.pi * (np.arange(_CONTOUR_POINTS) + 0.5) / _CONTOUR_POINTS
        ring = rho * np.exp(1j * theta)
        s_pts = center + ring
        if eval_fn is None:
            fvals = npp.polyval(s_pts, num) / npp.polyval(s_pts, den_t)
        else:
            stacked = np.stack([np.asarray(eval_fn(s), dtype=complex) for s in s_pts])
            fvals = np.moveaxis(stacked, 0, -1) if matrix else stacked
        # (1/2pi i) contour integral of F e^{st} ds, e^{center t} factored
        ephase = np.exp(np.multiply.outer(t_arr, ring))  # (nt, npts)
        weights = ring / _CONTOUR_POINTS  # rho e^{i theta} / N
        if matrix:
            out += np.exp(center * t_arr)[:, None, None] * np.einsum(
                "tk,ijk,k->tij", ephase, fvals, weights
            )
        else:
            out += np.exp(center * t_arr) * (ephase @ (fvals * weights))
    return out if t.ndim else out[0]


def talbot_inverse_laplace(f, t, degree: int = 32, r_scale: float | None = None):
    """Fixed-Talbot inversion of a callable transform at positive times.

    Full-contour midpoint rule (valid for complex-valued originals); the
    transform must be analytic to the right of the Talbot contour.  In
    double precision the achievable accuracy is limited by the e^{2M/5}
    amplification of function-value roundoff, so ``degree`` near 32 is the
    sweet spot; 64 nodes would amplify roundoff past 1e-6.
    """
    t = np.asarray(t, dtype=float)
    t_arr = np.atleast_1d(t)
    if np.any(t_arr <= 0.0):
        raise ValueError("talbot path requires t > 0")
    m = degree
    r = (2.0 * m / 5.0) if r_scale is None else r_scale
    theta = -np.pi + (np.arange(2 * m) + 0.5) * np.pi / m
    cot = 1.0 / np.tan(theta)
    sigma = theta * (cot + 1j)  # s * t / r
    dsigma = cot - theta / np.sin(theta) ** 2 + 1j
    sample = None
    for j, tj in enumerate(t_arr):
        s_pts = (r / tj) * sigma
        fv = np.stack([np.asarray(f(s), dtype=complex) for s in s_pts])
        term = np.exp(s_pts * tj) * dsigma * (r / tj)
        val = (term.reshape(term.shape + (1,) * (fv.ndim - 1)) * fv).sum(axis=0) / (2j * m)
        if sample is None:
            sample = np.zeros((t_arr.size,) + fv.shape[1:], dtype=complex)
        if not np.all(np.isfinite(val)):
            raise PoleOnContour(f"talbot contour evaluation not finite at t = {tj!r}")
        sample[j] = val
    return sample if t.ndim else sample[0]


def inverse_laplace(f, t, method: str = "residue", **kwargs):
    """Inverse Laplace transform L^-1{F}(t).

    method='residue' requires ``f`` to be a RationalMatrix or a (num, den)
    coefficient pair with numerator degree < denominator degree; exact up
    to root-finding tolerance.  method='talbot' accepts any callable
    transform analytic right of the contour and requires t > 0.
    """
    if method == "residue":
        if isinstance(f, RationalMatrix):
            num, den = f.num, f.den
        else:
            num, den = f
        return residue_inverse_laplace(np.asarray(num), np.asarray(den), t, **kwargs)
    if method == "talbot":
        if isinstance(f, RationalMatrix):
            return talbot_inverse_laplace(f.eval, t, **kwargs)
        return talbot_inverse_laplace(f, t, **kwargs)
    raise ValueError(f"unknown inverse-Laplace method {method!r}")
