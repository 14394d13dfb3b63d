"""Oscillatory and principal-value quadrature shared by medium and coupling.

The sine transform integrates the piecewise-cubic interpolant of sampled
amplitudes against sin(omega*t) with closed-form moments, so accuracy is
set by the interpolation of the amplitude, not by the oscillation of the
kernel.  Slowly decaying spectra (conditionally convergent transforms) are
handled by averaging the partial integrals over a band of upper cutoffs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "filon_sine_transform",
    "sine_transform_tail_estimate",
    "kramers_kronig_real",
    "laplace_from_im_spectrum",
]

# Closed-form scaled moments over xi in [-1/2, 1/2] with phase phi = h*t:
#   C0 = int cos(phi xi) dxi          C2 = int xi^2 cos(phi xi) dxi
#   S1 = int xi  sin(phi xi) dxi      S3 = int xi^3 sin(phi xi) dxi
# Below _PHI_SMALL the closed forms cancel catastrophically and a Taylor
# series is used instead (relative truncation < 1e-9 at the switch point).
_PHI_SMALL = 0.2


def _moments(phi: np.ndarray):
    phi = np.asarray(phi, dtype=float)
    small = np.abs(phi) < _PHI_SMALL
    p = np.where(small, 1.0, phi)  # avoid 0-division in the closed branch
    half = 0.5 * p
    s, c = np.sin(half), np.cos(half)
    c0 = 2.0 * s / p
    c2 = 2.0 * ((0.25 * p * p - 2.0) * s + p * c) / p**3
    s1 = 2.0 * (s / p**2 - 0.5 * c / p)
    s3 = 2.0 * (-c / (8.0 * p) + 0.75 * s / p**2 + 3.0 * c / p**3 - 6.0 * s / p**4)
    ph2 = phi * phi
    c0_s = 1.0 - ph2 / 24.0 + ph2 * ph2 / 1920.0 - ph2**3 / 322560.0
    c2_s = 1.0 / 12.0 - ph2 / 160.0 + ph2 * ph2 / 10752.0 - ph2**3 / 1105920.0
    s1_s = phi * (1.0 / 12.0 - ph2 / 960.0 + ph2 * ph2 / 107520.0)
    s3_s = phi * (1.0 / 80.0 - ph2 / 2688.0 + ph2 * ph2 / 184320.0)
    return (
        np.where(small, c0_s, c0),
        np.where(small, c2_s, c2),
        np.where(small, s1_s, s1),
        np.where(small, s3_s, s3),
    )


def _cubic_coefficients(omega: np.ndarray, amp: np.ndarray):
    """Per-interval cubic Lagrange coefficients in xi = (w - w_mid)/h.

    Uses the 4-point stencil (i-1 .. i+2) clamped at the ends.  Returns an
    array of shape (n_intervals, 4, *amp.shape[1:]).
    """
    n = omega.size
    idx = np.clip(np.arange(n - 1) - 1, 0, n - 4)
    stencil = idx[:, None] + np.arange(4)[None, :]
    h = np.diff(omega)
    mid = 0.5 * (omega[:-1] + omega[1:])
    xi = (omega[stencil] - mid[:, None]) / h[:, None]
    vander = xi[..., None] ** np.arange(4)
    y = amp[stencil].reshape(n - 1, 4, -1)
    coeff = np.linalg.solve(vander, y)
    return coeff.reshape((n - 1, 4) + amp.shape[1:]), h, mid


def filon_sine_transform(
    omega: np.ndarray,
    amp: np.ndarray,
    t: np.ndarray,
    cesaro_decades: float = 1.0,
) -> np.ndarray:
    """integral of amp(omega) * sin(omega*t) d omega over the sampled grid.

    Parameters
    ----------
    omega : increasing positive grid, shape (n,)
    amp : samples, shape (n, ...) (tensor components trail)
    t : times, shape (m,) or scalar
    cesaro_decades : width (in decades of omega) of the cutoff-averaging
        band at the top of the grid; 0 disables averaging.  Averaging is
        harmless for absolutely convergent transforms and required for
        conditionally convergent ones (amplitudes decaying ~ 1/omega).

    Returns
    -------
    shape (m, ...) array (or (...) for scalar t).
    """
    omega = np.asarray(omega, dtype=float)
    amp = np.asarray(amp, dtype=float)
    t_in = np.asarray(t, dtype=float)
    t_arr = np.atleast_1d(t_in)
    if omega.ndim != 1 or omega.size < 4:
        raise ValueError("omega grid must be 1-D with at least 4 nodes")
    if np.any(np.diff(omega) <= 0.0) or omega[0] < 0.0:
        raise ValueError("omega grid must be strictly increasing and nonnegative")
    coeff, h, mid = _cubic_coefficients(omega, amp)
    comp_shape = amp.shape[1:]
    coeff_flat = coeff.reshape(omega.size - 1, 4, -1)

    weights = _cesaro_weights(omega, cesaro_decades)

    out = np.empty((t_arr.size,) + (coeff_flat.shape[-1],))
    for j, tj in enumerate(t_arr):
        phi = h * tj
        c0, c2, s1, s3 = _moments(phi)
        psi = mid * tj
        even = np.sin(psi) * c0, np.sin(psi) * c2
        odd = np.cos(psi) * s1, np.cos(psi) * s3
        contrib = (
            even[0][:, None] * coeff_flat[:, 0]
            + odd[0][:, None] * coeff_flat[:, 1]
            + even[1][:, None] * coeff_flat[:, 2]
            + odd[1][:, None] * coeff_flat[:, 3]
        ) * h[:, None]
        out[j] = weights @ contrib
    out = out.reshape(t_arr.shape + comp_shape)
    if t_in.ndim == 0:
        return out[0]
    return out


def _cesaro_weights(omega: np.ndarray, decades: float) -> np.ndarray:
    """Interval weights equivalent to averaging over upper cutoffs.

    Cutoffs are the interval right-endpoints within the top ``decades`` of
    the grid; the mean of the corresponding partial integrals weights each
    interval in the band by the fraction of cutoffs at or beyond it.
    """
    n_int = omega.size - 1
    if decades <= 0.0:
        return np.ones(n_int)
    lo = omega[-1] / 10.0**decades
    band = np.nonzero(omega[1:] >= lo)[0]
    if band.size < 8:  # too few cutoffs to average over
        return np.ones(n_int)
    w = np.ones(n_int)
    m = band.size
    w[band] = (m - np.arange(m)) / m
    return w


def sine_transform_tail_estimate(omega: np.ndarray, amp: np.ndarray, t: np.ndarray):
    """Bound on the omitted tail integral beyond the top of the grid.

    For an amplitude with decaying envelope the second mean value theorem
    bounds |int_{W}^{inf} A sin(wt) dw| by 2*|A(W)|/t (per component, max
    norm over trailing axes).
    """
    a_end = np.max(np.abs(np.asarray(amp)[-1]))
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(t > 0.0, 2.0 * a_end / np.maximum(t, 1e-300), np.inf)


def kramers_kronig_real(
    omega_eval: np.ndarray, omega: np.ndarray, im_samples: np.ndarray
) -> np.ndarray:
    """Real part from Im chi by the principal-value dispersion integral.

    Re chi(w) = (2/pi) PV int w' Im(w') / (w'^2 - w^2) dw' over the sampled
    support, with the singularity removed by subtraction and reinstated
    through the closed-form PV of 1/(w'^2 - w^2).  Im chi is assumed to
    vanish beyond the grid; the neglected tail is O(Im(w_max)).
    """
    omega = np.asarray(omega, dtype=float)
    im = np.asarray(im_samples, dtype=float)
    w_eval = np.atleast_1d(np.asarray(omega_eval, dtype=float))
    comp = im.shape[1:]
    im_flat = im.reshape(omega.size, -1)
    out = np.empty((w_eval.size, im_flat.shape[1]))
    a, b = omega[0], omega[-1]
    for j, w in enumerate(w_eval):
        im_w = _interp_rows(w, omega, im_flat)
        num = omega[:, None] * im_flat - w * im_w[None, :]
        den = omega**2 - w**2
        hit = np.isclose(den, 0.0, atol=1e-300)
        den_safe = np.where(hit, 1.0, den)
        integrand = num / den_safe[:, None]
        if np.any(hit):
            i = int(np.nonzero(hit)[0][0])
            integrand[i] = _limit_at_pole(i, omega, im_flat, w)
        main = np.trapezoid(integrand, omega, axis=0)
        # PV of int dw'/(w'^2 - w^2) over [a, b]; valid inside and outside
        pv = (np.log(abs((b - w) / (b + w))) - np.log(abs((a - w) / (a + w)))) / (2.0 * w)
        out[j] = (2.0 / np.pi) * (main + w * im_w * pv)
    out = out.reshape(w_eval.shape + comp)
    if np.ndim(omega_eval) == 0:
        return out[0]
    return out


def _interp_rows(w, omega, table):
    i = np.clip(np.searchsorted(omega, w) - 1, 0, omega.size - 2)
    lam = (w - omega[i]) / (omega[i + 1] - omega[i])
    lam = np.clip(lam, 0.0, 1.0)
    return (1.0 - lam) * table[i] + lam * table[i + 1]


def _limit_at_pole(i, omega, table, w):
    # d/dw' [w' Im(w')] / (2 w) by a centered difference at the pole node
    lo, hi = max(i - 1, 0), min(i + 1, omega.size - 1)
    d = (omega[hi] * table[hi] - omega[lo] * table[lo]) / (omega[hi] - omega[lo])
    return d / (2.0 * w)


def laplace_from_im_spectrum(
    s: complex, omega: np.ndarray, im_samples: np.ndarray
) -> np.ndarray:
    """chi_tilde(s) = (2/pi) int w Im chi(w) / (s^2 + w^2) dw, Re(s) > 0.

    Follows from the sine-transform representation of the causal kernel;
    trapezoidal on the sampled grid (the integrand is smooth for Re s > 0).
    """
    omega = np.asarray(omega, dtype=float)
    im = np.asarray(im_samples, dtype=complex)
    integrand = omega[:, None] * im.reshape(omega.size, -1) / (s * s + omega * omega)[:, None]
    out = (2.0 / np.pi) * np.trapezoid(integrand, omega, axis=0)
    return out.reshape(im.shape[1:])
