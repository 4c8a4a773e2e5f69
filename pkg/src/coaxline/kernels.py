"""Hot numeric kernels for resonance fitting.

These are the inner loops evaluated thousands of times per fit and per
ensemble: the complex hanger response, the centered phase model, and their
residual/Jacobian stacks used by the least-squares drivers.  All functions
are written in numba-compilable vectorized numpy; see ``_accel`` for the
JIT/no-JIT switch.

Scaled fit parameterizations (kept O(1) for optimizer conditioning):

* full hanger model ``p = (nu, lnql, lnqc, phi, lna, theta_mid, s)`` with
  ``f0 = nu * fscale`` and ``tau = s / wspan``; the background phase is
  anchored at the span center (``theta_mid = theta0 - 2*pi*fscale*tau``)
  so the phase offset and the delay stay numerically decoupled;
* centered phase model ``p = (theta_off, lnql, nu)`` with ``f0 = nu * fscale``.
"""

import numpy as np

from ._accel import njit

TWO_PI = 2.0 * np.pi


@njit(cache=True)
def hanger_s21(freqs, f0, ql, qc_mag, phi, amp, theta0, tau):
    """Complex feedline-coupled (hanger) response on a frequency grid.

    ``s21 = amp * exp(i*(theta0 - 2*pi*f*tau))
            * (1 - (ql/qc_mag) * exp(i*phi) / (1 + 2i*ql*(f - f0)/f0))``
    """
    x = (freqs - f0) / f0
    dip = (ql / qc_mag) * np.exp(1j * phi) / (1.0 + 2j * ql * x)
    background = amp * np.exp(1j * (theta0 - TWO_PI * freqs * tau))
    return background * (1.0 - dip)


@njit(cache=True)
def phase_model(freqs, theta_off, ql, f0):
    """Phase of the resonance circle seen from its center."""
    return theta_off + 2.0 * np.arctan(2.0 * ql * (1.0 - freqs / f0))


@njit(cache=True)
def phase_residual_jac(freqs, phase, p, fscale):
    """Residuals and Jacobian of the centered phase model.

    ``p = (theta_off, lnql, nu)``; returns ``(res[n], jac[n, 3])``.
    """
    theta_off = p[0]
    ql = np.exp(p[1])
    f0 = p[2] * fscale

    t = 2.0 * ql * (1.0 - freqs / f0)
    res = theta_off + 2.0 * np.arctan(t) - phase
    common = 2.0 / (1.0 + t * t)

    n = freqs.shape[0]
    jac = np.empty((n, 3))
    jac[:, 0] = 1.0
    jac[:, 1] = common * t              # d/dlnql = common * dt/dlnql, dt/dlnql = t
    jac[:, 2] = common * (2.0 * ql * freqs / (f0 * f0)) * fscale
    return res, jac


@njit(cache=True)
def hanger_residual_jac(freqs, data_re, data_im, p, fscale, wspan):
    """Stacked real residuals and Jacobian of the full hanger model.

    ``p = (nu, lnql, lnqc, phi, lna, theta_mid, s)``; residuals are
    ``[Re(model - data); Im(model - data)]`` of shape ``(2n,)`` with the
    Jacobian ``(2n, 7)`` stacked the same way.
    """
    f0 = p[0] * fscale
    ql = np.exp(p[1])
    qc_mag = np.exp(p[2])
    phi = p[3]
    amp = np.exp(p[4])
    theta_mid = p[5]
    tau = p[6] / wspan

    x = (freqs - f0) / f0
    denom = 1.0 + 2j * ql * x
    g = (ql / qc_mag) * np.exp(1j * phi) / denom
    background = amp * np.exp(1j * (theta_mid - TWO_PI * (freqs - fscale) * tau))
    model = background * (1.0 - g)

    # Complex partials of the model with respect to the scaled parameters.
    d_f0 = background * (-2j * ql * freqs / (f0 * f0)) * g / denom * fscale
    d_lnql = background * (-g / denom)
    d_lnqc = background * g
    d_phi = background * (-1j * g)
    d_lna = model
    d_theta0 = 1j * model
    d_s = -1j * TWO_PI * (freqs - fscale) * model / wspan

    n = freqs.shape[0]
    res = np.empty(2 * n)
    jac = np.empty((2 * n, 7))
    res[:n] = model.real - data_re
    res[n:] = model.imag - data_im
    jac[:n, 0] = d_f0.real
    jac[n:, 0] = d_f0.imag
    jac[:n, 1] = d_lnql.real
    jac[n:, 1] = d_lnql.imag
    jac[:n, 2] = d_lnqc.real
    jac[n:, 2] = d_lnqc.imag
    jac[:n, 3] = d_phi.real
    jac[n:, 3] = d_phi.imag
    jac[:n, 4] = d_lna.real
    jac[n:, 4] = d_lna.imag
    jac[:n, 5] = d_theta0.real
    jac[n:, 5] = d_theta0.imag
    jac[:n, 6] = d_s.real
    jac[n:, 6] = d_s.imag
    return res, jac


def warmup():
    """Trigger JIT compilation of all kernels (no-op on the numpy path)."""
    f = np.linspace(0.999e9, 1.001e9, 16)
    z = hanger_s21(f, 1e9, 1e4, 2e4, 0.05, 1.0, 0.0, 1e-9)
    phase_model(f, 0.1, 1e4, 1e9)
    phase_residual_jac(f, np.angle(z), np.array([0.1, np.log(1e4), 1.0]), 1e9)
    hanger_residual_jac(
        f,
        z.real,
        z.imag,
        np.array([1.0, np.log(1e4), np.log(2e4), 0.05, 0.0, 0.0, 0.0]),
        1e9,
        f[-1] - f[0],
    )
