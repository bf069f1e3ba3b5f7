"""Scalar kernels shared by all closed-form solvers.

``f_t(x)`` is the marginal rate per unit of slot time at SNR ``x`` (in units of
bandwidth), and ``f_t_inverse`` maps a target marginal value back to the SNR
through the principal branch of the Lambert W function.
"""

from __future__ import annotations

import math

import numpy as np

LN2 = math.log(2.0)
_INV_E = math.exp(-1.0)
# Below the cut the direct formula loses about 2 eps / x to cancellation;
# 16 series terms keep the truncation under 1e-19 relative there.
_SERIES_CUT = 0.05
_SERIES = tuple((-1) ** n * (n - 1) / n for n in range(2, 18))


class KernelDomainError(ValueError):
    pass


def _halley(w, z, iters=12):
    # Halley on w*e^w - z; converges cubically from the seeds below.
    for _ in range(iters):
        ew = np.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        safe = wp1 != 0.0
        wp1 = np.where(safe, wp1, 1.0)
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        ok = safe & (denom != 0.0)
        step = np.where(ok, f / np.where(ok, denom, 1.0), 0.0)
        w = w - step
        if np.all(np.abs(step) <= 4e-16 * (1.0 + np.abs(w))):
            break
    return w


def _branch_series(q):
    # W0 near -1/e in terms of q = 1 + e*z >= 0.
    p = np.sqrt(2.0 * q)
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0))))


def lambert_w0(z):
    """Principal branch ``W0`` of the Lambert W function for real ``z >= -1/e``.

    Seeds come from the branch-point series (near ``-1/e``), a Pade-like
    guess around zero, and the ``ln z - ln ln z`` asymptote for large ``z``;
    Halley iterations polish them to machine precision.
    """
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    # Values a few ulps below -1/e are rounding noise around the branch point.
    if np.any(z_arr < -_INV_E * (1 + 4e-16)) or np.any(np.isnan(z_arr)):
        raise KernelDomainError("lambert_w0 needs z >= -1/e")
    z_arr = np.maximum(z_arr, -_INV_E)
    q = np.maximum(1.0 + math.e * z_arr, 0.0)

    w = np.empty_like(z_arr)
    near = q < 0.3
    mid = (~near) & (z_arr <= 3.0)
    far = z_arr > 3.0
    w[near] = _branch_series(q[near])
    zm = z_arr[mid]
    w[mid] = zm * (1.0 + 4.0 / 3.0 * zm) / (1.0 + zm * (7.0 / 3.0 + 5.0 / 6.0 * zm))
    L1 = np.log(z_arr[far])
    L2 = np.log(L1)
    w[far] = L1 - L2 + L2 / L1
    w = _halley(w, z_arr)
    w[q == 0.0] = -1.0
    return float(w[0]) if scalar else w


def f_t(x):
    """``(ln(1+x) - x/(1+x)) / ln 2`` for ``x >= 0``; zero at zero, increasing."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(np.isnan(x_arr)):
        raise KernelDomainError("f_t needs x >= 0")
    small = x_arr < _SERIES_CUT
    xs = np.where(small, x_arr, 0.0)
    # Alternating series sum_{n>=2} (-1)^n (n-1)/n x^n avoids the cancellation.
    series = np.zeros_like(xs)
    for c in _SERIES[::-1]:
        series = series * xs + c
    series = series * xs * xs
    xl = np.where(small, 1.0, x_arr)
    direct = np.log1p(xl) - xl / (1.0 + xl)
    out = np.where(small, series, direct) / LN2
    return float(out) if out.ndim == 0 else out


def f_t_derivative(x):
    x = np.asarray(x, dtype=float)
    out = x / ((1.0 + x) ** 2 * LN2)
    return float(out) if out.ndim == 0 else out


def f_t_inverse(y):
    """Inverse of :func:`f_t` on ``y >= 0``.

    Evaluates ``exp(W0(-exp(-(1 + y ln 2))) + 1 + y ln 2) - 1`` and finishes
    with two Newton steps on ``f_t(x) = y``.  The argument of ``W0`` is built
    from ``1 + e z = -expm1(-y ln 2)`` so small ``y`` keep full precision.
    """
    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < 0) or np.any(np.isnan(y_arr)):
        raise KernelDomainError("f_t_inverse needs y >= 0")
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr)
    s = 1.0 + y_arr * LN2
    q = -np.expm1(-y_arr * LN2)
    w = np.empty_like(y_arr)
    near = q < 0.3
    w[near] = _halley(_branch_series(q[near]), -np.exp(-s[near]))
    w[~near] = lambert_w0(-np.exp(-s[~near]))
    x = np.expm1(w + s)
    x = np.maximum(x, 0.0)
    for _ in range(2):
        d = f_t_derivative(x)
        ok = d > 0
        x = np.where(ok, x - (f_t(x) - y_arr) / np.where(ok, d, 1.0), x)
        x = np.maximum(x, 0.0)
    x[y_arr == 0] = 0.0
    return float(x[0]) if scalar else x
