"""Alpha-fair utilities and fairness metrics."""

from __future__ import annotations

import math

import numpy as np

#: Half-width of the band around alpha = 1 that uses the logarithmic branch.
ALPHA_ONE_BAND = 1e-9


class FairnessDomainError(ValueError):
    pass


def _check_alpha(alpha):
    if not alpha >= 0:
        raise FairnessDomainError(f"alpha must be >= 0, got {alpha}")
    if math.isinf(alpha):
        raise FairnessDomainError("alpha = inf is max-min fairness; use the max-min solver")


def utility(alpha: float, R):
    """Alpha-fair utility ``ln R`` (alpha = 1) or ``R**(1-alpha)/(1-alpha)``.

    ``R = 0`` is allowed for ``alpha < 1`` and maps to 0.  Values for
    different ``alpha`` live on unrelated scales and should not be compared.
    """
    _check_alpha(alpha)
    R = np.asarray(R, dtype=float)
    if np.any(R < 0) or (alpha >= 1 and np.any(R <= 0)):
        raise FairnessDomainError(f"utility undefined for R <= 0 at alpha = {alpha}")
    if abs(alpha - 1.0) < ALPHA_ONE_BAND:
        out = np.log(R)
    else:
        out = R ** (1.0 - alpha) / (1.0 - alpha)
    return out if out.ndim else float(out)


def utility_derivative(alpha: float, R):
    """Marginal utility ``R**(-alpha)``."""
    _check_alpha(alpha)
    R = np.asarray(R, dtype=float)
    if np.any(R <= 0):
        raise FairnessDomainError("marginal utility needs R > 0")
    out = R ** (-alpha)
    return out if out.ndim else float(out)


def total_utility(alpha: float, R) -> float:
    """Sum of utilities; ``alpha = inf`` returns the smallest entry."""
    if math.isinf(alpha):
        return float(np.min(R))
    return float(np.sum(utility(alpha, R)))


def jain_index(R) -> float:
    """Jain's index ``(sum R)**2 / (K * sum R**2)``, between 1/K and 1."""
    R = np.asarray(R, dtype=float)
    if R.size == 0 or np.any(R < 0) or not np.any(R > 0):
        raise FairnessDomainError("Jain's index needs non-negative entries, at least one positive")
    # Normalise first so huge or tiny magnitudes do not overflow the squares.
    x = R / np.max(R)
    return float(np.sum(x) ** 2 / (x.size * np.sum(x * x)))


def jain_or_nan(R) -> float:
    """:func:`jain_index`, or ``nan`` when every entry is zero."""
    try:
        return jain_index(R)
    except FairnessDomainError:
        return math.nan
