"""Offloading gain from energy recycling in a simplified setting.

Every sensor offloads everything it harvests, slots are equal
(``t_k = 1/K``) and the power station transmits at a constant ``P0``.
Bandwidth and frame length are normalized to one, so rates are in bits
per unit bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .scenario import ChannelRealization, Scenario


class CerDomainError(ValueError):
    """The high-SNR gap is undefined because the PS delivers no energy."""


@dataclass(frozen=True)
class CerSetting:
    """Inputs of the simplified model.

    Attributes
    ----------
    P0 : float
        PS transmit power [W].
    p : ndarray, shape (K,)
        Fixed sensor transmit powers [W].
    h_gain : ndarray, shape (K,)
        ``|h_k|^2``.
    ws_gain : ndarray, shape (K, K)
        ``|g_{i,k}|^2`` with ``i`` transmitting; zero diagonal.
    ap_gain : ndarray, shape (K,)
        ``||g_k||^2``.
    noise : float
        Receiver noise power [W].
    eta : float
        Conversion efficiency.
    """

    P0: float
    p: np.ndarray
    h_gain: np.ndarray
    ws_gain: np.ndarray
    ap_gain: np.ndarray
    noise: float
    eta: float = 0.8

    def __post_init__(self):
        K = np.asarray(self.h_gain).size
        for name, shape in (("p", (K,)), ("h_gain", (K,)), ("ap_gain", (K,)), ("ws_gain", (K, K))):
            v = np.array(getattr(self, name), dtype=float)
            if v.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {v.shape}")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} must be finite and non-negative")
            if name == "ws_gain":
                np.fill_diagonal(v, 0.0)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not (self.P0 >= 0 and self.noise > 0 and 0 < self.eta <= 1):
            raise ValueError("need P0 >= 0, noise > 0 and 0 < eta <= 1")

    @property
    def K(self) -> int:
        return self.h_gain.size

    def replace(self, **kw) -> "CerSetting":
        d = {k: getattr(self, k) for k in ("P0", "p", "h_gain", "ws_gain", "ap_gain", "noise", "eta")}
        d.update(kw)
        return CerSetting(**d)


def energy_without_er(c: CerSetting) -> np.ndarray:
    """PS energy harvested over the ``K - 1`` slots owned by other sensors."""
    K = c.K
    return (K - 1) / K * c.eta * c.P0 * c.h_gain


def energy_with_er(c: CerSetting) -> np.ndarray:
    """PS energy plus what the other sensors' transmissions deliver."""
    return energy_without_er(c) + c.eta * (c.p @ c.ws_gain) / c.K


def _rate(c: CerSetting, E) -> np.ndarray:
    K = c.K
    return np.log2(1.0 + K * c.ap_gain * E / c.noise) / K


def rate_with_er(c: CerSetting, k: Optional[int] = None):
    """Offloaded bits with recycling; all sensors when ``k`` is None."""
    r = _rate(c, energy_with_er(c))
    return r if k is None else float(r[k])


def rate_without_er(c: CerSetting, k: Optional[int] = None):
    """Offloaded bits with PS energy only."""
    r = _rate(c, energy_without_er(c))
    return r if k is None else float(r[k])


def gap_exact(c: CerSetting, k: Optional[int] = None):
    """``rate_with_er - rate_without_er``, computed without cancellation."""
    K = c.K
    a = K * c.ap_gain / c.noise
    extra = a * c.eta * (c.p @ c.ws_gain) / K
    g = np.log1p(extra / (1.0 + a * energy_without_er(c))) / (K * np.log(2.0))
    return g if k is None else float(g[k])


def gap_approx(c: CerSetting, k: Optional[int] = None):
    """Noise-free gap ``(1/K) log2(E_with / E_without)``.

    Raises
    ------
    CerDomainError
        If a requested sensor harvests no PS energy.
    """
    K = c.K
    ps = (K - 1) * c.P0 * c.h_gain
    rec = c.p @ c.ws_gain
    idx = np.arange(K) if k is None else np.array([k])
    if np.any(ps[idx] <= 0):
        raise CerDomainError("gap approximation needs a positive PS term")
    g = np.log1p(rec[idx] / ps[idx]) / (K * np.log(2.0))
    return g if k is None else float(g[0])


def full_spend_powers(c: CerSetting) -> np.ndarray:
    """Illustrative powers: each sensor spends its harvest within its slot.

    Starts from the PS-only harvest and applies one pass of
    ``p = K * E_with(p)``. It is a convenience for demos, not an optimum.
    """
    p0 = c.K * energy_without_er(c)
    return c.K * energy_with_er(c.replace(p=p0))


def setting_from_channels(s: Scenario, ch: ChannelRealization, P0: Optional[float] = None,
                          p=None, noise: Optional[float] = None) -> CerSetting:
    """Build a setting from a scenario; ``p`` defaults to :func:`full_spend_powers`."""
    c = CerSetting(
        P0=s.P_max if P0 is None else float(P0), p=np.zeros(s.K), h_gain=ch.h_gain,
        ws_gain=ch.ws_gain, ap_gain=ch.ap_gain,
        noise=s.noise_power if noise is None else float(noise), eta=s.eta)
    return c.replace(p=full_spend_powers(c) if p is None else np.asarray(p, float))
