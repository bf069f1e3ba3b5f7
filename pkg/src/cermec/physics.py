"""System-model equations in substituted variables.

An :class:`Allocation` stores slot lengths ``t``, PS energies ``Pbar = P t``,
offloading energies ``pbar = p t`` and CPU frequencies ``f``.  Every quantity
below is evaluated with the MRC receiver, whose effective channel power for
sensor ``k`` is ``||g_k||^2``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import List

import numpy as np

from .kernels import LN2
from .scenario import ChannelRealization, Scenario

#: Absolute slack on energies [J] and times [s] used by :func:`feasibility`.
ABS_TOL = 1e-9
#: Relative slack on bit counts.
REL_TOL_BITS = 1e-6


class DegenerateChannelError(ValueError):
    pass


class InfeasibleAllocationError(ValueError):
    pass


def _vec(a, K, name):
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = np.full(K, float(arr))
    if arr.shape != (K,):
        raise ValueError(f"{name}: expected {K} entries, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class Allocation:
    """Decision point ``(t, Pbar, pbar, f)`` for ``K`` sensors."""

    t: np.ndarray
    Pbar: np.ndarray
    pbar: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        K = np.size(self.t)
        for name in ("t", "Pbar", "pbar", "f"):
            arr = _vec(getattr(self, name), K, name)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def K(self) -> int:
        return self.t.size

    @classmethod
    def zeros(cls, K: int) -> "Allocation":
        z = np.zeros(K)
        return cls(z, z, z, z)

    @classmethod
    def from_original(cls, t, P, p, f) -> "Allocation":
        """Build from slot lengths and powers ``(t, P, p, f)``."""
        t = np.asarray(t, dtype=float)
        return cls(t, np.asarray(P, float) * t, np.asarray(p, float) * t, f)

    def replace(self, **kw) -> "Allocation":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True, eq=False)
class Beamformer:
    w: np.ndarray


@dataclass(frozen=True, eq=False)
class EnergyReport:
    E_EH: np.ndarray
    E_EH_ps: np.ndarray
    E_EH_recycled: np.ndarray
    E_LC: np.ndarray
    E_CO: np.ndarray
    E_EC: np.ndarray


@dataclass(frozen=True, eq=False)
class DataReport:
    R_LC: np.ndarray
    R_CO: np.ndarray
    R: np.ndarray


def mrc_beamformer(g_ap) -> Beamformer:
    """Unit-norm receive vectors ``w_k = g_k / ||g_k||``."""
    g = np.atleast_2d(np.asarray(g_ap, dtype=complex))
    norms = np.linalg.norm(g, axis=1)
    if np.any(norms == 0):
        raise DegenerateChannelError("zero channel vector has no MRC direction")
    return Beamformer(g / norms[:, None])


def effective_gain(bf: Beamformer, g_ap) -> np.ndarray:
    """``|w_k^H g_k|^2`` for each sensor."""
    g = np.atleast_2d(np.asarray(g_ap, dtype=complex))
    return np.abs(np.sum(np.conj(bf.w) * g, axis=1)) ** 2


def harvested_split(s: Scenario, ch: ChannelRealization, a: Allocation):
    """PS part and recycled part of the harvested energy, each ``(K,)``."""
    Pb, pb = a.Pbar, a.pbar
    ps = s.eta * ch.h_gain * (np.sum(Pb) - Pb)
    # ws_gain[i, k]: i transmits, k harvests; the zero diagonal drops i == k.
    rec = s.eta * (pb @ ch.ws_gain)
    return ps, rec


def harvested_energy(s: Scenario, ch: ChannelRealization, a: Allocation) -> np.ndarray:
    """Energy each sensor harvests over the frame (noise contribution ignored)."""
    ps, rec = harvested_split(s, ch, a)
    return ps + rec


def local_data_energy(s: Scenario, a: Allocation):
    """``(R_LC, E_LC) = (T f / C, T phi f^3)``."""
    f = a.f
    return s.T * f / s.C, s.T * s.phi * f ** 3


def offload_bits(B, t, pbar, snr_coef):
    """``t B log2(1 + pbar * snr_coef / t)`` with the ``t = 0`` limit set to 0.

    ``snr_coef`` is ``||g||^2 / noise``.  Raises when ``t = 0`` carries energy.
    """
    t = np.asarray(t, dtype=float)
    pbar = np.asarray(pbar, dtype=float)
    if np.any((t <= 0) & (pbar > 0)):
        raise InfeasibleAllocationError("offloading energy assigned to an empty slot")
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    return np.where(pos, ts * B * np.log1p(pbar * snr_coef / ts) / LN2, 0.0)


def offload_data(s: Scenario, ch: ChannelRealization, a: Allocation) -> np.ndarray:
    return offload_bits(s.B, a.t, a.pbar, ch.ap_gain / s.noise_power)


def computable_bits(s: Scenario, ch: ChannelRealization, a: Allocation) -> np.ndarray:
    """Per-sensor total ``R_LC + R_CO``."""
    return local_data_energy(s, a)[0] + offload_data(s, ch, a)


def evaluate(s: Scenario, ch: ChannelRealization, a: Allocation):
    """Return ``(DataReport, EnergyReport)`` for an allocation."""
    R_LC, E_LC = local_data_energy(s, a)
    R_CO = offload_data(s, ch, a)
    ps, rec = harvested_split(s, ch, a)
    data = DataReport(R_LC=R_LC, R_CO=R_CO, R=R_LC + R_CO)
    energy = EnergyReport(E_EH=ps + rec, E_EH_ps=ps, E_EH_recycled=rec,
                          E_LC=E_LC, E_CO=a.pbar.copy(), E_EC=E_LC + a.pbar)
    return data, energy


def feasibility(s: Scenario, ch: ChannelRealization, a: Allocation,
                abs_tol: float = ABS_TOL, rel_tol_bits: float = REL_TOL_BITS,
                check_rmin: bool = True) -> List[str]:
    """Names of violated constraints, each with the offending sensors.

    Checks ``Pbar <= P_max t``, ``sum t <= T - eps``, energy causality,
    ``f <= f_max``, ``R >= R_min`` and non-negativity.
    """
    bad = []

    def flag(name, mask):
        idx = np.flatnonzero(mask)
        if idx.size:
            bad.append(f"{name}[{','.join(str(i) for i in idx)}]")

    flag("nonneg", (a.t < -abs_tol) | (a.Pbar < -abs_tol) | (a.pbar < -abs_tol) | (a.f < -abs_tol))
    flag("C1_ps_power", a.Pbar > s.P_max * a.t + abs_tol)
    if np.sum(a.t) > s.T_eff + abs_tol:
        bad.append("C2_time_budget")
    ps, rec = harvested_split(s, ch, a)
    _, E_LC = local_data_energy(s, a)
    flag("C3_energy", E_LC + a.pbar > ps + rec + abs_tol)
    flag("C4_cpu", a.f > s.f_max * (1 + 1e-12) + abs_tol)
    if check_rmin:
        try:
            R = computable_bits(s, ch, a)
        except InfeasibleAllocationError:
            bad.append("slot_energy")
        else:
            flag("C6_min_bits", R < s.R_min * (1 - rel_tol_bits) - abs_tol)
    return bad
