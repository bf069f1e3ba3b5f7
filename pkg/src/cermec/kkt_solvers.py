"""Closed-form alternating solvers for the three fairness regimes.

All three solvers share one engine.  Each outer iteration runs a
slot/frequency block followed by a power block:

* The power block sets ``Pbar = P_max t`` and makes energy causality tight
  for every sensor.  Because recycled energy couples the sensors, the tight
  budgets solve the linear system ``pbar = E_ps + eta G^T pbar - T phi f^3``,
  handled with an active set for sensors whose budget cannot cover their CPU.
* The slot block re-solves the slot lengths with every sensor's offloading
  energy tracking its own harvested budget, ``pbar_k(t_k) = E_k - a_k t_k``,
  where ``a_k = eta P_max |h_k|^2`` is the PS energy sensor ``k`` gives up per
  second of its own slot.  Slots are priced by a common time multiplier found
  by root-finding so that the whole budget ``T - eps`` is used.
* Energy prices ``mu`` include the value a sensor's transmission has for its
  peers as recycled energy: ``mu = w r' + eta G mu`` with ``r'`` the marginal
  bits per joule of offloading.

Holding ``pbar`` fixed inside the slot block (so that each slot scales with
its offloading energy) oscillates without converging, which is why the slot
block moves along the energy-tight curve instead.

The regimes differ only in how sensors are weighted: unit weights for
throughput (``alpha = 0``), ``R^-alpha`` for finite ``alpha`` and a max-min
equalization of rates for ``alpha = inf``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
from scipy.optimize import brentq

from . import fairness
from .kernels import LN2, f_t, f_t_inverse, lambert_w0  # noqa: F401  (re-exported)
from .physics import Allocation, InfeasibleAllocationError, computable_bits, feasibility
from .results import DualInfeasibleError, DualState, InfeasibleScenarioError, SolverResult
from .scenario import ChannelRealization, Scenario, recycling_loop_gain

__all__ = [
    "f_t", "f_t_inverse", "lambert_w0", "OriginalAllocation", "recover_original",
    "zfba_time_freq_step", "zfba_power_step", "zfba_pbar_closed_form", "implied_energy_price",
    "solve_zfba", "solve_cfba", "solve_mfba", "maxmin_feasibility", "kkt_residuals",
    "SolverOptions",
]


@dataclass(frozen=True)
class SolverOptions:
    """Stopping rule of the outer alternation.

    The loop stops once the relative objective change stays below ``tol`` for
    two consecutive iterations and the largest slot update is below
    ``step_tol * (T - eps)``.
    """

    tol: float = 1e-6
    step_tol: float = 1e-10
    max_iter: int = 200
    line_search_iters: int = 40


DEFAULT_OPTIONS = SolverOptions()


# --------------------------------------------------------------------------
# original variables

@dataclass(frozen=True, eq=False)
class OriginalAllocation:
    t: np.ndarray
    P: np.ndarray
    p: np.ndarray
    f: np.ndarray


def recover_original(a: Allocation) -> OriginalAllocation:
    """Undo the substitution: ``P = Pbar / t``, ``p = pbar / t``.

    Empty slots carrying no energy map to zero power.
    """
    t = a.t
    empty = t <= 0
    if np.any(empty & ((a.Pbar > 0) | (a.pbar > 0))):
        raise InfeasibleAllocationError("energy assigned to an empty slot")
    ts = np.where(empty, 1.0, t)
    P = np.where(empty, 0.0, a.Pbar / ts)
    p = np.where(empty, 0.0, a.pbar / ts)
    return OriginalAllocation(t.copy(), P, p, a.f.copy())


# --------------------------------------------------------------------------
# scalar helpers

def _ft(x: float) -> float:
    if x < 1e-3:
        return x * x * (0.5 - x * (2.0 / 3.0 - x * (0.75 - x * (0.8 - x * 5.0 / 6.0)))) / LN2
    return (math.log1p(x) - x / (1.0 + x)) / LN2


class _Model:
    """Problem data in the form the engine needs."""

    def __init__(self, s: Scenario, ch: ChannelRealization, *, local: bool = True):
        if ch.K != s.K:
            raise ValueError("channel realization does not match the scenario size")
        if recycling_loop_gain(s, ch) >= 1.0:
            raise ValueError("recycling loop gain >= 1: harvested energy is unbounded")
        self.s = s
        self.K = s.K
        self.T_eff = s.T_eff
        self.B = s.B
        self.eta = s.eta
        self.P_max = s.P_max
        self.h_gain = ch.h_gain
        self.a = s.eta * s.P_max * ch.h_gain
        self.G = ch.ws_gain
        self.c = ch.ap_gain / s.noise_power
        self.bits_per_hz = s.T / s.C
        self.cpu_e = s.T * s.phi
        self.fcap = s.f_max.copy() if local else np.zeros(s.K)
        self.R_min = s.R_min

    # energy ------------------------------------------------------------
    def ps_energy(self, t):
        Pb = self.P_max * t
        return self.eta * self.h_gain * (np.sum(Pb) - Pb)

    def recycled(self, pbar):
        return self.eta * (pbar @ self.G)

    def fill(self, t, f):
        """Tight-budget offloading energies for slots ``t`` and frequencies ``f``.

        Returns ``(pbar, f)``; frequencies drop where the budget cannot cover
        the CPU, and sensors without a slot spend their surplus on the CPU.
        """
        K = self.K
        need = self.cpu_e * f ** 3
        base = self.ps_energy(t) - need
        S = (t > 0) & (self.c > 0)
        p = np.zeros(K)
        A = np.eye(K) - self.eta * self.G.T
        for _ in range(K + 1):
            idx = np.flatnonzero(S)
            if idx.size == 0:
                break
            sol = np.linalg.solve(A[np.ix_(idx, idx)], base[idx])
            neg = sol < 0
            if not np.any(neg):
                p[idx] = sol
                break
            S[idx[neg]] = False
        E = self.ps_energy(t) + self.recycled(p)
        f = f.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            cpu_f = np.where(self.cpu_e > 0, np.cbrt(np.maximum(E, 0.0) / self.cpu_e), np.inf)
        short = need > E
        f[short] = cpu_f[short]
        idle = ~(t > 0)
        f[idle] = np.minimum(self.fcap[idle], cpu_f[idle])
        return p, np.minimum(f, self.fcap)

    # rates ----------------------------------------------------------------
    def rates(self, t, pbar, f):
        pos = t > 0
        ts = np.where(pos, t, 1.0)
        co = np.where(pos, ts * self.B * np.log1p(self.c * pbar / ts) / LN2, 0.0)
        return self.bits_per_hz * f + co

    def snr(self, t, pbar):
        pos = t > 0
        return np.where(pos, self.c * pbar / np.where(pos, t, 1.0), 0.0)

    def bits_per_joule(self, t, pbar):
        """``r'_k``: marginal offloaded bits per joule, zero without a slot."""
        x = self.snr(t, pbar)
        return np.where(t > 0, self.B * self.c / (LN2 * (1.0 + x)), 0.0)

    def prices(self, t, pbar, f, w):
        """Energy prices ``(mu, net)`` for sensor weights ``w``.

        ``net`` is the sensor's own marginal value of a joule; ``mu`` adds the
        value of the energy it recycles to its peers.
        """
        active = t > 0
        net = w * self.bits_per_joule(t, pbar)
        idle = ~active
        if np.any(idle):
            # Without a slot energy only feeds the CPU, worth something below the cap.
            with np.errstate(divide="ignore", invalid="ignore"):
                cpu_val = np.where(f > 0, w * self.bits_per_hz / (3.0 * self.cpu_e * f ** 2), 0.0)
            net = np.where(idle & (f < self.fcap * (1 - 1e-12)), cpu_val, net)
        G = self.G * active[:, None]
        mu = np.linalg.solve(np.eye(self.K) - self.eta * G, net)
        return mu, net

    def freq(self, w, mu, pbar):
        """Frequency block: ``sqrt(w / (3 mu C phi))`` capped by ``f_max`` and energy."""
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(mu > 0, np.sqrt(w * self.bits_per_hz / (3.0 * mu * self.cpu_e)), np.inf)
        avail = self.a * self.T_eff + self.recycled(pbar)
        f = np.minimum(f, np.cbrt(np.maximum(avail, 0.0) / self.cpu_e))
        return np.minimum(f, self.fcap)


class _Curve:
    """Rate of one sensor along its energy-tight curve ``pbar(t) = E - a t``."""

    __slots__ = ("a", "c", "E", "B", "Rlc", "hi", "lo", "_peak")

    def __init__(self, a, c, E, B, Rlc, T_eff):
        self.a, self.c, self.E, self.B, self.Rlc = float(a), float(c), float(E), float(B), float(Rlc)
        self.hi = T_eff if self.a <= 0 else min(T_eff, self.E / self.a)
        self.lo = 1e-13 * T_eff
        self._peak = None

    @property
    def live(self) -> bool:
        return self.E > 0 and self.c > 0 and self.hi > self.lo

    def x(self, t):
        return max(self.c * (self.E - self.a * t) / t, 0.0)

    def R(self, t):
        if t <= 0:
            return self.Rlc
        return self.Rlc + t * self.B * math.log1p(self.x(t)) / LN2

    def dR(self, t):
        x = self.x(t)
        return self.B * _ft(x) - self.a * self.B * self.c / (LN2 * (1.0 + x))

    def peak(self):
        """Slot length that maximizes ``R`` and the rate there."""
        if self._peak is None:
            if self.dR(self.hi) >= 0:
                tp = self.hi
            else:
                tp = brentq(self.dR, self.lo, self.hi, xtol=1e-15 * self.hi, rtol=1e-15)
            self._peak = (tp, self.R(tp))
        return self._peak

    def t_for_rate(self, level):
        """Shortest slot reaching ``level`` bits; ``inf`` when out of reach."""
        if level <= self.Rlc:
            return 0.0
        if not self.live:
            return math.inf
        tp, Rp = self.peak()
        if Rp < level:
            return math.inf
        if Rp == level:
            return tp
        return brentq(lambda t: self.R(t) - level, 0.0, tp, xtol=1e-15 * tp, rtol=1e-15)


def _curves(m: _Model, pbar, f):
    E = m.a * m.T_eff + m.recycled(pbar) - m.cpu_e * f ** 3
    Rlc = m.bits_per_hz * f
    return [_Curve(m.a[k], m.c[k], E[k], m.B, Rlc[k], m.T_eff) for k in range(m.K)]


# --------------------------------------------------------------------------
# slot blocks

def _time_weighted(m: _Model, curves, credit, weight_fn, floors):
    """Slots for weighted-sum regimes.

    Solves ``weight_fn(k, R_k(t_k)) * dR_k/dt_k - a_k credit_k = lam`` with a
    common ``lam`` so that the slots fill ``T - eps``.  ``floors`` are minimum
    rates handled as lower bounds on the slots.  Returns ``(t, lam, at_floor)``.
    """
    K, T_eff = m.K, m.T_eff
    lo = np.zeros(K)
    hi = np.zeros(K)
    live = np.array([cv.live for cv in curves])
    for k, cv in enumerate(curves):
        tmin = cv.t_for_rate(floors[k])
        if not live[k]:
            lo[k] = hi[k] = 0.0 if tmin == 0.0 else 0.0
            continue
        if not math.isfinite(tmin):
            tmin = cv.peak()[0]
        lo[k] = max(tmin, cv.lo)
        hi[k] = max(cv.hi, lo[k])
    if np.sum(lo) >= T_eff:
        t = lo * (T_eff / np.sum(lo))
        return t, 0.0, live.copy()

    def phi(k, t):
        cv = curves[k]
        return weight_fn(k, cv.R(t)) * cv.dR(t) - cv.a * credit[k]

    idx = np.flatnonzero(live)
    phi_lo = {k: phi(k, lo[k]) for k in idx}
    phi_hi = {k: phi(k, hi[k]) for k in idx}

    def slot(k, lam):
        if phi_lo[k] <= lam:
            return lo[k]
        if phi_hi[k] >= lam:
            return hi[k]
        return brentq(lambda t: phi(k, t) - lam, lo[k], hi[k], xtol=1e-16 * T_eff, rtol=1e-15)

    def slots(lam):
        t = np.zeros(K)
        for k in idx:
            t[k] = slot(k, lam)
        return t

    if idx.size == 0:
        return np.zeros(K), 0.0, np.zeros(K, bool)
    if np.sum(hi) <= T_eff:
        # Every live sensor is past its best slot; extra time would cost rate.
        lam = min(phi_hi.values())
        return hi.copy(), lam, np.zeros(K, bool)
    lam_lo = min(phi_hi.values())
    lam_hi = max(phi_lo.values())
    if lam_hi <= lam_lo:
        lam = lam_lo
    else:
        lam = brentq(lambda v: np.sum(slots(v)) - T_eff, lam_lo, lam_hi, xtol=1e-300,
                     rtol=1e-15, maxiter=400)
    t = slots(lam)
    t *= T_eff / np.sum(t)
    at_floor = live & (t <= lo * (1 + 1e-12)) & (lo > curves[0].lo)
    return t, lam, at_floor


def _equalize(curves, offsets, budget, members):
    """Max-min slot block: the largest ``gamma`` with ``R_k >= gamma + offset_k``.

    Sensors that peak below the common level keep their peak slot and the
    rest are equalized recursively over the remaining time.
    Returns ``(t, gamma)`` where ``gamma`` is the equalized level.
    """
    K = len(curves)
    t = np.zeros(K)
    members = list(members)
    if not members:
        return t, math.inf
    peaks = {k: curves[k].peak()[1] if curves[k].live else curves[k].Rlc for k in members}
    g_lo = min(curves[k].Rlc - offsets[k] for k in members)
    g_hi = min(peaks[k] - offsets[k] for k in members)

    def need(g):
        return np.array([curves[k].t_for_rate(g + offsets[k]) for k in members])

    top = need(g_hi)
    if np.sum(top) <= budget:
        j = min(members, key=lambda k: peaks[k] - offsets[k])
        tj = curves[j].peak()[0] if curves[j].live else 0.0
        t[j] = min(tj, budget)
        rest = [k for k in members if k != j]
        t_rest, g_rest = _equalize(curves, offsets, budget - t[j], rest)
        t += t_rest
        return t, min(g_hi, g_rest)
    if np.sum(need(g_lo)) >= budget:
        g = g_lo
    else:
        g = brentq(lambda v: np.sum(need(v)) - budget, g_lo, g_hi, xtol=1e-14 * max(abs(g_hi), 1.0),
                   rtol=1e-15, maxiter=400)
    t[members] = need(g)
    s = np.sum(t)
    if s > 0:
        t *= budget / s
    return t, g


# --------------------------------------------------------------------------
# exact slot block with live recycling

class _Reduced:
    """Rates as functions of the slots alone.

    With ``Pbar = P_max t``, ``sum t = T - eps`` and every budget tight, the
    offloading energies of the sensors in ``S`` are affine in the slots,
    ``pbar_S = M (a (T - eps - t) - need)`` with ``M = (I - eta G^T)^-1``, so
    the slot block is a smooth concave program solved here by Newton steps.
    """

    def __init__(self, m: _Model, t, f):
        self.m = m
        K = m.K
        need = m.cpu_e * f ** 3
        self.S = np.flatnonzero((t > 0) & (m.c > 0))
        S = self.S
        A = np.eye(K) - m.eta * m.G.T
        self.M = np.linalg.inv(A[np.ix_(S, S)])
        self.base = m.a[S] * m.T_eff - need[S]
        self.J = -self.M * m.a[S][None, :]  # d pbar_S / d t_S
        self.Rlc = m.bits_per_hz * f[S]
        self.c = m.c[S]

    def pbar(self, tS):
        return self.M @ (self.base - self.m.a[self.S] * tS)

    def eval(self, tS, hess=True):
        """Rates, Jacobian ``dR/dt`` and the perspective curvature terms."""
        B, c = self.m.B, self.c
        p = self.pbar(tS)
        x = c * p / tS
        R = self.Rlc + tS * B * np.log1p(x) / LN2
        ft = B * np.array([_ft(v) for v in x])
        rp = B * c / (LN2 * (1.0 + x))
        D = np.diag(ft) + rp[:, None] * self.J
        if not hess:
            return p, R, D, None
        q = B / (LN2 * tS * (1.0 + x) ** 2)
        curv = (-q * x * x, q * c * x, -q * c * c)  # tt, tp, pp
        return p, R, D, curv

    def domain_ok(self, tS):
        return bool(np.all(tS > 0) and np.all(self.pbar(tS) > 0))


def _newton_weighted(m: _Model, t, f, u, du, d2u, floors, iters=60):
    """Maximize ``sum u(R_k)`` over the slots with live recycling.

    ``u``, ``du`` and ``d2u`` act on rate vectors.  Minimum rates are kept
    by an active set whose members are held at ``R_k = floor_k``.  Returns
    ``(t, omega)`` with ``omega`` the floor multipliers, or ``None`` when the
    start is outside the smooth region or the active set does not settle.
    """
    red = _Reduced(m, t, f)
    S = red.S
    if S.size == 0:
        return None
    tS = t[S].copy()
    if not red.domain_ok(tS):
        return None
    n = S.size
    T_S = float(np.sum(tS))
    lo = floors[S]
    R0 = red.eval(tS, hess=False)[1]
    active = set(np.flatnonzero((lo > 0) & (R0 <= lo * (1 + 1e-9))).tolist())
    kappa = np.zeros(0)
    done = False
    for _ in range(iters):
        p, R, D, (htt, htp, hpp) = red.eval(tS)
        w = du(R)
        g = D.T @ w
        H = D.T @ (d2u(R)[:, None] * D)
        J = red.J
        H += np.diag(w * htt)
        H += np.diag(w * htp) @ J + J.T @ np.diag(w * htp)
        H += J.T @ ((w * hpp)[:, None] * J)
        A = sorted(active)
        na = len(A)
        KKT = np.zeros((n + 1 + na, n + 1 + na))
        KKT[:n, :n] = H
        KKT[:n, n] = 1.0
        KKT[n, :n] = 1.0
        if na:
            KKT[:n, n + 1:] = D[A].T
            KKT[n + 1:, :n] = D[A]
        rhs = np.concatenate([-g, [0.0], lo[A] - R[A]])
        try:
            sol = np.linalg.solve(KKT, rhs)
        except np.linalg.LinAlgError:
            return None
        d = sol[:n]
        kappa = sol[n + 1:]
        if na and np.min(kappa) < 0 and np.max(np.abs(lo[A] - R[A])) <= 1e-12 * np.max(lo[A]):
            active.discard(A[int(np.argmin(kappa))])
            continue
        dec = float(-d @ (H @ d))
        if not np.isfinite(dec):
            return None
        small = np.max(np.abs(d)) <= 1e-15 * T_S
        if small or (na == 0 and dec <= 1e-22 * max(abs(float(np.sum(u(R)))), 1e-300)):
            done = True
            break
        step = 1.0
        base_val = float(np.sum(u(R)))
        slope = float(g @ d)
        while step > 1e-12:
            cand = tS + step * d
            if red.domain_ok(cand):
                if na:
                    break
                val = float(np.sum(u(red.eval(cand, hess=False)[1])))
                if val >= base_val + 0.25 * step * slope or step * np.max(np.abs(d)) < 1e-14 * T_S:
                    break
            step *= 0.5
        else:
            return None
        Rc = red.eval(cand, hess=False)[1]
        cross = [k for k in range(n) if k not in active and lo[k] > 0 and Rc[k] < lo[k]]
        if cross:
            active.update(cross)
            continue
        tS = cand
    if not done:
        return None
    out = np.zeros(m.K)
    out[S] = tS * (T_S / np.sum(tS))
    R = red.eval(out[S], hess=False)[1]
    if np.any(R < floors[S] * (1 - 1e-12)):
        return None
    omega = np.zeros(m.K)
    if len(active):
        omega[S[sorted(active)]] = np.maximum(kappa, 0.0) if kappa.size == len(active) else 0.0
    return out, omega


def _newton_equalize(m: _Model, t, f, offsets, iters=50):
    """Solve ``R_k(t) = gamma + offset_k`` and ``sum t = T - eps`` with live recycling."""
    red = _Reduced(m, t, f)
    S = red.S
    if S.size != m.K:
        return None
    tS = t.copy()
    if not red.domain_ok(tS):
        return None
    n = S.size
    T_S = float(np.sum(tS))
    R = red.eval(tS, hess=False)[1]
    gamma = float(np.min(R - offsets))

    def resid(tv, gv):
        Rv = red.eval(tv, hess=False)[1]
        return np.concatenate([Rv - gv - offsets, [np.sum(tv) - T_S]])

    F = resid(tS, gamma)
    for _ in range(iters):
        scale = max(abs(gamma), 1.0)
        if np.max(np.abs(F[:n])) <= 1e-13 * scale and abs(F[n]) <= 1e-15 * T_S:
            break
        _, _, D, _ = red.eval(tS, hess=False)
        Jac = np.zeros((n + 1, n + 1))
        Jac[:n, :n] = D
        Jac[:n, n] = -1.0
        Jac[n, :n] = 1.0
        try:
            d = np.linalg.solve(Jac, -F)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        nrm = np.linalg.norm(F)
        while step > 1e-12:
            ct, cg = tS + step * d[:n], gamma + step * d[n]
            if red.domain_ok(ct):
                Fc = resid(ct, cg)
                if np.linalg.norm(Fc) <= (1 - 1e-4 * step) * nrm or step * np.max(np.abs(d[:n])) < 1e-15 * T_S:
                    break
            step *= 0.5
        else:
            return None
        tS, gamma, F = ct, cg, Fc
    else:
        return None
    # Equal rates are optimal only while every sensor still gains from time.
    _, R, D, _ = red.eval(tS, hess=False)
    lam6 = _epigraph_weights(D)
    if lam6 is None or np.any(lam6 < -1e-9):
        return None
    return tS * (T_S / np.sum(tS)), gamma


def _barrier_maxmin(m: _Model, t, f, offsets):
    """Max-min slots with live recycling when rates cannot all be equalized.

    Maximizes ``gamma + kappa * sum log(R_k - gamma - offset_k)`` over
    ``(t, gamma)`` on ``sum t = T - eps`` for a decreasing ``kappa``; every
    rate is concave in the slots, so each stage is a concave Newton solve.
    Returns ``(t, gamma, lambda6)`` or ``None``.
    """
    red = _Reduced(m, t, f)
    S = red.S
    if S.size != m.K:
        return None
    tS = t.copy()
    if not red.domain_ok(tS):
        return None
    n = m.K
    T_S = float(np.sum(tS))
    R = red.eval(tS, hess=False)[1]
    scale = max(float(np.max(np.abs(R))), 1.0)
    gamma = float(np.min(R - offsets)) - 1e-3 * scale
    kappa = 1e-2 * scale

    def phi(tv, gv, kap):
        if not red.domain_ok(tv):
            return -math.inf
        sl = red.eval(tv, hess=False)[1] - gv - offsets
        if np.any(sl <= 0):
            return -math.inf
        return gv + kap * float(np.sum(np.log(sl)))

    while True:
        for _ in range(100):
            _, R, D, (htt, htp, hpp) = red.eval(tS)
            sl = R - gamma - offsets
            inv = 1.0 / sl
            w = kappa * inv
            J = red.J
            g = np.concatenate([D.T @ w, [1.0 - float(np.sum(w))]])
            H = np.zeros((n + 1, n + 1))
            Htt = np.diag(w * htt) + np.diag(w * htp) @ J + J.T @ np.diag(w * htp) + J.T @ ((w * hpp)[:, None] * J)
            Htt -= D.T @ ((kappa * inv ** 2)[:, None] * D)
            H[:n, :n] = Htt
            H[:n, n] = H[n, :n] = D.T @ (kappa * inv ** 2)
            H[n, n] = -kappa * float(np.sum(inv ** 2))
            KKT = np.zeros((n + 2, n + 2))
            KKT[:n + 1, :n + 1] = H
            KKT[:n, n + 1] = KKT[n + 1, :n] = 1.0
            try:
                d = np.linalg.solve(KKT, np.concatenate([-g, [0.0]]))[:n + 1]
            except np.linalg.LinAlgError:
                return None
            dec = float(-d @ (H @ d))
            if not np.isfinite(dec):
                return None
            if dec <= 1e-24 * scale:
                break
            base = phi(tS, gamma, kappa)
            step = 1.0
            while step > 1e-14:
                ct, cg = tS + step * d[:n], gamma + step * d[n]
                if phi(ct, cg, kappa) >= base + 0.25 * step * float(g @ d):
                    break
                step *= 0.5
            else:
                break
            tS, gamma = ct, cg
        if kappa * n <= 1e-14 * scale:
            break
        kappa *= 0.1
    R = red.eval(tS, hess=False)[1]
    lam6 = kappa / (R - gamma - offsets)
    tS = tS * (T_S / np.sum(tS))
    R = red.eval(tS, hess=False)[1]
    return tS, float(np.min(R - offsets)), lam6 / np.sum(lam6)


def _epigraph_weights(D, total=1.0):
    """Weights ``v >= 0`` with ``D^T v`` constant across sensors and ``sum v = total``.

    ``D`` is the Jacobian of the rates with respect to the slots; the
    condition is the slot stationarity of a weighted sum of rates.
    """
    n = D.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = D.T
    A[:n, n] = -1.0
    A[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = total
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    v = sol[:n]
    return v if np.all(np.isfinite(v)) else None


# --------------------------------------------------------------------------
# regimes

class _Regime:
    name = ""

    def __init__(self, m: _Model):
        self.m = m

    def objective(self, R) -> float:
        raise NotImplementedError


class _ZF(_Regime):
    name = "ZF"

    def __init__(self, m, floors):
        super().__init__(m)
        self.floors = floors
        self.boost = np.zeros(m.K)  # omega5 on sensors held at their floor

    def objective(self, R):
        return float(np.sum(R))

    def weights(self, t, pbar, f):
        return 1.0 + self.boost

    def weight_fn(self, k, R):
        return 1.0

    def time_step(self, curves, credit, f):
        t, lam, at_floor = _time_weighted(self.m, curves, credit, self.weight_fn, self.floors)
        polished = self._polish(t, f)
        if polished is not None:
            t, self.boost = polished
            return t
        self._record_floor(curves, t, lam, credit, at_floor, lambda k: 1.0)
        return t

    def _polish(self, t, f):
        return _newton_weighted(self.m, t, f, lambda R: R, np.ones_like, np.zeros_like, self.floors)

    def _record_floor(self, curves, t, lam, credit, at_floor, base):
        boost = np.zeros(self.m.K)
        for k in np.flatnonzero(at_floor):
            d = curves[k].dR(t[k])
            if d > 0:
                boost[k] = max((lam + curves[k].a * credit[k]) / d - base(k), 0.0)
        self.boost = boost


class _CF(_ZF):
    name = "CF"

    def __init__(self, m, floors, alpha, R_ref):
        super().__init__(m, floors)
        self.alpha = alpha
        self.R_ref = R_ref

    def objective(self, R):
        return fairness.total_utility(self.alpha, R)

    def weights(self, t, pbar, f):
        R = self.m.rates(t, pbar, f)
        return (R / self.R_ref) ** (-self.alpha) + self.boost

    def weight_fn(self, k, R):
        return (R / self.R_ref) ** (-self.alpha)

    def time_step(self, curves, credit, f):
        t, lam, at_floor = _time_weighted(self.m, curves, credit, self.weight_fn, self.floors)
        polished = self._polish(t, f)
        if polished is not None:
            t, omega = polished
            self.boost = omega * self.R_ref
            return t
        Rt = np.array([cv.R(tk) for cv, tk in zip(curves, t)])
        self._record_floor(curves, t, lam, credit, at_floor, lambda k: self.weight_fn(k, Rt[k]))
        return t

    def _polish(self, t, f):
        a, ref = self.alpha, self.R_ref
        return _newton_weighted(
            self.m, t, f,
            lambda R: fairness.utility(a, R / ref),
            lambda R: (R / ref) ** (-a) / ref,
            lambda R: -a * (R / ref) ** (-a - 1.0) / ref ** 2,
            self.floors)


class _MM(_Regime):
    name = "MM"

    def __init__(self, m, offsets):
        super().__init__(m)
        self.offsets = offsets
        self.lam6 = np.full(m.K, 1.0 / m.K)
        self.gamma = None

    def objective(self, R):
        return float(np.min(R - self.offsets))

    def weights(self, t, pbar, f):
        return self.lam6

    def freq_weights(self):
        # Sensors above the max-min level carry no epigraph weight; a small
        # tie-break keeps their CPUs productive instead of idling them.
        return self.lam6 + 1e-3 * float(np.max(self.lam6))

    def time_step(self, curves, credit, f):
        t, g = _equalize(curves, self.offsets, self.m.T_eff, range(self.m.K))
        polished = _newton_equalize(self.m, t, f, self.offsets)
        if polished is not None:
            t, g = polished
        else:
            out = _barrier_maxmin(self.m, t, f, self.offsets)
            if out is not None:
                t, g, _ = out
        self.gamma = g
        return t

    def update_weights(self, t, pbar, f):
        lam6 = _maxmin_weights(self.m, t, pbar, f)
        if lam6 is not None:
            self.lam6 = lam6


def _maxmin_weights(m: _Model, t, pbar, f):
    """Epigraph multipliers ``lambda6`` (summing to one) at a max-min point.

    Solves ``lambda6_k B f_t(x_k) - a_k mu_k(lambda6) = nu`` for all sensors
    together with the normalization; ``mu`` is linear in ``lambda6``.
    """
    K = m.K
    x = m.snr(t, pbar)
    rp = m.bits_per_joule(t, pbar)
    active = t > 0
    G = m.G * active[:, None]
    Minv = np.linalg.inv(np.eye(K) - m.eta * G)
    mu_of = Minv * rp[None, :]  # mu = mu_of @ lam6
    A = np.zeros((K + 1, K + 1))
    A[:K, :K] = np.diag(m.B * np.array([_ft(v) for v in x])) - m.a[:, None] * mu_of
    A[:K, K] = -1.0
    A[K, :K] = 1.0
    rhs = np.zeros(K + 1)
    rhs[K] = 1.0
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    lam6 = sol[:K]
    if not np.all(np.isfinite(lam6)):
        return None
    return lam6


# --------------------------------------------------------------------------
# engine

def _initial(m: _Model):
    K = m.K
    t = np.full(K, m.T_eff / K)
    f = m.fcap / 2.0
    ps = m.ps_energy(t)
    need = m.cpu_e * f ** 3
    first = np.maximum(ps - need, 0.0)
    budget = ps + m.recycled(first) - need
    pbar = 0.5 * np.maximum(budget, 0.0)
    return t, pbar, f


def _run(m: _Model, regime, opts: SolverOptions):
    t, pbar, f = _initial(m)
    R = m.rates(t, pbar, f)
    obj = regime.objective(R)
    trace = [obj]
    calm = 0
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        w = regime.weights(t, pbar, f)
        mu, net = m.prices(t, pbar, f, w)
        credit = mu - net
        if hasattr(regime, "freq_weights"):
            wf = regime.freq_weights()
            f_new = m.freq(wf, m.prices(t, pbar, f, wf)[0], pbar)
        else:
            f_new = m.freq(w, mu, pbar)
        curves = _curves(m, pbar, f_new)
        t_new = regime.time_step(curves, credit, f_new)
        p_new, f_new = m.fill(t_new, f_new)
        R_new = m.rates(t_new, p_new, f_new)
        obj_new = regime.objective(R_new)
        if obj_new < obj - 1e-13 * abs(obj):
            t_new, p_new, f_new, obj_new = _line_search(m, regime, t, t_new, f_new, obj, opts)
        step = float(np.max(np.abs(t_new - t)))
        change = abs(obj_new - obj) / max(abs(obj), 1e-300)
        t, pbar, f, obj = t_new, p_new, f_new, obj_new
        trace.append(obj)
        if isinstance(regime, _MM):
            regime.update_weights(t, pbar, f)
        calm = calm + 1 if change < opts.tol else 0
        if calm >= 2 and step <= opts.step_tol * m.T_eff:
            converged = True
            break
    return t, pbar, f, trace, it, converged


def _line_search(m, regime, t0, t1, f1, obj0, opts):
    """Golden-section search on the segment between two slot vectors."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0

    def value(sv):
        ts = t0 + sv * (t1 - t0)
        ps, fs = m.fill(ts, f1)
        return regime.objective(m.rates(ts, ps, fs)), ts, ps, fs

    lo, hi = 0.0, 1.0
    c, d = hi - gr * (hi - lo), lo + gr * (hi - lo)
    vc, vd = value(c), value(d)
    for _ in range(opts.line_search_iters):
        if vc[0] >= vd[0]:
            hi, d, vd = d, c, vc
            c = hi - gr * (hi - lo)
            vc = value(c)
        else:
            lo, c, vc = c, d, vd
            d = lo + gr * (hi - lo)
            vd = value(d)
    best = max((vc, vd, value(0.0)), key=lambda v: v[0])
    if best[0] < obj0:
        # Keep the previous slots; the frequency update alone cannot lose.
        best = value(0.0)
    return best[1], best[2], best[3], best[0]


# --------------------------------------------------------------------------
# duals and audit

def _duals(m: _Model, regime, t, pbar, f) -> DualState:
    """Multipliers at a point, in the families of the chosen regime."""
    K = m.K
    w = np.asarray(regime.weights(t, pbar, f), dtype=float) * np.ones(K)
    mu, net = m.prices(t, pbar, f, w)
    x = m.snr(t, pbar)
    ftx = m.B * np.array([_ft(v) for v in x])
    active = t > 0
    slot_val = w * ftx - m.a * mu
    lam = float(np.mean(slot_val[active])) if np.any(active) else 0.0
    time_mult = lam + float(np.sum(mu * m.a))
    ps_val = m.eta * (np.sum(mu * m.h_gain) - mu * m.h_gain)
    at_cap = f >= m.fcap * (1 - 1e-12)
    cpu_gap = w * m.bits_per_hz - 3.0 * mu * m.cpu_e * f ** 2
    f_mult = np.where(at_cap, np.maximum(cpu_gap, 0.0), 0.0)
    zero_p = active & (pbar <= 0)
    p_mult = np.where(zero_p, np.maximum(net - w * m.B * m.c / LN2, 0.0), 0.0)
    scale = 1.0
    if regime.name == "CF":
        scale = regime.R_ref ** (-regime.alpha)
    boost = getattr(regime, "boost", np.zeros(K)) * scale
    sc = lambda v: np.asarray(v, dtype=float) * scale  # noqa: E731
    if regime.name == "ZF":
        time_d = {"omega1": ps_val, "omega2": time_mult, "omega3": mu, "omega4": f_mult, "omega5": boost}
        power_d = {"mu1": ps_val, "mu2": net, "mu3": boost, "mu4": np.zeros(K), "mu5": p_mult}
    elif regime.name == "CF":
        z6 = sc(w)
        time_d = {"zeta1": sc(ps_val), "zeta2": time_mult * scale, "zeta3": sc(mu), "zeta4": sc(f_mult),
                  "zeta5": boost, "zeta6": z6}
        power_d = {"theta1": sc(ps_val), "theta2": sc(net), "theta3": boost, "theta4": z6,
                   "theta5": sc(ps_val), "theta6": sc(p_mult)}
    else:
        time_d = {"lambda1": ps_val, "lambda2": time_mult, "lambda3": mu, "lambda4": f_mult,
                  "lambda5": np.zeros(K), "lambda6": w.copy()}
        power_d = {"varepsilon1": ps_val, "varepsilon2": net, "varepsilon3": np.zeros(K),
                   "varepsilon4": ps_val, "varepsilon5": p_mult, "varepsilon6": w.copy()}
    return DualState(regime=regime.name, time=time_d, power=power_d, energy_price=sc(mu), scale=scale)


_FAMILIES = {
    "ZF": ("omega", "mu"),
    "CF": ("zeta", "theta"),
    "MM": ("lambda", "varepsilon"),
}


def kkt_residuals(s: Scenario, ch: ChannelRealization, result: SolverResult) -> Dict[str, float]:
    """Scaled residuals of the stationarity conditions at a returned point.

    Keys: ``time`` (slot stationarity; every active sensor must share the
    time multiplier), ``cpu`` (frequency stationarity below the cap),
    ``power`` (offloading-energy stationarity with recycling credit),
    ``dual_sign`` (most negative multiplier, relative), and for max-min
    ``normalization`` and ``complementarity`` of the epigraph multipliers.
    """
    d = result.duals
    if d is None:
        raise ValueError("result carries no dual state")
    tf, pf = _FAMILIES[d.regime]
    a = result.allocation
    m = _Model(s, ch, local=bool(np.any(a.f > 0)) or result.solver != "fcoa")
    t, pbar, f = a.t, a.pbar, a.f
    K = m.K
    one = np.ones(K)
    w = np.asarray(d.time[f"{tf}6"] if d.regime != "ZF" else 1.0 + d.time["omega5"], float) * one
    if d.regime == "CF":
        w = w
    mu = d.time[f"{tf}3"] * one
    x = m.snr(t, pbar)
    ftx = m.B * np.array([_ft(v) for v in x])
    active = t > 0
    ps_val = d.time[f"{tf}1"] * one
    lhs = w * ftx + ps_val * m.P_max - d.time[f"{tf}2"]
    ref = abs(d.time[f"{tf}2"]) or 1.0
    out = {"time": float(np.max(np.abs(lhs[active])) / ref) if np.any(active) else 0.0}
    below = active & (f < m.fcap * (1 - 1e-12)) & (f > 0)
    cpu = w * m.bits_per_hz - 3.0 * mu * m.cpu_e * f ** 2 - d.time[f"{tf}4"] * below
    cpu_ref = np.max(w * m.bits_per_hz) or 1.0
    out["cpu"] = float(np.max(np.abs(cpu[below])) / cpu_ref) if np.any(below) else 0.0
    rp = m.bits_per_joule(t, pbar)
    G = m.G * active[:, None]
    power = w * rp + d.power[f"{pf}5" if d.regime != "CF" else "theta6"] - mu + m.eta * (G @ mu)
    p_ref = np.max(np.abs(mu)) or 1.0
    on = active & (pbar > 0)
    out["power"] = float(np.max(np.abs(power[on])) / p_ref) if np.any(on) else 0.0
    neg = 0.0
    for fam in (d.time, d.power):
        for v in fam.values():
            arr = np.atleast_1d(np.asarray(v, float))
            mag = float(np.max(np.abs(arr))) or 1.0
            neg = max(neg, float(-np.min(arr)) / mag)
    out["dual_sign"] = max(neg, 0.0)
    if d.regime == "MM":
        lam6 = d.time["lambda6"]
        out["normalization"] = abs(float(np.sum(lam6)) - 1.0)
        eps6 = d.power["varepsilon6"]
        out["normalization"] = max(out["normalization"], abs(float(np.sum(eps6)) - 1.0))
        R = result.R
        out["complementarity"] = float(np.max(np.abs(lam6 * (R - np.min(R)))) / np.mean(R))
    return out


# --------------------------------------------------------------------------
# feasibility pre-check

def maxmin_feasibility(s: Scenario, ch: ChannelRealization, *, local: bool = True,
                       options: SolverOptions = DEFAULT_OPTIONS):
    """Best achievable ``min_k (R_k - R_min_k)`` and the allocation reaching it."""
    m = _Model(s, ch, local=local)
    reg = _MM(m, np.asarray(s.R_min, float))
    t, pbar, f, trace, it, conv = _run(m, reg, options)
    R = m.rates(t, pbar, f)
    return float(np.min(R - s.R_min)), Allocation(t, m.P_max * t, pbar, f)


def _precheck(m: _Model, s: Scenario, ch: ChannelRealization, local: bool, opts: SolverOptions):
    if not np.any(s.R_min > 0):
        return
    t, pbar, f = _initial(m)
    p2, f2 = m.fill(t, np.minimum(m.fcap, f * 2.0))
    if np.all(m.rates(t, p2, f2) >= s.R_min):
        return
    reg = _MM(m, np.asarray(s.R_min, float))
    t, pbar, f, _, _, _ = _run(m, reg, opts)
    short = s.R_min - m.rates(t, pbar, f)
    if np.max(short) > 1e-9 * max(float(np.max(s.R_min)), 1.0):
        k = int(np.argmax(short))
        raise InfeasibleScenarioError(
            f"minimum data demand cannot be met; sensor {k} falls short by {short[k]:.6g} bit",
            binding=k, shortfall=np.maximum(short, 0.0))


# --------------------------------------------------------------------------
# public solvers

def _finish(name, alpha, s, ch, m, regime, t, pbar, f, trace, it, conv, t0):
    left = m.T_eff - float(np.sum(t))
    if left > 1e-12 * m.T_eff:
        # Only degenerate instances (nothing to harvest) leave time unused;
        # extra slot time never lowers a rate and only adds PS energy.
        t = t + left / m.K
    a = Allocation(t, m.P_max * t, pbar, f)
    R = computable_bits(s, ch, a)
    orig = recover_original(a)
    duals = _duals(m, regime, t, pbar, f)
    res = SolverResult(
        solver=name, alpha=alpha, allocation=a, P=orig.P, p=orig.p, R=R,
        objective=regime.objective(R) if regime.name != "MM" else float(np.min(R)),
        jain=fairness.jain_or_nan(R), iterations=it, trace=[float(v) for v in trace],
        converged=conv, duals=duals,
        feasibility=feasibility(s, ch, a),
        info={"wall_s": time.perf_counter() - t0},
    )
    if regime.name == "CF":
        res.chi = _cf_slack(m, regime, t, pbar, f, R)
    if regime.name == "MM":
        res.gamma = float(regime.gamma)
    return res


def _cf_slack(m: _Model, regime, t, pbar, f, R):
    """Slack ``chi = (zeta6 - zeta5)^(-1/alpha)`` from slot stationarity.

    ``zeta6`` is recovered from the condition that every sensor's weighted
    marginal value of time is the same, with the weights scaled to the total
    ``sum R^-alpha``; ``chi`` reproduces the rates only at a stationary point.
    """
    chi = np.asarray(R, float).copy()
    red = _Reduced(m, t, f)
    S = red.S
    if S.size == 0:
        return chi
    D = red.eval(t[S], hess=False)[2]
    a, ref = regime.alpha, regime.R_ref
    zeta = _epigraph_weights(D, total=float(np.sum((R[S] / ref) ** (-a))))
    if zeta is None or np.any(zeta <= 0):
        raise DualInfeasibleError("zeta6 <= zeta5: slack undefined")
    chi[S] = ref * zeta ** (-1.0 / a)
    return chi


def solve_zfba(s: Scenario, ch: ChannelRealization, *, local: bool = True,
               options: SolverOptions = DEFAULT_OPTIONS, name: str = "zfba") -> SolverResult:
    """Throughput-maximizing allocation (``alpha = 0``).

    ``local=False`` pins every CPU at zero (offloading only).
    """
    t0 = time.perf_counter()
    m = _Model(s, ch, local=local)
    _precheck(m, s, ch, local, options)
    reg = _ZF(m, np.asarray(s.R_min, float))
    out = _run(m, reg, options)
    return _finish(name, 0.0, s, ch, m, reg, *out, t0)


def solve_cfba(s: Scenario, ch: ChannelRealization, alpha: float, *,
               options: SolverOptions = DEFAULT_OPTIONS) -> SolverResult:
    """Alpha-fair allocation for ``0 < alpha < inf``.

    ``chi`` in the result is the slack ``(zeta6 - zeta5)^(-1/alpha)`` of the
    last slot block; it matches the returned rates at convergence.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise ValueError("solve_cfba needs a finite alpha > 0")
    t0 = time.perf_counter()
    m = _Model(s, ch)
    _precheck(m, s, ch, True, options)
    t_i, p_i, f_i = _initial(m)
    R_ref = float(np.mean(m.rates(t_i, p_i, f_i)))
    reg = _CF(m, np.asarray(s.R_min, float), float(alpha), R_ref)
    out = _run(m, reg, options)
    return _finish("cfba", float(alpha), s, ch, m, reg, *out, t0)


def solve_mfba(s: Scenario, ch: ChannelRealization, *,
               options: SolverOptions = DEFAULT_OPTIONS) -> SolverResult:
    """Max-min fair allocation; ``gamma`` is the equalized rate of the last slot block."""
    t0 = time.perf_counter()
    m = _Model(s, ch)
    _precheck(m, s, ch, True, options)
    reg = _MM(m, np.zeros(m.K))
    out = _run(m, reg, options)
    res = _finish("mfba", math.inf, s, ch, m, reg, *out, t0)
    return res


# --------------------------------------------------------------------------
# literal closed-form blocks

def _get(fam, key, K, default=0.0):
    v = fam.get(key, default)
    return np.broadcast_to(np.asarray(v, dtype=float), (K,)).copy()


def zfba_time_freq_step(s: Scenario, ch: ChannelRealization, Pbar, pbar, duals: DualState):
    """Slot lengths and frequencies for fixed energies and multipliers.

    ``t_k = pbar_k ||g_k||^2 / (noise * f_t^{-1}((omega2 - omega1_k P_max) / ((1 + omega5_k) B)))``
    with ``omega2`` chosen so that the slots fill ``T - eps``, and
    ``f_k = sqrt(((1 + omega5_k) T / C_k - omega4_k) / (3 omega3_k T phi_k))``
    clipped to ``[0, f_max]``.  Sensors without offloading energy get no slot.
    Passing ``omega2`` in ``duals.time`` skips the search and raises
    :class:`DualInfeasibleError` when it leaves a negative marginal value.
    """
    K = s.K
    d = duals.time
    w1 = _get(d, "omega1", K)
    w3 = _get(d, "omega3", K)
    w4 = _get(d, "omega4", K)
    w5 = _get(d, "omega5", K)
    pbar = np.asarray(pbar, float)
    c = ch.ap_gain / s.noise_power
    num = (1.0 + w5) * s.T / s.C - w4
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(w3 > 0, np.sqrt(np.maximum(num, 0.0) / (3.0 * w3 * s.T * s.phi)),
                     np.where(num > 0, s.f_max, 0.0))
    f = np.clip(f, 0.0, s.f_max)

    on = pbar > 0
    base = w1 * s.P_max
    scale = (1.0 + w5) * s.B

    def slots(omega2):
        y = (omega2 - base[on]) / scale[on]
        if np.any(y < 0):
            raise DualInfeasibleError("omega2 below omega1 * P_max leaves a negative marginal value")
        with np.errstate(over="ignore", invalid="ignore"):
            x = f_t_inverse(y)
        t = np.zeros(K)
        with np.errstate(divide="ignore"):
            t[on] = np.where(x > 0, pbar[on] * c[on] / np.where(x > 0, x, 1.0), np.inf)
        return t

    if not np.any(on):
        return np.zeros(K), f
    if "omega2" in d:
        t = slots(float(np.asarray(d["omega2"])))
        return t, f
    floor = float(np.max(base[on]))
    # Slots shrink as omega2 grows; bracket in log-space above the floor.
    def excess(u):
        return float(np.sum(slots(floor + math.exp(u)))) - s.T_eff

    lo, hi = math.log(1e-12), math.log(1e12)
    while excess(lo) < 0:
        lo -= 10.0
    while excess(hi) > 0:
        hi += 10.0
    u = brentq(excess, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    t = slots(floor + math.exp(u))
    t *= s.T_eff / np.sum(t)
    return t, f


def zfba_pbar_closed_form(s: Scenario, ch: ChannelRealization, t, mu2, mu3=0.0, mu5=0.0):
    """``[(1 + mu3) B t / (ln2 (mu2 - mu5)) - t noise / ||g||^2]^+``."""
    t = np.asarray(t, float)
    mu2 = np.asarray(mu2, float) * np.ones_like(t)
    den = mu2 - mu5
    if np.any((den <= 0) & (t > 0)):
        raise DualInfeasibleError("mu2 <= mu5 leaves the offloading energy unbounded")
    g = ch.ap_gain
    with np.errstate(divide="ignore"):
        p = (1.0 + mu3) * s.B * t / (LN2 * np.where(den > 0, den, 1.0)) - t * s.noise_power / g
    return np.maximum(p, 0.0)


def implied_energy_price(s: Scenario, ch: ChannelRealization, t, pbar, mu3=0.0, mu5=0.0):
    """The ``mu2`` at which :func:`zfba_pbar_closed_form` returns ``pbar``."""
    t = np.asarray(t, float)
    pbar = np.asarray(pbar, float)
    c = ch.ap_gain / s.noise_power
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(t > 0, (1.0 + mu3) * s.B * c / (LN2 * (1.0 + c * pbar / np.where(t > 0, t, 1.0))), 0.0)
    return r + mu5


def zfba_power_step(s: Scenario, ch: ChannelRealization, t, f, duals: Optional[DualState] = None):
    """PS and offloading energies for fixed slots and frequencies.

    ``Pbar = P_max t``.  Each sensor's ``mu2`` is set where energy causality
    is tight, so ``pbar`` equals :func:`zfba_pbar_closed_form` at that price;
    recycled energy is shared through the coupled budgets.  Returns
    ``(Pbar, pbar)``.
    """
    m = _Model(s, ch)
    t = np.asarray(t, float)
    pbar, _ = m.fill(t, np.asarray(f, float))
    return m.P_max * t, pbar
