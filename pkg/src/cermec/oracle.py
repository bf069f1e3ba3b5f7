"""Generic interior-point solver for the substituted allocation problem.

This is a reference solver, deliberately unaware of the structure the
closed-form solvers exploit (tight energy budgets, saturated PS power, equal
marginal value of time).  It works on all ``4K`` variables
``(t, Pbar, pbar, f)`` and every constraint of the substituted problem,
using a primal log barrier with exact gradients and Hessians and a
backtracking Newton method per barrier stage.

Variables are scaled internally to order one: slots by ``T - eps``, PS
energies by ``P_max (T - eps)``, offloading energies by the PS energy a
sensor could harvest over the frame, and frequencies by ``f_max``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import nnls

from . import fairness
from .kernels import LN2, f_t
from .physics import Allocation, computable_bits, feasibility
from .results import InfeasibleScenarioError, SolverResult
from .scenario import ChannelRealization, Scenario, recycling_loop_gain


@dataclass(frozen=True)
class OracleConfig:
    """Barrier schedule and tolerances.

    The barrier weight starts at ``mu0`` and is multiplied by
    ``mu_factor < 1`` after each stage, so the schedule strictly decreases.
    The method stops when the duality-gap bound ``m * mu`` falls below
    ``gap_tol`` times the objective scale.
    """

    mu0: float = 1.0
    mu_factor: float = 0.1
    gap_tol: float = 1e-9
    newton_tol: float = 1e-12
    max_newton: int = 200
    max_stages: int = 40
    fd_step: float = 1e-6
    t_floor: float = 1e-9

    def __post_init__(self):
        if not (self.mu0 > 0 and 0 < self.mu_factor < 1):
            raise ValueError("barrier schedule must start positive and strictly decrease")
        for name in ("gap_tol", "newton_tol", "fd_step", "t_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_newton < 1 or self.max_stages < 1:
            raise ValueError("iteration limits must be positive")


class OracleProblem:
    """Objective, constraints and their derivatives in natural units.

    The variable vector is ``x = [t, Pbar, pbar, f]`` (``f`` omitted when
    ``local`` is false), followed by the epigraph level ``gamma`` when
    ``epigraph`` is set.  The objective is ``sum u_alpha(R_k / R_ref)`` or,
    for the epigraph form, ``gamma / R_ref``.
    """

    def __init__(self, s: Scenario, ch: ChannelRealization, alpha: float = 0.0, *,
                 epigraph: bool = False, offsets=None, local: bool = True,
                 recycling: bool = True, rmin: bool = True, R_ref: float = 1000.0,
                 t_floor: float = 1e-9):
        if not epigraph:
            fairness.utility(alpha, 1.0)  # validates alpha
        if recycling and recycling_loop_gain(s, ch) >= 1.0:
            raise ValueError("recycling loop gain >= 1: harvested energy is unbounded")
        K = s.K
        self.s, self.K, self.alpha = s, K, float(alpha)
        self.epigraph, self.local = epigraph, local
        self.offsets = np.zeros(K) if offsets is None else np.asarray(offsets, float)
        self.rmin = rmin
        self.R_ref = float(R_ref)
        self.h = ch.h_gain
        self.G = ch.ws_gain if recycling else np.zeros((K, K))
        self.c = ch.ap_gain / s.noise_power
        self.t_floor = t_floor * s.T
        self.it = np.arange(K)
        self.iP = K + np.arange(K)
        self.ip = 2 * K + np.arange(K)
        self.if_ = 3 * K + np.arange(K) if local else np.array([], dtype=int)
        self.n_alloc = 4 * K if local else 3 * K
        self.ig = self.n_alloc if epigraph else None
        self.n = self.n_alloc + (1 if epigraph else 0)
        E_ref = s.eta * s.P_max * s.T_eff * self.h
        E_ref = np.where(E_ref > 0, E_ref, 1.0)
        scale = [np.full(K, s.T_eff), np.full(K, s.P_max * s.T_eff), E_ref]
        if local:
            scale.append(np.asarray(s.f_max, float))
        if epigraph:
            scale.append(np.array([self.R_ref]))
        self.scale = np.concatenate(scale)
        self.E_ref = E_ref

    # ------------------------------------------------------------------
    def split(self, x):
        K = self.K
        t, P, p = x[:K], x[K:2 * K], x[2 * K:3 * K]
        f = x[3 * K:4 * K] if self.local else np.zeros(K)
        g = x[self.ig] if self.epigraph else None
        return t, P, p, f, g

    def pack(self, a: Allocation, gamma: Optional[float] = None):
        parts = [a.t, a.Pbar, a.pbar] + ([a.f] if self.local else [])
        if self.epigraph:
            parts.append(np.array([gamma]))
        return np.concatenate(parts).astype(float)

    def allocation(self, x) -> Allocation:
        t, P, p, f, _ = self.split(x)
        return Allocation(t, P, p, f)

    # ------------------------------------------------------------------
    def rate_parts(self, x):
        """Rates and their first and second derivatives per sensor."""
        s = self.s
        t, P, p, f, _ = self.split(x)
        xs = self.c * p / t
        R = s.T * f / s.C + t * s.B * np.log1p(xs) / LN2
        dRt = s.B * f_t(xs)
        dRp = s.B * self.c / (LN2 * (1.0 + xs))
        dRf = s.T / s.C
        q = s.B / (LN2 * t * (1.0 + xs) ** 2)
        return R, (dRt, dRp, dRf), (-q * xs * xs, q * self.c * xs, -q * self.c ** 2)

    def _rate_grad(self, k, d1):
        g = np.zeros(self.n)
        g[self.it[k]] = d1[0][k]
        g[self.ip[k]] = d1[1][k]
        if self.local:
            g[self.if_[k]] = d1[2][k]
        return g

    def _rate_hess(self, k, d2, H, wgt):
        i, j = self.it[k], self.ip[k]
        H[i, i] += wgt * d2[0][k]
        H[i, j] += wgt * d2[1][k]
        H[j, i] += wgt * d2[1][k]
        H[j, j] += wgt * d2[2][k]

    def objective(self, x) -> float:
        if self.epigraph:
            return float(x[self.ig]) / self.R_ref
        R = self.rate_parts(x)[0]
        return float(np.sum(fairness.utility(self.alpha, R / self.R_ref)))

    def gradient(self, x):
        """Gradient of :meth:`objective` with respect to ``x``."""
        g = np.zeros(self.n)
        if self.epigraph:
            g[self.ig] = 1.0 / self.R_ref
            return g
        R, d1, _ = self.rate_parts(x)
        w = (R / self.R_ref) ** (-self.alpha) / self.R_ref
        for k in range(self.K):
            g += w[k] * self._rate_grad(k, d1)
        return g

    def hessian(self, x):
        H = np.zeros((self.n, self.n))
        if self.epigraph:
            return H
        R, d1, d2 = self.rate_parts(x)
        w = (R / self.R_ref) ** (-self.alpha) / self.R_ref
        w2 = -self.alpha * (R / self.R_ref) ** (-self.alpha - 1.0) / self.R_ref ** 2
        for k in range(self.K):
            gk = self._rate_grad(k, d1)
            H += w2[k] * np.outer(gk, gk)
            self._rate_hess(k, d2, H, w[k])
        return H

    # ------------------------------------------------------------------
    def _build_static(self):
        """Linear constraint rows and the constant part of the energy rows."""
        s, K, n = self.s, self.K, self.n
        rows, rhs = [], []

        def lin(idx_coef, b):
            r = np.zeros(n)
            for i, v in idx_coef:
                r[i] += v
            rows.append(r)
            rhs.append(b)

        for k in range(K):
            lin([(self.iP[k], 1.0), (self.it[k], -s.P_max)], 0.0)
        lin([(i, 1.0) for i in self.it], s.T_eff)
        for k in range(K):
            lin([(self.it[k], -1.0)], -self.t_floor)
            lin([(self.iP[k], -1.0)], 0.0)
            lin([(self.ip[k], -1.0)], 0.0)
            if self.local:
                lin([(self.if_[k], 1.0)], s.f_max[k])
                lin([(self.if_[k], -1.0)], 0.0)
        self.A_lin = np.array(rows)
        self.b_lin = np.array(rhs)
        E = np.zeros((K, n))
        for k in range(K):
            E[k, self.iP] = -s.eta * self.h[k]
            E[k, self.iP[k]] = 0.0
            E[k, self.ip] = -s.eta * self.G[:, k]
            E[k, self.ip[k]] += 1.0
        self.E_lin = E
        self.cpu_coef = s.T * s.phi
        rate_rows = []
        if self.rmin:
            rate_rows += [(k, "min") for k in range(K) if s.R_min[k] > 0]
        if self.epigraph:
            rate_rows += [(k, "epi") for k in range(K)]
        self.rate_rows = rate_rows
        self.rate_k = np.array([k for k, _ in rate_rows], dtype=int)
        self.rate_epi = np.array([kind == "epi" for _, kind in rate_rows], dtype=bool)

    def constraints(self, x, hess: bool = True):
        """All constraints ``g(x) <= 0``.

        Returns ``(g, Jacobian, hess_fn)`` where ``hess_fn(w)`` gives
        ``sum_i w_i * Hessian(g_i)`` (``None`` when ``hess`` is false).
        """
        if not hasattr(self, "A_lin"):
            self._build_static()
        s, K, n = self.s, self.K, self.n
        t, P, p, f, gam = self.split(x)
        g_lin = self.A_lin @ x - self.b_lin
        g_E = self.E_lin @ x
        J_E = self.E_lin.copy()
        if self.local:
            g_E = g_E + self.cpu_coef * f ** 3
            J_E[np.arange(K), self.if_] = 3.0 * self.cpu_coef * f ** 2
        parts_g = [g_lin, g_E]
        parts_J = [self.A_lin, J_E]
        nr = self.rate_k.size
        d2 = None
        if nr:
            R, d1, d2 = self.rate_parts(x)
            ks = self.rate_k
            J_R = np.zeros((nr, n))
            r = np.arange(nr)
            J_R[r, self.it[ks]] = -d1[0][ks]
            J_R[r, self.ip[ks]] = -d1[1][ks]
            if self.local:
                J_R[r, self.if_[ks]] = -np.broadcast_to(d1[2], (K,))[ks]
            g_R = -R[ks] + np.where(self.rate_epi, 0.0, s.R_min[ks])
            if self.epigraph:
                g_R = g_R + np.where(self.rate_epi, gam + self.offsets[ks], 0.0)
                J_R[self.rate_epi, self.ig] = 1.0
            parts_g.append(g_R)
            parts_J.append(J_R)
        g = np.concatenate(parts_g)
        J = np.vstack(parts_J)
        if not hess:
            return g, J, None
        m_lin = g_lin.size

        def hess_fn(w):
            H = np.zeros((n, n))
            if self.local:
                wE = w[m_lin:m_lin + K]
                H[self.if_, self.if_] += wE * 6.0 * self.cpu_coef * f
            if nr:
                wR = w[m_lin + K:]
                ks = self.rate_k
                # Each rate row is -R_k, so its Hessian is minus the rate Hessian.
                np.add.at(H, (self.it[ks], self.it[ks]), -wR * d2[0][ks])
                np.add.at(H, (self.it[ks], self.ip[ks]), -wR * d2[1][ks])
                np.add.at(H, (self.ip[ks], self.it[ks]), -wR * d2[1][ks])
                np.add.at(H, (self.ip[ks], self.ip[ks]), -wR * d2[2][ks])
            return H

        return g, J, hess_fn

    def strictly_feasible(self, x) -> bool:
        t = self.split(x)[0]
        if np.any(t <= 0):
            return False
        return bool(np.all(self.constraints(x, hess=False)[0] < 0))


# ----------------------------------------------------------------------
# starting points

def random_interior_point(s: Scenario, ch: ChannelRealization, rng: np.random.Generator,
                          *, local: bool = True) -> Allocation:
    """A random allocation strictly inside every constraint except minimum rates."""
    K = s.K
    frac = rng.dirichlet(np.ones(K))
    t = s.T_eff * rng.uniform(0.5, 0.99) * (0.9 * frac + 0.1 / K)
    P = rng.uniform(0.1, 0.99, K) * s.P_max * t
    ps = s.eta * ch.h_gain * (np.sum(P) - P)
    if local:
        f = rng.uniform(0.05, 0.5, K) * np.minimum(s.f_max, np.cbrt(0.25 * ps / (s.T * s.phi)))
    else:
        f = np.zeros(K)
    p = rng.uniform(0.05, 0.5, K) * ps
    return Allocation(t, P, p, f)


def _default_start(s: Scenario, ch: ChannelRealization, local: bool) -> Allocation:
    K = s.K
    t = np.full(K, 0.99 * s.T_eff / K)
    P = 0.9 * s.P_max * t
    ps = s.eta * ch.h_gain * (np.sum(P) - P)
    f = np.minimum(0.5 * s.f_max, np.cbrt(0.25 * ps / (s.T * s.phi))) if local else np.zeros(K)
    return Allocation(t, P, 0.25 * ps, f)


# ----------------------------------------------------------------------
# barrier method



@dataclass
class _BarrierOutcome:
    x: np.ndarray
    mu: float
    stages: int
    newton_steps: int
    kkt: float
    gap: float
    ok: bool


def _barrier(prob: OracleProblem, x0, cfg: OracleConfig, stop=None) -> _BarrierOutcome:
    """Minimize ``-obj/mu - sum log(-g)`` for a decreasing barrier weight ``mu``."""
    sc = prob.scale
    z = x0 / sc
    mu = cfg.mu0
    steps = 0
    ok = False
    m = None
    stage = 0

    def psi(zv, muv):
        xv = zv * sc
        t = prob.split(xv)[0]
        if np.any(t <= 0):
            return math.inf
        gv = prob.constraints(xv, hess=False)[0]
        if np.any(gv >= 0):
            return math.inf
        return -prob.objective(xv) / muv - float(np.sum(np.log(-gv)))

    for stage in range(1, cfg.max_stages + 1):
        history = []
        for _ in range(cfg.max_newton):
            x = z * sc
            gv, Jg, hess_fn = prob.constraints(x)
            m = gv.size
            inv = 1.0 / (-gv)
            grad = -prob.gradient(x) / mu + Jg.T @ inv
            H = -prob.hessian(x) / mu + (Jg.T * inv ** 2) @ Jg + hess_fn(inv)
            grad_z = grad * sc
            H_z = H * np.outer(sc, sc)
            eq = 1.0 / np.sqrt(np.maximum(np.abs(np.diag(H_z)), 1e-300))
            try:
                d = -eq * np.linalg.solve(H_z * np.outer(eq, eq), grad_z * eq)
            except np.linalg.LinAlgError:
                d = -np.linalg.lstsq(H_z, grad_z, rcond=None)[0]
            dec = float(-grad_z @ d)
            steps += 1
            if not np.isfinite(dec) or dec / 2.0 <= cfg.newton_tol:
                break
            history.append(dec)
            if len(history) > 8 and dec > 0.5 * min(history[:-8]):
                break  # stalled at rounding level
            base = psi(z, mu)
            step = 1.0
            # Close to the center the decrement is below the rounding of psi,
            # so only strict feasibility is checked for a full Newton step.
            quadratic = dec < 1e-3
            while step > 1e-16:
                val = psi(z + step * d, mu)
                if quadratic and math.isfinite(val):
                    break
                if val <= base - 0.25 * step * dec:
                    break
                step *= 0.5
            else:
                break
            z = z + step * d
        if stop is not None and stop(z * sc):
            ok = True
            break
        obj_scale = max(abs(prob.objective(z * sc)), 1.0)
        if m * mu <= cfg.gap_tol * obj_scale:
            ok = True
            break
        mu *= cfg.mu_factor
    x = z * sc
    gv, Jg, _ = prob.constraints(x, hess=False)
    lam = mu / (-gv)
    gobj = prob.gradient(x)
    # Crossover: refit nonnegative multipliers on the constraints the barrier
    # marks as active, which removes the centering error from the residual.
    Js = Jg * sc
    weight = lam * np.linalg.norm(Js, axis=1)
    act = weight > 1e-6 * max(float(np.max(np.abs(gobj * sc))), 1e-300)
    if np.any(act):
        colnorm = np.linalg.norm(Js[act], axis=1)
        y, _ = nnls((Js[act] / colnorm[:, None]).T, gobj * sc, maxiter=50 * int(act.sum()) + 100)
        refit = np.zeros_like(lam)
        refit[act] = y / colnorm
        lam = refit
    resid = (gobj - Jg.T @ lam) * sc
    size = float(np.max((np.abs(gobj) + np.abs(Jg).T @ lam) * sc))
    comp = float(np.sum(np.abs(lam * gv))) / max(abs(prob.objective(x)), 1.0)
    kkt = max(float(np.max(np.abs(resid))) / max(size, 1e-300), comp)
    gap = float(gv.size * mu / max(abs(prob.objective(x)), 1.0))
    return _BarrierOutcome(x, mu, stage, steps, kkt, gap, ok)


def _trivial(s, ch, name, alpha, t0):
    a = Allocation.zeros(s.K)
    R = computable_bits(s, ch, a)
    return SolverResult(solver=name, alpha=alpha, allocation=a, P=np.zeros(s.K), p=np.zeros(s.K),
                        R=R, objective=float(np.min(R)) if math.isinf(alpha) else float(np.sum(R)),
                        jain=math.nan, iterations=0, trace=[], converged=True,
                        feasibility=feasibility(s, ch, a),
                        info={"wall_s": time.perf_counter() - t0, "kkt_residual": 0.0, "duality_gap": 0.0})


def _phase_one(s, ch, x_alloc: Allocation, cfg, local, recycling):
    """Reach ``R > R_min`` by maximizing ``min_k (R_k - R_min_k)`` until it turns positive."""
    prob = OracleProblem(s, ch, epigraph=True, offsets=s.R_min, local=local, recycling=recycling,
                         rmin=False, t_floor=cfg.t_floor)
    R = computable_bits(s, ch, x_alloc)
    gamma0 = float(np.min(R - s.R_min)) - 0.05 * max(float(np.mean(R)), 1.0)
    x0 = prob.pack(x_alloc, gamma0)
    out = _barrier(prob, x0, cfg, stop=lambda x: prob.split(x)[4] > 0)
    gam = prob.split(out.x)[4]
    if not gam > 0:
        a = prob.allocation(out.x)
        short = s.R_min - computable_bits(s, ch, a)
        k = int(np.argmax(short))
        raise InfeasibleScenarioError(
            f"minimum data demand cannot be met; sensor {k} falls short by {short[k]:.6g} bit",
            binding=k, shortfall=np.maximum(short, 0.0))
    return prob.allocation(out.x)


def _solve(s, ch, alpha, *, epigraph, config, start, local, recycling, name):
    t0 = time.perf_counter()
    cfg = config or OracleConfig()
    if s.K == 1 or not np.any(ch.h_gain > 0):
        # No sensor can harvest anything: only the empty allocation is feasible.
        res = _trivial(s, ch, name, alpha, t0)
        if np.any(res.R < s.R_min * (1 - 1e-9)):
            raise InfeasibleScenarioError("no harvestable energy for the minimum data demand",
                                          binding=int(np.argmax(s.R_min - res.R)))
        return res
    a0 = start if start is not None else _default_start(s, ch, local)
    R0 = computable_bits(s, ch, a0)
    R_ref = max(float(np.mean(R0)), 1.0)
    base = OracleProblem(s, ch, 0.0, local=local, recycling=recycling, rmin=False, t_floor=cfg.t_floor)
    if not base.strictly_feasible(base.pack(a0)):
        raise ValueError("start point is not strictly inside the constraints")
    if np.any(s.R_min > 0) and np.any(R0 <= s.R_min):
        a0 = _phase_one(s, ch, a0, cfg, local, recycling)
        R0 = computable_bits(s, ch, a0)
    prob = OracleProblem(s, ch, alpha if not epigraph else 0.0, epigraph=epigraph, local=local,
                         recycling=recycling, R_ref=R_ref, t_floor=cfg.t_floor)
    gamma0 = float(np.min(R0)) - 0.05 * R_ref if epigraph else None
    out = _barrier(prob, prob.pack(a0, gamma0), cfg)
    a = prob.allocation(out.x)
    R = computable_bits(s, ch, a)
    t = a.t
    P = np.where(t > 0, a.Pbar / t, 0.0)
    p = np.where(t > 0, a.pbar / t, 0.0)
    obj = float(np.min(R)) if epigraph else fairness.total_utility(alpha, R)
    res = SolverResult(
        solver=name, alpha=math.inf if epigraph else float(alpha), allocation=a, P=P, p=p, R=R,
        objective=obj, jain=fairness.jain_or_nan(R), iterations=out.newton_steps, trace=[obj],
        converged=out.ok and out.kkt <= 1e-7, feasibility=feasibility(s, ch, a),
        info={"wall_s": time.perf_counter() - t0, "kkt_residual": out.kkt,
              "duality_gap": out.gap, "stages": out.stages},
    )
    if epigraph:
        res.gamma = float(prob.split(out.x)[4])
    return res


def solve_generic(s: Scenario, ch: ChannelRealization, alpha: float, *,
                  config: Optional[OracleConfig] = None, start: Optional[Allocation] = None,
                  local: bool = True, recycling: bool = True) -> SolverResult:
    """Maximize ``sum u_alpha(R_k)`` for finite ``alpha >= 0`` by the barrier method.

    ``start`` must be strictly feasible apart from the minimum rates (see
    :func:`random_interior_point`).  ``local=False`` fixes all CPUs at zero
    and ``recycling=False`` removes the recycled harvesting term.
    ``info`` reports the scaled KKT residual and the relative duality gap.
    """
    if math.isinf(alpha):
        return solve_maxmin_epigraph(s, ch, config=config, start=start, local=local, recycling=recycling)
    return _solve(s, ch, alpha, epigraph=False, config=config, start=start, local=local,
                  recycling=recycling, name="oracle")


def solve_maxmin_epigraph(s: Scenario, ch: ChannelRealization, *,
                          config: Optional[OracleConfig] = None, start: Optional[Allocation] = None,
                          local: bool = True, recycling: bool = True) -> SolverResult:
    """Maximize ``gamma`` subject to ``R_k >= gamma`` and all allocation constraints."""
    return _solve(s, ch, math.inf, epigraph=True, config=config, start=start, local=local,
                  recycling=recycling, name="oracle_maxmin")
