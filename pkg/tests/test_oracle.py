import math

import numpy as np
import pytest

from cermec.kkt_solvers import solve_cfba, solve_mfba, solve_zfba
from cermec.physics import Allocation
from cermec.oracle import (OracleConfig, OracleProblem, random_interior_point, solve_generic,
                           solve_maxmin_epigraph)

from conftest import instance


def central_gradient(fn, x, steps):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        g[i] = (fn(x + e) - fn(x - e)) / (2 * steps[i])
    return g


class TestConfig:
    def test_defaults(self):
        c = OracleConfig()
        assert c.mu_factor < 1 and c.gap_tol > 0

    @pytest.mark.parametrize("kw", [{"mu0": 0.0}, {"mu_factor": 1.0}, {"mu_factor": 0.0},
                                    {"gap_tol": 0.0}, {"max_newton": 0}, {"t_floor": -1.0}])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            OracleConfig(**kw)


class TestDerivatives:
    @pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 2.0])
    def test_gradient_central_differences(self, alpha, rng):
        s, ch = instance(2)
        prob = OracleProblem(s, ch, alpha, R_ref=1000.0)
        worst = 0.0
        for _ in range(25):
            x = prob.pack(random_interior_point(s, ch, rng))
            g = prob.gradient(x)
            fd = central_gradient(prob.objective, x, 1e-6 * prob.scale)
            sc = prob.scale
            worst = max(worst, np.max(np.abs((g - fd) * sc)) / np.max(np.abs(g * sc)))
        assert worst <= 1e-5

    def test_hessian_matches_gradient_differences(self, rng):
        s, ch = instance(3)
        prob = OracleProblem(s, ch, 1.0)
        x = prob.pack(random_interior_point(s, ch, rng))
        H = prob.hessian(x)
        sc = prob.scale
        for i in range(prob.n):
            e = np.zeros(prob.n)
            e[i] = 1e-6 * sc[i]
            col = (prob.gradient(x + e) - prob.gradient(x - e)) / (2 * e[i])
            np.testing.assert_allclose(H[:, i] * sc * sc[i], col * sc * sc[i],
                                       atol=1e-5 * np.max(np.abs(H * np.outer(sc, sc))))

    def test_constraint_jacobian(self, rng):
        s, ch = instance(4)
        prob = OracleProblem(s, ch, 0.0)
        x = prob.pack(random_interior_point(s, ch, rng))
        g, J, _ = prob.constraints(x, hess=False)
        sc = prob.scale
        for i in range(prob.n):
            e = np.zeros(prob.n)
            e[i] = 1e-6 * sc[i]
            col = (prob.constraints(x + e, hess=False)[0] - prob.constraints(x - e, hess=False)[0]) / (2 * e[i])
            np.testing.assert_allclose(J[:, i] * sc[i], col * sc[i], rtol=1e-5,
                                       atol=1e-6 * np.max(np.abs(J[:, i] * sc[i])))

    def test_interior_points_are_strict(self, rng):
        s, ch = instance(5)
        prob = OracleProblem(s, ch, 0.0, rmin=False)
        for _ in range(20):
            assert prob.strictly_feasible(prob.pack(random_interior_point(s, ch, rng)))


class TestSolve:
    def test_throughput_matches_closed_form(self):
        s, ch = instance(1)
        o, z = solve_generic(s, ch, 0.0), solve_zfba(s, ch)
        assert o.converged and o.feasibility == []
        assert o.objective == pytest.approx(z.objective, rel=1e-6)
        assert abs(np.sum(o.allocation.t) - s.T_eff) <= 1e-6 * s.T
        assert o.info["duality_gap"] <= 1e-5

    def test_alpha_fair_matches_closed_form(self):
        s, ch = instance(2)
        o, c = solve_generic(s, ch, 2.0), solve_cfba(s, ch, 2.0)
        assert o.objective == pytest.approx(c.objective, rel=1e-6)

    def test_epigraph(self):
        s, ch = instance(3)
        o = solve_maxmin_epigraph(s, ch)
        assert o.gamma == pytest.approx(float(np.min(o.R)), rel=1e-6)
        assert o.objective == pytest.approx(solve_mfba(s, ch).objective, rel=1e-6)
        assert solve_generic(s, ch, math.inf).solver == "oracle_maxmin"

    def test_random_starts_agree(self, rng):
        s, ch = instance(4)
        vals = []
        for _ in range(10):
            start = random_interior_point(s, ch, rng)
            vals.append(solve_generic(s, ch, 1.0, start=start).objective)
        vals = np.array(vals)
        assert np.ptp(vals) <= 1e-4 * np.max(np.abs(vals))

    def test_offload_only_and_no_recycling(self):
        s, ch = instance(5)
        full = solve_generic(s, ch, 0.0).objective
        assert solve_generic(s, ch, 0.0, local=False).objective <= full * (1 + 1e-9)
        assert solve_generic(s, ch, 0.0, recycling=False).objective <= full * (1 + 1e-9)

    def test_bad_start(self):
        s, ch = instance(1)
        t = np.full(4, s.T_eff / 4)
        bad = Allocation(t, 2 * s.P_max * t, np.zeros(4), np.zeros(4))
        with pytest.raises(ValueError):
            solve_generic(s, ch, 0.0, start=bad)

    def test_single_sensor(self):
        s, ch = instance(1, K=1, R_min=0.0)
        r = solve_generic(s, ch, 0.0)
        assert r.converged and r.total_bits == 0.0
