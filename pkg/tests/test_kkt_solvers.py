import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cermec.fairness import FairnessDomainError, total_utility
from cermec.kernels import LN2
from cermec.kkt_solvers import (implied_energy_price, kkt_residuals, maxmin_feasibility,
                                recover_original, solve_cfba, solve_mfba, solve_zfba,
                                zfba_pbar_closed_form, zfba_power_step, zfba_time_freq_step)
from cermec.physics import Allocation, InfeasibleAllocationError, computable_bits, harvested_energy
from cermec.results import DualInfeasibleError, DualState, InfeasibleScenarioError
from cermec.scenario import ChannelRealization, Scenario

from conftest import instance

SOLVERS = {
    "zfba": lambda s, ch: solve_zfba(s, ch),
    "cfba": lambda s, ch: solve_cfba(s, ch, 1.0),
    "mfba": lambda s, ch: solve_mfba(s, ch),
}


def symmetric_instance(K=3):
    """Identical sensors: every channel and distance is the same."""
    s = Scenario(K=K, N=2)
    g = np.full((K, K), 0.01)
    np.fill_diagonal(g, 0.0)
    ch = ChannelRealization(h=np.full(K, 0.1), g_ws=g, g_ap=np.full((K, 2), 1e-4 + 0j))
    return s, ch


def golden_max(fn, lo, hi, iters=200):
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    for _ in range(iters):
        c, d = b - g * (b - a), a + g * (b - a)
        if fn(c) > fn(d):
            b = d
        else:
            a = c
    return 0.5 * (a + b)


class TestRecoverOriginal:
    def test_round_trip(self):
        a = Allocation([0.2, 0.5], [0.2, 0.25], [1e-6, 2e-6], [1e5, 0.0])
        o = recover_original(a)
        np.testing.assert_allclose(o.P, [1.0, 0.5])
        np.testing.assert_allclose(o.p, [5e-6, 4e-6])
        np.testing.assert_array_equal(o.f, a.f)

    def test_empty_slot(self):
        o = recover_original(Allocation([0.0, 1.0], [0.0, 1.0], [0.0, 1e-6], [0.0, 0.0]))
        assert o.P[0] == 0.0 and o.p[0] == 0.0

    def test_energy_in_empty_slot(self):
        with pytest.raises(InfeasibleAllocationError):
            recover_original(Allocation([0.0, 1.0], [0.0, 1.0], [1e-6, 0.0], [0.0, 0.0]))


@pytest.mark.parametrize("name", sorted(SOLVERS))
class TestSolverInvariants:
    """Structural properties every converged result must have."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_tight_time_and_saturated_ps(self, name, seed):
        s, ch = instance(seed)
        r = SOLVERS[name](s, ch)
        assert r.converged
        assert r.feasibility == []
        assert abs(np.sum(r.allocation.t) - s.T_eff) <= 1e-9 * s.T
        np.testing.assert_allclose(r.allocation.Pbar, s.P_max * r.allocation.t, rtol=1e-12, atol=0)

    def test_energy_causality_tight(self, name):
        s, ch = instance(4)
        a = SOLVERS[name](s, ch).allocation
        used = s.T * s.phi * a.f ** 3 + a.pbar
        np.testing.assert_allclose(used, harvested_energy(s, ch, a), rtol=1e-9)

    def test_trace_monotone_and_fast(self, name):
        s, ch = instance(1)
        r = SOLVERS[name](s, ch)
        tr = np.asarray(r.trace)
        assert r.iterations <= 20
        assert np.all(np.diff(tr) >= -1e-12 * np.abs(tr[1:]))

    def test_reported_rates(self, name):
        s, ch = instance(5)
        r = SOLVERS[name](s, ch)
        np.testing.assert_allclose(r.R, computable_bits(s, ch, r.allocation), rtol=1e-12)
        np.testing.assert_allclose(r.P * r.allocation.t, r.allocation.Pbar, rtol=1e-12)
        assert np.all(r.R >= s.R_min * (1 - 1e-9))

    def test_kkt_audit(self, name):
        s, ch = instance(2)
        res = kkt_residuals(s, ch, SOLVERS[name](s, ch))
        for key, v in res.items():
            assert v <= 1e-5, key

    def test_deterministic(self, name):
        s, ch = instance(6)
        a, b = SOLVERS[name](s, ch), SOLVERS[name](s, ch)
        np.testing.assert_array_equal(a.allocation.t, b.allocation.t)
        np.testing.assert_array_equal(a.R, b.R)


class TestZfba:
    def test_symmetric_sensors_share_equally(self):
        s, ch = symmetric_instance()
        r = solve_zfba(s, ch)
        np.testing.assert_allclose(r.allocation.t, s.T_eff / 3, rtol=1e-9)
        np.testing.assert_allclose(r.R, r.R[0], rtol=1e-9)

    def test_beats_random_feasible_points(self, rng):
        s, ch = instance(3, R_min=0.0)
        best = solve_zfba(s, ch).objective
        for _ in range(200):
            t = rng.dirichlet(np.ones(4)) * s.T_eff
            a = Allocation(t, s.P_max * t, np.zeros(4), np.zeros(4))
            E = harvested_energy(s, ch, a)
            share = rng.uniform(0, 1, 4)
            f = np.minimum(s.f_max, np.cbrt(share * E / (s.T * s.phi)))
            a = a.replace(f=f, pbar=E - s.T * s.phi * f ** 3)
            # pbar ignores recycling, so this point is feasible but not tight
            assert np.sum(computable_bits(s, ch, a)) <= best * (1 + 1e-9)

    def test_infeasible_demand(self):
        s, ch = instance(1, R_min=1e9)
        with pytest.raises(InfeasibleScenarioError) as err:
            solve_zfba(s, ch)
        assert 0 <= err.value.binding < s.K
        assert err.value.shortfall[err.value.binding] > 0

    def test_offload_only(self):
        s, ch = instance(2)
        r = solve_zfba(s, ch, local=False, name="fcoa")
        assert r.solver == "fcoa"
        assert not np.any(r.allocation.f)
        assert r.objective <= solve_zfba(s, ch).objective * (1 + 1e-9)

    def test_maxmin_feasibility_positive_margin(self):
        s, ch = instance(1)
        margin, a = maxmin_feasibility(s, ch)
        R = computable_bits(s, ch, a)
        assert margin == pytest.approx(float(np.min(R - s.R_min)), rel=1e-9)
        assert margin > 0


class TestLiteralBlocks:
    """The closed-form updates reproduce a converged point from its multipliers."""

    @pytest.fixture
    def solved(self):
        s, ch = instance(2)
        return s, ch, solve_zfba(s, ch)

    def test_time_freq_step(self, solved):
        s, ch, r = solved
        a = r.allocation
        t, f = zfba_time_freq_step(s, ch, a.Pbar, a.pbar, r.duals)
        np.testing.assert_allclose(t, a.t, rtol=0, atol=1e-9 * s.T)
        np.testing.assert_allclose(f, a.f, rtol=1e-6)

    def test_time_step_searches_omega2(self, solved):
        s, ch, r = solved
        a, d = r.allocation, r.duals
        no_w2 = DualState("ZF", {k: v for k, v in d.time.items() if k != "omega2"}, d.power)
        t, _ = zfba_time_freq_step(s, ch, a.Pbar, a.pbar, no_w2)
        np.testing.assert_allclose(t, a.t, rtol=0, atol=1e-9 * s.T)
        assert np.sum(t) == pytest.approx(s.T_eff, rel=1e-12)

    def test_power_step(self, solved):
        s, ch, r = solved
        a = r.allocation
        Pbar, pbar = zfba_power_step(s, ch, a.t, a.f)
        np.testing.assert_allclose(Pbar, s.P_max * a.t, rtol=1e-15)
        np.testing.assert_allclose(pbar, a.pbar, rtol=1e-9)

    def test_pbar_closed_form_at_reported_prices(self, solved):
        s, ch, r = solved
        a, d = r.allocation, r.duals
        p = zfba_pbar_closed_form(s, ch, a.t, d.power["mu2"], d.power["mu3"], d.power["mu5"])
        np.testing.assert_allclose(p, a.pbar, rtol=1e-9)

    @pytest.mark.parametrize("w3,w4,w5", [(1e15, 0.0, 0.0), (5e14, 2e-4, 0.5), (1e17, 0.0, 1.0),
                                          (1e12, 0.0, 0.0), (1e15, 5e-3, 0.0)])
    def test_frequency_is_grid_argmax(self, w3, w4, w5):
        """f maximizes (1 + w5) T f / C - w3 T phi f^3 - w4 f over [0, f_max]."""
        s, ch = instance(2)
        d = DualState("ZF", {"omega1": 0.0, "omega2": 1.0, "omega3": w3, "omega4": w4,
                             "omega5": w5}, {})
        _, f = zfba_time_freq_step(s, ch, np.full(4, 0.25), np.full(4, 1e-6), d)
        x = np.linspace(0.0, 1.0, 10001) * s.f_max[0]
        val = (1 + w5) * s.T * x / s.C[0] - w3 * s.T * s.phi[0] * x ** 3 - w4 * x
        assert abs(x[np.argmax(val)] - f[0]) <= 1e-4 * s.f_max[0]


class TestPbarClosedForm:
    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.05, 1.0), st.floats(1e-3, 1e3), st.floats(0.0, 2.0), st.floats(0.0, 0.5))
    def test_against_golden_section(self, t, mu2, mu3, frac5):
        """Maximizer of (1+mu3) t B log2(1 + c p/t) - (mu2 - mu5) p."""
        s, ch = instance(1)
        mu5 = frac5 * mu2
        c = ch.ap_gain[0] / s.noise_power
        p = zfba_pbar_closed_form(s, ch, np.full(s.K, t), mu2, mu3, mu5)[0]

        def val(x):
            return (1 + mu3) * t * s.B * math.log2(1 + c * x / t) - (mu2 - mu5) * x

        hi = max(4 * p, (1 + mu3) * s.B * t / (LN2 * (mu2 - mu5)))
        ref = golden_max(val, 0.0, hi)
        assert p == pytest.approx(ref, rel=1e-6, abs=1e-9 * hi)

    def test_weak_channel_gets_nothing(self):
        s, ch = instance(1)
        c = ch.ap_gain / s.noise_power
        mu2 = 2.0 * s.B * c / LN2  # price above the marginal value at p = 0
        np.testing.assert_array_equal(zfba_pbar_closed_form(s, ch, np.full(s.K, 0.25), mu2), 0.0)

    def test_price_round_trip(self):
        s, ch = instance(1)
        t = np.full(s.K, 0.2)
        pbar = np.array([1e-6, 2e-6, 3e-7, 5e-6])
        mu2 = implied_energy_price(s, ch, t, pbar, 0.3, 0.1)
        np.testing.assert_allclose(zfba_pbar_closed_form(s, ch, t, mu2, 0.3, 0.1), pbar, rtol=1e-10)

    def test_price_not_above_mu5(self):
        s, ch = instance(1)
        with pytest.raises(DualInfeasibleError):
            zfba_pbar_closed_form(s, ch, np.full(s.K, 0.2), 1.0, 0.0, 1.0)

    def test_omega2_below_ps_value(self):
        s, ch = instance(1)
        d = DualState("ZF", {"omega1": 1.0, "omega2": 0.5, "omega3": 1.0}, {})
        with pytest.raises(DualInfeasibleError):
            zfba_time_freq_step(s, ch, np.full(4, 0.25), np.full(4, 1e-6), d)


class TestCfba:
    def test_slack_matches_rates(self):
        for seed in (1, 3):
            s, ch = instance(seed)
            r = solve_cfba(s, ch, 2.0)
            np.testing.assert_allclose(r.chi, r.R, rtol=1e-6)

    @pytest.mark.parametrize("alpha", [0.0, -1.0, math.inf, math.nan])
    def test_alpha_domain(self, alpha):
        s, ch = instance(1)
        with pytest.raises(ValueError):
            solve_cfba(s, ch, alpha)

    def test_small_alpha_approaches_throughput(self):
        s, ch = instance(1)
        z, c = solve_zfba(s, ch), solve_cfba(s, ch, 1e-3)
        assert c.total_bits == pytest.approx(z.total_bits, rel=0.01)
        for name in ("t", "pbar", "f"):
            u, v = getattr(c.allocation, name), getattr(z.allocation, name)
            scale = np.max(np.abs(v))
            if scale > 0:
                assert np.max(np.abs(u - v)) <= 0.01 * scale, name

    def test_objective_is_alpha_utility(self):
        s, ch = instance(2)
        r = solve_cfba(s, ch, 0.5)
        assert r.objective == pytest.approx(total_utility(0.5, r.R), rel=1e-12)

    def test_fairer_than_throughput(self):
        s, ch = instance(2)
        assert solve_cfba(s, ch, 2.0).jain >= solve_zfba(s, ch).jain

    def test_single_sensor_has_no_rate(self):
        s, ch = instance(1, K=1, R_min=0.0)
        with pytest.raises(FairnessDomainError):
            solve_cfba(s, ch, 1.0)


class TestMfba:
    def test_gamma_is_min_rate(self):
        s, ch = instance(1)
        r = solve_mfba(s, ch)
        assert r.gamma == pytest.approx(float(np.min(r.R)), rel=1e-6)
        assert r.objective == pytest.approx(float(np.min(r.R)), rel=1e-12)

    def test_rates_equalized(self):
        s, ch = instance(1)
        r = solve_mfba(s, ch)
        assert r.largest_gap <= 1e-3 * np.mean(r.R)

    def test_min_rate_dominates(self):
        for seed in (1, 2, 3):
            s, ch = instance(seed)
            assert solve_mfba(s, ch).objective >= float(np.min(solve_zfba(s, ch).R)) * (1 - 1e-9)

    def test_multiplier_normalization(self):
        s, ch = instance(3)
        r = solve_mfba(s, ch)
        assert float(np.sum(r.duals.time["lambda6"])) == pytest.approx(1.0, abs=1e-9)


class TestProperties:
    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 6))
    def test_invariants_random_instances(self, seed, K):
        s, ch = instance(seed, K=K, R_min=0.0)
        for name in ("zfba", "mfba"):
            r = SOLVERS[name](s, ch)
            assert r.feasibility == []
            assert abs(np.sum(r.allocation.t) - s.T_eff) <= 1e-9 * s.T
            np.testing.assert_allclose(r.allocation.Pbar, s.P_max * r.allocation.t, rtol=1e-12)
