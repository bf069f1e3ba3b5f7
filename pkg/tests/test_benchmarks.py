import numpy as np
import pytest

from cermec.benchmarks import SOLVERS, flca_allocation, solve_fcoa, solve_flca, solve_nera
from cermec.experiments import SweepSpec, medians, run_sweep
from cermec.kkt_solvers import solve_zfba
from cermec.oracle import solve_generic
from cermec.physics import evaluate, harvested_energy
from cermec.results import InfeasibleScenarioError

from conftest import instance


class TestFlca:
    def test_cpu_bound_when_energy_is_plenty(self):
        """With phi tiny every CPU runs at f_max: T f_max / C bits each."""
        s, ch = instance(1, phi=1e-40)
        r = solve_flca(s, ch)
        np.testing.assert_allclose(r.R, s.T * s.f_max / s.C, rtol=1e-12)
        assert r.iterations == 1 and r.converged

    def test_spends_whole_harvest(self):
        s, ch = instance(2, phi=1e-20, R_min=0.0)
        a = flca_allocation(s, ch)
        E = harvested_energy(s, ch, a)
        below = a.f < s.f_max
        assert np.any(below)
        np.testing.assert_allclose(s.T * s.phi[below] * a.f[below] ** 3, E[below], rtol=1e-12)

    def test_expensive_cpu(self):
        s, ch = instance(3, phi=1e10, R_min=0.0)
        assert np.max(solve_flca(s, ch).R) < 1e-6

    def test_no_offloading(self):
        s, ch = instance(3)
        r = solve_flca(s, ch)
        data, _ = evaluate(s, ch, r.allocation)
        assert not np.any(data.R_CO) and not np.any(r.allocation.pbar)
        assert r.feasibility == []

    def test_infeasible_demand(self):
        s, ch = instance(1, R_min=5000.0)
        with pytest.raises(InfeasibleScenarioError):
            solve_flca(s, ch)


class TestFcoa:
    def test_no_local_bits(self):
        s, ch = instance(4)
        r = solve_fcoa(s, ch)
        data, _ = evaluate(s, ch, r.allocation)
        assert not np.any(data.R_LC)
        assert r.solver == "fcoa" and r.feasibility == []

    def test_matches_restricted_oracle(self):
        s, ch = instance(5)
        o = solve_generic(s, ch, 0.0, local=False)
        assert solve_fcoa(s, ch).objective == pytest.approx(o.objective, rel=1e-5)


class TestNera:
    def test_equals_zfba_without_peer_links(self):
        s, ch = instance(1)
        bare = ch.without_recycling()
        np.testing.assert_allclose(solve_nera(s, bare).R, solve_zfba(s, bare).R, rtol=1e-12)

    def test_feasible_with_real_channels(self):
        s, ch = instance(2)
        r = solve_nera(s, ch)
        assert r.solver == "nera" and r.feasibility == []

    def test_matches_oracle_without_recycling(self):
        s, ch = instance(3)
        o = solve_generic(s, ch, 0.0, recycling=False)
        assert solve_nera(s, ch).objective == pytest.approx(o.objective, rel=1e-5)


class TestDominance:
    @pytest.mark.parametrize("seed", range(8))
    def test_full_scheme_wins(self, seed):
        s, ch = instance(seed)
        best = solve_zfba(s, ch).objective
        for name, fn in SOLVERS.items():
            try:
                r = fn(s, ch)
            except InfeasibleScenarioError:
                continue
            assert r.objective <= best * (1 + 1e-9), name


class TestTrends:
    def test_recycling_gain_grows_as_sensors_close_in(self):
        spec = SweepSpec("ws_distance_scale", (0.5, 1.0, 2.0), tuple(range(10)),
                         solvers=("zfba", "nera"))
        med = medians(run_sweep(spec))
        gains = [med[(v, "zfba")]["total_bits"] - med[(v, "nera")]["total_bits"] for v in spec.values]
        assert gains[0] > gains[1] > gains[2] >= 0

    def test_offloading_grows_with_ps_power(self):
        spec = SweepSpec("P_max", (0.5, 1.0, 2.0), tuple(range(10)), solvers=("fcoa", "flca"),
                         scenario={"R_min": ("0", 0)})
        med = medians(run_sweep(spec))
        fcoa = [med[(v, "fcoa")]["total_bits"] for v in spec.values]
        flca = [med[(v, "flca")]["total_bits"] for v in spec.values]
        assert fcoa[0] < fcoa[1] < fcoa[2]
        assert flca[2] <= flca[0] * 1.05
