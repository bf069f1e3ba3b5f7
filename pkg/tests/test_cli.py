import numpy as np
import pytest

from cermec import cli, kvdoc
from cermec.cli import main


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "scenario.txt"
    path.write_text("# small instance\nK = 3\nN = 2\nR_min = 50\nlayout_seed = 4\n")
    return str(path)


def read_doc(path):
    return {k: raw for k, (raw, _) in kvdoc.loads(open(path).read()).items()}


class TestSolve:
    def test_default_solver(self, scenario, tmp_path):
        out = str(tmp_path / "r.txt")
        assert main(["solve", scenario, "--out", out, "--seed", "2"]) == 0
        doc = read_doc(out)
        assert doc["status"] == "converged" and doc["solver"] == "zfba"
        assert doc["feasibility"] == "ok"
        assert float(doc["sum_t"]) == pytest.approx(float(doc["T_eff"]), rel=1e-9)
        t = kvdoc.parse_vector(doc["t"])
        Pbar = kvdoc.parse_vector(doc["Pbar"])
        np.testing.assert_allclose(Pbar, t, rtol=1e-12)

    @pytest.mark.parametrize("args,solver", [(["--alpha", "2"], "cfba"), (["--alpha", "max-min"], "mfba"),
                                             (["--solver", "flca"], "flca"), (["--solver", "nera"], "nera"),
                                             (["--solver", "oracle", "--alpha", "1"], "oracle")])
    def test_solver_choice(self, scenario, tmp_path, args, solver):
        out = str(tmp_path / "r.txt")
        assert main(["solve", scenario, "--out", out] + args) == 0
        assert read_doc(out)["solver"] == solver

    def test_slack_fields(self, scenario, tmp_path):
        out = str(tmp_path / "r.txt")
        main(["solve", scenario, "--out", out, "--alpha", "max-min"])
        doc = read_doc(out)
        assert float(doc["gamma"]) == pytest.approx(min(kvdoc.parse_vector(doc["R"])), rel=1e-6)

    def test_stdout(self, scenario, capsys):
        assert main(["solve", scenario]) == 0
        assert "status = converged" in capsys.readouterr().out

    def test_deterministic(self, scenario, tmp_path):
        a, b = str(tmp_path / "a.txt"), str(tmp_path / "b.txt")
        main(["solve", scenario, "--out", a, "--alpha", "1"])
        main(["solve", scenario, "--out", b, "--alpha", "1"])
        # only the wall-clock free fields are written, so the bytes agree
        assert open(a).read() == open(b).read()

    @pytest.mark.parametrize("args", [["--solver", "cfba"], ["--solver", "mfba", "--alpha", "1"],
                                      ["--solver", "fcoa", "--alpha", "1"], ["--alpha", "-1"],
                                      ["--alpha", "lots"], ["--solver", "magic"]])
    def test_usage_errors(self, scenario, args):
        with pytest.raises(SystemExit) as err:
            code = main(["solve", scenario] + args)
            raise SystemExit(code)
        assert err.value.code == 1

    def test_missing_file(self, tmp_path):
        assert main(["solve", str(tmp_path / "nope.txt")]) == 1

    def test_bad_document(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("K = 3\ncolour = blue\n")
        assert main(["solve", str(bad)]) == 1
        bad.write_text("K = 3\nP_max = -1\n")
        assert main(["solve", str(bad)]) == 1

    def test_infeasible(self, tmp_path):
        path = tmp_path / "s.txt"
        path.write_text("K = 3\nR_min = 1e9\n")
        out = str(tmp_path / "r.txt")
        assert main(["solve", str(path), "--out", out]) == 2
        doc = read_doc(out)
        assert doc["status"] == "infeasible" and 0 <= int(doc["binding"]) < 3

    def test_nonconverged(self, scenario, tmp_path, monkeypatch):
        real = cli.run_solver

        def stalled(*args, **kw):
            res = real(*args, **kw)
            res.converged = False
            return res

        monkeypatch.setattr(cli, "run_solver", stalled)
        out = str(tmp_path / "r.txt")
        assert main(["solve", scenario, "--out", out]) == 3
        assert read_doc(out)["status"] == "not-converged"


class TestSweep:
    def spec(self, tmp_path, extra=""):
        path = tmp_path / "sweep.txt"
        path.write_text("parameter = P_max\nvalues = 0.5, 1\nseeds = 0-2\nsolvers = zfba, flca\nK = 3\n" + extra)
        return str(path)

    def test_identical_csv(self, tmp_path):
        spec = self.spec(tmp_path)
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        assert main(["sweep", spec, "--out", a]) == 0
        assert main(["sweep", spec, "--out", b, "--workers", "2"]) == 0
        text = open(a).read()
        assert text == open(b).read()
        assert len(text.splitlines()) == 1 + 2 * 2 * 3

    def test_timing_column(self, tmp_path):
        out = str(tmp_path / "a.csv")
        main(["sweep", self.spec(tmp_path), "--out", out, "--timing"])
        row = open(out).read().splitlines()[1].split(",")
        assert float(row[8]) >= 0

    def test_output_key(self, tmp_path):
        target = tmp_path / "from_spec.csv"
        assert main(["sweep", self.spec(tmp_path, f"output = {target}\n")]) == 0
        assert target.exists()

    def test_flagged_cells(self, tmp_path):
        path = tmp_path / "sweep.txt"
        path.write_text("parameter = R_min\nvalues = 1e9\nseeds = 0\nsolvers = zfba\n")
        assert main(["sweep", str(path), "--out", str(tmp_path / "x.csv")]) == 3

    def test_bad_spec(self, tmp_path):
        path = tmp_path / "sweep.txt"
        path.write_text("parameter = colour\nvalues = 1\nseeds = 0\n")
        assert main(["sweep", str(path)]) == 1


class TestCerGap:
    def test_table(self, scenario, capsys):
        assert main(["cer-gap", scenario, "--noise-dbm", "-150"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k,gap_exact,gap_approx,rel_diff"
        assert len(lines) == 4
        for line in lines[1:]:
            k, ex, ap, rel = line.split(",")
            assert float(ex) >= 0 and float(rel) <= 0.02

    def test_exclusive_noise(self, scenario):
        with pytest.raises(SystemExit) as err:
            main(["cer-gap", scenario, "--noise", "1e-12", "--noise-dbm", "-90"])
        assert err.value.code == 1

    def test_no_ps_power(self, scenario):
        assert main(["cer-gap", scenario, "--P0", "0"]) == 1
