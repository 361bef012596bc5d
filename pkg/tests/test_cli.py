import json
import subprocess
import sys

import numpy as np
import pytest

from pdgbs.cli import main
from pdgbs.config import ExperimentConfig
from pdgbs.model import coefficients, haar_random_unitary
from pdgbs.pnr import prob_total_exact


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


@pytest.fixture
def cfg_path(tmp_path):
    return write(tmp_path, "c.json", {"K": 4, "M": 2, "r": 0.6, "eta_t": 0.9, "eta_ind": 0.6, "seed": 2})


@pytest.fixture
def tiny(tmp_path):
    return write(tmp_path, "t.json", {"K": 2, "M": 1, "r": 0.4, "eta_t": 0.8, "eta_ind": 0.5, "seed": 1})


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def value(out):
    return float(out.strip().splitlines()[-1].split(",")[-1])


class TestProbPnr:
    def test_vacuum(self, tmp_path, capsys):
        p = write(tmp_path, "v.json", {"K": 3, "M": 1, "r": 0.0})
        code, out = run(capsys, "prob-pnr", "--config", p, "0", "0", "0")
        assert code == 0 and value(out) == 1.0

    def test_exact_matches_library(self, cfg_path, capsys):
        code, out = run(capsys, "prob-pnr", "--config", cfg_path, "1", "0", "1", "0")
        cfg = ExperimentConfig.from_eta_t(4, 2, 0.6, 0.9, eta_ind=0.6, seed=2)
        ref = prob_total_exact(cfg, haar_random_unitary(4, 2), (1, 0, 1, 0))
        assert code == 0 and value(out) == float(f"{ref:.17g}")

    def test_ideal_full_cut_is_exact(self, cfg_path, capsys):
        _, exact = run(capsys, "prob-pnr", "--config", cfg_path, "--eta-ind", "1", "1", "1", "0", "0")
        _, approx = run(capsys, "prob-pnr", "--config", cfg_path, "--eta-ind", "1", "--ncut", "2",
                        "--epsilon", "1e-3", "1", "1", "0", "0")
        assert float(approx.splitlines()[-1].split(",")[3]) == pytest.approx(value(exact), rel=1e-12)

    def test_deterministic(self, cfg_path, capsys):
        argv = ["prob-pnr", "--config", cfg_path, "--ncut", "1", "--epsilon", "1e-4", "1", "1", "0", "0"]
        assert run(capsys, *argv) == run(capsys, *argv)

    def test_bad_pattern(self, cfg_path, capsys):
        assert main(["prob-pnr", "--config", cfg_path, "1", "1"]) == 2

    def test_guard(self, cfg_path, capsys):
        big = ["prob-pnr", "--config", cfg_path, "40", "40", "40", "40"]
        # too many decompositions for the exact path
        assert main(big) == 3


class TestProbThreshold:
    def test_vacuum(self, tmp_path, capsys):
        p = write(tmp_path, "v.json", {"K": 3, "M": 1, "r": 0.0})
        _, out = run(capsys, "prob-threshold", "--config", p)
        assert value(out) == 1.0

    def test_ideal_path(self, cfg_path, capsys):
        _, a = run(capsys, "prob-threshold", "--config", cfg_path, "--eta-ind", "1", "1", "3")
        _, b = run(capsys, "prob-threshold", "--config", cfg_path, "--eta-ind", "1", "--ideal", "1", "3")
        assert value(a) == pytest.approx(value(b), abs=1e-10)

    def test_complete(self, tiny, capsys):
        total = 0.0
        for ports in ([], ["1"], ["2"], ["1", "2"]):
            _, out = run(capsys, "prob-threshold", "--config", tiny, *ports)
            total += value(out)
        assert total == pytest.approx(1, abs=1e-8)

    def test_bad_port(self, tiny, capsys):
        assert main(["prob-threshold", "--config", tiny, "3"]) == 2


class TestSample:
    def test_dump(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "s.csv"
        code, text = run(capsys, "sample", "--config", cfg_path, "--n-samples", "20000", "--out", str(out))
        assert code == 0
        assert len(out.read_text().splitlines()) == 20001
        rows = np.loadtxt(out, delimiter=",", comments="#")
        means = [float(line.split(",")[1]) for line in text.splitlines()[1:]]
        np.testing.assert_allclose(means, rows.mean(axis=0))
        cfg = ExperimentConfig.from_eta_t(4, 2, 0.6, 0.9, eta_ind=0.6)
        alpha_d = coefficients(cfg).alpha_d
        se = rows.sum(axis=1).std() / np.sqrt(len(rows))
        assert abs(rows.sum(axis=1).mean() - cfg.M * alpha_d) < 3 * se

    def test_ideal_rows_zero(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "s.csv"
        run(capsys, "sample", "--config", cfg_path, "--eta-ind", "1", "--n-samples", "50", "--out", str(out))
        assert not np.loadtxt(out, delimiter=",", comments="#").any()

    def test_needs_out(self, cfg_path, capsys):
        assert main(["sample", "--config", cfg_path]) == 2


class TestFidelitySweep:
    def test_stdout_and_file(self, tmp_path, capsys):
        grid = write(tmp_path, "g.json", {"K": 5, "M": 2, "r": 0.8, "eta_t": 0.9, "eta_ind": [0.5],
                                          "N": [3], "N_cut": [1, 2], "epsilon": 1e-4, "n_haar": 2})
        code, out = run(capsys, "fidelity-sweep", "--config", grid)
        assert code == 0 and len(out.splitlines()) == 5
        f = tmp_path / "o.csv"
        run(capsys, "fidelity-sweep", "--config", grid, "--out", str(f))
        assert f.read_text() == out

    def test_bad_grid(self, tmp_path, capsys):
        assert main(["fidelity-sweep", "--config", write(tmp_path, "g.json", {"K": 5})]) == 2


class TestOracleCheck:
    def test_pass(self, tiny, capsys):
        code, out = run(capsys, "oracle-check", "--config", tiny)
        assert code == 0 and out.count("PASS") == 2

    def test_vacuum(self, tmp_path, capsys):
        p = write(tmp_path, "v.json", {"K": 2, "M": 1, "r": 0.0})
        assert main(["oracle-check", "--config", p]) == 0

    def test_corrupted_unitary(self, tiny, tmp_path, capsys):
        u = write(tmp_path, "u.json", {"real": [[1, 0.3], [0, 1]]})
        assert main(["oracle-check", "--config", tiny, "--unitary", u]) == 2

    def test_explicit_unitary(self, tiny, tmp_path, capsys):
        T = haar_random_unitary(2, 8).T
        u = write(tmp_path, "u.json", {"real": T.real.tolist(), "imag": T.imag.tolist()})
        assert main(["oracle-check", "--config", tiny, "--unitary", u]) == 0

    def test_guard(self, cfg_path, capsys):
        assert main(["oracle-check", "--config", cfg_path]) == 3


def test_config_errors(tmp_path, capsys):
    assert main(["prob-pnr", "--config", str(tmp_path / "none.json"), "0"]) == 2
    bad = write(tmp_path, "b.json", {"K": 2, "M": 1, "r": 0.4, "eta_t": 1.5})
    assert main(["prob-pnr", "--config", bad, "0", "0"]) == 2


def test_entry_point(tiny):
    cmd = [sys.executable, "-m", "pdgbs.cli", "prob-threshold", "--config", tiny, "1"]
    a = subprocess.run(cmd, capture_output=True, text=True, check=True)
    b = subprocess.run(cmd, capture_output=True, text=True, check=True)
    assert a.stdout == b.stdout and a.stdout.startswith("clicked,P\n1,")
    assert "elapsed_ms" in a.stderr
