from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from swtkit.cli import RunConfig, build_parser, load_config_file, main, resolve_config
from swtkit.errors import ValidationError


def _read_json(path):
    return json.loads(path.read_text())


class TestExact:
    def test_default_model(self, tmp_path, exact4):
        assert main(["exact", "--n", "4", "--epsilon", "1", "--out", str(tmp_path)]) == 0
        report = _read_json(tmp_path / "report.json")
        lowest = np.linalg.eigvalsh(exact4.h)[:4]
        assert np.max(np.abs(np.array(report["heff"]["eigenvalues"]) - lowest)) < 1e-8
        assert report["gap_check"]["condition_met"] is False
        assert report["provenance"]["config"]["epsilon"] == 1.0

    def test_unperturbed(self, tmp_path):
        assert main(["exact", "--epsilon", "0", "--out", str(tmp_path)]) == 0
        eigenvalues = _read_json(tmp_path / "report.json")["heff"]["eigenvalues"]
        assert np.allclose(eigenvalues, -6)

    def test_invalid_n(self, tmp_path, capsys):
        assert main(["exact", "--n", "3", "--out", str(tmp_path)]) == 2
        assert "ModelError" in capsys.readouterr().err


class TestVqa:
    def test_noiseless_run(self, tmp_path):
        assert main(["vqa", "--out", str(tmp_path)]) == 0
        summary = _read_json(tmp_path / "summary.json")
        assert all(f > 0.95 for f in summary["heff"]["fidelities"])
        assert summary["seeds"]["spsa"] == 0
        with (tmp_path / "trace.csv").open() as fh:
            first = fh.readline()
            rows = list(csv.reader(fh))
        assert first.startswith("# provenance:")
        assert rows[0][:5] == ["step", "cost", "accepted", "theta_0", "theta_1"]
        assert rows[0][-1] == "eigenvalue_3"
        assert len(rows) - 1 == summary["optimizer"]["iterations"] + 1

    def test_byte_identical_reruns(self, tmp_path):
        args = ["vqa", "--backend", "g_decomposition_shots", "--shots", "300", "--max-iter", "2",
                "--spsa-a", "0.05", "--seed", "5", "--pauli-error", "0.01", "--readout-flip", "0.01"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("trace.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        summary = _read_json(tmp_path / "a" / "summary.json")
        assert summary["noise"] == {"shots": 300, "readout_flip_prob": 0.01, "pauli_error_prob": 0.01}

    def test_bad_noise(self, tmp_path):
        assert main(["vqa", "--shots", "10", "--readout-flip", "0.7", "--out", str(tmp_path)]) == 2


class TestQpe:
    def test_study(self, tmp_path):
        assert main(["qpe", "--ancillas", "4,6,8", "--out", str(tmp_path)]) == 0
        report = _read_json(tmp_path / "qpe_report.json")
        assert report["swt"]["monotone"]
        assert all(f >= 0.99 for f in report["swt"]["rows"][-1]["fidelities"])
        assert all(row["signs_correct"] for row in report["reflection"]["rows"])

    def test_cap(self, tmp_path, capsys):
        assert main(["qpe", "--ancillas", "20", "--out", str(tmp_path)]) == 4
        assert "ResourceError" in capsys.readouterr().err

    def test_bad_ancillas(self, tmp_path):
        assert main(["qpe", "--ancillas", "x", "--out", str(tmp_path)]) == 2


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nepsilon = 0.5\nseed = 9\nblocking = true\n")
        args = build_parser().parse_args(["vqa", "--config", str(cfg), "--seed", "3"])
        config = resolve_config(args)
        assert config.epsilon == 0.5
        assert config.seed == 3
        assert config.blocking is True

    def test_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = blue\n")
        with pytest.raises(ValidationError):
            load_config_file(cfg)

    def test_defaults(self):
        config = RunConfig()
        assert (config.n, config.epsilon, config.shots, config.ancilla_list) == (4, 1.0, 0, [4, 6, 8])

    def test_config_file_on_command_line(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epsilon = 0\n")
        assert main(["exact", "--config", str(cfg), "--out", str(tmp_path)]) == 0
        assert np.allclose(_read_json(tmp_path / "report.json")["heff"]["eigenvalues"], -6)


def test_check_command(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") >= 7
