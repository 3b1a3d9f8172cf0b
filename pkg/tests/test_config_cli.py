import json
import math

import numpy as np
import pytest

from qpathnet import ConfigError, export_config, parse_config
from qpathnet.cli import main, report, run
from qpathnet.config import RunSettings
from qpathnet.scenarios import build_difference_meter, build_projector_postselected


def sample_config(mode="exact"):
    s8, s2 = math.sqrt(0.8), math.sqrt(0.2)
    r2 = 1.0 / math.sqrt(2.0)
    return {
        "name": "spin-readout",
        "system": {"dim": 2, "total_time": 1.0},
        "pre_state": [[s8, 0.0], [s2, 0.0]],
        "post_state": [[r2, 0.0], [r2, 0.0]],
        "steps": [
            {
                "time": 0.5,
                "observable": {
                    "eigenvalues": [1.0, 0.0],
                    "basis": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]],
                },
            }
        ],
        "functionals": [{"name": "first", "rule": "step_eigenvalue", "step": 0}],
        "meters": [{"functional": "first", "profile": {"shape": "rectangular", "width": 0.5}}],
        "run": {"mode": mode, "seed": 3, "trials": 2000, "widths": [5.0, 50.0]},
    }


class TestParsing:
    def test_valid_document(self):
        config = parse_config(sample_config())
        assert config.chain.dim == 2
        assert config.meters[0].profile.shape == "rectangular"
        assert config.run.seed == 3

    def test_non_hermitian_observable_names_field(self):
        doc = sample_config()
        doc["steps"][0]["observable"] = {"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}
        with pytest.raises(ConfigError, match=r"steps\[0\].observable.*Hermitian"):
            parse_config(doc)

    def test_bad_state_norm_names_field(self):
        doc = sample_config()
        doc["pre_state"] = [[1.0, 0.0], [1.0, 0.0]]
        with pytest.raises(ConfigError, match="pre_state.*normalized"):
            parse_config(doc)

    def test_unknown_functional_reference(self):
        doc = sample_config()
        doc["meters"][0]["functional"] = "missing"
        with pytest.raises(ConfigError, match=r"meters\[0\].functional"):
            parse_config(doc)

    def test_negative_width(self):
        doc = sample_config()
        doc["meters"][0]["profile"]["width"] = -1.0
        with pytest.raises(ConfigError, match=r"meters\[0\].profile.width"):
            parse_config(doc)

    def test_bad_mode(self):
        doc = sample_config()
        doc["run"]["mode"] = "magic"
        with pytest.raises(ConfigError, match="run.mode"):
            parse_config(doc)

    def test_times_outside_window(self):
        doc = sample_config()
        doc["steps"][0]["time"] = 1.5
        with pytest.raises(ConfigError, match=r"steps\[0\].time"):
            parse_config(doc)

    def test_complex_pairs_enforced(self):
        doc = sample_config()
        doc["pre_state"] = [0.9, 0.44]
        with pytest.raises(ConfigError, match=r"pre_state\[0\]"):
            parse_config(doc)

    def test_functional_consistency_checked_against_chain(self):
        doc = sample_config()
        doc["functionals"][0] = {"name": "first", "rule": "step_eigenvalue", "step": 5}
        with pytest.raises(ConfigError, match=r"functionals\[0\]"):
            parse_config(doc)

    def test_explicit_completion_accepted(self):
        doc = sample_config()
        r2 = math.sqrt(0.5)
        doc["post_complement"] = [[[r2, 0.0], [-r2, 0.0]]]
        config = parse_config(doc)
        assert len(config.chain.post_complement) == 1

    def test_non_orthogonal_completion_rejected(self):
        doc = sample_config()
        doc["post_complement"] = [[[1.0, 0.0], [0.0, 0.0]]]
        with pytest.raises(ConfigError, match="orthonormal"):
            parse_config(doc)


class TestRoundTrip:
    def test_export_parse_rebuilds_identical_chain(self):
        preset = build_difference_meter()
        doc = json.loads(json.dumps(export_config(preset.name, preset.chain, preset.meters)))
        config = parse_config(doc)
        assert np.array_equal(config.chain.pre_state.amplitudes, preset.chain.pre_state.amplitudes)
        assert np.array_equal(config.chain.post_state.amplitudes, preset.chain.post_state.amplitudes)
        for built, original in zip(config.chain.steps, preset.chain.steps):
            assert built.time == original.time
            assert np.array_equal(built.observable.eigenvalues, original.observable.eigenvalues)
            assert np.array_equal(built.observable.eigenvectors, original.observable.eigenvectors)

    def test_run_results_identical_through_export(self, tmp_path):
        preset = build_projector_postselected()
        doc = export_config(preset.name, preset.chain, preset.meters, RunSettings(seed=5))
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(doc))
        direct = run("preset:projector", tmp_path / "direct")
        via_file = run(str(config_path), tmp_path / "file")
        for key in ("strong_mean", "weak_value_re", "weak_value_im", "norm", "mean_reading"):
            assert direct[key] == via_file[key]  # bit-exact


class TestRunModes:
    def test_exact_artifacts(self, tmp_path):
        summary = run("preset:projector", tmp_path)
        assert (tmp_path / "summary.json").exists()
        assert (tmp_path / "distribution_m0.csv").exists()
        assert summary["strong_mean"] == pytest.approx(0.8, abs=1e-9)
        assert summary["weak_value_re"] == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_three_box_summary_reports_joint_marginals(self, tmp_path):
        summary = run("preset:three-box", tmp_path)
        assert summary["weak_marginals"][0] == pytest.approx(1.0, abs=1e-3)
        assert summary["weak_marginals"][1] == pytest.approx(1.0, abs=1e-3)

    def test_sweep_artifacts(self, tmp_path):
        doc = sample_config(mode="sweep")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        summary = run(str(path), tmp_path / "out")
        rows = (tmp_path / "out" / "sweep.csv").read_text().splitlines()
        assert rows[0] == "width,mean,abs_error"
        assert len(rows) == 3
        assert summary["limit"] == pytest.approx(2.0 / 3.0, abs=1e-9)

    def test_sample_artifacts(self, tmp_path):
        doc = sample_config(mode="sample")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        summary = run(str(path), tmp_path / "out")
        assert summary["trials"] == 2000
        lines = (tmp_path / "out" / "trials.csv").read_text().splitlines()
        assert lines[0] == "trial_id,reading_0,branch"
        assert len(lines) == 2001

    def test_classical_artifacts(self, tmp_path):
        summary = run("preset:difference", tmp_path, _Args(mode="classical"))
        assert summary["n_paths"] == 8
        assert summary["conditional_mean"] == pytest.approx(-0.6, abs=1e-12)
        assert (tmp_path / "classical_paths.csv").exists()

    def test_classical_only_config(self, tmp_path):
        doc = {
            "name": "toy",
            "run": {"mode": "classical"},
            "classical": {
                "connectors": {"in": {"weights": [[0.5, 0.5], [0.5, 0.5]]}},
                "wiring": {"in.0": "left", "in.1": "right"},
                "entry": "in.0",
                "values": [1.0, -1.0],
            },
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        summary = run(str(path), tmp_path / "out")
        assert summary["n_paths"] == 2
        assert summary["conditional_mean"] == pytest.approx(0.0, abs=1e-12)

    def test_classical_labels_induce_layer_difference(self, tmp_path):
        # two layers labelled -/+ the layer quantity: the path value is the
        # second-layer label minus the first-layer one
        half = [[0.5, 0.5], [0.5, 0.5]]
        doc = {
            "name": "labelled",
            "run": {"mode": "classical"},
            "classical": {
                "connectors": {name: {"weights": half} for name in ("in", "a0", "a1", "b0", "b1")},
                "wiring": {
                    "in.0": "a0.0",
                    "in.1": "a1.0",
                    "a0.0": "b0.0",
                    "a0.1": "b1.1",
                    "a1.0": "b1.0",
                    "a1.1": "b0.1",
                    "b0.0": "f0",
                    "b0.1": "f1",
                    "b1.0": "f1",
                    "b1.1": "f0",
                },
                "entry": "in.0",
                "labels": {"a0": 1.0, "a1": -1.0, "b0": -1.0, "b1": 1.0},
                "condition": ["f0"],
            },
        }
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        summary = run(str(path), tmp_path / "out")
        assert summary["n_paths"] == 8
        # uniform weights make the +2 and -2 paths equally likely
        assert summary["conditional_mean"] == pytest.approx(0.0, abs=1e-12)

    def test_label_of_unknown_connector_rejected(self, tmp_path):
        doc = {
            "name": "bad",
            "run": {"mode": "classical"},
            "classical": {
                "connectors": {"in": {"weights": [[0.5, 0.5], [0.5, 0.5]]}},
                "wiring": {"in.0": "left", "in.1": "right"},
                "entry": "in.0",
                "labels": {"ghost": 1.0},
            },
        }
        with pytest.raises(ConfigError, match="labels.ghost"):
            parse_config(doc)


class _Args:
    mode = None
    seed = None
    trials = None
    grid_step = None
    grid_extent = None

    def __init__(self, **kwargs):
        for key, value in kwargs.items():
            setattr(self, key, value)


class TestCliEntryPoint:
    def test_success_exit_code(self, tmp_path):
        assert main(["run", "preset:projector", str(tmp_path)]) == 0

    def test_malformed_config_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        doc = sample_config()
        doc["steps"][0]["observable"] = {"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}
        bad.write_text(json.dumps(doc))
        assert main(["run", str(bad), str(tmp_path / "out")]) == 2
        assert "steps[0].observable" in capsys.readouterr().err

    def test_missing_file_exit_code(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"), str(tmp_path / "out")]) == 2

    def test_forbidden_transition_exit_code(self, tmp_path, capsys):
        doc = sample_config()
        doc["pre_state"] = [[1.0, 0.0], [0.0, 0.0]]
        doc["post_state"] = [[0.0, 0.0], [1.0, 0.0]]
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(doc))
        assert main(["run", str(path), str(tmp_path / "out")]) == 3
        assert "remedy" in capsys.readouterr().err

    def test_overrides(self, tmp_path):
        assert main(["run", "preset:projector", str(tmp_path), "--mode", "sample", "--trials", "500", "--seed", "9"]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["mode"] == "sample"
        assert summary["trials"] == 500
        assert summary["seed"] == 9


class TestReport:
    def test_exact_rows_present(self, tmp_path):
        run("preset:projector", tmp_path / "a")
        table = report([tmp_path / "a" / "summary.json"])
        for row in ("strong_mean", "weak_value_re", "weak_value_im", "norm"):
            assert row in table

    def test_twelve_significant_digits(self, tmp_path):
        run("preset:projector", tmp_path / "a")
        table = report([tmp_path / "a" / "summary.json"])
        line = next(l for l in table.splitlines() if "weak_value_re" in l)
        assert "0.666666666667" in line

    def test_sample_and_exact_pairing(self, tmp_path):
        run("preset:projector", tmp_path / "exact")
        run("preset:projector", tmp_path / "sample", _Args(mode="sample", trials=5000, seed=1))
        out = tmp_path / "rep"
        table = report(
            [tmp_path / "exact" / "summary.json", tmp_path / "sample" / "summary.json"], out
        )
        assert "sample-vs-exact" in table
        assert (out / "report.csv").exists()
        assert (out / "report.txt").exists()

    def test_mixed_dimensions_rejected(self, tmp_path):
        run("preset:projector", tmp_path / "a")
        run("preset:three-box", tmp_path / "b")
        with pytest.raises(ValueError, match="different dimensions"):
            report([tmp_path / "a" / "summary.json", tmp_path / "b" / "summary.json"])

    def test_sweep_plot_csv(self, tmp_path):
        summary = run("preset:minus-hundred", tmp_path / "s", _Args(mode="sweep"))
        # the widest meter lands within 5 percent of the -100 limit
        assert abs(summary["means"][-1] + 100.0) / 100.0 <= 0.05
        out = tmp_path / "rep"
        report([tmp_path / "s" / "summary.json"], out)
        lines = (out / "plot_minus-hundred_sweep.csv").read_text().splitlines()
        assert lines[0] == "width,mean"
        assert len(lines) == 5
        last_width, last_mean = lines[-1].split(",")
        assert float(last_width) == 10000.0
        assert abs(float(last_mean) + 100.0) / 100.0 <= 0.05
