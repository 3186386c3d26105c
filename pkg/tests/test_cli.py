"""End-to-end CLI behaviour on a miniature configuration."""

import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from nnqft import builtin_grid, kernel_model
from nnqft.cli import main

from conftest import make_spec


def _write_config(path: Path, **overrides) -> Path:
    doc = {
        "schema_version": 1,
        "architecture": {"activation": "gauss", "d_in": 1, "sigma_w_sq": 1.0,
                         "sigma_b_sq": 1.0},
        "grid": "gauss-default",
        "plan": {"n_experiments": 2, "nets_per_experiment": 2000,
                 "widths": [3, 5], "seed": 99},
        "analysis": {"eft_width": 5, "rg_width": 5, "rg_cutoffs": [5, 10, 20],
                     "cutoff": "inf"},
    }
    doc.update(overrides)
    path.write_text(json.dumps(doc, indent=1))
    return path


@pytest.fixture
def cfg_path(tmp_path):
    return _write_config(tmp_path / "config.json")


def _run(*argv) -> int:
    return main([str(a) for a in argv])


class TestSample:
    def test_writes_snapshots_and_manifest(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("sample", "--config", cfg_path, "--out", out) == 0
        assert (out / "moments_w3.npz").exists()
        assert (out / "moments_w5.npz").exists()
        manifest = json.loads((out / "sample_manifest.json").read_text())
        assert manifest["schema_version"] == 1
        assert set(manifest["outputs"]) == {"moments_w3.npz", "moments_w5.npz"}
        assert manifest["seed"] == 99
        assert len(manifest["config_sha256"]) == 64

    def test_byte_identical_reruns(self, cfg_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        _run("sample", "--config", cfg_path, "--out", out1, "--width", "3")
        _run("sample", "--config", cfg_path, "--out", out2, "--width", "3")
        assert (out1 / "moments_w3.npz").read_bytes() == (out2 / "moments_w3.npz").read_bytes()

    def test_seed_override_changes_output(self, cfg_path, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        _run("sample", "--config", cfg_path, "--out", out1, "--width", "3")
        _run("sample", "--config", cfg_path, "--out", out2, "--width", "3",
             "--seed", "100")
        assert (out1 / "moments_w3.npz").read_bytes() != (out2 / "moments_w3.npz").read_bytes()

    def test_invalid_config_json_error(self, tmp_path, capsys):
        bad = _write_config(tmp_path / "bad.json")
        doc = json.loads(bad.read_text())
        doc["plan"]["widths"] = [5, 3]
        bad.write_text(json.dumps(doc))
        rc = _run("sample", "--config", bad, "--out", tmp_path / "out")
        assert rc == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["code"] == "validation"


class TestKernels:
    def test_table_matches_model(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("kernels", "--config", cfg_path, "--out", out) == 0
        km = kernel_model(make_spec("gauss", 3))
        gram = km.gram(builtin_grid("gauss-default"))
        with open(out / "kernels.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 36
        for row in rows[:8]:
            i, j = int(row["i"]), int(row["j"])
            assert float(row["K"]) == pytest.approx(gram[i, j], rel=1e-12)
            assert float(row["K_W"]) == pytest.approx(gram[i, j] - 1.0, rel=1e-9)
        assert (out / "kernels.png").exists()


class TestAnalysisCommands:
    @pytest.fixture
    def sampled(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        _run("sample", "--config", cfg_path, "--out", out)
        return out

    def test_npt_columns(self, cfg_path, sampled):
        assert _run("npt", "--config", cfg_path, "--out", sampled) == 0
        with open(sampled / "npt.csv", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        assert header == ["width", "order", "element", "value", "gp", "m_n", "background"]
        # two widths x (21 + 126 + 462) elements
        assert len(rows) == 2 * (21 + 126 + 462)

    def test_scaling_outputs(self, cfg_path, sampled):
        assert _run("scaling", "--config", cfg_path, "--out", sampled) == 0
        assert (sampled / "scaling_signals.csv").exists()
        assert (sampled / "scaling_slopes.csv").exists()
        assert (sampled / "falloff.png").exists()
        assert (sampled / "connected6.png").exists()

    def test_extract_lambda_summary(self, cfg_path, sampled):
        assert _run("extract-lambda", "--config", cfg_path, "--out", sampled) == 0
        summary = json.loads((sampled / "lambda.json").read_text())
        assert summary["width"] == 5
        assert summary["cutoff"] == "inf"
        assert math.isfinite(summary["lambda_bar"])
        with open(sampled / "lambda.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 126

    def test_predict_g6_summary(self, cfg_path, sampled):
        assert _run("predict-g6", "--config", cfg_path, "--out", sampled) == 0
        summary = json.loads((sampled / "g6.json").read_text())
        assert math.isfinite(summary["delta_mean_abs"])
        assert (sampled / "g6_ratio.png").exists()

    def test_rg_sweep_constant_for_gauss(self, cfg_path, sampled):
        assert _run("rg-sweep", "--config", cfg_path, "--out", sampled) == 0
        with open(sampled / "rg.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        lams = np.array([float(r["lambda_bar"]) for r in rows])
        assert len(lams) == 3
        assert np.max(np.abs(lams - lams[-1])) <= 1e-3 * abs(lams[-1])
        summary = json.loads((sampled / "rg.json").read_text())
        assert summary["theory_slope"] is None  # not a relu net

    def test_missing_snapshot_refused(self, cfg_path, tmp_path, capsys):
        rc = _run("npt", "--config", cfg_path, "--out", tmp_path / "empty")
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"]["code"] == "snapshot-missing"

    def test_foreign_snapshot_refused(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "out"
        _run("sample", "--config", cfg_path, "--out", out)
        other = _write_config(tmp_path / "other.json",
                              plan={"n_experiments": 2, "nets_per_experiment": 2000,
                                    "widths": [3, 5], "seed": 1234})
        rc = _run("npt", "--config", other, "--out", out)
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"]["code"] == "snapshot-mismatch"

    def test_csv_reruns_identical(self, cfg_path, sampled):
        _run("npt", "--config", cfg_path, "--out", sampled)
        first = (sampled / "npt.csv").read_bytes()
        _run("npt", "--config", cfg_path, "--out", sampled)
        assert (sampled / "npt.csv").read_bytes() == first


class TestDegenerateFits:
    @pytest.fixture
    def relu_cfg(self, tmp_path):
        return _write_config(
            tmp_path / "relu.json",
            architecture={"activation": "relu", "d_in": 1, "sigma_w_sq": 1.0,
                          "sigma_b_sq": 0.0},
            grid="relu-default",
            analysis={"eft_width": 5, "rg_width": 5, "cutoff": 1000.0,
                      "rg_cutoffs": [100, 1000, 10000]},
        )

    def test_pipeline_reports_collinear_models(self, relu_cfg, tmp_path):
        # the homogeneous relu kernel makes T2 and TNL multiples of T0, so
        # the all-models sweep records the degeneracy instead of failing
        out = tmp_path / "out"
        assert _run("pipeline", "--config", relu_cfg, "--out", out,
                    "--stages", "sample,fit-couplings") == 0
        m1 = json.loads((out / "fit_m1.json").read_text())
        m2 = json.loads((out / "fit_m2.json").read_text())
        assert "lambda0" in m1 and m1["test_mape"] < 100.0
        assert m2["error"] == "collinear-features"

    def test_explicit_degenerate_model_errors(self, relu_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        _run("pipeline", "--config", relu_cfg, "--out", out,
             "--stages", "sample,fit-couplings")
        rc = _run("fit-couplings", "--config", relu_cfg, "--out", out, "--model", "m2")
        assert rc == 1
        assert json.loads(capsys.readouterr().err)["error"]["code"] == "collinear-features"


class TestPipeline:
    def test_full_run_summary(self, cfg_path, tmp_path):
        out = tmp_path / "out"
        assert _run("pipeline", "--config", cfg_path, "--out", out) == 0
        summary = json.loads((out / "summary.json").read_text())
        assert set(summary) >= {"m2_below_background", "g4_slope", "g6_conn_slope",
                                "lambda_rel_spread", "delta6_mean_abs"}
        assert isinstance(summary["m2_below_background"], bool)
        assert math.isfinite(summary["lambda_rel_spread"])
        assert math.isfinite(summary["delta6_mean_abs"])
        for model in ("m0", "m1", "m2", "m3"):
            report = json.loads((out / f"fit_{model}.json").read_text())
            assert {"lambda0", "train_mse", "test_mse", "test_mape"} <= set(report)
        assert json.loads((out / "fit_m0.json").read_text())["test_mape"] == 100.0

    def test_stage_subset_and_order(self, cfg_path, tmp_path, capsys):
        out = tmp_path / "out"
        assert _run("pipeline", "--config", cfg_path, "--out", out,
                    "--stages", "sample,npt") == 0
        assert (out / "npt.csv").exists()
        assert not (out / "lambda.json").exists()
        rc = _run("pipeline", "--config", cfg_path, "--out", out,
                  "--stages", "npt,sample")
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"]["code"] == "bad-stage-order"

    def test_unknown_stage(self, cfg_path, tmp_path, capsys):
        rc = _run("pipeline", "--config", cfg_path, "--out", tmp_path / "o",
                  "--stages", "sample,frobnicate")
        assert rc == 2
        assert json.loads(capsys.readouterr().err)["error"]["code"] == "bad-stage"

    def test_failing_stage_names_itself(self, cfg_path, tmp_path, capsys):
        rc = _run("pipeline", "--config", cfg_path, "--out", tmp_path / "o",
                  "--stages", "npt")
        assert rc == 2
        message = json.loads(capsys.readouterr().err)["error"]["message"]
        assert "stage 'npt' failed" in message
