import filecmp
import json
import os

import pytest

from mbrollout import config as config_mod
from mbrollout.cli import main
from mbrollout.config import ExperimentConfig, load_config, save_config
from mbrollout.schemas import validate_csv


@pytest.fixture(scope="module")
def mini_config(tmp_path_factory):
    """A miniature experiment that exercises every stage in seconds."""
    cfg = ExperimentConfig()
    cfg.n_tuples = 300
    cfg.dynamics_train.max_epochs = 15
    cfg.dynamics_train.patience_epochs = 15
    cfg.q_train.max_epochs = 30
    cfg.q_train.patience_epochs = 10
    cfg.value.n_start_states = 10
    cfg.value.fqe_iterations = 3
    cfg.value.k_horizon = 20
    cfg.value.true_max_steps = 100
    cfg.value.seeds = (0, 1)
    cfg.learn.nfq_iterations = 2
    cfg.learn.bsf_iterations = 2
    cfg.learn.bsf_k_horizon = 10
    cfg.learn.fit_epochs = 2
    cfg.learn.seeds = (0, 1)
    cfg.policy_eval.n_episodes = 5
    cfg.policy_eval.max_steps = 50
    cfg.rollout_compare_steps = 30
    path = tmp_path_factory.mktemp("cfg") / "mini.ini"
    save_config(cfg, path)
    return str(path)


def run_pipeline(out, mini_config):
    for argv in (
        ["generate", "--config", mini_config, "--out", out],
        ["train-models", "--config", mini_config, "--out", out],
        ["rollout-compare", "--config", mini_config, "--out", out],
        ["evaluate-values", "--config", mini_config, "--out", out],
        ["learn", "--algorithm", "nfq", "--config", mini_config, "--out", out],
        ["learn", "--algorithm", "bsf-nfq", "--config", mini_config, "--out", out],
        ["report", "--config", mini_config, "--out", out],
    ):
        assert main(argv) == 0, argv


@pytest.fixture(scope="module")
def pipeline_out(tmp_path_factory, mini_config):
    out = str(tmp_path_factory.mktemp("out"))
    run_pipeline(out, mini_config)
    return out


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = config_mod.paper_preset()
        path = tmp_path / "c.ini"
        save_config(cfg, path)
        loaded = load_config(path)
        assert loaded == cfg

    def test_presets_differ(self):
        desk = config_mod.desk_preset()
        paper = config_mod.paper_preset()
        assert paper.learn.nfq_iterations == 1000
        assert paper.learn.bsf_iterations == 100
        assert paper.policy_eval.n_episodes == 1000
        assert paper.policy_eval.max_steps == 5000
        assert desk.learn.nfq_iterations == 100
        assert desk.learn.bsf_iterations == 20

    def test_seed_offset(self):
        cfg = config_mod.desk_preset()
        shifted = cfg.with_seed_offset(5)
        assert shifted.data_seed == cfg.data_seed + 5
        assert shifted.value.seeds == tuple(s + 5 for s in cfg.value.seeds)


class TestPipeline:
    def test_outputs_exist(self, pipeline_out):
        expected = [
            "dataset.csv", "dataset.csv.meta.json", "env_config.txt",
            "models/best/manifest.json", "models/epoch1/manifest.json",
            "models/manifest.json", "learning_curves/theta.csv",
            "value_estimates.csv", "value_summary.json",
            "nfq/summary.json", "bsf-nfq/summary.json", "report.json",
        ]
        for rel in expected:
            assert os.path.exists(os.path.join(pipeline_out, rel)), rel

    def test_divergence_files(self, pipeline_out):
        files = os.listdir(os.path.join(pipeline_out, "rollout_compare"))
        assert len(files) == 8  # 4 tiers x {blind, informed}

    def test_csv_schemas(self, pipeline_out):
        assert validate_csv(os.path.join(pipeline_out, "dataset.csv"), "dataset") == 300
        assert validate_csv(os.path.join(pipeline_out, "value_estimates.csv"), "values") == 20
        assert validate_csv(os.path.join(pipeline_out, "nfq", "seed0.csv"),
                            "learning_run") == 2
        for f in os.listdir(os.path.join(pipeline_out, "rollout_compare")):
            validate_csv(os.path.join(pipeline_out, "rollout_compare", f), "divergence")
        validate_csv(os.path.join(pipeline_out, "learning_curves", "theta.csv"),
                     "learning_curve")

    def test_value_summary_shape(self, pipeline_out):
        with open(os.path.join(pipeline_out, "value_summary.json")) as fh:
            summary = json.load(fh)
        assert set(summary) == {"mbro", "fitted_mbro", "fqe"}
        for metrics in summary.values():
            assert {"rmse_mean", "rmse_stderr", "correlation_mean",
                    "correlation_stderr"} <= set(metrics)

    def test_learn_summary_shape(self, pipeline_out):
        with open(os.path.join(pipeline_out, "nfq", "summary.json")) as fh:
            summary = json.load(fh)
        assert summary["iterations"] == 2
        assert "optimal_policy_ratio_mean" in summary

    def test_report_collects_summaries(self, pipeline_out):
        with open(os.path.join(pipeline_out, "report.json")) as fh:
            report = json.load(fh)
        assert any("value_summary" in k for k in report)
        assert any("nfq" in k for k in report)

    def test_unknown_algorithm_exits_nonzero(self, mini_config, tmp_path):
        with pytest.raises(SystemExit):
            main(["learn", "--algorithm", "sarsa", "--config", mini_config,
                  "--out", str(tmp_path)])

    def test_unwritable_output(self, mini_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        rc = main(["generate", "--config", mini_config,
                   "--out", str(blocker / "nested")])
        assert rc != 0


class TestDeterminism:
    def test_rerun_bit_identical(self, tmp_path, mini_config, pipeline_out):
        out2 = str(tmp_path / "out2")
        run_pipeline(out2, mini_config)
        mismatches = []
        for root, _, files in os.walk(pipeline_out):
            for name in files:
                a = os.path.join(root, name)
                rel = os.path.relpath(a, pipeline_out)
                b = os.path.join(out2, rel)
                if not (os.path.exists(b) and filecmp.cmp(a, b, shallow=False)):
                    mismatches.append(rel)
        assert mismatches == []
