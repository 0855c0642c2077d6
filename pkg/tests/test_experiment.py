import json

import pytest

from trontrain import cli
from trontrain.experiment import bundled_config, config_hash, load_config, run_experiment


@pytest.fixture
def small_case1():
    cfg = load_config(bundled_config("case1_unif2d.toml"))
    cfg["training"]["mc_samples"] = 20_000
    cfg["training"]["repeats"] = 4
    return cfg


class TestRun:
    def test_artifacts(self, small_case1, tmp_path):
        assert run_experiment(small_case1, tmp_path) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["config_hash"] == config_hash(summary["config"])
        assert summary["constants"]["provenance"]["source"] == "monte_carlo"
        assert sorted(p.name for p in tmp_path.glob("trace_*.csv")) == [f"trace_{i}.csv" for i in range(4)]
        assert (tmp_path / "trace_0.csv").read_text().startswith("t,sq_err\n")

    def test_byte_identical(self, small_case1, tmp_path):
        run_experiment(small_case1, tmp_path / "a", seed=3)
        run_experiment(small_case1, tmp_path / "b", seed=3)
        for name in ("summary.json", "trace_0.csv", "trace_3.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_thread_cap_does_not_change_output(self, small_case1, tmp_path, monkeypatch):
        monkeypatch.setenv("TRONTRAIN_THREADS", "1")
        run_experiment(small_case1, tmp_path / "a")
        monkeypatch.setenv("TRONTRAIN_THREADS", "4")
        monkeypatch.setattr("os.cpu_count", lambda: 4)
        run_experiment(small_case1, tmp_path / "b")
        assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()

    def test_dry_run_writes_nothing(self, small_case1, tmp_path, capsys):
        assert run_experiment(small_case1, tmp_path / "o", dry_run=True) == 0
        assert not (tmp_path / "o").exists()
        assert '"predicted_T"' in capsys.readouterr().out

    def test_invalid_gamma(self, tmp_path, capsys):
        cfg = load_config(bundled_config("case2_unif2d.toml"))
        cfg["training"].update(mc_samples=20_000, gamma=1.0)
        assert run_experiment(cfg, tmp_path) == 2
        assert "gamma > max(b1^2/c1" in capsys.readouterr().err

    def test_unknown_algorithm(self, tmp_path):
        assert run_experiment({"algorithm": "nope"}, tmp_path) == 2

    def test_failed_assertion(self, small_case1, tmp_path):
        small_case1["assertions"] = {"max_mean_final_sq_err": 0.0}
        assert run_experiment(small_case1, tmp_path) == 1

    @pytest.mark.parametrize("algorithm,training", [
        ("glm_tron", {"n": 3, "samples": 50, "epsilon": 0.1, "repeats": 2}),
        ("neurotron", {"r": 2, "n": 3, "k": 1, "samples": 20, "eps": 1e-3, "repeats": 2}),
    ])
    def test_other_algorithms(self, algorithm, training, tmp_path):
        cfg = {"algorithm": algorithm, "seed": 1, "training": training}
        assert run_experiment(cfg, tmp_path) == 0
        assert (tmp_path / "trace_1.csv").exists()


class TestCli:
    def test_verify_recursion(self, capsys):
        assert cli.main(["verify-recursion", "--lemma", "recurse1", "--draws", "50", "--seed", "2"]) == 0
        assert json.loads(capsys.readouterr().out)["certified"] == 50

    def test_moments_keys(self, capsys):
        assert cli.main(["moments", "uniform:-1,1", "--w-star", "-1", "1", "--samples", "10000"]) == 0
        keys = set(json.loads(capsys.readouterr().out))
        assert keys == {"a1", "a2", "a3", "a4", "beta1", "beta2", "beta3", "lambda1_theta", "theta_star", "n_samples"}

    def test_run_bundled_dry(self, capsys):
        assert cli.main(["run", "case1_unif2d.toml", "--dry-run", "--seed", "1"]) == 0
        assert '"seed": 1' in capsys.readouterr().out

    def test_missing_config(self):
        assert cli.main(["run", "does-not-exist.toml"]) == 2

    def test_relu_tron_command(self, tmp_path, capsys):
        args = ["relu-tron", "--theta-star", "0.1", "--beta", "0.2", "--batch", "4", "--eps", "0.5",
                "--delta", "0.1", "--repeats", "2", "--samples", "20000", "--seed", "1", "--out", str(tmp_path)]
        assert cli.main(args) == 0
        assert json.loads((tmp_path / "summary.json").read_text())["n_repeats"] == 2

    def test_parse_beta(self):
        assert cli.parse_beta("constant:0.3").p == 0.3
        hb = cli.parse_beta("halfspace:0.5:1,0")
        assert hb.v == (1.0, 0.0) and hb.p == 0.5
