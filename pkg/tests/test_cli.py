import json

import numpy as np
import pytest

from mlgcn.cli import (EXIT_BAD_REF, EXIT_FINGERPRINT, EXIT_IO, EXIT_OK,
                       EXIT_USAGE, main, parse_rule, parse_synthetic_spec)

EASY = "k=2,size=15,p-intra=0.5,p-inter=0.02,rho=1"
EASY_TRAIN = ["--synthetic", EASY, "--epochs", "150", "--hidden", "32",
              "--dropout", "0", "--optimizer", "adam", "--lr", "0.02",
              "--alpha", "0.3", "--seed", "5"]


def run(argv):
    return main(argv)


class TestParsers:
    def test_synthetic_spec(self):
        cfg = parse_synthetic_spec("k=3,size=10,p-intra=0.2,p-inter=0.05,rho=0.4",
                                   seed=7)
        assert cfg.communities == 3
        assert cfg.community_size == 10
        assert cfg.p_intra == 0.2
        assert cfg.rho == 0.4
        assert cfg.seed == 7

    def test_bad_synthetic_key(self):
        from mlgcn.cli import UsageError
        with pytest.raises(UsageError):
            parse_synthetic_spec("bogus=1", seed=0)

    def test_rule_parsing(self):
        assert parse_rule("topk") == ("top_k_true", 0.5)
        assert parse_rule("threshold:0.3") == ("threshold", 0.3)
        assert parse_rule("threshold") == ("threshold", 0.5)
        from mlgcn.cli import UsageError
        with pytest.raises(UsageError):
            parse_rule("nonsense")


class TestStats:
    def test_hand_dataset(self, tmp_path, capsys):
        (tmp_path / "e").write_text("1,2\n")
        (tmp_path / "l").write_text("1,a\n2,a\n2,b\n")
        code = run(["stats", "--edges", str(tmp_path / "e"),
                    "--labels", str(tmp_path / "l")])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "2 1 2 1"

    def test_synthetic_stats(self, capsys):
        code = run(["stats", "--synthetic", "k=2,size=10,rho=1", "--seed", "1"])
        assert code == EXIT_OK
        fields = capsys.readouterr().out.split()
        assert fields[0] == "20" and fields[2] == "4" and fields[3] == "2"

    def test_missing_file_exit_2(self, tmp_path):
        code = run(["stats", "--edges", str(tmp_path / "absent"),
                    "--labels", str(tmp_path / "also_absent")])
        assert code == EXIT_IO

    def test_parse_error_reports_line(self, tmp_path, capsys):
        (tmp_path / "e").write_text("1,2\nbroken\n")
        (tmp_path / "l").write_text("1,a\n")
        code = run(["stats", "--edges", str(tmp_path / "e"),
                    "--labels", str(tmp_path / "l")])
        assert code == EXIT_IO
        assert "line 2" in capsys.readouterr().err

    def test_no_dataset_is_usage_error(self):
        assert run(["stats"]) == EXIT_USAGE


class TestTrain:
    def test_deterministic_artifacts(self, tmp_path, capsys):
        argv = ["train", "--synthetic", "k=2,size=12,rho=0.8", "--seed", "7",
                "--epochs", "8", "--hidden", "16"]
        assert run(argv + ["--out", str(tmp_path / "a")]) == EXIT_OK
        assert run(argv + ["--out", str(tmp_path / "b")]) == EXIT_OK
        for name in ("history.csv", "embeddings.tsv"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, f"{name} not byte-identical"

    def test_default_config_echo(self, tmp_path, capsys):
        run(["train", "--synthetic", "k=2,size=10", "--epochs", "2",
             "--out", str(tmp_path / "o")])
        out = capsys.readouterr().out
        # defaults from the experimental protocol
        assert "d_h=400" in out and "alpha=0.2" in out
        assert "N=50" in out and "M=50" in out

    def test_baseline_history_has_zero_label_loss(self, tmp_path):
        run(["train", "--synthetic", "k=2,size=10", "--epochs", "5",
             "--hidden", "8", "--variant", "gcn_baseline",
             "--out", str(tmp_path / "o")])
        lines = (tmp_path / "o" / "history.csv").read_text().splitlines()
        assert lines[0] == "epoch,label_loss,node_loss,total_loss,val_micro_f1"
        for line in lines[1:]:
            assert line.split(",")[1] == "0"

    def test_manifest_contents_and_artifacts(self, tmp_path):
        out = tmp_path / "o"
        run(["train", "--synthetic", "k=2,size=10", "--epochs", "3",
             "--hidden", "8", "--seed", "3", "--out", str(out)])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["seed"] == 3
        assert manifest["config"]["epochs"] == 3
        assert manifest["dataset"]["synthetic"] == "k=2,size=10"
        assert manifest["dataset"]["fingerprint"]
        assert manifest["split_sizes"]["train"] == 4
        for key in ("checkpoint", "history", "embeddings", "manifest"):
            assert (out / manifest["artifacts"][key].split("/")[-1]).exists()

    def test_manifest_reproduces_run(self, tmp_path):
        out1 = tmp_path / "o1"
        run(["train", "--synthetic", "k=2,size=12,rho=0.7", "--epochs", "6",
             "--hidden", "8", "--seed", "11", "--out", str(out1)])
        manifest = json.loads((out1 / "manifest.json").read_text())
        # rebuild the command line from the manifest alone
        cfg = manifest["config"]
        argv = ["train", "--synthetic", manifest["dataset"]["synthetic"],
                "--seed", str(manifest["seed"]),
                "--epochs", str(cfg["epochs"]),
                "--hidden", str(cfg["hidden_dim"]),
                "--lr", str(cfg["learning_rate"]),
                "--alpha", str(cfg["train_ratio"]),
                "--freq-n", str(cfg["update_freq_nodes"]),
                "--freq-m", str(cfg["update_freq_labels"]),
                "--dropout", str(cfg["dropout"]),
                "--decay", str(cfg["weight_decay"]),
                "--variant", cfg["variant"],
                "--label-layers", str(cfg["label_gcn_layers"]),
                "--node-layers", str(cfg["node_gcn_layers"]),
                "--optimizer", cfg["optimizer"],
                "--rule", manifest["rule"],
                "--out", str(tmp_path / "o2")]
        assert run(argv) == EXIT_OK
        assert ((out1 / "history.csv").read_bytes()
                == (tmp_path / "o2" / "history.csv").read_bytes())

    def test_divergence_exit_code(self, tmp_path):
        with np.errstate(over="ignore", invalid="ignore"):
            code = run(["train", "--synthetic", "k=2,size=8", "--epochs", "30",
                        "--hidden", "8", "--dropout", "0", "--lr", "1e154",
                        "--out", str(tmp_path / "o")])
        assert code == 1

    def test_conflicting_dataset_flags(self, tmp_path):
        code = run(["train", "--synthetic", "k=2", "--edges", "x",
                    "--labels", "y", "--out", str(tmp_path / "o")])
        assert code == EXIT_USAGE


@pytest.fixture(scope="module")
def easy_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("easy")
    code = main(["train", *EASY_TRAIN, "--out", str(out)])
    assert code == EXIT_OK
    return out


class TestEval:
    def test_metrics_file_with_both_rules(self, easy_run, tmp_path):
        metrics = tmp_path / "metrics.json"
        code = run(["eval", "--checkpoint", str(easy_run / "checkpoint.npz"),
                    "--synthetic", EASY, "--metrics", str(metrics)])
        assert code == EXIT_OK
        doc = json.loads(metrics.read_text())
        for subset in ("train", "val", "test"):
            assert "top_k_true" in doc["results"][subset]
            assert "threshold:0.5" in doc["results"][subset]
        # perfect fit on the training subset
        train_block = doc["results"]["train"]["top_k_true"]
        assert train_block["micro_f1"] == 1.0
        assert train_block["macro_f1"] == 1.0
        assert len(doc["results"]["test"]["top_k_true"]["per_label"]) == 4

    def test_fingerprint_mismatch_exit_3(self, easy_run, tmp_path):
        code = run(["eval", "--checkpoint", str(easy_run / "checkpoint.npz"),
                    "--synthetic", "k=2,size=14,p-intra=0.5,rho=1",
                    "--metrics", str(tmp_path / "m.json")])
        assert code == EXIT_FINGERPRINT


class TestSweep:
    def test_grid_rows_with_std(self, tmp_path):
        out = tmp_path / "sweep"
        code = run(["sweep", "--synthetic", "k=2,size=10,rho=0.8",
                    "--epochs", "4", "--hidden", "8",
                    "--grid", "alpha=0.2,0.3", "--repeats", "2",
                    "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        assert lines[0] == "alpha,metric,mean,std,repeats,error"
        assert len(lines) == 1 + 2 * 2  # 2 grid points x 2 metrics
        for line in lines[1:]:
            fields = line.split(",")
            assert fields[1] in ("micro_f1", "macro_f1")
            assert fields[4] == "2"
            assert float(fields[3]) >= 0.0

    def test_single_repeat_zero_std(self, tmp_path):
        out = tmp_path / "sweep"
        code = run(["sweep", "--synthetic", "k=2,size=10", "--epochs", "3",
                    "--hidden", "8", "--grid", "hidden=8", "--repeats", "1",
                    "--out", str(out)])
        assert code == EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        for line in lines[1:]:
            assert float(line.split(",")[2]) >= 0.0
            assert float(line.split(",")[3]) == 0.0

    def test_empty_grid_usage_error(self, tmp_path):
        code = run(["sweep", "--synthetic", "k=2,size=10",
                    "--repeats", "1", "--out", str(tmp_path / "s")])
        assert code == EXIT_USAGE

    def test_failed_child_recorded_and_nonzero_exit(self, tmp_path):
        out = tmp_path / "sweep"
        with np.errstate(over="ignore", invalid="ignore"):
            code = run(["sweep", "--synthetic", "k=2,size=8", "--epochs", "30",
                        "--hidden", "8", "--dropout", "0",
                        "--grid", "lr=0.02,1e154", "--repeats", "1",
                        "--out", str(out)])
        assert code != EXIT_OK
        lines = (out / "sweep.csv").read_text().splitlines()
        failed = [line for line in lines[1:] if "DivergenceError" in line]
        ok = [line for line in lines[1:] if line.split(",")[0] == "0.02"
              and line.split(",")[2] != ""]
        assert failed and ok


class TestCaseStudy:
    def test_per_label_table_and_correlation(self, easy_run, tmp_path, capsys):
        corr_path = tmp_path / "correlation.csv"
        code = run(["case-study",
                    "--checkpoint", str(easy_run / "checkpoint.npz"),
                    "--synthetic", EASY,
                    "--labels-list", "home0,corr0",
                    "--correlation-out", str(corr_path)])
        assert code == EXIT_OK
        out = capsys.readouterr().out.splitlines()
        table = [line for line in out if line.startswith(("home0", "corr0"))]
        assert len(table) == 2
        lines = corr_path.read_text().splitlines()
        header = lines[0].split(",")
        assert header[0] == "label" and len(header) == 5
        matrix = np.array([[float(v) for v in line.split(",")[1:]]
                           for line in lines[1:]])
        assert matrix.shape == (4, 4)
        assert np.array_equal(matrix, matrix.T)
        assert np.array_equal(np.diag(matrix), np.ones(4))

    def test_unknown_label_exit_4(self, easy_run, tmp_path):
        code = run(["case-study",
                    "--checkpoint", str(easy_run / "checkpoint.npz"),
                    "--synthetic", EASY,
                    "--labels-list", "L99",
                    "--correlation-out", str(tmp_path / "c.csv")])
        assert code == EXIT_BAD_REF
