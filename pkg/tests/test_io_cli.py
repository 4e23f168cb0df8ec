import json

import numpy as np
import pytest

from snembed import cli, io
from snembed.model import SignedNetwork
from snembed.optimizer import DivergenceError, FitConfig


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_fast_config(path, **kw):
    io.write_config(path, FitConfig(max_iter=40, **kw))
    return path


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    out = tmp_path_factory.mktemp("gen")
    assert run("generate", "--example", 1, "--n", 200, "--a-n", 0.1, "--seed", 7,
               "--out", out) == 0
    return out


@pytest.fixture(scope="module")
def fitted(tmp_path_factory):
    root = tmp_path_factory.mktemp("fit")
    assert run("generate", "--n", 60, "--a-n", 0.2, "--seed", 3, "--out", root / "g") == 0
    cfg = write_fast_config(root / "cfg.txt", a_n=0.2)
    assert run("fit", "--edges", root / "g" / "edges.tsv", "--config", cfg,
               "--out", root / "f") == 0
    return root


class TestEdgeFiles:
    def test_round_trip(self, tmp_path, rng):
        from conftest import random_network
        for n in (1, 2, 9, 30):
            Y = random_network(rng, n, 0.4)
            io.write_edges(tmp_path / "e.tsv", Y)
            assert io.read_edges(tmp_path / "e.tsv") == Y

    def test_trailing_isolated_nodes_survive(self, tmp_path):
        Y = SignedNetwork.from_pairs(6, [(0, 1, 1)])
        io.write_edges(tmp_path / "e.tsv", Y)
        assert io.read_edges(tmp_path / "e.tsv").n == 6

    @pytest.mark.parametrize("body,line", [
        ("i\tj\tsign\n0\t1\t1\n0\t2\n", 3),
        ("i\tj\tsign\n0\t1\t2\n", 2),
        ("i\tj\tsign\n0\t1\t1\n1\t1\t-1\n", 3),
        ("i\tj\tsign\n0\tx\t1\n", 2),
        ("i\tj\tsign\n0\t1\t1\n1\t0\t-1\n", 3),
        ("i\tj\tsign\n-1\t1\t1\n", 2),
    ])
    def test_errors_report_line(self, tmp_path, body, line):
        p = tmp_path / "bad.tsv"
        p.write_text(body)
        with pytest.raises(io.ParseError) as info:
            io.read_edges(p)
        assert info.value.line == line
        assert f":{line}:" in str(info.value)

    def test_lossless_floats(self, tmp_path, rng):
        X = rng.normal(size=(5, 3)) * 10.0 ** rng.integers(-8, 8, size=(5, 3))
        io.write_matrix(tmp_path / "m.csv", X, "b")
        np.testing.assert_array_equal(io.read_matrix(tmp_path / "m.csv"), X)

    def test_config_round_trip(self, tmp_path):
        cfg = FitConfig(K1=2, K2=4, a_n=0.25, xi1=0.003, learn_intercepts=True, link="probit")
        io.write_config(tmp_path / "c.txt", cfg)
        assert io.read_config(tmp_path / "c.txt") == cfg

    def test_config_errors(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("K1 = 2\nbogus = 1\n")
        with pytest.raises(io.ParseError) as info:
            io.read_config(p)
        assert info.value.line == 2
        p.write_text("# comment\nK1 = two\n")
        with pytest.raises(io.ParseError) as info:
            io.read_config(p)
        assert info.value.line == 2


class TestGenerate:
    def test_format_contract(self, generated):
        Y = io.read_edges(generated / "edges.tsv")
        assert Y.n == 200
        lines = (generated / "edges.tsv").read_text().splitlines()
        records = [tuple(map(int, l.split("\t"))) for l in lines if l and l[0].isdigit()]
        assert all(i < j and s in (-1, 1) for i, j, s in records)
        assert len(records) == len(set((i, j) for i, j, _ in records))
        _, rows = io.read_csv(generated / "truth_labels.csv")
        assert len(rows) == 200
        man = json.loads((generated / "manifest.json").read_text())
        for name in ("edges.tsv", "truth_labels.csv", "truth_support.csv", "manifest.json"):
            assert name in man["outputs"]
            assert (generated / name).exists()

    def test_deterministic(self, generated, tmp_path):
        assert run("generate", "--example", 1, "--n", 200, "--a-n", 0.1, "--seed", 7,
                   "--out", tmp_path) == 0
        assert (tmp_path / "edges.tsv").read_bytes() == (generated / "edges.tsv").read_bytes()
        assert ((tmp_path / "truth_support.csv").read_bytes()
                == (generated / "truth_support.csv").read_bytes())

    def test_empty_support(self, tmp_path):
        assert run("generate", "--n", 40, "--a-n", 0, "--out", tmp_path) == 0
        header, rows = io.read_csv(tmp_path / "truth_support.csv")
        assert header == ["i", "j"] and rows == []

    def test_bad_parameters(self, tmp_path):
        assert run("generate", "--n", 4, "--out", tmp_path) == cli.EXIT_PARSE

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run("generate", "--n", 20, "--out", blocker / "sub") == cli.EXIT_IO


class TestFit:
    def test_outputs_and_constraints(self, fitted):
        f = fitted / "f"
        for name in ("B_hat.csv", "A_hat.csv", "intercepts.json", "objective_trace.csv",
                     "manifest.json", "objective_trace.png"):
            assert (f / name).exists()
        report = json.loads((f / "constraints.json").read_text())
        flags = [k for k, v in report.items() if isinstance(v, bool) and k != "converged"]
        assert flags and all(report[k] for k in flags)
        _, trace = io.read_csv(f / "objective_trace.csv")
        assert float(trace[-1][1]) <= float(trace[0][1])

    def test_zero_anomaly_rate(self, fitted, tmp_path):
        cfg = write_fast_config(tmp_path / "cfg.txt", a_n=0.0)
        assert run("fit", "--edges", fitted / "g" / "edges.tsv", "--config", cfg,
                   "--out", tmp_path / "f") == 0
        assert np.all(io.read_matrix(tmp_path / "f" / "A_hat.csv") == 0)

    def test_missing_file(self, tmp_path):
        assert run("fit", "--edges", tmp_path / "nope.tsv", "--out", tmp_path) == cli.EXIT_PARSE

    def test_malformed_file(self, tmp_path, capsys):
        p = tmp_path / "bad.tsv"
        p.write_text("i\tj\tsign\n0\t1\t1\n0\t1\t7\n")
        assert run("fit", "--edges", p, "--out", tmp_path / "o") == cli.EXIT_PARSE
        assert "bad.tsv:3" in capsys.readouterr().err

    def test_divergence_exit_code(self, fitted, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise DivergenceError("objective became nan")
        monkeypatch.setattr(cli, "fit", boom)
        assert run("fit", "--edges", fitted / "g" / "edges.tsv",
                   "--out", tmp_path) == cli.EXIT_DIVERGED


class TestDetect:
    def test_median_eta(self, fitted, tmp_path):
        assert run("detect", "--fit-dir", fitted / "f", "--m", 4, "--restarts", 5,
                   "--out", tmp_path) == 0
        from snembed.detection import anomaly_scores, default_eta
        A = io.read_matrix(fitted / "f" / "A_hat.csv")
        eta = json.loads((tmp_path / "eta.json").read_text())
        assert eta["rule"] == "median"
        assert eta["eta"] == default_eta(anomaly_scores(A))
        _, rows = io.read_csv(tmp_path / "labels.csv")
        assert {int(r[1]) for r in rows} <= {1, 2, 3, 4}
        for name in ("anomalies.csv", "heatmap_L.csv", "boxplot_s.csv", "heatmap_L.png",
                     "boxplot_s.png", "manifest.json"):
            assert (tmp_path / name).exists()

    def test_given_eta(self, fitted, tmp_path):
        assert run("detect", "--fit-dir", fitted / "f", "--m", 2, "--eta", 1e9,
                   "--restarts", 2, "--out", tmp_path) == 0
        _, rows = io.read_csv(tmp_path / "anomalies.csv")
        assert rows == []

    def _block_fit(self, root):
        centers = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        labels = np.repeat([0, 1, 2], 5)
        B = centers[labels] - centers[labels].mean(0)
        io.write_matrix(root / "B_hat.csv", B, "b")
        io.write_matrix(root / "A_hat.csv", np.zeros((15, 2)), "a")
        io.write_json(root / "intercepts.json",
                      {"d0": 1.0, "d1": -1.0, "delta": 0.1, "c1": -10.0, "c2": 10.0})
        pairs = [(i, j, 1 if labels[i] == labels[j] else -1)
                 for i in range(15) for j in range(i + 1, 15)]
        pairs[0] = (0, 1, -1)
        io.write_edges(root / "edges.tsv", SignedNetwork.from_pairs(15, pairs))
        return labels

    def test_block_heatmap(self, tmp_path):
        fit_dir = tmp_path / "fit"
        fit_dir.mkdir()
        self._block_fit(fit_dir)
        assert run("detect", "--fit-dir", fit_dir, "--m", 3, "--edges", fit_dir / "edges.tsv",
                   "--restarts", 5, "--out", tmp_path / "d") == 0
        _, rows = io.read_csv(tmp_path / "d" / "heatmap_L.csv")
        lab = np.array([int(r[1]) for r in rows])
        L = np.array([[float(x) for x in r[2:]] for r in rows])
        same = lab[:, None] == lab[None, :]
        assert L[same].min() > L[~same].max()
        assert np.all(np.diff(lab) >= 0)
        header, box = io.read_csv(tmp_path / "d" / "boxplot_s.csv")
        groups = {r[0] for r in box}
        assert groups == {"within_negative", "cross_positive"} or groups == {"within_negative"}

    def test_single_community(self, tmp_path):
        fit_dir = tmp_path / "fit"
        fit_dir.mkdir()
        self._block_fit(fit_dir)
        assert run("detect", "--fit-dir", fit_dir, "--m", 1, "--edges", fit_dir / "edges.tsv",
                   "--out", tmp_path / "d") == 0
        _, rows = io.read_csv(tmp_path / "d" / "labels.csv")
        assert {r[1] for r in rows} == {"1"}
        _, box = io.read_csv(tmp_path / "d" / "boxplot_s.csv")
        assert not [r for r in box if r[0] == "cross_positive"]

    def test_missing_artifacts(self, tmp_path):
        assert run("detect", "--fit-dir", tmp_path, "--m", 2,
                   "--out", tmp_path / "d") == cli.EXIT_IO


class TestEvaluate:
    def test_metrics(self, fitted, tmp_path):
        assert run("detect", "--fit-dir", fitted / "f", "--m", 4, "--restarts", 5,
                   "--out", tmp_path / "d") == 0
        assert run("evaluate", "--detect-dir", tmp_path / "d", "--truth-dir", fitted / "g",
                   "--fit-dir", fitted / "f", "--out", tmp_path / "e") == 0
        metrics = json.loads((tmp_path / "e" / "metrics.json").read_text())
        assert 0 <= metrics["community_error"] <= 1
        assert 0 <= metrics["false_discovery_proportion"] <= 1
        assert metrics["frobenius_error"] >= 0


class TestSelect:
    def test_singleton_grid(self, fitted, tmp_path):
        cfg = write_fast_config(tmp_path / "cfg.txt", a_n=0.2)
        assert run("select", "--edges", fitted / "g" / "edges.tsv", "--m-min", 4,
                   "--m-max", 4, "--config", cfg, "--out", tmp_path / "s") == 0
        chosen = json.loads((tmp_path / "s" / "chosen_m.json").read_text())
        assert chosen == {"chosen_m": 4, "criterion": "blockmodel"}
        header, rows = io.read_csv(tmp_path / "s" / "selection.csv")
        assert header[:4] == ["m", "score", "neg_log_likelihood", "df"]
        assert rows[0][3] == "20"
        assert len(rows) == 1

    def test_embedding_criterion(self, fitted, tmp_path):
        cfg = write_fast_config(tmp_path / "cfg.txt", a_n=0.2)
        assert run("select", "--edges", fitted / "g" / "edges.tsv", "--m-min", 2, "--m-max", 3,
                   "--criterion", "embedding", "--config", cfg, "--out", tmp_path / "s") == 0
        _, rows = io.read_csv(tmp_path / "s" / "selection.csv")
        assert [r[3] for r in rows] == ["122", "242"]
        assert all(r[4] == "" for r in rows)

    def test_unparseable_edges(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("garbage\n")
        assert run("select", "--edges", p, "--out", tmp_path / "s") == cli.EXIT_PARSE

    def test_bad_grid(self, fitted, tmp_path):
        assert run("select", "--edges", fitted / "g" / "edges.tsv", "--m-min", 1,
                   "--out", tmp_path) == cli.EXIT_PARSE

    def test_all_failed(self, fitted, tmp_path, monkeypatch):
        import snembed.select as sel

        def boom(*a, **k):
            raise DivergenceError("nan")
        monkeypatch.setattr(sel, "fit", boom)
        assert run("select", "--edges", fitted / "g" / "edges.tsv", "--m-min", 2, "--m-max", 3,
                   "--out", tmp_path) == cli.EXIT_DIVERGED


class TestBenchmark:
    ARGS = ("--n", 40, "--a-n", 0, 0.2, "--reps", 1, "--restarts", 3, "--seed", 5)

    def test_single_rep(self, tmp_path):
        cfg = write_fast_config(tmp_path / "cfg.txt")
        assert run("benchmark", *self.ARGS, "--config", cfg, "--out", tmp_path / "b") == 0
        header, rows = io.read_csv(tmp_path / "b" / "table1_like.csv")
        assert header == ["n", "a_n=0", "a_n=0 se", "a_n=0.2", "a_n=0.2 se"]
        assert rows[0][2] == "" and rows[0][4] == ""
        assert float(rows[0][1]) >= 0
        header, rows = io.read_csv(tmp_path / "b" / "table3_like.csv")
        assert header == ["n", "a_n=0.2", "a_n=0.2 se"]

    def test_deterministic(self, tmp_path):
        cfg = write_fast_config(tmp_path / "cfg.txt")
        for d in ("b1", "b2"):
            assert run("benchmark", *self.ARGS, "--reps", 2, "--config", cfg,
                       "--deterministic", "--out", tmp_path / d) == 0
        for name in ("replications.csv", "summary.csv", "table1_like.csv", "table3_like.csv"):
            assert (tmp_path / "b1" / name).read_bytes() == (tmp_path / "b2" / name).read_bytes()

    def test_invalid_reps(self, tmp_path):
        with pytest.raises(SystemExit):
            run("benchmark", "--reps", 0, "--out", tmp_path)
