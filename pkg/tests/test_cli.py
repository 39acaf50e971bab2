import json

import pytest

from context_clustering import build_parser, config_from_args, main
from tree_metrics import LabeledTree, write_newick


@pytest.fixture(autouse=True)
def _isolated_cwd(tmp_path, monkeypatch):
    # le journal fichier est écrit sous ./logs
    monkeypatch.chdir(tmp_path)


@pytest.fixture
def out(tmp_path):
    return tmp_path / "out"


class TestParser:
    def test_global_options_before_or_after_verb(self, fixtures_dir, out):
        before = build_parser().parse_args(["--sources", "src", "--out", str(out), "kernel", "--plain"])
        after = build_parser().parse_args(["kernel", "--sources", "src", "--out", str(out), "--plain"])
        assert config_from_args(before) == config_from_args(after)
        assert config_from_args(before).enrichment == "plain"

    def test_config_file_then_options(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"model": "boi", "weighting": "tfidf", "k": 3}), encoding="utf-8")
        args = build_parser().parse_args(["--config", str(path), "modularize", "--weighting", "none"])
        config = config_from_args(args)
        assert config.model == "boi"
        assert config.weighting == "none"
        assert config.k == 3

    def test_missing_verb(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["--sources", "src"])

    def test_topics_requires_k(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["topics"])


class TestMain:
    def test_ingest(self, fixtures_dir, out):
        code = main([
            "--sources", str(fixtures_dir / "employee"),
            "--libs", str(fixtures_dir / "libs" / "jdk.json"),
            "--out", str(out),
            "ingest",
        ])
        assert code == 0
        assert (out / "facts.jsonl").exists()

    def test_modularize_plain(self, fixtures_dir, out):
        code = main([
            "--sources", str(fixtures_dir / "shop"), "--out", str(out),
            "modularize", "--plain", "--model", "boi", "--k", "5",
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text(encoding="utf-8"))
        assert report["config"]["enrichment"] == "plain"
        assert (out / "partition.json").exists()

    def test_topics(self, fixtures_dir, out):
        code = main(["--sources", str(fixtures_dir / "topics"), "--out", str(out), "topics", "--k", "2", "--plain"])
        assert code == 0
        saved = json.loads((out / "topics.json").read_text(encoding="utf-8"))
        assert [c["members"] for c in saved["clusters"]] == [["blue", "green", "red"], ["depth", "height", "width"]]

    def test_evaluate(self, tmp_path, out):
        a, b, c = LabeledTree("a"), LabeledTree("b"), LabeledTree("c")
        reference = write_newick(LabeledTree("", (LabeledTree("", (a, b)), c)), tmp_path / "ref.nwk")
        produced = write_newick(LabeledTree("", (a, LabeledTree("", (b, c)))), tmp_path / "prod.nwk")
        code = main(["--out", str(out), "evaluate", "--produced", str(produced), "--reference", str(reference)])
        assert code == 0
        report = json.loads((out / "evaluation.json").read_text(encoding="utf-8"))
        assert report["pd"] == 2
        assert report["ted"] == 2

    def test_failure_returns_one(self, out):
        assert main(["--out", str(out), "modularize", "--plain"]) == 1

    def test_bad_config_returns_one(self, tmp_path, out):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"colour": "blue"}), encoding="utf-8")
        assert main(["--config", str(path), "--out", str(out), "heatmap"]) == 1

    def test_log_file(self, fixtures_dir, tmp_path, out):
        main(["--sources", str(fixtures_dir / "employee"), "--out", str(out), "ingest"])
        assert (tmp_path / "logs" / "context_clustering.log").exists()
