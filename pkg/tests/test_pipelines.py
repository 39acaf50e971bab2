import json
import math
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from corpus_ingest import CorpusFacts, UnitFacts, load_facts
from errors import ClusteringInputError, ConfigError, PipelineStageError
from pipelines import (
    CorpusInputs,
    evaluate,
    export_ddgs,
    export_facts,
    export_kernel,
    export_network,
    export_similarity,
    format_delta,
    heatmap,
    modularize,
    module_type_tables,
    topics,
)
from settings import PipelineConfig
from tree_metrics import LabeledTree, write_newick
from vector_models import DocFeatureMatrix, FeatureSpace

SHOP_PACKAGES = ["billing", "catalog", "reports", "shipping", "users"]


@pytest.fixture
def shop_config(fixtures_dir, tmp_path):
    return PipelineConfig(sources=str(fixtures_dir / "shop"), out=str(tmp_path / "out"), libs=None)


def _tree(text_leaves) -> LabeledTree:
    if isinstance(text_leaves, str):
        return LabeledTree(text_leaves)
    return LabeledTree("", tuple(_tree(child) for child in text_leaves))


class TestFormatDelta:
    def test_values(self):
        assert format_delta(7, 17) == "-58.82%"
        assert format_delta(3, 2) == "+50.00%"
        assert format_delta(2, 2) == "+0.00%"
        assert format_delta(1, 0) == "n/a"


class TestModularize:
    # Valeurs de référence sur fixtures/shop (BoI brut, idf, lien complet)
    PLAIN_PD, PLAIN_TED = 8940, 59

    def test_enriched_beats_plain(self, shop_config):
        plain = modularize(shop_config.with_overrides(model="boi", enrichment="plain"), write=False)
        enriched = modularize(shop_config.with_overrides(enrichment="ssk1"), write=False)
        assert plain.report.baseline_pd is None
        assert plain.report.pd == pytest.approx(self.PLAIN_PD)
        assert plain.report.ted == self.PLAIN_TED
        assert enriched.report.pd == pytest.approx(7040)
        assert enriched.report.ted == 57
        assert enriched.report.pd < plain.report.pd
        assert enriched.report.baseline_pd == plain.report.pd
        assert enriched.report.baseline_ted == plain.report.ted
        assert enriched.report.delta_pd == format_delta(7040, 8940)

    def test_enriched_recovers_packages(self, shop_config):
        result = modularize(
            shop_config.with_overrides(model="boit", enrichment="custom", concept="wup", lexical="lcu", k=5),
            with_baseline=False,
        )
        groups = result.dendrogram.cut(5)
        assert [{name.split(".")[1] for name in group} for group in groups] == [{p} for p in SHOP_PACKAGES]
        assert all(len(group) == 5 for group in groups)
        partition = json.loads((Path(shop_config.out) / "partition.json").read_text(encoding="utf-8"))
        assert partition["k"] == 5

    def test_graph_kernel_beats_plain(self, shop_config):
        result = modularize(shop_config.with_overrides(enrichment="ssk2"), write=False)
        assert result.report.pd == pytest.approx(7284)
        assert result.report.ted == 27
        assert result.report.baseline_pd == pytest.approx(self.PLAIN_PD)
        assert result.report.pd < result.report.baseline_pd

    def test_kernel_and_distance(self, shop_config):
        result = modularize(shop_config.with_overrides(model="boi", enrichment="plain"), write=False)
        np.testing.assert_allclose(np.diag(result.kernel), 1.0)
        np.testing.assert_allclose(result.distance, 1.0 - result.kernel)
        assert len(result.labels) == 25
        assert sorted(result.produced.leaves()) == sorted(result.authoritative.leaves())

    def test_artifacts_and_determinism(self, shop_config):
        config = shop_config.with_overrides(model="boi", enrichment="plain")
        modularize(config)
        out = Path(config.out)
        first = (out / "report.json").read_text(encoding="utf-8")
        modularize(config)
        assert (out / "report.json").read_text(encoding="utf-8") == first
        data = json.loads(first)
        assert set(data) == {"config", "pd", "ted", "baseline", "delta", "artifacts"}
        assert "timings" not in first
        for name in ("dendrogram.nwk", "authoritative.nwk", "kernel.csv", "distance.csv"):
            assert (out / name).exists()
        kernel = pd.read_csv(out / "kernel.csv", index_col=0)
        assert kernel.shape == (25, 25)

    def test_baseline_from_report(self, shop_config, tmp_path):
        previous = tmp_path / "previous.json"
        previous.write_text(json.dumps({"pd": 1000.0, "ted": 100}), encoding="utf-8")
        config = shop_config.with_overrides(
            enrichment="ssk1", baseline_report=str(previous)
        )
        result = modularize(config, write=False)
        assert result.report.baseline_pd == 1000.0
        assert result.report.delta_pd == format_delta(result.report.pd, 1000.0)

    def test_missing_input_is_labelled(self, tmp_path):
        config = PipelineConfig(model="boi", enrichment="plain", out=str(tmp_path), sources=None, facts=None)
        with pytest.raises(PipelineStageError) as info:
            modularize(config, write=False)
        assert info.value.stage == "ingest"
        assert str(info.value).startswith("[ingest]")
        assert isinstance(info.value.cause, ConfigError)

    def test_missing_facts_file(self, tmp_path):
        config = PipelineConfig(model="boi", enrichment="plain", facts=str(tmp_path / "absent.jsonl"))
        with pytest.raises(PipelineStageError) as info:
            modularize(config, write=False)
        assert info.value.stage == "ingest"

    def test_graph_model_needs_sources(self, employee_facts, jdk_libs):
        with pytest.raises(ConfigError):
            CorpusInputs(employee_facts, jdk_libs).ordered_units()


class TestTopics:
    def test_plain_split(self, fixtures_dir, tmp_path):
        config = PipelineConfig(
            model="boit", enrichment="plain", sources=str(fixtures_dir / "topics"), out=str(tmp_path)
        )
        result = topics(config, 2)
        assert result.clusters == [["blue", "green", "red"], ["depth", "height", "width"]]
        assert (tmp_path / "topics.nwk").exists()
        saved = json.loads((tmp_path / "topics.json").read_text(encoding="utf-8"))
        assert [c["members"] for c in saved["clusters"]] == result.clusters
        report = json.loads((tmp_path / "topics_report.json").read_text(encoding="utf-8"))
        assert report["extra"]["k"] == 2

    def test_dependency_graph_split(self, fixtures_dir, tmp_path):
        config = PipelineConfig(enrichment="plain", sources=str(fixtures_dir / "topics"), out=str(tmp_path))
        result = topics(config, 2, via="ddg", write=False)
        assert result.clusters == [["blue", "green", "red"], ["depth", "height", "width"]]

    def test_k_too_large(self, fixtures_dir, tmp_path):
        config = PipelineConfig(enrichment="plain", sources=str(fixtures_dir / "topics"), out=str(tmp_path))
        with pytest.raises(PipelineStageError) as info:
            topics(config, 50, write=False)
        assert info.value.stage == "clustering"

    def test_unknown_source(self, tmp_path):
        with pytest.raises(ConfigError):
            topics(PipelineConfig(out=str(tmp_path)), 2, via="lda")


class TestHeatmap:
    def test_shop_blocks(self, shop_config):
        tables = heatmap(shop_config)
        counts = tables.counts
        assert list(counts.columns)[0] == "package"
        assert list(counts["package"]) == sorted(counts["package"])
        similarity = tables.module_similarity
        billing = [name for name in similarity.index if ".billing." in name]
        catalog = [name for name in similarity.index if ".catalog." in name]
        cross = similarity.loc[billing[0], catalog[0]]
        assert cross == pytest.approx(1.0 - math.sqrt(2) / 2)
        assert similarity.loc[billing[0], billing[1]] > cross
        np.testing.assert_allclose(np.diag(similarity.to_numpy()), 1.0)
        assert sorted(tables.module_order) == sorted(similarity.index)
        out = Path(shop_config.out)
        for name in ("heatmap_counts.csv", "heatmap_modules.csv", "heatmap_types.csv", "heatmap_order.json"):
            assert (out / name).exists()

    def test_empty_columns_dropped(self):
        facts = CorpusFacts((UnitFacts("q.B", ("q",)), UnitFacts("p.A", ("p",))))
        matrix = DocFeatureMatrix(
            ("q.B", "p.A"),
            FeatureSpace("bot", ("int", "Ghost", "String")),
            np.array([[0, 0, 3], [1, 0, 2]]),
        )
        tables = module_type_tables(matrix, facts)
        assert list(tables.counts.columns) == ["package", "int", "String"]
        assert list(tables.counts.index) == ["p.A", "q.B"]
        assert list(tables.type_similarity.index) == ["int", "String"]

    def test_all_columns_empty(self):
        facts = CorpusFacts((UnitFacts("p.A", ("p",)),))
        matrix = DocFeatureMatrix(("p.A",), FeatureSpace("bot", ("int",)), np.zeros((1, 1), dtype=int))
        with pytest.raises(ClusteringInputError):
            module_type_tables(matrix, facts)


class TestEvaluate:
    @pytest.fixture
    def trees(self, tmp_path):
        reference = write_newick(_tree([["a", "b"], ["c", "d"]]), tmp_path / "reference.nwk")
        produced = write_newick(_tree([[["a", "b"], "c"], "d", "e"]), tmp_path / "produced.nwk")
        return produced, reference

    def test_scores(self, trees):
        report = evaluate(*trees)
        assert report.pd == 3
        assert report.ted == 2
        assert report.delta_pd is None

    def test_sqrt(self, trees):
        assert evaluate(*trees, take_sqrt=True).pd == pytest.approx(math.sqrt(3))

    def test_with_baseline(self, trees, tmp_path):
        baseline = tmp_path / "baseline.json"
        baseline.write_text(json.dumps({"pd": 6, "ted": 4}), encoding="utf-8")
        report = evaluate(*trees, baseline_report=str(baseline))
        assert report.to_dict()["delta"] == {"pd": "-50.00%", "ted": "-50.00%"}

    def test_unreadable_baseline(self, trees, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}", encoding="utf-8")
        with pytest.raises(ConfigError):
            evaluate(*trees, baseline_report=str(bad))

    def test_malformed_tree(self, tmp_path):
        broken = tmp_path / "broken.nwk"
        broken.write_text("((a,b);", encoding="utf-8")
        with pytest.raises(PipelineStageError):
            evaluate(broken, broken)


class TestExports:
    @pytest.fixture
    def fleet_config(self, fixtures_dir, tmp_path):
        return PipelineConfig(
            model="boi",
            enrichment="plain",
            sources=str(fixtures_dir / "fleet"),
            libs=str(fixtures_dir / "libs" / "jdk.json"),
            out=str(tmp_path),
        )

    def test_facts(self, fleet_config, fleet_facts):
        path = export_facts(fleet_config)
        assert load_facts(path).unit_names == fleet_facts.unit_names

    def test_facts_need_sources(self, tmp_path):
        with pytest.raises(ConfigError):
            export_facts(PipelineConfig(out=str(tmp_path)))

    def test_network(self, fleet_config):
        csv_path, dot_path = export_network(fleet_config)
        assert csv_path.exists() and dot_path.exists()

    def test_similarity(self, fleet_config):
        path = export_similarity(fleet_config, "types")
        table = pd.read_csv(path, index_col=0)
        assert table.shape[0] == table.shape[1]
        np.testing.assert_allclose(table.to_numpy(), table.to_numpy().T, atol=1e-12)
        with pytest.raises(ConfigError):
            export_similarity(fleet_config, "packages")

    def test_kernel(self, fleet_config):
        kernel_path, distance_path = export_kernel(fleet_config)
        kernel = pd.read_csv(kernel_path, index_col=0).to_numpy()
        distance = pd.read_csv(distance_path, index_col=0).to_numpy()
        np.testing.assert_allclose(np.diag(kernel), 1.0)
        np.testing.assert_allclose(distance, 1.0 - kernel, atol=1e-9)

    def test_ddgs(self, fleet_config):
        written = export_ddgs(fleet_config)
        assert len(written) == 6
        assert all(path.exists() for path in written)
