import math

import numpy as np
import pytest
from sklearn.metrics.pairwise import cosine_similarity

from conceptual_similarity import ConceptSimilarity, SimilarityConfig
from corpus_ingest import CorpusFacts, Occurrence, UnitFacts
from errors import ModelError
from lexical_similarity import LexicalConfig, lexical_function
from semantic_network import build_network
from vector_models import (
    ProximityMatrix,
    build_bof,
    build_identifier_context_matrix,
    document_kernel,
    idf_diag,
    kernel_to_distance,
    semantic_kernel,
    semantic_matrix,
    weighted_features,
)


def _unit(name: str, *occurrences: tuple[str, str, int]) -> UnitFacts:
    return UnitFacts(name, ("p",), occurrences=tuple(Occurrence(i, t, c) for i, t, c in occurrences))


@pytest.fixture(scope="module")
def small_facts() -> CorpusFacts:
    return CorpusFacts((
        _unit("p.A", ("speed", "int", 3), ("gear", "int", 1), ("when", "Date", 2)),
        _unit("p.B", ("speed", "int", 1), ("speed", "double", 2), ("name", "String", 1)),
        _unit("p.C", ("name", "String", 4), ("when", "Date", 1)),
    ))


class TestBagsOfFeatures:
    def test_employee_table(self, employee_facts):
        boi = build_bof(employee_facts, "boi")
        assert len(boi.space) == 9
        assert boi.row("Employee") == {
            "bonus": 1, "byPercent": 1, "day": 1, "hireDay": 1, "month": 1,
            "name": 2, "salary": 4, "temp": 4, "year": 1,
        }
        boit = build_bof(employee_facts, "boit")
        assert len(boit.space) == 10
        assert boit.row("Employee")[("temp", "Date")] == 2
        assert boit.row("Employee")[("temp", "double")] == 2
        bot = build_bof(employee_facts, "bot")
        assert bot.row("Employee") == {"String": 2, "double": 8, "int": 3, "Date": 3}

    def test_features_sorted(self, small_facts):
        space = build_bof(small_facts, "boit").space
        assert list(space.features) == sorted(space.features)

    def test_marginals(self, small_facts):
        boit = build_bof(small_facts, "boit")
        for kind, key in (("boi", 0), ("bot", 1)):
            marginal = build_bof(small_facts, kind)
            for doc in boit.docs:
                expected: dict = {}
                for feature, count in boit.row(doc).items():
                    expected[feature[key]] = expected.get(feature[key], 0) + count
                assert marginal.row(doc) == expected

    def test_errors(self, small_facts):
        with pytest.raises(ModelError):
            build_bof(small_facts, "bag")
        with pytest.raises(ModelError):
            build_bof(CorpusFacts(), "boi")
        with pytest.raises(ModelError):
            build_bof(CorpusFacts((UnitFacts("p.Empty", ("p",)),)), "boi")


class TestWeighting:
    def test_idf(self, small_facts):
        boi = build_bof(small_facts, "boi")
        weights = dict(zip(boi.space.features, idf_diag(boi)))
        assert weights["gear"] == pytest.approx(math.log(3))
        assert weights["speed"] == pytest.approx(math.log(3 / 2))

    def test_idf_floor_for_ubiquitous_feature(self):
        facts = CorpusFacts((_unit("p.A", ("x", "int", 1)), _unit("p.B", ("x", "int", 2))))
        weights = idf_diag(build_bof(facts, "boi"))
        assert 0.0 < weights[0] < 1e-9

    def test_tfidf_is_sublinear(self, small_facts):
        boi = build_bof(small_facts, "boi")
        phi, _ = weighted_features(boi, "tfidf")
        i = boi.space.index["speed"]
        assert phi[0, i] == pytest.approx(1.0 + math.log(3))
        assert phi[2, i] == 0.0

    def test_none(self, small_facts):
        boi = build_bof(small_facts, "boi")
        phi, weights = weighted_features(boi, "none")
        np.testing.assert_array_equal(phi, boi.counts)
        np.testing.assert_array_equal(weights, np.ones(len(boi.space)))
        with pytest.raises(ModelError):
            weighted_features(boi, "bm25")


class TestSemanticMatrix:
    def test_plain_is_identity(self, small_facts):
        space = build_bof(small_facts, "boi").space
        np.testing.assert_array_equal(semantic_matrix(space), np.eye(len(space)))

    def test_lexical_only_on_bot_is_identity(self, small_facts):
        space = build_bof(small_facts, "bot").space
        lexical = lexical_function(LexicalConfig("lcu"))
        np.testing.assert_array_equal(semantic_matrix(space, lexical=lexical), np.eye(len(space)))

    def test_boit_enriched(self, employee_facts):
        network = build_network(employee_facts)
        concepts = ConceptSimilarity(network, SimilarityConfig("ipl"))
        lexical = lexical_function(LexicalConfig("lcu"))
        space = build_bof(employee_facts, "boit").space
        S = semantic_matrix(space, concepts, lexical)
        np.testing.assert_allclose(S, S.T)
        np.testing.assert_allclose(np.diag(S), 1.0)
        assert S.min() >= 0.0
        i = space.index[("temp", "Date")]
        j = space.index[("temp", "double")]
        # même identifiant, types Date et double à distance 2 par ⊤
        assert S[i, j] == pytest.approx(1 / 3)

    def test_unknown_type_keeps_identity_row(self):
        facts = CorpusFacts((_unit("p.A", ("x", "int", 1), ("xy", "Ghost", 1)),))
        space = build_bof(facts, "boit").space
        # réseau construit sans le type Ghost
        network = build_network(CorpusFacts((_unit("p.A", ("x", "int", 1)),)))
        S = semantic_matrix(space, ConceptSimilarity(network), lexical_function(LexicalConfig("lcu")))
        np.testing.assert_array_equal(S, np.eye(2))


class TestKernels:
    def test_reduces_to_cosine_without_enrichment(self, small_facts):
        boi = build_bof(small_facts, "boi")
        phi, weights = weighted_features(boi, "none")
        kernel = document_kernel(phi, ProximityMatrix(weights, np.eye(len(boi.space))))
        np.testing.assert_allclose(kernel, cosine_similarity(phi), atol=1e-12)

    def test_psd_and_unit_diagonal(self, employee_facts, small_facts):
        rng = np.random.default_rng(42)
        boit = build_bof(small_facts, "boit")
        phi, weights = weighted_features(boit, "idf")
        raw = rng.random((len(boit.space), len(boit.space)))
        S = (raw + raw.T) / 2
        np.fill_diagonal(S, 1.0)
        proximity = ProximityMatrix(weights, S)
        K = semantic_kernel(phi, proximity)
        assert np.linalg.eigvalsh(K).min() >= -1e-9 * max(1.0, np.abs(K).max())
        normalized = document_kernel(phi, proximity)
        np.testing.assert_allclose(np.diag(normalized), 1.0)
        assert np.abs(normalized).max() <= 1.0 + 1e-12

    def test_proximity_product(self):
        proximity = ProximityMatrix(np.array([2.0, 3.0]), np.array([[1.0, 0.5], [0.5, 1.0]]))
        np.testing.assert_allclose(proximity.P, [[2.0, 1.0], [1.5, 3.0]])

    def test_zero_document(self):
        phi = np.array([[1.0, 0.0], [0.0, 0.0]])
        kernel = document_kernel(phi, ProximityMatrix(np.ones(2), np.eye(2)))
        np.testing.assert_allclose(kernel, np.eye(2))

    def test_distance(self):
        kernel = np.array([[1.0, 0.25], [0.25, 1.0]])
        np.testing.assert_allclose(kernel_to_distance(kernel), [[0.0, 0.75], [0.75, 0.0]])


class TestIdentifierContexts:
    def test_pivot(self, small_facts):
        boit = build_bof(small_facts, "boit")
        phi, _ = weighted_features(boit, "none")
        identifiers, columns, pivot = build_identifier_context_matrix(boit, phi)
        assert identifiers == ["gear", "name", "speed", "when"]
        assert ("p.B", "double") in columns
        row = pivot[identifiers.index("speed")]
        assert row[columns.index(("p.A", "int"))] == 3
        assert row[columns.index(("p.B", "double"))] == 2
        assert pivot.sum() == boit.counts.sum()

    def test_requires_boit(self, small_facts):
        boi = build_bof(small_facts, "boi")
        with pytest.raises(ModelError):
            build_identifier_context_matrix(boi, boi.counts.astype(float))
