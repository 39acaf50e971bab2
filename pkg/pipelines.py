# ================================================
# FICHIER PIPELINES.PY
# ================================================
# Chaînes de traitement de bout en bout :
#   - modularize : faits -> noyau -> D = 1 − K' -> CAH -> PD / TED
#   - topics     : identifiants × (document, type) -> CAH -> k thèmes
#   - heatmap    : modules × types groupés par package
#   - evaluate   : PD / TED entre deux fichiers Newick
# plus les exports unitaires utilisés par le CLI.
# ================================================
from __future__ import annotations

import json
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np
import pandas as pd
from loguru import logger
from sklearn.metrics.pairwise import euclidean_distances
from sklearn.preprocessing import normalize

from clustering import Dendrogram, cut, dendrogram_to_tree, linkage, write_partition
from conceptual_similarity import ConceptSimilarity, SimilarityConfig, scaled_diffusion, similarity_table
from corpus_ingest import (
    BUILTIN_LIBRARY, CorpusFacts, LibraryFacts, extract_corpus, load_facts, load_library,
    parse_corpus, save_facts,
)
from dependency_graphs import (
    NAMELESS, DepGraph, WalkKernelConfig, build_ddg, label_similarity, merge_graphs,
    walk_kernel_matrix,
)
from errors import ClusteringInputError, ConfigError, PipelineStageError, SemanticContextError
from java_parser import SourceUnit
from lexical_similarity import LexicalConfig, lexical_function
from semantic_network import SemanticNetwork, build_network
from settings import PipelineConfig
from tree_metrics import (
    LabeledTree, authoritative_tree, path_difference, read_newick, ted, write_newick,
)
from vector_models import (
    DocFeatureMatrix, ProximityMatrix, build_bof, build_identifier_context_matrix,
    document_kernel, kernel_to_distance, semantic_matrix, weighted_features,
)

BASELINE = {"model": "boi", "enrichment": "plain", "weighting": "idf", "clustering": "complete"}


# ================================================
# RAPPORTS
# ================================================
def format_delta(new: float, old: float) -> str:
    """(new − old) / old en pourcentage signé, ex. -58.82% ; n/a si old = 0."""
    if old == 0:
        return "n/a"
    return f"{(new - old) / old * 100:+.2f}%"


@dataclass
class RunReport:
    config: dict
    pd: float | None = None
    ted: int | None = None
    baseline_pd: float | None = None
    baseline_ted: int | None = None
    artifacts: dict[str, str] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def delta_pd(self) -> str | None:
        if self.pd is None or self.baseline_pd is None:
            return None
        return format_delta(self.pd, self.baseline_pd)

    @property
    def delta_ted(self) -> str | None:
        if self.ted is None or self.baseline_ted is None:
            return None
        return format_delta(self.ted, self.baseline_ted)

    def to_dict(self) -> dict:
        """Contenu sérialisé ; les durées sont journalisées mais pas écrites."""
        return {
            "config": self.config,
            "pd": self.pd,
            "ted": self.ted,
            "baseline": {"pd": self.baseline_pd, "ted": self.baseline_ted},
            "delta": {"pd": self.delta_pd, "ted": self.delta_ted},
            "artifacts": dict(sorted(self.artifacts.items())),
            **({"extra": self.extra} if self.extra else {}),
        }

    def write(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, ensure_ascii=False, sort_keys=False) + "\n", encoding="utf-8")
        return path


def read_report_scores(path: str | os.PathLike) -> tuple[float, int]:
    """PD et TED d'un rapport JSON déjà écrit."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return data["pd"], data["ted"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"Rapport de référence illisible {path} : {exc}") from exc


@contextmanager
def stage(name: str, timings: dict[str, float] | None = None) -> Iterator[None]:
    """Étiquette les erreurs d'une étape et mesure sa durée."""
    logger.info(f"▶ {name}")
    start = time.perf_counter()
    try:
        yield
    except PipelineStageError:
        raise
    except (SemanticContextError, ValueError, OSError, KeyError) as exc:
        logger.error(f"✗ Étape {name} : {exc}")
        raise PipelineStageError(name, exc) from exc
    elapsed = time.perf_counter() - start
    if timings is not None:
        timings[name] = elapsed
    logger.debug(f"✓ {name} ({elapsed:.2f} s)")


# ================================================
# ENTRÉES ET ENRICHISSEMENT
# ================================================
@dataclass
class CorpusInputs:
    facts: CorpusFacts
    libs: LibraryFacts
    units: list[SourceUnit] | None = None

    def ordered_units(self) -> list[SourceUnit]:
        if self.units is None:
            raise ConfigError("Le modèle DDG exige les sources (--sources), pas seulement les faits")
        by_name = {unit.unit_name: unit for unit in self.units}
        return [by_name[name] for name in self.facts.unit_names]


def load_inputs(config: PipelineConfig) -> CorpusInputs:
    libs = load_library(config.libs) if config.libs else BUILTIN_LIBRARY
    if config.sources:
        units = parse_corpus(config.sources)
        return CorpusInputs(extract_corpus(units, libs), libs, units)
    if config.facts:
        return CorpusInputs(load_facts(config.facts), libs)
    raise ConfigError("Aucune entrée : préciser --sources ou --facts")


@dataclass
class Enrichment:
    network: SemanticNetwork | None
    concepts: ConceptSimilarity | None
    lexical: Callable[[str, str], float] | None

    @property
    def label_sim(self) -> Callable[[str, str], float]:
        return label_similarity(self.concepts, self.lexical)


def build_enrichment(config: PipelineConfig, inputs: CorpusInputs) -> Enrichment:
    concept = config.effective_concept
    lexical = config.effective_lexical
    network = concepts = None
    if concept is not None:
        network = build_network(inputs.facts, inputs.libs)
        concepts = ConceptSimilarity(
            network,
            SimilarityConfig(concept, config.alpha_ipl, config.alpha_diffusion),
        )
    lex = None
    if lexical is not None:
        lex = lexical_function(LexicalConfig(lexical, config.const_normalization, config.case_sensitive))
    logger.info(f"Enrichissement {config.enrichment} : concept={concept or '-'}, lexical={lexical or '-'}")
    return Enrichment(network, concepts, lex)


def document_similarity(config: PipelineConfig, inputs: CorpusInputs, enrichment: Enrichment) -> np.ndarray:
    """K' document-document pour le modèle effectif de la configuration."""
    model = config.effective_model
    if model == "ddg":
        graphs = [build_ddg(unit) for unit in inputs.ordered_units()]
        walk = WalkKernelConfig(config.walk_lambda, config.lambda_scale)
        return walk_kernel_matrix(graphs, enrichment.label_sim, walk, config.jobs)
    matrix = build_bof(inputs.facts, model)
    phi, weights = weighted_features(matrix, config.weighting)
    similarity = semantic_matrix(matrix.space, enrichment.concepts, enrichment.lexical, config.jobs)
    return document_kernel(phi, ProximityMatrix(weights, similarity))


def _square_frame(labels: list[str], values: np.ndarray) -> pd.DataFrame:
    return pd.DataFrame(values, index=labels, columns=labels)


def _write_csv(frame: pd.DataFrame, path: Path, index: bool = True) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=index, float_format="%.12g")
    return str(path)


# ================================================
# MODULARISATION
# ================================================
@dataclass
class ModularizationResult:
    labels: list[str]
    kernel: np.ndarray
    distance: np.ndarray
    dendrogram: Dendrogram
    authoritative: LabeledTree
    produced: LabeledTree
    report: RunReport


def _is_baseline(config: PipelineConfig) -> bool:
    return (
        config.effective_model == "boi" and config.is_plain
        and config.weighting == "idf" and config.clustering == "complete"
    )


def modularize(
    config: PipelineConfig,
    write: bool = True,
    with_baseline: bool = True,
    inputs: CorpusInputs | None = None,
) -> ModularizationResult:
    """
    Décomposition du corpus et évaluation contre l'arbre des packages.

    Raises:
        PipelineStageError: erreur d'une étape, préfixée par son nom
    """
    timings: dict[str, float] = {}
    logger.info("=" * 60)
    logger.info(f"MODULARISATION : modèle {config.effective_model}, enrichissement {config.enrichment}")
    logger.info("=" * 60)

    with stage("ingest", timings):
        inputs = inputs or load_inputs(config)
    with stage("authoritative", timings):
        reference = authoritative_tree(inputs.facts, config.min_package_size, config.max_package_size)
        scope = frozenset(reference.leaves())
    with stage("enrichment", timings):
        enrichment = build_enrichment(config, inputs)
    with stage("kernel", timings):
        kernel = document_similarity(config, inputs, enrichment)
        distance = kernel_to_distance(kernel)
    labels = inputs.facts.unit_names
    with stage("clustering", timings):
        dendrogram = linkage(distance, labels, config.clustering)
    with stage("evaluate", timings):
        produced = dendrogram_to_tree(dendrogram).restrict(scope)
        if produced is None:
            raise ClusteringInputError("Aucun module commun avec l'arbre de référence")
        pd_score = path_difference(reference, produced, config.pd_edges, config.pd_sqrt)
        ted_score = ted(reference, produced)

    report = RunReport(config=config.to_dict(), pd=pd_score, ted=ted_score, timings=timings)
    if with_baseline and not _is_baseline(config):
        with stage("baseline", timings):
            if config.baseline_report:
                report.baseline_pd, report.baseline_ted = read_report_scores(config.baseline_report)
            else:
                baseline = modularize(
                    config.with_overrides(**BASELINE), write=False, with_baseline=False, inputs=inputs
                )
                report.baseline_pd, report.baseline_ted = baseline.report.pd, baseline.report.ted

    logger.info(f"✓ PD = {pd_score} ({report.delta_pd or '-'}), TED = {ted_score} ({report.delta_ted or '-'})")
    for name, seconds in timings.items():
        logger.debug(f"  {name:<14} {seconds:.2f} s")

    result = ModularizationResult(labels, kernel, distance, dendrogram, reference, produced, report)
    if write:
        _write_modularization(config, result)
    return result


def _write_modularization(config: PipelineConfig, result: ModularizationResult) -> None:
    out = Path(config.out)
    artifacts = result.report.artifacts
    out.mkdir(parents=True, exist_ok=True)
    (out / "dendrogram.nwk").write_text(result.dendrogram.to_newick() + "\n", encoding="utf-8")
    artifacts["dendrogram"] = str(out / "dendrogram.nwk")
    artifacts["authoritative"] = str(write_newick(result.authoritative, out / "authoritative.nwk"))
    artifacts["kernel"] = _write_csv(_square_frame(result.labels, result.kernel), out / "kernel.csv")
    artifacts["distance"] = _write_csv(_square_frame(result.labels, result.distance), out / "distance.csv")
    if config.k is not None:
        artifacts["partition"] = str(write_partition(result.dendrogram, config.k, out / "partition.json"))
    result.report.write(out / "report.json")
    logger.info(f"✓ Résultats écrits dans {out}")


# ================================================
# THÈMES
# ================================================
@dataclass
class TopicResult:
    identifiers: list[str]
    dendrogram: Dendrogram
    clusters: list[list[str]]
    report: RunReport


def _normalized_euclidean(rows: np.ndarray) -> np.ndarray:
    """Distance euclidienne entre lignes normalisées L2 (bornée par 2)."""
    unit_rows = normalize(rows, norm="l2")
    distance = euclidean_distances(unit_rows)
    distance = np.clip((distance + distance.T) / 2.0, 0.0, 2.0)
    np.fill_diagonal(distance, 0.0)
    return distance


def _topic_distances_boit(
    config: PipelineConfig, inputs: CorpusInputs, enrichment: Enrichment, weighting: str
) -> tuple[list[str], np.ndarray]:
    matrix = build_bof(inputs.facts, "boit")
    phi, weights = weighted_features(matrix, weighting)
    similarity = semantic_matrix(matrix.space, enrichment.concepts, enrichment.lexical, config.jobs)
    transformed = phi @ ProximityMatrix(weights, similarity).P
    identifiers, _, pivot = build_identifier_context_matrix(matrix, transformed)
    return identifiers, _normalized_euclidean(pivot)


def _topic_distances_ddg(config: PipelineConfig, inputs: CorpusInputs) -> tuple[list[str], np.ndarray]:
    merged = merge_graphs([build_ddg(unit) for unit in inputs.ordered_units()])
    vocabulary = {occ.identifier for unit in inputs.facts.units for occ in unit.occurrences}
    vertices = merged.vertices
    undirected = merged.adjacency()
    undirected = np.maximum(undirected, undirected.T)
    similarity = scaled_diffusion(undirected, config.alpha_diffusion)
    keep = [i for i, v in enumerate(vertices) if merged.label(v) != NAMELESS and v in vocabulary]
    identifiers = [vertices[i] for i in keep]
    distance = np.clip(1.0 - similarity[np.ix_(keep, keep)], 0.0, 2.0)
    distance = (distance + distance.T) / 2.0
    np.fill_diagonal(distance, 0.0)
    return identifiers, distance


def topics(config: PipelineConfig, k: int, via: str = "boit", weighting: str | None = None, write: bool = True) -> TopicResult:
    """
    Regroupe les identifiants en k thèmes.

    Args:
        k: nombre de thèmes
        via: "boit" (contextes document × type) ou "ddg" (graphe fusionné + diffusion)
        weighting: pondération des comptes, fréquences brutes par défaut

    Raises:
        PipelineStageError: k supérieur à la taille du vocabulaire, ou erreur d'étape
    """
    if via not in ("boit", "ddg"):
        raise ConfigError(f"Source de thèmes inconnue : {via} (attendu boit ou ddg)")
    timings: dict[str, float] = {}
    logger.info("=" * 60)
    logger.info(f"THÈMES : k={k}, via {via}")
    logger.info("=" * 60)
    with stage("ingest", timings):
        inputs = load_inputs(config)
    with stage("enrichment", timings):
        enrichment = build_enrichment(config, inputs) if via == "boit" else None
    with stage("distances", timings):
        if via == "boit":
            identifiers, distance = _topic_distances_boit(config, inputs, enrichment, weighting or "none")
        else:
            identifiers, distance = _topic_distances_ddg(config, inputs)
    with stage("clustering", timings):
        if k > len(identifiers):
            raise ClusteringInputError(f"k = {k} dépasse la taille du vocabulaire ({len(identifiers)})")
        dendrogram = linkage(distance, identifiers, config.clustering)
        clusters = cut(dendrogram, k)

    report = RunReport(config=config.to_dict(), timings=timings, extra={
        "k": k,
        "via": via,
        "topics": [{"id": i, "identifiers": group} for i, group in enumerate(clusters)],
    })
    for i, group in enumerate(clusters):
        logger.info(f"  thème {i} : {', '.join(group)}")
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "topics.nwk").write_text(dendrogram.to_newick() + "\n", encoding="utf-8")
        report.artifacts["dendrogram"] = str(out / "topics.nwk")
        report.artifacts["partition"] = str(write_partition(dendrogram, k, out / "topics.json"))
        report.write(out / "topics_report.json")
    return TopicResult(identifiers, dendrogram, clusters, report)


# ================================================
# CARTE MODULES × TYPES
# ================================================
@dataclass
class HeatmapTables:
    counts: pd.DataFrame            # modules × types, lignes groupées par package
    module_similarity: pd.DataFrame
    type_similarity: pd.DataFrame
    module_order: list[str]
    type_order: list[str]


def module_type_tables(matrix: DocFeatureMatrix, facts: CorpusFacts) -> HeatmapTables:
    """
    Tables de la carte modules × types. Les colonnes de type vides sont
    écartées ; similarité = 1 − d/2 avec d la distance euclidienne normalisée.
    """
    packages = {unit.unit_name: unit.package_name for unit in facts.units}
    counts = pd.DataFrame(matrix.counts, index=list(matrix.docs), columns=[str(f) for f in matrix.space.features])
    empty = [column for column in counts.columns if counts[column].sum() == 0]
    if empty:
        logger.warning(f"⚠ Colonnes de type vides écartées : {', '.join(empty)}")
        counts = counts.drop(columns=empty)
    if counts.shape[1] == 0:
        raise ClusteringInputError("Aucun type utilisé : carte vide")
    order = sorted(counts.index, key=lambda name: (packages.get(name, ""), name))
    counts = counts.loc[order]

    values = counts.to_numpy(dtype=float)
    module_distance = _normalized_euclidean(values)
    type_distance = _normalized_euclidean(values.T)
    modules, types = list(counts.index), list(counts.columns)
    module_order = linkage(module_distance, modules).leaf_order() if len(modules) > 1 else modules
    type_order = linkage(type_distance, types).leaf_order() if len(types) > 1 else types

    counts.insert(0, "package", [packages.get(name, "") for name in modules])
    return HeatmapTables(
        counts=counts,
        module_similarity=_square_frame(modules, 1.0 - module_distance / 2.0),
        type_similarity=_square_frame(types, 1.0 - type_distance / 2.0),
        module_order=module_order,
        type_order=type_order,
    )


def heatmap(config: PipelineConfig, write: bool = True) -> HeatmapTables:
    timings: dict[str, float] = {}
    logger.info("=" * 60)
    logger.info("CARTE MODULES × TYPES")
    logger.info("=" * 60)
    with stage("ingest", timings):
        inputs = load_inputs(config)
    with stage("heatmap", timings):
        tables = module_type_tables(build_bof(inputs.facts, "bot"), inputs.facts)
    if write:
        out = Path(config.out)
        _write_csv(tables.counts, out / "heatmap_counts.csv")
        _write_csv(tables.module_similarity, out / "heatmap_modules.csv")
        _write_csv(tables.type_similarity, out / "heatmap_types.csv")
        order = {"modules": tables.module_order, "types": tables.type_order}
        (out / "heatmap_order.json").write_text(json.dumps(order, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        logger.info(f"✓ Carte écrite dans {out}")
    return tables


# ================================================
# ÉVALUATION
# ================================================
def evaluate(
    produced_path: str | os.PathLike,
    reference_path: str | os.PathLike,
    baseline_report: str | None = None,
    count_edges: bool = False,
    take_sqrt: bool = False,
) -> RunReport:
    """PD et TED entre un arbre produit et l'arbre de référence (fichiers Newick)."""
    with stage("evaluate"):
        reference = read_newick(reference_path)
        produced = read_newick(produced_path).restrict(frozenset(reference.leaves()))
        if produced is None:
            raise ClusteringInputError("Aucune feuille commune entre les deux arbres")
        report = RunReport(
            config={"produced": str(produced_path), "reference": str(reference_path)},
            pd=path_difference(reference, produced, count_edges, take_sqrt),
            ted=ted(reference, produced),
        )
    if baseline_report:
        report.baseline_pd, report.baseline_ted = read_report_scores(baseline_report)
    logger.info(f"PD  = {report.pd}  ({report.delta_pd or '-'})")
    logger.info(f"TED = {report.ted}  ({report.delta_ted or '-'})")
    return report


# ================================================
# EXPORTS UNITAIRES (CLI)
# ================================================
def export_facts(config: PipelineConfig) -> Path:
    if not config.sources:
        raise ConfigError("ingest exige --sources")
    with stage("ingest"):
        inputs = load_inputs(config)
        return save_facts(inputs.facts, Path(config.out) / "facts.jsonl")


def export_network(config: PipelineConfig) -> tuple[Path, Path]:
    with stage("network"):
        inputs = load_inputs(config)
        network = build_network(inputs.facts, inputs.libs)
        out = Path(config.out)
        csv_path = network.write_csv(out / "network.csv")
        dot_path = network.write_dot(out / "network.dot")
    logger.info(f"✓ Réseau : {len(network.concepts)} concepts, {len(network.terms)} termes")
    return csv_path, dot_path


def export_similarity(config: PipelineConfig, level: str = "types") -> Path:
    """Table de similarité entre concepts (types) ou entre identifiants (WSD × lexical)."""
    if level not in ("types", "identifiers"):
        raise ConfigError(f"Niveau inconnu : {level} (attendu types ou identifiers)")
    with stage("similarity"):
        inputs = load_inputs(config)
        custom = config.with_overrides(enrichment="custom") if config.is_plain else config
        enrichment = build_enrichment(custom, inputs)
        if enrichment.concepts is None:
            raise ConfigError("Une mesure conceptuelle est requise pour la table de similarité")
        if level == "types":
            labels = enrichment.network.concepts
            table = similarity_table(labels, enrichment.concepts.concept_sim, config.jobs)
        else:
            labels = enrichment.network.terms
            table = similarity_table(labels, enrichment.label_sim, config.jobs)
        return Path(_write_csv(table, Path(config.out) / f"similarity_{level}.csv"))


def export_kernel(config: PipelineConfig) -> tuple[Path, Path]:
    with stage("kernel"):
        inputs = load_inputs(config)
        kernel = document_similarity(config, inputs, build_enrichment(config, inputs))
        labels = inputs.facts.unit_names
        out = Path(config.out)
        kernel_path = _write_csv(_square_frame(labels, kernel), out / "kernel.csv")
        distance_path = _write_csv(_square_frame(labels, kernel_to_distance(kernel)), out / "distance.csv")
    return Path(kernel_path), Path(distance_path)


def export_ddgs(config: PipelineConfig) -> list[Path]:
    """Un fichier DOT et un CSV d'arcs par module, sous <out>/ddg/."""
    written: list[Path] = []
    with stage("ddg"):
        inputs = load_inputs(config)
        out = Path(config.out) / "ddg"
        graphs: list[DepGraph] = [build_ddg(unit) for unit in inputs.ordered_units()]
        for graph in graphs:
            written.append(graph.write_dot(out / f"{graph.name}.dot"))
            written.append(graph.write_csv(out / f"{graph.name}.csv"))
    logger.info(f"✓ {len(graphs)} graphe(s) de dépendances exporté(s) dans {out}")
    return written
