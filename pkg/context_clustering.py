#!/usr/bin/env python3
# ================================================
# FICHIER CONTEXT_CLUSTERING.PY
# ================================================
# Point d'entrée en ligne de commande.
#
# Verbes : ingest, network, similarity, kernel, ddg,
#          modularize, topics, heatmap, evaluate
#
# Exemples :
#   python context_clustering.py --sources fixtures/employee ingest
#   python context_clustering.py --sources fixtures/shop modularize --enrichment ssk1
#   python context_clustering.py --sources fixtures/topics topics --k 2
# ================================================
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from loguru import logger

from errors import SemanticContextError
from pipelines import (
    evaluate, export_ddgs, export_facts, export_kernel, export_network, export_similarity,
    heatmap, modularize, topics,
)
from settings import (
    CONCEPTS, ENRICHMENTS, LEXICALS, LINKAGES, MODELS, WEIGHTINGS, PipelineConfig,
    configure_logging,
)

VERBS = ("ingest", "network", "similarity", "kernel", "ddg", "modularize", "topics", "heatmap", "evaluate")


def _global_options(parser: argparse.ArgumentParser, default) -> None:
    parser.add_argument("--facts", default=default, help="Fichier de faits JSONL")
    parser.add_argument("--libs", default=default, help="Faits de bibliothèque (JSON)")
    parser.add_argument("--sources", default=default, help="Répertoire de sources *.java")
    parser.add_argument("--out", default=default, help="Répertoire de sortie")
    parser.add_argument("--jobs", type=int, default=default, help="Threads pour les calculs par paires")
    parser.add_argument("--config", default=default, help="Configuration JSON (champs de PipelineConfig)")
    parser.add_argument("--log-level", default=default, help="DEBUG, INFO, WARNING…")


def _enrichment_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=MODELS)
    parser.add_argument("--enrichment", choices=ENRICHMENTS)
    parser.add_argument("--concept", choices=CONCEPTS, help="Mesure conceptuelle (préréglage custom)")
    parser.add_argument("--lexical", choices=LEXICALS, help="Noyau lexical (préréglage custom)")
    parser.add_argument("--plain", action="store_true", help="S = I (aucun enrichissement)")
    parser.add_argument("--weighting", choices=WEIGHTINGS)
    parser.add_argument("--alpha-ipl", type=float)
    parser.add_argument("--alpha-diffusion", type=float)
    parser.add_argument("--lambda", dest="walk_lambda", type=float, help="λ du noyau de marches (défaut 0.5/ρ)")
    parser.add_argument("--case-sensitive", action="store_true", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="context_clustering",
        description="Modèles de contexte sémantiquement enrichis pour la modularisation de code source",
    )
    _global_options(parser, None)
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    verbs = parser.add_subparsers(dest="verb", required=True)

    verbs.add_parser("ingest", parents=[common], help="Sources -> facts.jsonl")
    verbs.add_parser("network", parents=[common], help="Réseau sémantique (CSV + DOT)")

    similarity = verbs.add_parser("similarity", parents=[common], help="Table de similarité")
    similarity.add_argument("--level", choices=("types", "identifiers"), default="types")
    _enrichment_options(similarity)

    kernel = verbs.add_parser("kernel", parents=[common], help="Noyau document-document et distances")
    _enrichment_options(kernel)

    verbs.add_parser("ddg", parents=[common], help="Graphes de dépendances (DOT + CSV)")

    modular = verbs.add_parser("modularize", parents=[common], help="Décomposition + évaluation")
    _enrichment_options(modular)
    modular.add_argument("--linkage", dest="clustering", choices=LINKAGES)
    modular.add_argument("--k", type=int, help="Découpe en k groupes (partition.json)")
    modular.add_argument("--min-package-size", type=int)
    modular.add_argument("--max-package-size", type=int)
    modular.add_argument("--pd-edges", action="store_true", default=None)
    modular.add_argument("--pd-sqrt", action="store_true", default=None)
    modular.add_argument("--baseline-report", help="Rapport JSON de référence (sinon recalculé)")

    topic = verbs.add_parser("topics", parents=[common], help="Thèmes d'identifiants")
    _enrichment_options(topic)
    topic.add_argument("--k", type=int, required=True)
    topic.add_argument("--via", choices=("boit", "ddg"), default="boit")
    topic.add_argument("--linkage", dest="clustering", choices=LINKAGES)

    verbs.add_parser("heatmap", parents=[common], help="Carte modules × types")

    evaluation = verbs.add_parser("evaluate", parents=[common], help="PD / TED entre deux Newick")
    evaluation.add_argument("--produced", required=True)
    evaluation.add_argument("--reference", required=True)
    evaluation.add_argument("--baseline-report")
    evaluation.add_argument("--pd-edges", action="store_true")
    evaluation.add_argument("--pd-sqrt", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Option CLI > fichier --config > environnement > défaut."""
    config = PipelineConfig.from_json(args.config) if args.config else PipelineConfig()
    keys = (
        "facts", "libs", "sources", "out", "jobs", "model", "enrichment", "concept", "lexical",
        "weighting", "alpha_ipl", "alpha_diffusion", "walk_lambda", "case_sensitive", "clustering",
        "k", "min_package_size", "max_package_size", "pd_edges", "pd_sqrt", "baseline_report",
    )
    overrides = {key: getattr(args, key) for key in keys if hasattr(args, key)}
    if args.verb in ("topics", "evaluate"):
        overrides.pop("k", None)
        overrides.pop("baseline_report", None)
    if getattr(args, "plain", False):
        overrides["enrichment"] = "plain"
    if args.verb == "topics":
        overrides.pop("weighting", None)
    return config.with_overrides(**overrides)


def run(args: argparse.Namespace, config: PipelineConfig) -> None:
    verb = args.verb
    if verb == "ingest":
        export_facts(config)
    elif verb == "network":
        export_network(config)
    elif verb == "similarity":
        export_similarity(config, args.level)
    elif verb == "kernel":
        export_kernel(config)
    elif verb == "ddg":
        export_ddgs(config)
    elif verb == "modularize":
        modularize(config)
    elif verb == "topics":
        topics(config, args.k, via=args.via, weighting=args.weighting)
    elif verb == "heatmap":
        heatmap(config)
    elif verb == "evaluate":
        report = evaluate(args.produced, args.reference, args.baseline_report, args.pd_edges, args.pd_sqrt)
        report.write(Path(config.out) / "evaluation.json")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        config = config_from_args(args)
        run(args, config)
    except SemanticContextError as e:
        logger.error(f"✗ {e}")
        return 1
    logger.info(f"✓ {args.verb} terminé")
    return 0


if __name__ == "__main__":
    sys.exit(main())
