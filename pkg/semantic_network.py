"""
Réseau sémantique du système analysé.

Graphe orienté pondéré (networkx.MultiDiGraph) dont les noeuds sont des
termes (identifiants) ou des concepts (types) :
    ISA : terme -> concept     (instance d'un type)
    ITO : concept -> concept   (sous-type -> super-type)
    IPO : concept -> concept   (partie -> tout, type d'un champ -> propriétaire)
Le poids d'une arête est la fréquence de la relation dans les faits.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd
from loguru import logger

from corpus_ingest import (
    BUILTIN_LIBRARY,
    ROOT_ALIASES,
    VIRTUAL_ROOT,
    CorpusFacts,
    LibraryFacts,
    LibraryType,
    simple_type,
)
from errors import UnknownConceptError
from java_parser import UNTYPED

TERM = "Term"
CONCEPT = "Concept"
ISA, ITO, IPO = "ISA", "ITO", "IPO"

Node = tuple[str, str]  # (kind, label)


@dataclass(frozen=True)
class Synset:
    concept: str
    members: frozenset[str]


@dataclass(frozen=True)
class SubHierarchy:
    concept: str
    nodes: frozenset[str]
    size: int
    mu: float  # arêtes ITO internes / nombre de noeuds


class SemanticNetwork:
    """Base de connaissances immuable une fois construite."""

    def __init__(self, graph: nx.MultiDiGraph):
        self.graph = graph

    # --- noeuds ----------------------------------------------------------
    @cached_property
    def concepts(self) -> list[str]:
        labels = sorted(label for kind, label in self.graph.nodes if kind == CONCEPT)
        labels.remove(VIRTUAL_ROOT)
        return [VIRTUAL_ROOT] + labels

    @cached_property
    def terms(self) -> list[str]:
        return sorted(label for kind, label in self.graph.nodes if kind == TERM)

    @cached_property
    def nodes(self) -> list[Node]:
        return [(CONCEPT, c) for c in self.concepts] + [(TERM, t) for t in self.terms]

    def has_concept(self, label: str) -> bool:
        return (CONCEPT, label) in self.graph

    def has_term(self, label: str) -> bool:
        return (TERM, label) in self.graph

    def require_concept(self, label: str) -> None:
        if not self.has_concept(label):
            raise UnknownConceptError(f"Concept inconnu : {label}")

    # --- arêtes ----------------------------------------------------------
    def edges(self) -> list[tuple[Node, Node, str, int]]:
        rows = [(u, v, key, data["weight"]) for u, v, key, data in self.graph.edges(keys=True, data=True)]
        return sorted(rows)

    def weight(self, source: Node, target: Node, relation: str) -> int:
        data = self.graph.get_edge_data(source, target, key=relation)
        return data["weight"] if data else 0

    def isa_weight(self, term: str, concept: str) -> int:
        """w(id, T) : fréquence de la relation d'instance."""
        return self.weight((TERM, term), (CONCEPT, concept), ISA)

    @cached_property
    def _instance_degree(self) -> dict[str, int]:
        degree: dict[str, int] = {}
        for (kind, _), (_, concept), key, data in self.graph.edges(keys=True, data=True):
            if key == ISA and kind == TERM:
                degree[concept] = degree.get(concept, 0) + data["weight"]
        return degree

    def out_weight(self, concept: str) -> int:
        """out(T) : poids total des liens ISA du concept vers ses instances."""
        return self._instance_degree.get(concept, 0)

    def supertypes(self, concept: str) -> list[str]:
        node = (CONCEPT, concept)
        return sorted(v for _, (_, v), key in self.graph.out_edges(node, keys=True) if key == ITO)

    @cached_property
    def ito_graph(self) -> nx.DiGraph:
        """Sous-graphe ITO (enfant -> parent) sur les libellés de concepts."""
        ito = nx.DiGraph()
        ito.add_nodes_from(self.concepts)
        for (_, u), (_, v), key in self.graph.edges(keys=True):
            if key == ITO:
                ito.add_edge(u, v)
        return ito

    # --- requêtes --------------------------------------------------------
    def synset(self, concept: str) -> Synset:
        self.require_concept(concept)
        members = {
            label
            for (kind, label), _, key in self.graph.in_edges((CONCEPT, concept), keys=True)
            if key == ISA and kind == TERM
        }
        members.add(concept)
        return Synset(concept, frozenset(members))

    def senses(self, name: str) -> list[str]:
        """Concepts auxquels le terme est relié par ISA, en ordre déterministe."""
        node = (TERM, name)
        if node not in self.graph:
            return []
        return sorted(label for _, (_, label), key in self.graph.out_edges(node, keys=True) if key == ISA)

    def synsets_of(self, name: str) -> list[Synset]:
        """Tous les synsets contenant le terme (liste vide si inconnu)."""
        return [self.synset(concept) for concept in self.senses(name)]

    def subhierarchy(self, concept: str) -> SubHierarchy:
        """Descendants ITO du concept (inclus), taille et facteur de branchement moyen."""
        self.require_concept(concept)
        # Les arêtes ITO vont de l'enfant au parent : les descendants sont les ancêtres nx
        nodes = frozenset(nx.ancestors(self.ito_graph, concept) | {concept})
        internal = self.ito_graph.subgraph(nodes).number_of_edges()
        return SubHierarchy(concept, nodes, len(nodes), internal / len(nodes))

    # --- exports ---------------------------------------------------------
    def relation_blind_adjacency(self) -> tuple[list[Node], np.ndarray]:
        """Matrice d'adjacence symétrique, pondérée, sans distinction de relation."""
        nodes = self.nodes
        position = {node: i for i, node in enumerate(nodes)}
        adjacency = np.zeros((len(nodes), len(nodes)))
        for u, v, _, weight in self.edges():
            i, j = position[u], position[v]
            adjacency[i, j] += weight
            adjacency[j, i] += weight
        return nodes, adjacency

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "source": u[1], "source_kind": u[0],
                "target": v[1], "target_kind": v[0],
                "relation": relation, "weight": weight,
            }
            for u, v, relation, weight in self.edges()
        ]
        return pd.DataFrame(rows, columns=["source", "source_kind", "target", "target_kind", "relation", "weight"])

    def write_csv(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    def write_dot(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        ids = {node: f"n{i}" for i, node in enumerate(self.nodes)}
        view = nx.MultiDiGraph()
        for node, node_id in ids.items():
            shape = "box" if node[0] == CONCEPT else "ellipse"
            view.add_node(node_id, label=f'"{node[1]}"', shape=shape)
        for u, v, relation, weight in self.edges():
            view.add_edge(ids[u], ids[v], key=relation, label=f'"{relation} {weight}"')
        nx.nx_pydot.write_dot(view, path)
        return path


# ================================================
# CONSTRUCTION
# ================================================
def _library_index(libs: LibraryFacts) -> dict[str, LibraryType]:
    index: dict[str, LibraryType] = {}
    for lib_type in libs.types:
        name = lib_type.simple_name
        if name in index and index[name].type_name != lib_type.type_name:
            logger.warning(f"⚠ Collision de nom simple '{name}' : {lib_type.type_name} ignoré")
            continue
        index.setdefault(name, lib_type)
    return index


def _materialized_library(corpus: CorpusFacts, libs: LibraryFacts, referenced: set[str]) -> list[LibraryType]:
    """Types de bibliothèque importés ou référencés, plus leur fermeture par super-types."""
    by_simple = _library_index(libs)
    by_full = {t.type_name: t for t in by_simple.values()}
    wanted: set[str] = {name for name in referenced if name in by_simple}
    for unit in corpus.units:
        for imp in unit.imports:
            if imp.endswith(".*"):
                package = imp[:-2]
                wanted.update(t.simple_name for t in by_simple.values() if t.package_name == package)
            elif imp in by_full:
                wanted.add(by_full[imp].simple_name)

    pending = sorted(wanted)
    while pending:
        current = by_simple[pending.pop()]
        for sup in current.supertypes:
            name = simple_type(sup)
            if sup in ROOT_ALIASES or name in wanted or name not in by_simple:
                continue
            wanted.add(name)
            pending.append(name)
    return [by_simple[name] for name in sorted(wanted)]


def build_network(corpus: CorpusFacts, libs: LibraryFacts | None = None) -> SemanticNetwork:
    """
    Construit le réseau sémantique à partir des faits du corpus.

    Args:
        corpus: faits des unités
        libs: faits de bibliothèque (types primitifs inclus par défaut)

    Returns:
        SemanticNetwork immuable
    """
    libs = libs or BUILTIN_LIBRARY
    graph = nx.MultiDiGraph()
    graph.add_node((CONCEPT, VIRTUAL_ROOT))

    def add_edge(u: Node, v: Node, relation: str, weight: int = 1) -> None:
        graph.add_node(u)
        graph.add_node(v)
        if graph.has_edge(u, v, key=relation):
            graph[u][v][relation]["weight"] += weight
        else:
            graph.add_edge(u, v, key=relation, weight=weight)

    # Types référencés par le corpus (hors ⊥)
    referenced: set[str] = set()
    for unit in corpus.units:
        referenced.add(unit.class_name)
        referenced.update(o.declared_type for o in unit.occurrences)
        referenced.update(m.member_type for m in unit.api_members)
        referenced.update(m.owner_type for m in unit.api_members)
        referenced.update(sup for _, sup in unit.supertype_edges if sup not in ROOT_ALIASES)
    referenced.discard(UNTYPED)
    referenced -= ROOT_ALIASES

    library = _materialized_library(corpus, libs, referenced)
    known = {unit.class_name for unit in corpus.units} | {t.simple_name for t in library}
    concepts = sorted(referenced | known)
    for concept in concepts:
        graph.add_node((CONCEPT, concept))

    # --- ITO, dans l'ordre des entrées ; l'arête fermant un cycle est ignorée
    ito = nx.DiGraph()
    declared: list[tuple[str, str]] = []
    for unit in corpus.units:
        declared.extend(unit.supertype_edges)
    for lib_type in library:
        declared.extend((lib_type.simple_name, sup) for sup in lib_type.supertypes)

    for sub, sup in declared:
        sub = simple_type(sub)
        parent = VIRTUAL_ROOT if sup in ROOT_ALIASES else simple_type(sup)
        if parent != VIRTUAL_ROOT and parent not in known:
            logger.warning(f"⚠ Super-type '{sup}' de {sub} introuvable -> racine virtuelle")
            parent = VIRTUAL_ROOT
        if sub == parent or ito.has_edge(sub, parent):
            continue
        if parent in ito and sub in ito and nx.has_path(ito, parent, sub):
            logger.warning(f"⚠ Cycle ITO : arête {sub} -> {parent} ignorée")
            continue
        ito.add_edge(sub, parent)
        add_edge((CONCEPT, sub), (CONCEPT, parent), ITO)

    for concept in concepts:
        if not ito.has_node(concept) or ito.out_degree(concept) == 0:
            add_edge((CONCEPT, concept), (CONCEPT, VIRTUAL_ROOT), ITO)

    # --- termes, ISA et IPO
    for unit in corpus.units:
        for member in unit.api_members:
            add_edge((TERM, member.name), (CONCEPT, member.owner_type), ISA)
            if member.kind == "field" and member.member_type not in (UNTYPED, member.owner_type):
                add_edge((CONCEPT, member.member_type), (CONCEPT, member.owner_type), IPO)
        for occ in unit.occurrences:
            if occ.declared_type == UNTYPED:
                graph.add_node((TERM, occ.identifier))
            else:
                add_edge((TERM, occ.identifier), (CONCEPT, occ.declared_type), ISA, occ.count)
        if unit.synonyms:
            logger.debug(f"{unit.unit_name} : {len(unit.synonyms)} paire(s) de synonymes ignorée(s)")

    for lib_type in library:
        for name, _ in lib_type.members:
            add_edge((TERM, name), (CONCEPT, lib_type.simple_name), ISA)

    network = SemanticNetwork(graph)
    logger.info(
        f"✓ Réseau sémantique : {len(network.concepts)} concepts, "
        f"{len(network.terms)} termes, {graph.number_of_edges()} arêtes"
    )
    return network
