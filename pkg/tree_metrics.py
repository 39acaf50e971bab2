# ================================================
# FICHIER TREE_METRICS.PY
# ================================================
# Comparaison d'une décomposition produite avec l'arbre des packages :
#   - arbre de référence (filtre des petits packages, découpe des gros)
#   - distance d'édition d'arbres (Zhang-Shasha, via zss)
#   - différence de chemins entre feuilles (PD)
#   - lecture / écriture Newick
# ================================================
from __future__ import annotations

import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import networkx as nx
import numpy as np
import zss
from loguru import logger

from corpus_ingest import CorpusFacts
from errors import TreeMetricError

MIN_PACKAGE_SIZE = 5
MAX_PACKAGE_SIZE = 40
FORBIDDEN_COST = 10 ** 9

PackageGroups = dict[tuple[str, ...], list[str]]


# ================================================
# ARBRE ÉTIQUETÉ
# ================================================
@dataclass(frozen=True)
class LabeledTree:
    """Arbre enraciné ; feuille = module, noeud interne = package (ou vide)."""
    label: str = ""
    children: tuple["LabeledTree", ...] = ()
    length: float | None = field(default=None, compare=False)

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @cached_property
    def min_leaf(self) -> str:
        if self.is_leaf:
            return self.label
        return min(child.min_leaf for child in self.children)

    def leaves(self) -> list[str]:
        if self.is_leaf:
            return [self.label]
        return [leaf for child in self.children for leaf in child.leaves()]

    def nodes(self) -> Iterator["LabeledTree"]:
        """Parcours préfixe."""
        yield self
        for child in self.children:
            yield from child.nodes()

    def size(self) -> int:
        return sum(1 for _ in self.nodes())

    def check_unique_leaves(self) -> None:
        duplicates = sorted(label for label, n in Counter(self.leaves()).items() if n > 1)
        if duplicates:
            raise TreeMetricError(f"Feuilles dupliquées : {', '.join(duplicates)}")

    def canonical(self) -> "LabeledTree":
        """Enfants triés par leur plus petite feuille descendante, récursivement."""
        if self.is_leaf:
            return self
        children = sorted((child.canonical() for child in self.children), key=lambda c: (c.min_leaf, c.label))
        return LabeledTree(self.label, tuple(children), self.length)

    def restrict(self, keep: set[str] | frozenset[str]) -> "LabeledTree | None":
        """
        Ne garde que les feuilles de `keep`. Les noeuds internes vidés sont
        supprimés ; ceux rendus unaires par la suppression sont court-circuités.
        """
        if self.is_leaf:
            return self if self.label in keep else None
        kept = [c for c in (child.restrict(keep) for child in self.children) if c is not None]
        if not kept:
            return None
        if len(kept) == 1 and len(self.children) > 1:
            return kept[0]
        return LabeledTree(self.label, tuple(kept), self.length)


# ================================================
# ARBRE DE RÉFÉRENCE (PACKAGES)
# ================================================
def package_groups(facts: CorpusFacts) -> PackageGroups:
    groups: PackageGroups = {}
    for unit in facts.units:
        groups.setdefault(tuple(unit.package_path), []).append(unit.unit_name)
    return {path: sorted(names) for path, names in sorted(groups.items())}


def apply_thresholds(
    groups: Mapping[tuple[str, ...], Sequence[str]],
    min_size: int = MIN_PACKAGE_SIZE,
    max_size: int = MAX_PACKAGE_SIZE,
) -> PackageGroups:
    """
    Supprime les packages de moins de `min_size` modules, découpe ceux de plus
    de `max_size` en ⌈n/max⌉ sous-packages équilibrés part1..partN.
    """
    if min_size < 1 or max_size < 1:
        raise TreeMetricError("Les seuils de taille de package doivent être ≥ 1")
    result: PackageGroups = {}
    for path, names in sorted(groups.items()):
        names = sorted(names)
        if len(names) < min_size:
            logger.info(f"Package {'.'.join(path) or '(défaut)'} écarté : {len(names)} module(s)")
            continue
        if len(names) <= max_size:
            result[path] = names
            continue
        chunks = np.array_split(np.array(names, dtype=object), math.ceil(len(names) / max_size))
        logger.info(f"Package {'.'.join(path)} découpé en {len(chunks)} parties")
        for i, chunk in enumerate(chunks, start=1):
            result[path + (f"part{i}",)] = [str(name) for name in chunk]
    return result


def tree_from_groups(groups: Mapping[tuple[str, ...], Sequence[str]]) -> LabeledTree:
    """Trie des chemins de packages ; la taxonomie n'est pas aplatie."""
    trie: dict = {}
    for path, names in groups.items():
        node = trie
        for component in path:
            node = node.setdefault(("pkg", component), {})
        for name in names:
            node[("leaf", name)] = None

    def build(label: str, node: dict) -> LabeledTree:
        children = [
            LabeledTree(name) if kind == "leaf" else build(name, sub)
            for (kind, name), sub in node.items()
        ]
        return LabeledTree(label, tuple(children)).canonical()

    return build("", trie)


def authoritative_tree(
    facts: CorpusFacts,
    min_size: int = MIN_PACKAGE_SIZE,
    max_size: int = MAX_PACKAGE_SIZE,
) -> LabeledTree:
    """
    Décomposition de référence issue de la structure des packages.

    Raises:
        TreeMetricError: corpus vide, ou aucun package ne passe le filtre
    """
    if not facts.units:
        raise TreeMetricError("Corpus vide : pas d'arbre de référence")
    groups = apply_thresholds(package_groups(facts), min_size, max_size)
    if not groups:
        raise TreeMetricError(f"Aucun package d'au moins {min_size} modules")
    tree = tree_from_groups(groups)
    logger.info(f"Arbre de référence : {len(groups)} packages, {len(tree.leaves())} modules")
    return tree


# ================================================
# DISTANCE D'ÉDITION (ZHANG-SHASHA)
# ================================================
def _children(node: LabeledTree) -> list[LabeledTree]:
    return list(node.children)


def _update_cost(a: LabeledTree, b: LabeledTree) -> int:
    if a.label == b.label:
        return 0
    if not a.is_leaf and not b.is_leaf:
        return 0
    # Renommer une feuille est interdit
    return FORBIDDEN_COST


def ted(t1: LabeledTree, t2: LabeledTree) -> int:
    """
    Distance d'édition entre arbres canonisés.

    Coûts : insertion 1, suppression 1, renommage interne 0, renommage de feuille interdit.

    Raises:
        TreeMetricError: feuilles dupliquées
    """
    t1.check_unique_leaves()
    t2.check_unique_leaves()
    distance = zss.distance(
        t1.canonical(),
        t2.canonical(),
        get_children=_children,
        insert_cost=lambda node: 1,
        remove_cost=lambda node: 1,
        update_cost=_update_cost,
    )
    return int(distance)


# ================================================
# DIFFÉRENCE DE CHEMINS
# ================================================
def _leaf_path_lengths(tree: LabeledTree, count_edges: bool) -> dict[tuple[str, str], int]:
    graph = nx.Graph()
    leaf_ids: dict[str, int] = {}
    counter = 0

    def walk(node: LabeledTree) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        graph.add_node(node_id)
        if node.is_leaf:
            leaf_ids[node.label] = node_id
        for child in node.children:
            graph.add_edge(node_id, walk(child))
        return node_id

    walk(tree)
    offset = 0 if count_edges else 1
    lengths: dict[tuple[str, str], int] = {}
    distances = {leaf: nx.single_source_shortest_path_length(graph, node) for leaf, node in leaf_ids.items()}
    for a, b in combinations(sorted(leaf_ids), 2):
        lengths[(a, b)] = distances[a][leaf_ids[b]] + offset
    return lengths


def path_difference(
    t1: LabeledTree,
    t2: LabeledTree,
    count_edges: bool = False,
    take_sqrt: bool = False,
) -> float:
    """
    PD = Σ (p1(i,j) − p2(i,j))² sur les paires de feuilles.

    p compte les noeuds traversés, extrémités incluses (ou les arêtes si
    count_edges ; le décalage constant s'annule dans la différence).

    Raises:
        TreeMetricError: ensembles de feuilles différents
    """
    t1.check_unique_leaves()
    t2.check_unique_leaves()
    leaves1, leaves2 = set(t1.leaves()), set(t2.leaves())
    if leaves1 != leaves2:
        diff = sorted(leaves1 ^ leaves2)
        raise TreeMetricError(f"Feuilles différentes entre les arbres : {', '.join(diff)}")
    p1 = _leaf_path_lengths(t1, count_edges)
    p2 = _leaf_path_lengths(t2, count_edges)
    total = sum((p1[pair] - p2[pair]) ** 2 for pair in p1)
    return math.sqrt(total) if take_sqrt else total


# ================================================
# NEWICK
# ================================================
_NEWICK_TOKEN = re.compile(r"\s*('(?:[^']|'')*'|[(),:;]|[^(),:;'\s]+)")
_NEWICK_UNSAFE = re.compile(r"[\s(),:;'\[\]]")


def _quote(label: str) -> str:
    if label and _NEWICK_UNSAFE.search(label):
        return "'" + label.replace("'", "''") + "'"
    return label


def _format_length(length: float) -> str:
    return f"{length:.10g}"


def to_newick(tree: LabeledTree) -> str:
    def render(node: LabeledTree) -> str:
        text = _quote(node.label)
        if node.children:
            text = "(" + ",".join(render(child) for child in node.children) + ")" + text
        if node.length is not None:
            text += ":" + _format_length(node.length)
        return text
    return render(tree) + ";"


def parse_newick(text: str) -> LabeledTree:
    """
    Raises:
        TreeMetricError: texte Newick mal formé
    """
    tokens = [t for t in _NEWICK_TOKEN.findall(text.strip())]
    position = 0

    def peek() -> str | None:
        return tokens[position] if position < len(tokens) else None

    def take() -> str:
        nonlocal position
        if position >= len(tokens):
            raise TreeMetricError("Newick : fin de texte inattendue")
        token = tokens[position]
        position += 1
        return token

    def subtree() -> LabeledTree:
        children: list[LabeledTree] = []
        if peek() == "(":
            take()
            children.append(subtree())
            while peek() == ",":
                take()
                children.append(subtree())
            if take() != ")":
                raise TreeMetricError("Newick : ')' attendue")
        label = ""
        if peek() not in (None, "(", ")", ",", ":", ";"):
            label = take()
            if label.startswith("'"):
                label = label[1:-1].replace("''", "'")
        length = None
        if peek() == ":":
            take()
            try:
                length = float(take())
            except ValueError as exc:
                raise TreeMetricError(f"Newick : longueur de branche invalide ({exc})") from exc
        return LabeledTree(label, tuple(children), length)

    tree = subtree()
    if take() != ";" or peek() is not None:
        raise TreeMetricError("Newick : ';' final attendu")
    return tree


def write_newick(tree: LabeledTree, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_newick(tree) + "\n", encoding="utf-8")
    return path


def read_newick(path: str | os.PathLike) -> LabeledTree:
    return parse_newick(Path(path).read_text(encoding="utf-8"))
