"""
Similarité conceptuelle entre types et entre identifiants.

Mesures fondées sur les chemins de la hiérarchie ITO (IPL, WUP, LC, CD),
désambiguïsation des sens d'un identifiant (WSD) et diffusion de la
similarité sur le réseau non orienté (noyau exponentiel exp(αA)).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import networkx as nx
import numpy as np
import pandas as pd
from loguru import logger
from scipy import linalg

from corpus_ingest import VIRTUAL_ROOT
from errors import ConfigError, UnknownConceptError
from java_parser import UNTYPED
from semantic_network import CONCEPT, Node, SemanticNetwork

MEASURES = ("ipl", "wup", "lc", "cd", "diffusion")


@dataclass(frozen=True)
class SimilarityConfig:
    measure: str = "ipl"
    alpha_ipl: float = 1.0
    alpha_diffusion: float = 0.5

    def __post_init__(self):
        if self.measure not in MEASURES:
            raise ConfigError(f"Mesure conceptuelle inconnue : {self.measure} (attendu {MEASURES})")
        if self.alpha_ipl <= 0 or self.alpha_diffusion <= 0:
            raise ConfigError("Les paramètres alpha doivent être strictement positifs")


# ================================================
# VUE HIÉRARCHIQUE
# ================================================
class TypeHierarchyView:
    """Profondeurs, ancêtres et plus proche hyperonyme commun (nch)."""

    def __init__(self, network: SemanticNetwork):
        self.network = network
        self.ito = network.ito_graph
        # Profondeur minimale en cas de chemins multiples
        self.depth: dict[str, int] = dict(nx.single_target_shortest_path_length(self.ito, VIRTUAL_ROOT))

    @property
    def concepts(self) -> list[str]:
        return self.network.concepts

    def _check(self, concept: str) -> None:
        if concept not in self.depth:
            raise UnknownConceptError(f"Concept inconnu : {concept}")

    @lru_cache(maxsize=None)
    def ancestors(self, concept: str) -> frozenset[str]:
        self._check(concept)
        return frozenset(nx.descendants(self.ito, concept) | {concept})

    @lru_cache(maxsize=None)
    def nch(self, t1: str, t2: str) -> str:
        common = self.ancestors(t1) & self.ancestors(t2)
        return min(common, key=lambda c: (-self.depth[c], c))

    def distance_to(self, concept: str, ancestor: str) -> int:
        return nx.shortest_path_length(self.ito, concept, ancestor)

    def path_length(self, t1: str, t2: str) -> int:
        """d(T1,T2) = l1 + l2, distances ITO jusqu'au nch."""
        common = self.nch(t1, t2)
        return self.distance_to(t1, common) + self.distance_to(t2, common)


# ================================================
# MESURES FONDÉES SUR LES CHEMINS
# ================================================
def sim_ipl(view: TypeHierarchyView, t1: str, t2: str, alpha: float = 1.0) -> float:
    return 1.0 / (1.0 + view.path_length(t1, t2)) ** alpha


def sim_wup(view: TypeHierarchyView, t1: str, t2: str) -> float:
    common = view.nch(t1, t2)
    dep = view.depth[common]
    denominator = view.distance_to(t1, common) + view.distance_to(t2, common) + 2 * dep
    return 2.0 * dep / denominator if denominator else 0.0


def sim_lc(view: TypeHierarchyView, t1: str, t2: str) -> float:
    # d = 0 est ramené à 1, la mesure n'étant pas définie en 0
    d = max(view.path_length(t1, t2), 1)
    max_depth = max(view.depth[t1], view.depth[t2], 1)
    return max(0.0, -math.log(d / (2.0 * max_depth)))


def sim_cd(view: TypeHierarchyView, t1: str, t2: str) -> float:
    sub = view.network.subhierarchy(view.nch(t1, t2))
    mu = sub.mu
    if mu == 1.0:
        h = 2
    elif mu == 0.0:
        h = 0
    else:
        h = max(0, math.floor(math.log(2) / math.log(mu)))
    return sum(mu ** i for i in range(h + 1)) / sub.size


# ================================================
# DIFFUSION
# ================================================
def diffusion_kernel(adjacency: np.ndarray, alpha: float) -> np.ndarray:
    """K = exp(αA) par décomposition spectrale (A symétrique)."""
    eigenvalues, eigenvectors = linalg.eigh(adjacency)
    return (eigenvectors * np.exp(alpha * eigenvalues)) @ eigenvectors.T


def rescale_unit_diagonal(kernel: np.ndarray) -> np.ndarray:
    """K'(i,j) = K(i,j) / sqrt(K(i,i) K(j,j)) ; diagonale nulle -> ligne identité."""
    diag = np.diag(kernel).copy()
    safe = np.where(diag > 0, diag, 1.0)
    scaled = kernel / np.sqrt(np.outer(safe, safe))
    dead = diag <= 0
    scaled[dead, :] = 0.0
    scaled[:, dead] = 0.0
    np.fill_diagonal(scaled, 1.0)
    return scaled


def scaled_diffusion(adjacency: np.ndarray, alpha: float) -> np.ndarray:
    """exp(αA) à diagonale unité ; valeurs propres décalées de leur maximum (le facteur commun s'annule)."""
    if adjacency.shape[0] == 0:
        return np.zeros((0, 0))
    eigenvalues, eigenvectors = linalg.eigh(adjacency)
    shifted = np.exp(alpha * (eigenvalues - eigenvalues.max()))
    kernel = (eigenvectors * shifted) @ eigenvectors.T
    return rescale_unit_diagonal((kernel + kernel.T) / 2.0)


@dataclass(frozen=True)
class NodeSimilarity:
    """Table symétrique de similarité entre noeuds du réseau."""
    nodes: tuple[Node, ...]
    values: np.ndarray

    @cached_property
    def index(self) -> dict[Node, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    def score(self, u: Node, v: Node) -> float:
        return float(self.values[self.index[u], self.index[v]])


def diffusion_similarity(network: SemanticNetwork, alpha: float = 0.5) -> NodeSimilarity:
    """
    Similarité par diffusion sur la vue non orientée et sans type de relation.

    Les valeurs propres sont décalées de leur maximum avant l'exponentielle :
    la remise à l'échelle sur la diagonale annule ce facteur commun et les
    poids élevés ne provoquent pas de dépassement.
    """
    nodes, adjacency = network.relation_blind_adjacency()
    logger.debug(f"Diffusion : {len(nodes)} noeuds, α={alpha}")
    return NodeSimilarity(tuple(nodes), scaled_diffusion(adjacency, alpha))


# ================================================
# DÉSAMBIGUÏSATION (WSD)
# ================================================
def disambiguate_sim(
    id1: str,
    id2: str,
    network: SemanticNetwork,
    concept_sim: Callable[[str, str], float],
) -> float:
    """
    Similarité entre deux identifiants : meilleur couple de sens.

    score = max sur (Ta, Tb) de concept_sim(Ta, Tb) * (w(id1,Ta)/2out(Ta) + w(id2,Tb)/2out(Tb))
    """
    best = 0.0
    for ta in network.senses(id1):
        out_a = network.out_weight(ta)
        part_a = network.isa_weight(id1, ta) / (2.0 * out_a) if out_a else 0.0
        for tb in network.senses(id2):
            out_b = network.out_weight(tb)
            part_b = network.isa_weight(id2, tb) / (2.0 * out_b) if out_b else 0.0
            score = concept_sim(ta, tb) * (part_a + part_b)
            if score > best:
                best = score
    return best


class ConceptSimilarity:
    """
    Mesure conceptuelle configurée sur un réseau, avec cache.

    concept_sim traite le type sentinelle ⊥ : sim(⊥,⊥)=1, sim(⊥,T)=0.
    """

    def __init__(self, network: SemanticNetwork, config: SimilarityConfig | None = None):
        self.network = network
        self.config = config or SimilarityConfig()
        self.view = TypeHierarchyView(network)
        self._cache: dict[tuple[str, str], float] = {}
        self._id_cache: dict[tuple[str, str], float] = {}

    @cached_property
    def diffusion(self) -> NodeSimilarity:
        return diffusion_similarity(self.network, self.config.alpha_diffusion)

    def knows(self, concept: str) -> bool:
        return concept == UNTYPED or concept in self.view.depth

    def _raw(self, t1: str, t2: str) -> float:
        measure = self.config.measure
        if measure == "ipl":
            return sim_ipl(self.view, t1, t2, self.config.alpha_ipl)
        if measure == "wup":
            return sim_wup(self.view, t1, t2)
        if measure == "lc":
            return sim_lc(self.view, t1, t2)
        if measure == "cd":
            return sim_cd(self.view, t1, t2)
        return self.diffusion.score((CONCEPT, t1), (CONCEPT, t2))

    def concept_sim(self, t1: str, t2: str) -> float:
        if t1 == UNTYPED or t2 == UNTYPED:
            return 1.0 if t1 == t2 else 0.0
        key = (t1, t2) if t1 <= t2 else (t2, t1)
        if key not in self._cache:
            self._cache[key] = self._raw(*key)
        return self._cache[key]

    def identifier_sim(self, id1: str, id2: str) -> float:
        key = (id1, id2) if id1 <= id2 else (id2, id1)
        if key not in self._id_cache:
            self._id_cache[key] = disambiguate_sim(key[0], key[1], self.network, self.concept_sim)
        return self._id_cache[key]


# ================================================
# TABLES DE SIMILARITÉ
# ================================================
def pairwise_matrix(labels: Sequence[str], fn: Callable[[str, str], float], jobs: int = 1) -> np.ndarray:
    """Matrice symétrique fn(labels[i], labels[j]) ; triangle supérieur réparti sur `jobs` threads."""
    n = len(labels)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        scores = list(executor.map(lambda p: fn(labels[p[0]], labels[p[1]]), pairs))
    matrix = np.zeros((n, n))
    for (i, j), score in zip(pairs, scores):
        matrix[i, j] = matrix[j, i] = score
    return matrix


def similarity_table(labels: Sequence[str], fn: Callable[[str, str], float], jobs: int = 1) -> pd.DataFrame:
    return pd.DataFrame(pairwise_matrix(labels, fn, jobs), index=list(labels), columns=list(labels))
