# ================================================
# FICHIER CLUSTERING.PY
# ================================================
# Classification ascendante hiérarchique déterministe :
#   - lien complet (défaut), moyen ou simple, mises à jour de Lance-Williams
#   - égalités départagées par les plus petites étiquettes des deux groupes
#   - matrice de liens au format SciPy, Newick, découpe en k groupes
# ================================================
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.spatial.distance import is_valid_dm

from errors import ClusteringInputError
from tree_metrics import LabeledTree, to_newick

METHODS = ("complete", "average", "single")
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Merge:
    left: int   # identifiants SciPy : feuilles 0..n-1, fusion i -> n+i
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    labels: tuple[str, ...]
    merges: tuple[Merge, ...]
    method: str = "complete"

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def heights(self) -> list[float]:
        return [m.height for m in self.merges]

    @cached_property
    def _members(self) -> list[tuple[str, ...]]:
        members = [(label,) for label in self.labels]
        for merge in self.merges:
            members.append(tuple(sorted(members[merge.left] + members[merge.right])))
        return members

    def members(self, cluster_id: int) -> tuple[str, ...]:
        return self._members[cluster_id]

    def linkage_matrix(self) -> np.ndarray:
        """Matrice (n−1)×4 compatible avec scipy.cluster.hierarchy."""
        return np.array(
            [[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float
        ).reshape(-1, 4)

    def to_newick(self) -> str:
        return to_newick(dendrogram_to_tree(self, with_lengths=True))

    def leaf_order(self) -> list[str]:
        return dendrogram_to_tree(self).leaves()

    def cut(self, k: int) -> list[list[str]]:
        return cut(self, k)


def _validate(distances: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    matrix = np.asarray(distances, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ClusteringInputError(f"Matrice de distances non carrée : {matrix.shape}")
    if matrix.shape[0] != len(labels):
        raise ClusteringInputError(f"{len(labels)} étiquettes pour une matrice {matrix.shape}")
    if len(set(labels)) != len(labels):
        raise ClusteringInputError("Étiquettes dupliquées")
    if not np.isfinite(matrix).all():
        raise ClusteringInputError("Distances non finies")
    if (matrix < 0).any():
        raise ClusteringInputError("Distances négatives")
    if not is_valid_dm(matrix, tol=SYMMETRY_TOL):
        raise ClusteringInputError("Matrice de distances non symétrique ou diagonale non nulle")
    return matrix


def _updated_distance(method: str, d_a: float, d_b: float, size_a: int, size_b: int) -> float:
    if method == "complete":
        return max(d_a, d_b)
    if method == "single":
        return min(d_a, d_b)
    return (size_a * d_a + size_b * d_b) / (size_a + size_b)


def linkage(distances: np.ndarray, labels: Sequence[str], method: str = "complete") -> Dendrogram:
    """
    Classification agglomérative sur une table de distances.

    Args:
        distances: matrice n×n symétrique, diagonale nulle, entrées ≥ 0
        labels: étiquettes des n éléments
        method: complete, average ou single

    Raises:
        ClusteringInputError: matrice invalide ou méthode inconnue
    """
    if method not in METHODS:
        raise ClusteringInputError(f"Méthode de lien inconnue : {method} (attendu {METHODS})")
    labels = tuple(labels)
    if not labels:
        raise ClusteringInputError("Aucun élément à classer")
    matrix = _validate(distances, labels)
    n = len(labels)

    # distance entre groupes actifs, indexée par identifiant SciPy
    table = np.zeros((2 * n - 1, 2 * n - 1))
    table[:n, :n] = matrix
    active = {i: (labels[i], 1) for i in range(n)}  # id -> (plus petite étiquette, taille)
    merges: list[Merge] = []

    for step in range(n - 1):
        best_key, best_pair = None, None
        ids = sorted(active)
        for x, a in enumerate(ids):
            for b in ids[x + 1:]:
                first, second = sorted((active[a][0], active[b][0]))
                key = (table[a, b], first, second)
                if best_key is None or key < best_key:
                    best_key, best_pair = key, (a, b)
        a, b = best_pair
        if active[a][0] > active[b][0]:
            a, b = b, a
        new_id = n + step
        (min_a, size_a), (min_b, size_b) = active.pop(a), active.pop(b)
        for other in active:
            value = _updated_distance(method, table[a, other], table[b, other], size_a, size_b)
            table[new_id, other] = table[other, new_id] = value
        active[new_id] = (min(min_a, min_b), size_a + size_b)
        merges.append(Merge(a, b, float(table[a, b]), size_a + size_b))

    logger.debug(f"Lien {method} : {n} éléments, hauteur finale {merges[-1].height if merges else 0.0:.4f}")
    return Dendrogram(labels, tuple(merges), method)


def complete_linkage(distances: np.ndarray, labels: Sequence[str]) -> Dendrogram:
    return linkage(distances, labels, "complete")


def cut(dendrogram: Dendrogram, k: int) -> list[list[str]]:
    """
    Partition en k groupes : on retire les k−1 fusions les plus hautes
    (les dernières, les hauteurs étant monotones).

    Raises:
        ClusteringInputError: k hors de [1, n]
    """
    n = dendrogram.n
    if not 1 <= k <= n:
        raise ClusteringInputError(f"k = {k} hors de l'intervalle [1, {n}]")
    roots = set(range(n))
    for step, merge in enumerate(dendrogram.merges[: n - k]):
        roots -= {merge.left, merge.right}
        roots.add(n + step)
    groups = [list(dendrogram.members(cluster_id)) for cluster_id in roots]
    return sorted(groups, key=lambda group: group[0])


def partition_to_json(dendrogram: Dendrogram, k: int) -> dict:
    groups = cut(dendrogram, k)
    return {
        "method": dendrogram.method,
        "k": k,
        "clusters": [{"id": i, "members": group} for i, group in enumerate(groups)],
    }


def write_partition(dendrogram: Dendrogram, k: int, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(partition_to_json(dendrogram, k), indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def dendrogram_to_tree(dendrogram: Dendrogram, with_lengths: bool = False) -> LabeledTree:
    """
    Arbre de fusion vu comme arbre étiqueté : feuilles = étiquettes,
    noeuds internes sans étiquette. Longueurs de branche optionnelles
    (différence des hauteurs de fusion).
    """
    n = dendrogram.n
    heights = [0.0] * n + dendrogram.heights

    def build(cluster_id: int, parent_height: float | None) -> LabeledTree:
        length = None
        if with_lengths and parent_height is not None:
            length = parent_height - heights[cluster_id]
        if cluster_id < n:
            return LabeledTree(dendrogram.labels[cluster_id], (), length)
        merge = dendrogram.merges[cluster_id - n]
        height = heights[cluster_id]
        children = (build(merge.left, height), build(merge.right, height))
        return LabeledTree("", children, length)

    return build(n + len(dendrogram.merges) - 1 if dendrogram.merges else 0, None)
