# ================================================
# FICHIER VECTOR_MODELS.PY
# ================================================
# Représentations vectorielles des modules :
#   BoI  : sac d'identifiants
#   BoIT : sac de couples (identifiant, type)
#   BoT  : sac de types
# puis noyau sémantique φ'(d) = φ(d)·P avec P = R·S
#   R : pondération idf (diagonale)
#   S : similarité sémantique entre traits
# ================================================
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Hashable

import numpy as np
from loguru import logger
from sklearn.preprocessing import normalize

from conceptual_similarity import ConceptSimilarity, pairwise_matrix
from corpus_ingest import CorpusFacts
from errors import ModelError

KINDS = ("boi", "boit", "bot")
WEIGHTINGS = ("idf", "tfidf", "none")
IDF_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureSpace:
    kind: str
    features: tuple[Hashable, ...]

    @cached_property
    def index(self) -> dict[Hashable, int]:
        return {f: i for i, f in enumerate(self.features)}

    def __len__(self) -> int:
        return len(self.features)


@dataclass(frozen=True)
class DocFeatureMatrix:
    docs: tuple[str, ...]
    space: FeatureSpace
    counts: np.ndarray  # docs × traits, entiers ≥ 0

    def row(self, doc: str) -> dict[Hashable, int]:
        i = self.docs.index(doc)
        return {f: int(c) for f, c in zip(self.space.features, self.counts[i]) if c}


@dataclass(frozen=True)
class ProximityMatrix:
    R: np.ndarray  # diagonale de pondération
    S: np.ndarray  # similarité entre traits

    @property
    def P(self) -> np.ndarray:
        return self.R[:, None] * self.S


def build_bof(facts: CorpusFacts, kind: str) -> DocFeatureMatrix:
    """
    Matrice documents × traits pour BoI, BoIT ou BoT.

    Raises:
        ModelError: corpus vide ou aucun trait
    """
    if kind not in KINDS:
        raise ModelError(f"Modèle inconnu : {kind} (attendu {KINDS})")
    if not facts.units:
        raise ModelError("Corpus vide")

    rows: list[dict[Hashable, int]] = []
    for unit in facts.units:
        row: dict[Hashable, int] = {}
        for occ in unit.occurrences:
            if kind == "boi":
                key: Hashable = occ.identifier
            elif kind == "boit":
                key = (occ.identifier, occ.declared_type)
            else:
                key = occ.declared_type
            row[key] = row.get(key, 0) + occ.count
        rows.append(row)

    features = tuple(sorted({f for row in rows for f in row}))
    if not features:
        raise ModelError(f"Aucun trait {kind.upper()} dans le corpus")
    space = FeatureSpace(kind, features)
    counts = np.zeros((len(rows), len(features)), dtype=np.int64)
    for i, row in enumerate(rows):
        for feature, count in row.items():
            counts[i, space.index[feature]] = count
    logger.debug(f"{kind.upper()} : {counts.shape[0]} documents × {counts.shape[1]} traits")
    return DocFeatureMatrix(tuple(facts.unit_names), space, counts)


def idf_diag(matrix: DocFeatureMatrix) -> np.ndarray:
    """R(f,f) = ln(N/df(f)), plancher ε pour les traits présents partout."""
    n_docs = matrix.counts.shape[0]
    df = np.count_nonzero(matrix.counts, axis=0)
    weights = np.log(n_docs / df)
    weights[weights <= 0] = IDF_FLOOR
    return weights


def weighted_features(matrix: DocFeatureMatrix, weighting: str = "idf") -> tuple[np.ndarray, np.ndarray]:
    """Φ (fréquences, sous-linéaires pour tf-idf) et diagonale R."""
    if weighting not in WEIGHTINGS:
        raise ModelError(f"Pondération inconnue : {weighting} (attendu {WEIGHTINGS})")
    counts = matrix.counts.astype(float)
    if weighting == "none":
        return counts, np.ones(counts.shape[1])
    if weighting == "tfidf":
        counts = np.where(counts > 0, 1.0 + np.log(np.where(counts > 0, counts, 1.0)), 0.0)
    return counts, idf_diag(matrix)


def semantic_matrix(
    space: FeatureSpace,
    concepts: ConceptSimilarity | None = None,
    lexical: Callable[[str, str], float] | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """
    Matrice S de similarité entre traits, symétrique, diagonale 1, entrées ≥ 0.

    BoI  : S(i,j) = simWSD(id_i,id_j) · lex(id_i,id_j)
    BoIT : S((i,t),(j,u)) = sim(t,u) · lex(id_i,id_j)
    BoT  : S(t,u) = sim(t,u)
    Un facteur absent (None) vaut 1 ; sans aucun facteur, S = I.
    Un trait dont le type est inconnu du réseau garde une ligne identité.
    """
    n = len(space)
    if concepts is None and (lexical is None or space.kind == "bot"):
        return np.eye(n)

    def known(feature) -> bool:
        if concepts is None:
            return True
        if space.kind == "boit":
            return concepts.knows(feature[1])
        if space.kind == "bot":
            return concepts.knows(feature)
        return True

    def score(f, g) -> float:
        if f == g:
            return 1.0
        if not (known(f) and known(g)):
            return 0.0
        if space.kind == "boi":
            value = concepts.identifier_sim(f, g) if concepts else 1.0
            return value * (lexical(f, g) if lexical else 1.0)
        if space.kind == "boit":
            value = concepts.concept_sim(f[1], g[1]) if concepts else 1.0
            if value == 0.0:
                return 0.0
            return value * (lexical(f[0], g[0]) if lexical else 1.0)
        return concepts.concept_sim(f, g)

    matrix = pairwise_matrix(space.features, score, jobs)
    np.clip(matrix, 0.0, None, out=matrix)
    np.fill_diagonal(matrix, 1.0)
    return matrix


def semantic_kernel(phi: np.ndarray, proximity: ProximityMatrix) -> np.ndarray:
    """K = Φ P Pᵀ Φᵀ (semi-défini positif par construction)."""
    transformed = phi @ proximity.P
    return transformed @ transformed.T


def document_kernel(phi: np.ndarray, proximity: ProximityMatrix) -> np.ndarray:
    """
    Similarité document-document normalisée (cosinus) :
    K'(a,b) = K(a,b) / sqrt(K(a,a) K(b,b)).
    Un document nul a une similarité 0 avec les autres et 1 avec lui-même.
    """
    transformed = normalize(phi @ proximity.P, norm="l2")
    kernel = transformed @ transformed.T
    np.clip(kernel, -1.0, 1.0, out=kernel)
    np.fill_diagonal(kernel, 1.0)
    return kernel


def kernel_to_distance(kernel: np.ndarray) -> np.ndarray:
    """D = 1 − K', diagonale nulle, bornée à [0, 2]."""
    distance = np.clip(1.0 - kernel, 0.0, 2.0)
    distance = (distance + distance.T) / 2.0
    np.fill_diagonal(distance, 0.0)
    return distance


def build_identifier_context_matrix(
    matrix: DocFeatureMatrix, transformed: np.ndarray
) -> tuple[list[str], list[tuple[str, str]], np.ndarray]:
    """
    Pivote une matrice BoIT (documents × (id, type)) en
    identifiants × (document, type), pour l'analyse des thèmes.
    """
    if matrix.space.kind != "boit":
        raise ModelError("Le pivot identifiant × (document, type) exige un modèle BoIT")
    identifiers = sorted({ident for ident, _ in matrix.space.features})
    row_of = {ident: i for i, ident in enumerate(identifiers)}
    cells: dict[tuple[int, int, str], float] = {}
    for d in range(transformed.shape[0]):
        for f, (ident, typ) in enumerate(matrix.space.features):
            value = transformed[d, f]
            if value != 0.0:
                key = (row_of[ident], d, typ)
                cells[key] = cells.get(key, 0.0) + float(value)
    column_keys = sorted({(d, typ) for _, d, typ in cells})
    col_of = {key: j for j, key in enumerate(column_keys)}
    pivot = np.zeros((len(identifiers), len(column_keys)))
    for (i, d, typ), value in cells.items():
        pivot[i, col_of[(d, typ)]] = value
    columns = [(matrix.docs[d], typ) for d, typ in column_keys]
    return identifiers, columns, pivot
