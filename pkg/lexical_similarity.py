"""
Similarité lexicale entre noms d'identifiants.

    LCS   : plus longue sous-séquence commune, |lcs|² / (|a|·|b|)
    LCU   : plus longue sous-chaîne commune,   |lcu|² / (|a|·|b|)
    Const : noyau des sous-chaînes communes, Σ_s num_s(a)·num_s(b),
            calculé par tableau des suffixes + LCP
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from errors import ConfigError

KERNELS = ("lcs", "lcu", "const")


@dataclass(frozen=True)
class LexicalConfig:
    kernel: str = "lcu"
    const_normalization: bool = True
    # Les identifiants sont comparés en minuscules par défaut : carOwner / carModel -> "caroe"
    case_sensitive: bool = False

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ConfigError(f"Noyau lexical inconnu : {self.kernel} (attendu {KERNELS})")


def _fold(text: str, case_sensitive: bool) -> str:
    return text if case_sensitive else text.lower()


# ================================================
# PROGRAMMATION DYNAMIQUE
# ================================================
@lru_cache(maxsize=65536)
def longest_common_subsequence(a: str, b: str) -> str:
    n, m = len(a), len(b)
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                table[i, j] = table[i - 1, j - 1] + 1
            else:
                table[i, j] = max(table[i - 1, j], table[i, j - 1])
    chars = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            chars.append(a[i - 1])
            i, j = i - 1, j - 1
        elif table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
    return "".join(reversed(chars))


@lru_cache(maxsize=65536)
def longest_common_substring(a: str, b: str) -> str:
    """Première plus longue sous-chaîne commune (ordre de fin dans `a`)."""
    best_len, best_end = 0, 0
    previous = [0] * (len(b) + 1)
    for i in range(1, len(a) + 1):
        current = [0] * (len(b) + 1)
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                current[j] = previous[j - 1] + 1
                if current[j] > best_len:
                    best_len, best_end = current[j], i
        previous = current
    return a[best_end - best_len:best_end]


def sim_lcs(id1: str, id2: str, case_sensitive: bool = False) -> float:
    if not id1 or not id2:
        return 0.0
    a, b = _fold(id1, case_sensitive), _fold(id2, case_sensitive)
    length = len(longest_common_subsequence(a, b))
    return length * length / (len(a) * len(b))


def sim_lcu(id1: str, id2: str, case_sensitive: bool = False) -> float:
    if not id1 or not id2:
        return 0.0
    a, b = _fold(id1, case_sensitive), _fold(id2, case_sensitive)
    length = len(longest_common_substring(a, b))
    return length * length / (len(a) * len(b))


# ================================================
# TABLEAU DES SUFFIXES
# ================================================
def suffix_array(seq: Sequence[int]) -> np.ndarray:
    """Tableau des suffixes par doublement de préfixe (numpy.lexsort)."""
    n = len(seq)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    rank = np.unique(np.asarray(seq), return_inverse=True)[1].astype(np.int64)
    order = np.argsort(rank, kind="stable")
    k = 1
    while rank.max() < n - 1:
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[: n - k] = rank[k:]
        order = np.lexsort((second, rank))
        changed = (np.diff(rank[order]) != 0) | (np.diff(second[order]) != 0)
        rank = np.empty(n, dtype=np.int64)
        rank[order] = np.concatenate(([0], np.cumsum(changed)))
        k *= 2
    return order


def lcp_array(seq: Sequence[int], sa: np.ndarray) -> np.ndarray:
    """lcp[r] = plus long préfixe commun de sa[r-1] et sa[r] (Kasai), lcp[0] = 0."""
    n = len(sa)
    rank = np.empty(n, dtype=np.int64)
    rank[sa] = np.arange(n)
    lcp = np.zeros(n, dtype=np.int64)
    k = 0
    for i in range(n):
        if rank[i] == 0:
            k = 0
            continue
        j = sa[rank[i] - 1]
        while i + k < n and j + k < n and seq[i + k] == seq[j + k]:
            k += 1
        lcp[rank[i]] = k
        if k:
            k -= 1
    return lcp


@lru_cache(maxsize=65536)
def _const_raw(a: str, b: str) -> int:
    # a + sep1 + b + sep2 : séparateurs uniques, hors alphabet
    seq = [ord(c) for c in a] + [-1] + [ord(c) for c in b] + [-2]
    side = [0] * len(a) + [-1] + [1] * len(b) + [-1]
    sa = suffix_array(seq)
    lcp = lcp_array(seq, sa)
    # Pile d'intervalles lcp : [hauteur, effectif côté a, effectif côté b], hauteurs croissantes.
    # below[s] = somme des lcp courants entre le suffixe en cours et les suffixes précédents du côté s.
    total = 0
    below = [0, 0]
    stack: list[list[int]] = []
    for q in range(1, len(sa)):
        h = int(lcp[q])
        group = [h, 0, 0]
        prev = side[sa[q - 1]]
        if prev >= 0:
            group[1 + prev] += 1
            below[prev] += h
        while stack and stack[-1][0] >= h:
            height, count_a, count_b = stack.pop()
            below[0] -= (height - h) * count_a
            below[1] -= (height - h) * count_b
            group[1] += count_a
            group[2] += count_b
        stack.append(group)
        current = side[sa[q]]
        if current >= 0:
            total += below[1 - current]
    return total


def sim_const(id1: str, id2: str, normalized: bool = True, case_sensitive: bool = False) -> float:
    """
    Noyau des sous-chaînes communes (sous-chaîne vide exclue).

    Raises:
        ValueError: forme normalisée demandée avec un identifiant vide
    """
    a, b = _fold(id1, case_sensitive), _fold(id2, case_sensitive)
    if not normalized:
        if not a or not b:
            return 0.0
        return float(_const_raw(a, b))
    if not a or not b:
        raise ValueError("Noyau Const normalisé indéfini pour un identifiant vide")
    return _const_raw(a, b) / math.sqrt(_const_raw(a, a) * _const_raw(b, b))


def lexical_function(config: LexicalConfig) -> Callable[[str, str], float]:
    """Fonction de similarité lexicale correspondant à la configuration."""
    if config.kernel == "lcs":
        return lambda a, b: sim_lcs(a, b, config.case_sensitive)
    if config.kernel == "lcu":
        return lambda a, b: sim_lcu(a, b, config.case_sensitive)
    return lambda a, b: sim_const(a, b, config.const_normalization, config.case_sensitive)
