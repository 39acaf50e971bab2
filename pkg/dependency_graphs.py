# ================================================
# FICHIER DEPENDENCY_GRAPHS.PY
# ================================================
# Graphes de dépendances de données (DDG) par module, insensibles au flot :
#   v := e        producteurs de e -> v              (definition)
#   return e      producteurs de e -> méthode        (return)
#   f(e1..en)     arguments -> paramètres de f, ou -> f si inconnus (call-binding)
#   résultat d'appel passé en argument                (value)
#   e.id          receveur <-> id                     (access-path)
#   opérateurs    chaîne d'opérateurs -> appel anonyme ⊥fun
#
# Comparaison par noyau de marches aléatoires sur le graphe produit :
#   k = eᵀ (I − λA×)⁻¹ e
# ================================================
from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import networkx as nx
import numpy as np
import pandas as pd
from loguru import logger

from conceptual_similarity import ConceptSimilarity, pairwise_matrix, rescale_unit_diagonal
from errors import ConfigError, KernelDivergenceError
from java_parser import (
    Assign, BinaryOp, Call, ExprStmt, FieldAccess, LocalDecl, MethodDecl, Name, New,
    Return, SourceUnit, This, UnaryOp,
)

DEFINITION = "definition"
VALUE = "value"
RETURN = "return"
CALL_BINDING = "call-binding"
ACCESS_PATH = "access-path"
EDGE_KINDS = (DEFINITION, VALUE, RETURN, CALL_BINDING, ACCESS_PATH)

NAMELESS = "⊥fun"
POWER_TOL = 1e-10
POWER_MAX_ITER = 1000

LabelSimilarity = Callable[[str, str], float]


# ================================================
# GRAPHE
# ================================================
class DepGraph:
    """
    Graphe de dépendances d'un module (ou d'un programme fusionné).

    Noeuds : identifiant du sommet, attribut `label`.
    Arcs : attribut `kinds` (ensemble des règles qui ont produit l'arc).
    """

    def __init__(self, name: str, graph: nx.DiGraph | None = None):
        self.name = name
        self.graph = graph if graph is not None else nx.DiGraph()

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    @property
    def vertices(self) -> list[str]:
        return sorted(self.graph.nodes)

    def label(self, vertex: str) -> str:
        return self.graph.nodes[vertex]["label"]

    @property
    def labels(self) -> list[str]:
        return [self.label(v) for v in self.vertices]

    def add_vertex(self, vertex: str, label: str | None = None) -> None:
        if vertex not in self.graph:
            self.graph.add_node(vertex, label=label or vertex)

    def add_edge(self, source: str, target: str, kind: str) -> None:
        if source == target:
            return
        if self.graph.has_edge(source, target):
            self.graph.edges[source, target]["kinds"].add(kind)
        else:
            self.graph.add_edge(source, target, kinds={kind})

    def edges(self, kind: str | None = None) -> list[tuple[str, str]]:
        return sorted(
            (u, v) for u, v, kinds in self.graph.edges(data="kinds")
            if kind is None or kind in kinds
        )

    def kinds(self, source: str, target: str) -> set[str]:
        return set(self.graph.edges[source, target]["kinds"])

    def has_edge(self, source: str, target: str, kind: str | None = None) -> bool:
        if not self.graph.has_edge(source, target):
            return False
        return kind is None or kind in self.graph.edges[source, target]["kinds"]

    def nameless_vertices(self) -> list[str]:
        return [v for v in self.vertices if self.label(v) == NAMELESS]

    def adjacency(self) -> np.ndarray:
        """Adjacence 0/1 dans l'ordre de `vertices` (orientation conservée)."""
        return nx.to_numpy_array(self.graph, nodelist=self.vertices, weight=None)

    def reaches(self, source: str, target: str) -> bool:
        return source in self.graph and target in self.graph and nx.has_path(self.graph, source, target)

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "source": u,
                "source_label": self.label(u),
                "target": v,
                "target_label": self.label(v),
                "kinds": "|".join(sorted(self.graph.edges[u, v]["kinds"])),
            }
            for u, v in self.edges()
        ]
        return pd.DataFrame(rows, columns=["source", "source_label", "target", "target_label", "kinds"])

    def write_csv(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False)
        return path

    def write_dot(self, path: str | os.PathLike) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        ids = {vertex: f"v{i}" for i, vertex in enumerate(self.vertices)}
        view = nx.DiGraph()
        for vertex, vertex_id in ids.items():
            shape = "box" if self.label(vertex) == NAMELESS else "ellipse"
            view.add_node(vertex_id, label=f'"{self.label(vertex)}"', shape=shape)
        for u, v in self.edges():
            kinds = ",".join(sorted(self.graph.edges[u, v]["kinds"]))
            style = "dashed" if ACCESS_PATH in self.graph.edges[u, v]["kinds"] else "solid"
            view.add_edge(ids[u], ids[v], label=f'"{kinds}"', style=style)
        nx.nx_pydot.write_dot(view, path)
        return path


# ================================================
# CONSTRUCTION
# ================================================
@dataclass
class _DdgBuilder:
    unit: SourceUnit
    ddg: DepGraph = field(init=False)
    nameless_count: int = 0

    def __post_init__(self):
        self.ddg = DepGraph(self.unit.unit_name)
        self.call_vertices: set[str] = set()

    # --- sommets -------------------------------------------------------
    def identifier(self, name: str) -> str:
        self.ddg.add_vertex(name)
        return name

    def call_vertex(self, name: str) -> str:
        self.ddg.add_vertex(name)
        self.call_vertices.add(name)
        return name

    def nameless_vertex(self) -> str:
        self.nameless_count += 1
        vertex = f"{NAMELESS}@{self.unit.unit_name}#{self.nameless_count}"
        self.ddg.add_vertex(vertex, NAMELESS)
        self.call_vertices.add(vertex)
        return vertex

    def flow(self, sources: list[str], target: str, kind: str) -> None:
        """Arcs producteur -> consommateur ; un résultat d'appel devient un arc value."""
        for source in sources:
            if kind == CALL_BINDING and source in self.call_vertices:
                self.ddg.add_edge(source, target, VALUE)
            else:
                self.ddg.add_edge(source, target, kind)

    def access(self, receivers: list[str], member: str) -> None:
        for receiver in receivers:
            self.ddg.add_edge(receiver, member, ACCESS_PATH)
            self.ddg.add_edge(member, receiver, ACCESS_PATH)

    # --- résolution des appels -----------------------------------------
    def local_callee(self, name: str, arity: int) -> MethodDecl | None:
        for method in self.unit.class_decl.methods:
            if method.name == name and len(method.params) == arity:
                return method
        return None

    def bind_arguments(self, args: tuple, callee: MethodDecl | None, call: str) -> None:
        for position, arg in enumerate(args):
            sources = self.sources(arg)
            if callee is not None:
                target = self.identifier(callee.params[position].name)
            else:
                target = call
            self.flow(sources, target, CALL_BINDING)

    # --- expressions ---------------------------------------------------
    def sources(self, expr) -> list[str]:
        """Sommets dont la valeur est produite par l'expression."""
        if isinstance(expr, Name):
            return [self.identifier(expr.ident)]
        if isinstance(expr, FieldAccess):
            member = self.identifier(expr.name)
            self.access(self.receivers(expr.target), member)
            return [member]
        if isinstance(expr, Call):
            call = self.call_vertex(expr.name)
            own_method = expr.target is None or isinstance(expr.target, This)
            if not own_method:
                self.access(self.receivers(expr.target), call)
            callee = self.local_callee(expr.name, len(expr.args)) if own_method else None
            self.bind_arguments(expr.args, callee, call)
            return [call]
        if isinstance(expr, New):
            type_name = expr.type_name.rsplit(".", 1)[-1]
            call = self.call_vertex(type_name)
            callee = None
            if type_name == self.unit.class_name:
                callee = self.local_callee(type_name, len(expr.args))
            self.bind_arguments(expr.args, callee, call)
            return [call]
        if isinstance(expr, (BinaryOp, UnaryOp)):
            operands: list[str] = []
            for leaf in _operator_leaves(expr):
                operands.extend(self.sources(leaf))
            if not operands:
                return []
            vertex = self.nameless_vertex()
            self.flow(operands, vertex, CALL_BINDING)
            return [vertex]
        # This, Literal
        return []

    def receivers(self, target) -> list[str]:
        if isinstance(target, This):
            return []
        return self.sources(target)

    # --- instructions --------------------------------------------------
    def statement(self, method: MethodDecl, stmt) -> None:
        if isinstance(stmt, LocalDecl):
            target = self.identifier(stmt.name)
            if stmt.init is not None:
                self.flow(self.sources(stmt.init), target, DEFINITION)
        elif isinstance(stmt, Assign):
            value = stmt.value
            if stmt.op != "=":
                value = BinaryOp(stmt.op[0], stmt.target, stmt.value)
            targets = self.sources(stmt.target)
            produced = self.sources(value)
            for target in targets:
                self.flow(produced, target, DEFINITION)
        elif isinstance(stmt, Return):
            if stmt.value is not None:
                self.flow(self.sources(stmt.value), self.call_vertex(method.name), RETURN)
        elif isinstance(stmt, ExprStmt):
            self.sources(stmt.expr)

    def build(self) -> DepGraph:
        class_decl = self.unit.class_decl
        for fdecl in class_decl.fields:
            target = self.identifier(fdecl.name)
            if fdecl.init is not None:
                self.flow(self.sources(fdecl.init), target, DEFINITION)
        for method in class_decl.methods:
            for param in method.params:
                self.identifier(param.name)
            for stmt in method.body:
                self.statement(method, stmt)
        return self.ddg


def _operator_leaves(expr) -> list:
    """Opérandes d'une chaîne maximale d'opérateurs, de gauche à droite."""
    if isinstance(expr, BinaryOp):
        return _operator_leaves(expr.left) + _operator_leaves(expr.right)
    if isinstance(expr, UnaryOp):
        return _operator_leaves(expr.operand)
    return [expr]


def build_ddg(unit: SourceUnit) -> DepGraph:
    """
    Construit le graphe de dépendances de données d'une unité.

    Args:
        unit: unité analysée par java_parser.parse_unit

    Returns:
        DepGraph ; un appel non résolu devient un sommet d'appel opaque
    """
    ddg = _DdgBuilder(unit).build()
    logger.debug(
        f"DDG {unit.unit_name} : {ddg.graph.number_of_nodes()} sommets, "
        f"{ddg.graph.number_of_edges()} arcs"
    )
    return ddg


def merge_graphs(graphs: Sequence[DepGraph], name: str = "programme") -> DepGraph:
    """Union des sommets (par identifiant) et des arcs, ordre déterministe."""
    merged = nx.DiGraph()
    nodes: dict[str, str] = {}
    edges: dict[tuple[str, str], set[str]] = {}
    for ddg in graphs:
        for vertex in ddg.vertices:
            nodes.setdefault(vertex, ddg.label(vertex))
        for u, v in ddg.edges():
            edges.setdefault((u, v), set()).update(ddg.kinds(u, v))
    for vertex in sorted(nodes):
        merged.add_node(vertex, label=nodes[vertex])
    for (u, v) in sorted(edges):
        merged.add_edge(u, v, kinds=edges[(u, v)])
    return DepGraph(name, merged)


# ================================================
# NOYAU DE MARCHES ALÉATOIRES
# ================================================
@dataclass(frozen=True)
class WalkKernelConfig:
    """λ explicite, ou None pour λ = lambda_scale / ρ(A×) calculé par paire."""
    lam: float | None = None
    lambda_scale: float = 0.5
    normalize: bool = True

    def __post_init__(self):
        if self.lam is not None and self.lam < 0:
            raise ConfigError(f"λ doit être positif ou nul (reçu {self.lam})")
        if not 0 < self.lambda_scale < 1:
            raise ConfigError(f"lambda_scale doit être dans ]0, 1[ (reçu {self.lambda_scale})")


def label_similarity(
    concepts: ConceptSimilarity | None = None,
    lexical: LabelSimilarity | None = None,
) -> LabelSimilarity:
    """σ(a,b) = simWSD(a,b) · lex(a,b), σ(a,a) = 1 ; sans facteur, identité des étiquettes."""
    def sigma(a: str, b: str) -> float:
        if a == b:
            return 1.0
        if concepts is None and lexical is None:
            return 0.0
        value = concepts.identifier_sim(a, b) if concepts is not None else 1.0
        if value == 0.0:
            return 0.0
        return max(0.0, value * (lexical(a, b) if lexical is not None else 1.0))
    return sigma


def product_adjacency(g1: DepGraph, g2: DepGraph, label_sim: LabelSimilarity) -> np.ndarray:
    """
    A×((v1,w1),(v2,w2)) = σ(v1,w1) · A1(v1,v2) · A2(w1,w2) · σ(v2,w2)

    Sommets du produit dans l'ordre (v, w) lexicographique, comme np.kron.
    """
    labels1, labels2 = g1.labels, g2.labels
    sigma = np.array([[label_sim(a, b) for b in labels2] for a in labels1]).reshape(-1)
    product = np.kron(g1.adjacency(), g2.adjacency())
    return sigma[:, None] * product * sigma[None, :]


def spectral_radius(matrix: np.ndarray, tol: float = POWER_TOL, max_iter: int = POWER_MAX_ITER) -> float:
    """Rayon spectral d'une matrice positive par itération de la puissance (départ : tout-à-un)."""
    n = matrix.shape[0]
    if n == 0:
        return 0.0
    vector = np.ones(n) / np.sqrt(n)
    estimate = 0.0
    for _ in range(max_iter):
        image = matrix @ vector
        norm = np.linalg.norm(image)
        if norm == 0.0:
            return 0.0
        if abs(norm - estimate) <= tol * max(1.0, norm):
            return float(norm)
        vector, estimate = image / norm, norm
    # Pas de convergence (matrice périodique) : valeurs propres complètes
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def walk_decay(product: np.ndarray, config: WalkKernelConfig) -> float:
    """λ effectif d'une paire ; un graphe produit nilpotent (ρ = 0) prend λ = 1."""
    if config.lam is not None:
        return config.lam
    rho = spectral_radius(product)
    return config.lambda_scale / rho if rho > 0 else 1.0


def _geometric_walk_sum(product: np.ndarray, lam: float) -> float:
    n = product.shape[0]
    if n == 0:
        return 0.0
    rho = spectral_radius(product)
    if lam * rho >= 1.0:
        raise KernelDivergenceError(
            f"Série divergente : λ·ρ(A×) = {lam * rho:.4f} ≥ 1 ; choisir λ < {1.0 / rho:.6g}"
        )
    ones = np.ones(n)
    return float(ones @ np.linalg.solve(np.eye(n) - lam * product, ones))


def _raw_walk_kernel(g1: DepGraph, g2: DepGraph, label_sim: LabelSimilarity, config: WalkKernelConfig) -> float:
    if len(g1) == 0 or len(g2) == 0:
        return 0.0
    product = product_adjacency(g1, g2, label_sim)
    return _geometric_walk_sum(product, walk_decay(product, config))


def random_walk_kernel(
    g1: DepGraph,
    g2: DepGraph,
    label_sim: LabelSimilarity,
    config: WalkKernelConfig | None = None,
) -> float:
    """
    Noyau de marches aléatoires entre deux DDG.

    Raises:
        KernelDivergenceError: λ·ρ(A×) ≥ 1
    """
    config = config or WalkKernelConfig()
    k12 = _raw_walk_kernel(g1, g2, label_sim, config)
    if not config.normalize:
        return k12
    k11 = _raw_walk_kernel(g1, g1, label_sim, config)
    k22 = _raw_walk_kernel(g2, g2, label_sim, config)
    if k11 <= 0 or k22 <= 0:
        return 0.0
    return k12 / np.sqrt(k11 * k22)


def walk_kernel_matrix(
    graphs: Sequence[DepGraph],
    label_sim: LabelSimilarity,
    config: WalkKernelConfig | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """Table document-document des noyaux de marches (normalisée si demandé)."""
    config = config or WalkKernelConfig()
    logger.info(f"Noyau de marches : {len(graphs)} graphes, {jobs} thread(s)")
    raw = pairwise_matrix(list(graphs), lambda a, b: _raw_walk_kernel(a, b, label_sim, config), jobs)
    if not config.normalize:
        return raw
    return rescale_unit_diagonal(raw)
