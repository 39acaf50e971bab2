# ================================================
# FICHIER CORPUS_INGEST.PY
# ================================================
# Transforme les unités analysées (ou un export externe) en "faits" :
#   - occurrences d'identifiants avec leur type déclaré
#   - membres publics de l'API
#   - liens sous-type -> super-type, imports
# Ces faits alimentent tous les modèles en aval.
#
# Format d'échange : un document JSON par ligne (JSONL)
# ================================================
from __future__ import annotations

import json
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import networkx as nx
from loguru import logger

from errors import FactsSchemaError, ParseError
from java_parser import (
    UNTYPED,
    Assign,
    BinaryOp,
    Call,
    ClassDecl,
    Expr,
    ExprStmt,
    FieldAccess,
    LocalDecl,
    MethodDecl,
    Name,
    New,
    Return,
    SourceUnit,
    This,
    UnaryOp,
    parse_unit,
)

PRIMITIVE_TYPES = ("boolean", "byte", "char", "double", "float", "int", "long", "short")
VIRTUAL_ROOT = "⊤"
ROOT_ALIASES = frozenset({VIRTUAL_ROOT, "Object", "java.lang.Object"})

MemberIndex = Mapping[str, Mapping[str, str]]


# ================================================
# TYPES DE FAITS
# ================================================
@dataclass(frozen=True)
class Occurrence:
    identifier: str
    declared_type: str
    count: int


@dataclass(frozen=True)
class ApiMember:
    name: str
    member_type: str
    owner_type: str
    kind: str = "field"  # field | method


@dataclass(frozen=True)
class UnitFacts:
    unit_name: str
    package_path: tuple[str, ...]
    imports: tuple[str, ...] = ()
    occurrences: tuple[Occurrence, ...] = ()
    api_members: tuple[ApiMember, ...] = ()
    supertype_edges: tuple[tuple[str, str], ...] = ()
    # Paires de synonymes fournies par un expert : acceptées, non utilisées par défaut
    synonyms: tuple[tuple[str, str], ...] = ()

    @property
    def class_name(self) -> str:
        return self.unit_name.rsplit(".", 1)[-1]

    @property
    def package_name(self) -> str:
        return ".".join(self.package_path)

    def counts(self) -> dict[tuple[str, str], int]:
        return {(o.identifier, o.declared_type): o.count for o in self.occurrences}


@dataclass(frozen=True)
class CorpusFacts:
    units: tuple[UnitFacts, ...] = ()

    @property
    def unit_names(self) -> list[str]:
        return [u.unit_name for u in self.units]

    def unit(self, name: str) -> UnitFacts:
        for unit in self.units:
            if unit.unit_name == name:
                return unit
        raise KeyError(name)

    def restrict(self, names: Iterable[str]) -> "CorpusFacts":
        keep = set(names)
        return CorpusFacts(tuple(u for u in self.units if u.unit_name in keep))


@dataclass(frozen=True)
class LibraryType:
    type_name: str  # nom qualifié, ex. java.util.Date
    supertypes: tuple[str, ...] = ()
    members: tuple[tuple[str, str], ...] = ()

    @property
    def simple_name(self) -> str:
        return simple_type(self.type_name)

    @property
    def package_name(self) -> str:
        return self.type_name.rsplit(".", 1)[0] if "." in self.type_name else ""


@dataclass(frozen=True)
class LibraryFacts:
    types: tuple[LibraryType, ...] = field(default_factory=tuple)

    def merged(self, other: "LibraryFacts") -> "LibraryFacts":
        known = {t.type_name for t in self.types}
        return LibraryFacts(self.types + tuple(t for t in other.types if t.type_name not in known))


BUILTIN_LIBRARY = LibraryFacts(tuple(LibraryType(name) for name in PRIMITIVE_TYPES))


def simple_type(type_name: str) -> str:
    """Nom simple d'un type : java.util.Date -> Date (⊥ inchangé)."""
    if type_name == UNTYPED:
        return UNTYPED
    return type_name.rsplit(".", 1)[-1]


# ================================================
# EXTRACTION DES OCCURRENCES (règle de comptage)
# ================================================
class _OccurrenceCounter:
    """
    Compte les occurrences d'identifiants dans les corps exécutables.

    Règle : une déclaration locale avec initialiseur compte son nom une fois,
    les déclarations de champs et les listes de paramètres ne comptent pas,
    `this.x` compte `x`, les noms de type de `new T(...)` et les littéraux
    ne comptent pas.
    """

    def __init__(self, class_decl: ClassDecl, member_types: MemberIndex | None):
        self.class_decl = class_decl
        self.member_types = member_types or {}
        self.fields = {f.name: simple_type(f.type_name) for f in class_decl.fields}
        self.methods = {
            m.name: _method_type(m) for m in class_decl.methods if not m.is_constructor
        }
        self.counter: Counter[tuple[str, str]] = Counter()
        self.unresolved = 0
        # Nombre d'instructions du corps visibles depuis l'instruction courante
        self.visible = 0

    # --- résolution des types -----------------------------------------
    def resolve(self, name: str, method: MethodDecl) -> str:
        for stmt in method.body[: self.visible]:
            if isinstance(stmt, LocalDecl) and stmt.name == name:
                return simple_type(stmt.type_name)
        param_type = method.param_type(name)
        if param_type is not None:
            return simple_type(param_type)
        if name in self.fields:
            return self.fields[name]
        # Champ hérité : l'index aplatit déjà les super-types
        inherited = self.member_types.get(self.class_decl.name, {}).get(name)
        if inherited is not None:
            return simple_type(inherited)
        self.unresolved += 1
        logger.debug(f"Identifiant non déclaré '{name}' dans {self.class_decl.name}.{method.name} -> {UNTYPED}")
        return UNTYPED

    def member_type(self, owner: str, name: str, is_call: bool) -> str:
        if owner == self.class_decl.name:
            table = self.methods if is_call else self.fields
            if name in table:
                return table[name]
        found = self.member_types.get(owner, {}).get(name)
        if found is None:
            self.unresolved += 1
            return UNTYPED
        return simple_type(found)

    def type_of(self, expr: Expr, method: MethodDecl) -> str:
        if isinstance(expr, Name):
            return self.resolve(expr.ident, method)
        if isinstance(expr, This):
            return self.class_decl.name
        if isinstance(expr, FieldAccess):
            return self.member_type(self.type_of(expr.target, method), expr.name, False)
        if isinstance(expr, Call):
            owner = self.class_decl.name if expr.target is None else self.type_of(expr.target, method)
            return self.member_type(owner, expr.name, True)
        if isinstance(expr, New):
            return simple_type(expr.type_name)
        return UNTYPED

    # --- comptage ------------------------------------------------------
    def count_expr(self, expr: Expr | None, method: MethodDecl) -> None:
        if expr is None or isinstance(expr, This):
            return
        if isinstance(expr, Name):
            self.counter[(expr.ident, self.resolve(expr.ident, method))] += 1
        elif isinstance(expr, FieldAccess):
            self.count_expr(expr.target, method)
            owner = self.type_of(expr.target, method)
            self.counter[(expr.name, self.member_type(owner, expr.name, False))] += 1
        elif isinstance(expr, Call):
            self.count_expr(expr.target, method)
            self.counter[(expr.name, self.type_of(expr, method))] += 1
            for arg in expr.args:
                self.count_expr(arg, method)
        elif isinstance(expr, New):
            for arg in expr.args:
                self.count_expr(arg, method)
        elif isinstance(expr, BinaryOp):
            self.count_expr(expr.left, method)
            self.count_expr(expr.right, method)
        elif isinstance(expr, UnaryOp):
            self.count_expr(expr.operand, method)

    def count_method(self, method: MethodDecl) -> None:
        for position, stmt in enumerate(method.body):
            self.visible = position + 1
            if isinstance(stmt, LocalDecl):
                if stmt.init is not None:
                    self.counter[(stmt.name, simple_type(stmt.type_name))] += 1
                    self.count_expr(stmt.init, method)
            elif isinstance(stmt, Assign):
                self.count_expr(stmt.target, method)
                self.count_expr(stmt.value, method)
            elif isinstance(stmt, Return):
                self.count_expr(stmt.value, method)
            elif isinstance(stmt, ExprStmt):
                self.count_expr(stmt.expr, method)


def _method_type(method: MethodDecl) -> str:
    if method.return_type is None or method.return_type == "void":
        return UNTYPED
    return simple_type(method.return_type)


def extract_facts(unit: SourceUnit, member_types: MemberIndex | None = None) -> UnitFacts:
    """
    Extrait les faits d'une unité analysée.

    Args:
        unit: unité produite par parse_unit
        member_types: index optionnel type -> {membre: type} pour résoudre
            les accès `recv.membre` vers d'autres classes

    Returns:
        UnitFacts avec occurrences triées par (identifiant, type)
    """
    counter = _OccurrenceCounter(unit.class_decl, member_types)
    for method in unit.class_decl.methods:
        counter.count_method(method)
    if counter.unresolved:
        logger.debug(f"{unit.unit_name} : {counter.unresolved} référence(s) non résolue(s) typée(s) {UNTYPED}")

    occurrences = tuple(
        Occurrence(ident, typ, count) for (ident, typ), count in sorted(counter.counter.items())
    )
    supertypes = []
    if unit.class_decl.superclass:
        supertypes.append((unit.class_name, simple_type(unit.class_decl.superclass)))
    supertypes.extend((unit.class_name, simple_type(i)) for i in unit.class_decl.interfaces)

    return UnitFacts(
        unit_name=unit.unit_name,
        package_path=unit.package_path,
        imports=unit.imports,
        occurrences=occurrences,
        api_members=tuple(extract_api(unit)),
        supertype_edges=tuple(supertypes),
    )


def extract_api(unit: SourceUnit) -> list[ApiMember]:
    """Membres publics (champs et méthodes, hors constructeurs) de l'unité."""
    owner = unit.class_name
    members = [
        ApiMember(f.name, simple_type(f.type_name), owner, "field")
        for f in unit.class_decl.fields
        if f.visibility == "public"
    ]
    members.extend(
        ApiMember(m.name, _method_type(m), owner, "method")
        for m in unit.class_decl.methods
        if m.visibility == "public" and not m.is_constructor
    )
    return members


def supertype_graph(units: Iterable[SourceUnit], libs: LibraryFacts | None = None) -> nx.DiGraph:
    """
    Graphe sous-type -> super-type direct, en noms simples.

    Une classe du corpus remplace un type de bibliothèque de même nom simple.
    Les successeurs gardent l'ordre de déclaration (super-classe puis interfaces).
    """
    declared: dict[str, list[str]] = {}
    for lib_type in (libs.types if libs else ()):
        declared.setdefault(lib_type.simple_name, [simple_type(s) for s in lib_type.supertypes])
    for unit in units:
        decl = unit.class_decl
        parents = [decl.superclass] if decl.superclass else []
        declared[decl.name] = [simple_type(p) for p in parents + list(decl.interfaces)]

    graph = nx.DiGraph()
    for sub, parents in declared.items():
        graph.add_node(sub)
        for parent in parents:
            if parent != sub:
                graph.add_edge(sub, parent)
    return graph


def member_index(units: Iterable[SourceUnit], libs: LibraryFacts | None = None) -> dict[str, dict[str, str]]:
    """
    Index type simple -> {membre: type} sur le corpus et les bibliothèques.

    Chaque table contient aussi les membres hérités : les déclarations propres
    priment, puis les super-types du plus proche au plus lointain (parcours en
    largeur, cycles ignorés).
    """
    units = list(units)
    own: dict[str, dict[str, str]] = {}
    for lib_type in (libs.types if libs else ()):
        table = own.setdefault(lib_type.simple_name, {})
        for name, typ in lib_type.members:
            table.setdefault(name, simple_type(typ))
    for unit in units:
        decl = unit.class_decl
        table = own.setdefault(decl.name, {})
        for fdecl in decl.fields:
            table[fdecl.name] = simple_type(fdecl.type_name)
        for method in decl.methods:
            if not method.is_constructor:
                table[method.name] = _method_type(method)

    graph = supertype_graph(units, libs)
    index: dict[str, dict[str, str]] = {}
    for type_name, table in own.items():
        merged = dict(table)
        if type_name in graph:
            for _, ancestor in nx.bfs_edges(graph, type_name):
                for name, typ in own.get(ancestor, {}).items():
                    merged.setdefault(name, typ)
        index[type_name] = merged
    return index


# ================================================
# CORPUS DE SOURCES
# ================================================
def parse_corpus(directory: str | os.PathLike) -> list[SourceUnit]:
    """Analyse tous les fichiers *.java d'un répertoire (ordre trié)."""
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"Répertoire de sources introuvable : {root}")
    units = []
    for path in sorted(root.rglob("*.java")):
        try:
            units.append(parse_unit(path.read_text(encoding="utf-8")))
        except ParseError as e:
            logger.error(f"✗ {path} : {e}")
            raise
    logger.info(f"✓ {len(units)} unité(s) analysée(s) dans {root}")
    return units


def extract_corpus(units: list[SourceUnit], libs: LibraryFacts | None = None) -> CorpusFacts:
    index = member_index(units, libs)
    return CorpusFacts(tuple(extract_facts(unit, index) for unit in units))


# ================================================
# SÉRIALISATION JSONL
# ================================================
def unit_to_record(unit: UnitFacts) -> dict:
    record = {
        "unit": unit.unit_name,
        "package": list(unit.package_path),
        "imports": list(unit.imports),
        "occurrences": [
            {"id": o.identifier, "type": o.declared_type, "count": o.count} for o in unit.occurrences
        ],
        "api": [
            {"name": m.name, "type": m.member_type, "owner": m.owner_type, "kind": m.kind}
            for m in unit.api_members
        ],
        "supertypes": [{"sub": sub, "super": sup} for sub, sup in unit.supertype_edges],
    }
    if unit.synonyms:
        record["synonyms"] = [list(pair) for pair in unit.synonyms]
    return record


def save_facts(facts: CorpusFacts, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for unit in facts.units:
            f.write(json.dumps(unit_to_record(unit), ensure_ascii=False) + "\n")
    logger.info(f"✓ {len(facts.units)} unité(s) écrite(s) dans {path}")
    return path


_REQUIRED_KEYS = ("unit", "package", "imports", "occurrences", "api", "supertypes")


def _require(record: dict, key: str, kind: type, index: int):
    if key not in record:
        raise FactsSchemaError("champ manquant", index, key)
    value = record[key]
    if not isinstance(value, kind):
        raise FactsSchemaError(f"type invalide ({type(value).__name__})", index, key)
    return value


def _pair(item, keys: tuple[str, str], index: int, field_name: str) -> tuple[str, str]:
    if isinstance(item, dict):
        if not all(k in item for k in keys):
            raise FactsSchemaError(f"attendu {keys}", index, field_name)
        return str(item[keys[0]]), str(item[keys[1]])
    if isinstance(item, (list, tuple)) and len(item) == 2:
        return str(item[0]), str(item[1])
    raise FactsSchemaError("paire invalide", index, field_name)


def record_to_unit(record: dict, index: int) -> UnitFacts:
    """Valide un enregistrement du fichier de faits et le convertit."""
    if not isinstance(record, dict):
        raise FactsSchemaError("objet JSON attendu", index)
    for key in _REQUIRED_KEYS:
        _require(record, key, str if key == "unit" else list, index)
    unit_name = record["unit"]
    if not unit_name:
        raise FactsSchemaError("nom d'unité vide", index, "unit")
    package = record["package"]
    if not all(isinstance(s, str) and s for s in package):
        raise FactsSchemaError("segments de package vides ou invalides", index, "package")

    occurrences = []
    seen: set[tuple[str, str]] = set()
    for occ in record["occurrences"]:
        if not isinstance(occ, dict) or not {"id", "type", "count"} <= occ.keys():
            raise FactsSchemaError("occurrence incomplète (id, type, count)", index, "occurrences")
        count = occ["count"]
        if not isinstance(count, int) or isinstance(count, bool) or count <= 0:
            raise FactsSchemaError(f"compte invalide {count!r} pour '{occ['id']}'", index, "occurrences")
        key = (str(occ["id"]), str(occ["type"]))
        if key in seen:
            raise FactsSchemaError(f"paire dupliquée {key}", index, "occurrences")
        seen.add(key)
        occurrences.append(Occurrence(key[0], key[1], count))

    api = []
    for member in record["api"]:
        if not isinstance(member, dict) or not {"name", "type", "owner"} <= member.keys():
            raise FactsSchemaError("membre incomplet (name, type, owner)", index, "api")
        api.append(ApiMember(member["name"], member["type"], member["owner"], member.get("kind", "field")))

    supertypes = tuple(_pair(item, ("sub", "super"), index, "supertypes") for item in record["supertypes"])
    synonyms = tuple(_pair(item, ("a", "b"), index, "synonyms") for item in record.get("synonyms", []))
    return UnitFacts(
        unit_name=unit_name,
        package_path=tuple(package),
        imports=tuple(record["imports"]),
        occurrences=tuple(sorted(occurrences, key=lambda o: (o.identifier, o.declared_type))),
        api_members=tuple(api),
        supertype_edges=supertypes,
        synonyms=synonyms,
    )


def load_facts(path: str | os.PathLike) -> CorpusFacts:
    """
    Charge et valide un fichier de faits JSONL.

    Raises:
        FactsSchemaError: enregistrement invalide (numéro de ligne à partir de 1)
    """
    units = []
    with open(path, "r", encoding="utf-8") as f:
        for index, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise FactsSchemaError(f"JSON invalide : {e}", index) from e
            units.append(record_to_unit(record, index))
    names = [u.unit_name for u in units]
    duplicates = sorted(n for n, c in Counter(names).items() if c > 1)
    if duplicates:
        raise FactsSchemaError(f"unités dupliquées : {duplicates}")
    logger.info(f"✓ {len(units)} unité(s) chargée(s) depuis {path}")
    return CorpusFacts(tuple(units))


def load_library(path: str | os.PathLike | None) -> LibraryFacts:
    """Charge les faits de bibliothèque (document JSON avec un tableau `types`)."""
    if path is None:
        return BUILTIN_LIBRARY
    with open(path, "r", encoding="utf-8") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as e:
            raise FactsSchemaError(f"JSON invalide : {e}") from e
    if not isinstance(document, dict) or not isinstance(document.get("types"), list):
        raise FactsSchemaError("tableau 'types' attendu", field="types")
    types = []
    for index, entry in enumerate(document["types"], 1):
        if not isinstance(entry, dict) or not entry.get("name"):
            raise FactsSchemaError("type sans nom", index, "name")
        members = tuple(
            _pair(m, ("name", "type"), index, "members") for m in entry.get("members", [])
        )
        types.append(LibraryType(entry["name"], tuple(entry.get("supertypes", [])), members))

    known = {t.type_name for t in types} | {t.simple_name for t in types}
    for lib_type in types:
        for sup in lib_type.supertypes:
            if sup not in known and sup not in ROOT_ALIASES:
                logger.warning(f"⚠ Super-type '{sup}' de {lib_type.type_name} introuvable -> racine virtuelle")
    logger.info(f"✓ {len(types)} type(s) de bibliothèque chargé(s) depuis {path}")
    return BUILTIN_LIBRARY.merged(LibraryFacts(tuple(types)))
