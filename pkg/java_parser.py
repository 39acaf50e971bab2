# ================================================
# FICHIER JAVA_PARSER.PY
# ================================================
# Analyseur du mini-langage "à la Java" utilisé pour décrire les modules :
#   - package / import / une classe par unité
#   - champs, constructeurs, méthodes typés
#   - instructions : déclaration locale, affectation, return, expression
#   - expressions : identifiants, chemins d'accès, appels, new, opérateurs
#
# Analyse descendante récursive, jetons annotés (ligne, colonne)
# pour les messages d'erreur.
# ================================================
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from loguru import logger

from errors import DuplicateDeclarationError, ParseError

UNTYPED = "⊥"

KEYWORDS = frozenset({
    "package", "import", "class", "extends", "implements",
    "public", "private", "protected", "static", "final", "abstract",
    "return", "new", "this", "true", "false", "null",
})
MODIFIERS = frozenset({"public", "private", "protected", "static", "final", "abstract"})
ASSIGN_OPS = frozenset({"=", "+=", "-=", "*=", "/="})

# Priorité des opérateurs binaires (plus grand = plus prioritaire)
BINARY_PRECEDENCE = {
    "||": 1, "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, ">": 4, "<=": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?\*/)
  | (?P<number>\d+(?:\.\d+)?)
  | (?P<string>"(?:\\.|[^"\\])*"|'(?:\\.|[^'\\])')
  | (?P<ident>[A-Za-z_$][A-Za-z0-9_$]*)
  | (?P<op>\+=|-=|\*=|/=|==|!=|<=|>=|&&|\|\||[-+*/%<>=!(){}\[\];,.])
""", re.VERBOSE | re.DOTALL)


# ================================================
# JETONS
# ================================================
@dataclass(frozen=True)
class Token:
    kind: str  # ident, keyword, number, string, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Découpe le texte source en jetons positionnés."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError("caractère inattendu", line, pos - line_start + 1, text[pos])
        kind = match.lastgroup
        lexeme = match.group()
        if kind not in ("ws", "comment"):
            if kind == "ident" and lexeme in KEYWORDS:
                kind = "keyword"
            tokens.append(Token(kind, lexeme, line, pos - line_start + 1))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rfind("\n") + 1
        pos = match.end()
    tokens.append(Token("eof", "<fin>", line, pos - line_start + 1))
    return tokens


# ================================================
# ARBRE SYNTAXIQUE
# ================================================
@dataclass(frozen=True)
class Name:
    ident: str
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class This:
    pass


@dataclass(frozen=True)
class Literal:
    value: str


@dataclass(frozen=True)
class FieldAccess:
    target: "Expr"
    name: str


@dataclass(frozen=True)
class Call:
    target: Union["Expr", None]
    name: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class New:
    type_name: str
    args: tuple["Expr", ...] = ()


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"


Expr = Union[Name, This, Literal, FieldAccess, Call, New, BinaryOp, UnaryOp]


@dataclass(frozen=True)
class LocalDecl:
    type_name: str
    name: str
    init: Expr | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Assign:
    target: Expr
    op: str
    value: Expr


@dataclass(frozen=True)
class Return:
    value: Expr | None = None


@dataclass(frozen=True)
class ExprStmt:
    expr: Expr


Statement = Union[LocalDecl, Assign, Return, ExprStmt]


@dataclass(frozen=True)
class Param:
    type_name: str
    name: str
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class FieldDecl:
    type_name: str
    name: str
    visibility: str
    init: Expr | None = None
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    return_type: str | None  # None pour un constructeur
    params: tuple[Param, ...]
    body: tuple[Statement, ...]
    visibility: str

    @property
    def is_constructor(self) -> bool:
        return self.return_type is None

    def param_type(self, name: str) -> str | None:
        for param in self.params:
            if param.name == name:
                return param.type_name
        return None


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: str | None
    interfaces: tuple[str, ...]
    fields: tuple[FieldDecl, ...]
    methods: tuple[MethodDecl, ...]
    visibility: str
    is_abstract: bool = False


@dataclass(frozen=True)
class Declaration:
    """Une déclaration nommée de l'unité (classe, champ, méthode, paramètre, local)."""
    kind: str  # class, field, constructor, method, parameter, local
    name: str
    declared_type: str
    visibility: str
    scope: str | None = None  # méthode englobante pour parameter/local


@dataclass(frozen=True)
class SourceUnit:
    unit_name: str
    package_path: tuple[str, ...]
    imports: tuple[str, ...]
    declarations: tuple[Declaration, ...]
    class_decl: ClassDecl

    @property
    def class_name(self) -> str:
        return self.class_decl.name

    @property
    def statements(self) -> tuple[tuple[MethodDecl, Statement], ...]:
        """Instructions exécutables de tous les corps, avec leur méthode."""
        return tuple(
            (method, stmt) for method in self.class_decl.methods for stmt in method.body
        )

    def declarations_of(self, kind: str) -> list[Declaration]:
        return [d for d in self.declarations if d.kind == kind]


# ================================================
# ANALYSEUR DESCENDANT RÉCURSIF
# ================================================
class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0

    # --- utilitaires ---------------------------------------------------
    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.index + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        token = self.current
        if token.kind != "eof":
            self.index += 1
        return token

    def check(self, text: str) -> bool:
        return self.current.text == text and self.current.kind in ("op", "keyword")

    def accept(self, text: str) -> bool:
        if self.check(text):
            self.advance()
            return True
        return False

    def error(self, message: str) -> ParseError:
        token = self.current
        return ParseError(message, token.line, token.column, token.text)

    def expect(self, text: str) -> Token:
        if not self.check(text):
            raise self.error(f"'{text}' attendu")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.current.kind != "ident":
            raise self.error("identifiant attendu")
        return self.advance()

    # --- unité ---------------------------------------------------------
    def parse_unit(self) -> tuple[tuple[str, ...], tuple[str, ...], ClassDecl]:
        package: tuple[str, ...] = ()
        if self.accept("package"):
            package = tuple(self.qualified_name().split("."))
            self.expect(";")
        imports = []
        while self.accept("import"):
            name = self.qualified_name()
            if self.accept("."):
                self.expect("*")
                name += ".*"
            self.expect(";")
            imports.append(name)
        class_decl = self.class_declaration()
        if self.current.kind != "eof":
            raise self.error("fin de fichier attendue (une seule classe par unité)")
        return package, tuple(imports), class_decl

    def qualified_name(self) -> str:
        parts = [self.expect_ident().text]
        while self.check(".") and self.peek().kind == "ident":
            self.advance()
            parts.append(self.advance().text)
        return ".".join(parts)

    def modifiers(self) -> set[str]:
        found = set()
        while self.current.kind == "keyword" and self.current.text in MODIFIERS:
            found.add(self.advance().text)
        return found

    def class_declaration(self) -> ClassDecl:
        mods = self.modifiers()
        self.expect("class")
        name = self.expect_ident().text
        superclass = None
        interfaces: list[str] = []
        if self.accept("extends"):
            superclass = self.qualified_name()
        if self.accept("implements"):
            interfaces.append(self.qualified_name())
            while self.accept(","):
                interfaces.append(self.qualified_name())
        self.expect("{")
        fields: list[FieldDecl] = []
        methods: list[MethodDecl] = []
        while not self.check("}"):
            if self.current.kind == "eof":
                raise self.error("'}' attendu")
            member = self.member(name)
            (methods if isinstance(member, MethodDecl) else fields).append(member)
        self.expect("}")
        return ClassDecl(
            name=name,
            superclass=superclass,
            interfaces=tuple(interfaces),
            fields=tuple(fields),
            methods=tuple(methods),
            visibility=_visibility(mods),
            is_abstract="abstract" in mods,
        )

    def member(self, class_name: str) -> FieldDecl | MethodDecl:
        mods = self.modifiers()
        visibility = _visibility(mods)
        if self.current.text == class_name and self.peek().text == "(":
            self.advance()
            params = self.parameters()
            return MethodDecl(class_name, None, params, self.block(), visibility)
        type_name = self.type_name()
        name_token = self.expect_ident()
        if self.check("("):
            params = self.parameters()
            return MethodDecl(name_token.text, type_name, params, self.block(), visibility)
        init = None
        if self.accept("="):
            init = self.expression()
        self.expect(";")
        return FieldDecl(type_name, name_token.text, visibility, init, name_token.line, name_token.column)

    def type_name(self) -> str:
        name = self.qualified_name()
        while self.check("[") and self.peek().text == "]":
            self.advance()
            self.advance()
            name += "[]"
        return name

    def parameters(self) -> tuple[Param, ...]:
        self.expect("(")
        params: list[Param] = []
        if not self.check(")"):
            params.append(self.parameter())
            while self.accept(","):
                params.append(self.parameter())
        self.expect(")")
        return tuple(params)

    def parameter(self) -> Param:
        type_name = self.type_name()
        token = self.expect_ident()
        return Param(type_name, token.text, token.line, token.column)

    # --- instructions --------------------------------------------------
    def block(self) -> tuple[Statement, ...]:
        self.expect("{")
        body: list[Statement] = []
        while not self.check("}"):
            if self.current.kind == "eof":
                raise self.error("'}' attendu")
            body.append(self.statement())
        self.expect("}")
        return tuple(body)

    def looks_like_declaration(self) -> bool:
        # Type ('.' ident)* ('[' ']')* suivi d'un identifiant
        if self.current.kind != "ident":
            return False
        offset = 1
        while self.peek(offset).text == "." and self.peek(offset + 1).kind == "ident":
            offset += 2
        while self.peek(offset).text == "[" and self.peek(offset + 1).text == "]":
            offset += 2
        return self.peek(offset).kind == "ident"

    def statement(self) -> Statement:
        if self.accept("return"):
            value = None if self.check(";") else self.expression()
            self.expect(";")
            return Return(value)
        if self.looks_like_declaration():
            type_name = self.type_name()
            token = self.expect_ident()
            init = self.expression() if self.accept("=") else None
            self.expect(";")
            return LocalDecl(type_name, token.text, init, token.line, token.column)
        expr = self.expression()
        if self.current.kind == "op" and self.current.text in ASSIGN_OPS:
            op = self.advance().text
            if not isinstance(expr, (Name, FieldAccess)):
                raise self.error("cible d'affectation invalide")
            value = self.expression()
            self.expect(";")
            return Assign(expr, op, value)
        self.expect(";")
        return ExprStmt(expr)

    # --- expressions ---------------------------------------------------
    def expression(self, min_precedence: int = 1) -> Expr:
        left = self.unary()
        while True:
            token = self.current
            precedence = BINARY_PRECEDENCE.get(token.text) if token.kind == "op" else None
            if precedence is None or precedence < min_precedence:
                return left
            self.advance()
            right = self.expression(precedence + 1)
            left = BinaryOp(token.text, left, right)

    def unary(self) -> Expr:
        if self.current.kind == "op" and self.current.text in ("-", "!"):
            op = self.advance().text
            return UnaryOp(op, self.unary())
        return self.postfix()

    def postfix(self) -> Expr:
        expr = self.primary()
        while self.accept("."):
            name = self.expect_ident().text
            if self.check("("):
                expr = Call(expr, name, self.arguments())
            else:
                expr = FieldAccess(expr, name)
        return expr

    def arguments(self) -> tuple[Expr, ...]:
        self.expect("(")
        args: list[Expr] = []
        if not self.check(")"):
            args.append(self.expression())
            while self.accept(","):
                args.append(self.expression())
        self.expect(")")
        return tuple(args)

    def primary(self) -> Expr:
        token = self.current
        if token.kind == "ident":
            self.advance()
            if self.check("("):
                return Call(None, token.text, self.arguments())
            return Name(token.text, token.line, token.column)
        if token.kind in ("number", "string"):
            self.advance()
            return Literal(token.text)
        if token.kind == "keyword":
            if token.text == "this":
                self.advance()
                return This()
            if token.text in ("true", "false", "null"):
                self.advance()
                return Literal(token.text)
            if token.text == "new":
                self.advance()
                type_name = self.qualified_name()
                return New(type_name, self.arguments())
        if self.accept("("):
            expr = self.expression()
            self.expect(")")
            return expr
        raise self.error("expression attendue")


def _visibility(modifiers: set[str]) -> str:
    return "public" if "public" in modifiers else "private"


# ================================================
# DÉCLARATIONS ET PORTÉES
# ================================================
def _check_duplicates(named: list[Param | FieldDecl | LocalDecl]) -> None:
    seen: set[str] = set()
    for node in named:
        if node.name in seen:
            raise DuplicateDeclarationError(
                f"déclaration dupliquée de '{node.name}'", node.line, node.column, node.name
            )
        seen.add(node.name)


def _collect_declarations(class_decl: ClassDecl) -> tuple[Declaration, ...]:
    declarations = [Declaration("class", class_decl.name, class_decl.name, class_decl.visibility)]

    _check_duplicates(list(class_decl.fields))
    for fdecl in class_decl.fields:
        declarations.append(Declaration("field", fdecl.name, fdecl.type_name, fdecl.visibility))

    for method in class_decl.methods:
        kind = "constructor" if method.is_constructor else "method"
        return_type = class_decl.name if method.is_constructor else _return_type(method.return_type)
        declarations.append(Declaration(kind, method.name, return_type, method.visibility))
        # Paramètres et locaux partagent la portée de la méthode
        scope: list[Param | LocalDecl] = list(method.params)
        for param in method.params:
            declarations.append(Declaration("parameter", param.name, param.type_name, "private", method.name))
        for stmt in method.body:
            if isinstance(stmt, LocalDecl):
                scope.append(stmt)
                declarations.append(Declaration("local", stmt.name, stmt.type_name, "private", method.name))
        _check_duplicates(scope)
    return tuple(declarations)


def _return_type(type_name: str | None) -> str:
    if type_name is None or type_name == "void":
        return UNTYPED
    return type_name


def parse_unit(text: str) -> SourceUnit:
    """
    Analyse une unité de compilation du mini-langage.

    Args:
        text: texte source contenant exactement une classe

    Returns:
        SourceUnit avec l'AST et les déclarations

    Raises:
        ParseError: erreur de syntaxe (ligne/colonne du jeton fautif)
        DuplicateDeclarationError: nom déclaré deux fois dans une même portée
    """
    parser = _Parser(text)
    package, imports, class_decl = parser.parse_unit()
    declarations = _collect_declarations(class_decl)
    unit_name = ".".join(package + (class_decl.name,))
    logger.debug(f"Unité analysée : {unit_name} ({len(declarations)} déclarations)")
    return SourceUnit(unit_name, package, imports, declarations, class_decl)

