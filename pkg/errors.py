"""
Exceptions de la boîte à outils.

Toutes héritent de SemanticContextError : le CLI attrape cette base,
journalise le message et sort avec le code 1.
"""
from __future__ import annotations


class SemanticContextError(Exception):
    """Erreur de base de la boîte à outils."""


class ConfigError(SemanticContextError):
    pass


class ParseError(SemanticContextError):
    """Erreur de syntaxe, avec la position du jeton fautif."""

    def __init__(self, message: str, line: int, column: int, token: str | None = None):
        self.line = line
        self.column = column
        self.token = token
        where = f"ligne {line}, colonne {column}"
        if token is not None:
            where += f", jeton '{token}'"
        super().__init__(f"{message} ({where})")


class DuplicateDeclarationError(ParseError):
    pass


class FactsSchemaError(SemanticContextError):
    """Enregistrement invalide dans un fichier de faits."""

    def __init__(self, message: str, record: int | None = None, field: str | None = None):
        self.record = record
        self.field = field
        prefix = f"enregistrement {record}" if record is not None else "document"
        if field:
            prefix += f", champ '{field}'"
        super().__init__(f"{prefix} : {message}")


class UnknownConceptError(SemanticContextError):
    pass


class ModelError(SemanticContextError):
    """Entrée invalide pour un modèle vectoriel ou de graphe."""


class KernelDivergenceError(SemanticContextError):
    pass


class ClusteringInputError(SemanticContextError):
    pass


class TreeMetricError(SemanticContextError):
    pass


class PipelineStageError(SemanticContextError):
    """Erreur d'une étape du pipeline, étiquetée par le nom de l'étape."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
