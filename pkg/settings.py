# ================================================
# FICHIER SETTINGS.PY
# ================================================
# Configuration commune :
#   - variables d'environnement (.env via python-dotenv)
#   - préréglages d'enrichissement (plain, ssn1, ssn2, ssk1, ssk2, custom)
#   - PipelineConfig (fichier JSON --config, puis options CLI)
#   - journalisation loguru (console + fichier tournant)
# ================================================
from __future__ import annotations

import json
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger

from errors import ConfigError

load_dotenv()

LOG_LEVEL = os.getenv('SEMCTX_LOG_LEVEL', 'INFO').upper()
LOG_DIR = os.getenv('SEMCTX_LOG_DIR', 'logs')
OUT_DIR = os.getenv('SEMCTX_OUT_DIR', 'out')
JOBS = int(os.getenv('SEMCTX_JOBS', '1'))
LIBS_PATH = os.getenv('SEMCTX_LIBS') or None
ENRICHMENT = os.getenv('SEMCTX_ENRICHMENT', 'ssn2').lower()
MODEL = os.getenv('SEMCTX_MODEL', 'boit').lower()

MODELS = ("boi", "boit", "bot", "ddg")
ENRICHMENTS = ("plain", "ssn1", "ssn2", "ssk1", "ssk2", "custom")
CONCEPTS = ("ipl", "wup", "lc", "cd", "diffusion")
LEXICALS = ("lcs", "lcu", "const", "none")
WEIGHTINGS = ("idf", "tfidf", "none")
LINKAGES = ("complete", "average", "single")

# Préréglages : mesure conceptuelle × noyau lexical, modèle imposé éventuel
ENRICHMENT_PRESETS = {
    'plain': {
        'concept': None,
        'lexical': None,
        'model': None,
    },
    'ssn1': {
        'concept': 'cd',
        'lexical': 'lcu',
        'model': None,
    },
    'ssn2': {
        'concept': 'diffusion',
        'lexical': 'lcu',
        'model': None,
    },
    'ssk1': {
        'concept': 'diffusion',
        'lexical': 'lcu',
        'model': 'boit',
    },
    'ssk2': {
        'concept': 'diffusion',
        'lexical': 'lcu',
        'model': 'ddg',
    },
}


@dataclass(frozen=True)
class PipelineConfig:
    model: str = MODEL
    enrichment: str = ENRICHMENT
    concept: str = "diffusion"       # utilisé par le préréglage custom
    lexical: str = "lcu"             # idem ; "none" désactive le facteur lexical
    weighting: str = "idf"
    clustering: str = "complete"
    k: int | None = None
    min_package_size: int = 5
    max_package_size: int = 40
    alpha_ipl: float = 1.0
    alpha_diffusion: float = 0.5
    walk_lambda: float | None = None
    lambda_scale: float = 0.5
    case_sensitive: bool = False
    const_normalization: bool = True
    pd_edges: bool = False
    pd_sqrt: bool = False
    facts: str | None = None
    libs: str | None = LIBS_PATH
    sources: str | None = None
    out: str = OUT_DIR
    jobs: int = JOBS
    baseline_report: str | None = None

    def __post_init__(self):
        checks = [
            ("model", self.model, MODELS),
            ("enrichment", self.enrichment, ENRICHMENTS),
            ("concept", self.concept, CONCEPTS),
            ("lexical", self.lexical, LEXICALS),
            ("weighting", self.weighting, WEIGHTINGS),
            ("clustering", self.clustering, LINKAGES),
        ]
        for name, value, allowed in checks:
            if value not in allowed:
                raise ConfigError(f"{name} = {value!r} invalide (attendu {allowed})")
        if self.k is not None and self.k < 1:
            raise ConfigError(f"k doit être ≥ 1 (reçu {self.k})")
        if self.min_package_size < 1 or self.max_package_size < self.min_package_size:
            raise ConfigError("Seuils de package invalides : 1 ≤ min ≤ max attendu")
        if self.jobs < 1:
            raise ConfigError(f"jobs doit être ≥ 1 (reçu {self.jobs})")

    # --- préréglage résolu ---------------------------------------------
    @property
    def effective_model(self) -> str:
        preset = ENRICHMENT_PRESETS.get(self.enrichment)
        if preset and preset['model']:
            return preset['model']
        return self.model

    @property
    def effective_concept(self) -> str | None:
        if self.enrichment == 'custom':
            return self.concept
        return ENRICHMENT_PRESETS[self.enrichment]['concept']

    @property
    def effective_lexical(self) -> str | None:
        if self.enrichment == 'custom':
            return None if self.lexical == "none" else self.lexical
        return ENRICHMENT_PRESETS[self.enrichment]['lexical']

    @property
    def is_plain(self) -> bool:
        return self.effective_concept is None and self.effective_lexical is None

    # --- construction --------------------------------------------------
    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Nouvelle configuration ; les valeurs None sont ignorées."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(overrides) - known)
        if unknown:
            raise ConfigError(f"Paramètres inconnus : {', '.join(unknown)}")
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "PipelineConfig":
        """
        Charge un fichier JSON dont les clés sont les champs de PipelineConfig.

        Raises:
            ConfigError: fichier illisible, JSON invalide ou clé inconnue
        """
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Configuration illisible {path} : {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path} : un objet JSON est attendu")
        return cls().with_overrides(**data)

    def to_dict(self) -> dict:
        return asdict(self)


def configure_logging(level: str | None = None, log_dir: str | None = None, name: str = "context_clustering") -> None:
    """Console colorée au niveau choisi, fichier tournant en DEBUG."""
    logger.remove()
    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
        level=(level or LOG_LEVEL).upper(),
    )
    logger.add(
        f"{log_dir or LOG_DIR}/{name}.log",
        rotation="10 MB",
        retention="7 days",
        level="DEBUG",
        encoding="utf-8",
    )
