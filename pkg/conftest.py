"""
Fixtures partagées par la suite de tests.

Le fichier est à la racine : pytest y ajoute le répertoire du projet au
sys.path, les modules plats (corpus_ingest, pipelines…) sont donc importables.
"""
from pathlib import Path

import pytest

from corpus_ingest import extract_corpus, load_library, parse_corpus
from java_parser import parse_unit

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def jdk_libs():
    return load_library(FIXTURES / "libs" / "jdk.json")


@pytest.fixture(scope="session")
def employee_unit():
    return parse_unit((FIXTURES / "employee" / "Employee.java").read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def employee_facts(jdk_libs):
    return extract_corpus(parse_corpus(FIXTURES / "employee"), jdk_libs)


@pytest.fixture(scope="session")
def fleet_facts(jdk_libs):
    return extract_corpus(parse_corpus(FIXTURES / "fleet"), jdk_libs)


@pytest.fixture(scope="session")
def shop_units():
    return parse_corpus(FIXTURES / "shop")
