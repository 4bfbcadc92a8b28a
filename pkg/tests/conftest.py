from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from disambig.corpus import load_corpus, load_database
from disambig.grammar import load_grammar_file

ROOT = Path(__file__).resolve().parents[1]

settings.register_profile(
    "ci",
    derandomize=True,
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return ROOT


@pytest.fixture(scope="session")
def shipped_grammar():
    return load_grammar_file(str(ROOT / "grammars" / "disambiguation.cfg"))


@pytest.fixture(scope="session")
def shipped_db():
    return load_database(str(ROOT / "data" / "database.json"))


@pytest.fixture(scope="session")
def toy_corpus():
    return load_corpus(str(ROOT / "data" / "toy_corpus.jsonl"))


@pytest.fixture(scope="session")
def toy_expected():
    import json

    return json.loads((ROOT / "data" / "toy_corpus_expected.json").read_text())
