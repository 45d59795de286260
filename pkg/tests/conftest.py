from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from featdensity.corpus import AnnotatedDocument, Dataset, load_labels_jsonl, parse_conllu
from featdensity.featgen import Resources
from helpers import doc, tok

# acceptance criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


def synthetic_dir() -> Path:
    return Path(str(resources.files("featdensity") / "data" / "synthetic"))


@pytest.fixture(scope="session")
def toy() -> Dataset:
    d = synthetic_dir()
    with open(d / "toy_labels.jsonl", encoding="utf-8") as fh:
        labels = load_labels_jsonl(fh)
    return parse_conllu((d / "toy.conllu").read_bytes(), labels=labels)


@pytest.fixture(scope="session")
def en_resources() -> Resources:
    return Resources.for_language("en")


@pytest.fixture
def dogs_bark() -> AnnotatedDocument:
    return doc("d1", [tok(1, "Dogs", "dog", "NOUN", 2, "nsubj"), tok(2, "bark", "bark", "VERB", 0, "root"),
                      tok(3, ".", ".", "PUNCT", 2, "punct")])
