"""Lexical and feature density."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Dataset
from .featgen import FeatureSequence, PreprocSpec, Resources, extract_corpus


class DegenerateCorpusError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureDensityRecord:
    spec_name: str
    distinct: int
    total: int

    def __post_init__(self):
        if not (1 <= self.distinct <= self.total):
            raise ValueError(f"need 1 <= distinct <= total, got {self.distinct}/{self.total}")

    @property
    def fd(self) -> float:
        return self.distinct / self.total


def feature_density(sequences: Iterable[FeatureSequence | Sequence[str]],
                    spec_name: str | None = None) -> FeatureDensityRecord:
    seen: set[str] = set()
    total = 0
    for seq in sequences:
        feats = seq.features if isinstance(seq, FeatureSequence) else seq
        if spec_name is None and isinstance(seq, FeatureSequence):
            spec_name = seq.spec.name
        seen.update(feats)
        total += len(feats)
    if total == 0:
        raise DegenerateCorpusError("every feature sequence is empty")
    return FeatureDensityRecord(spec_name or "", len(seen), total)


def lexical_density(words: Iterable[str]) -> float:
    """Distinct words over all words."""
    words = list(words)
    if not words:
        raise DegenerateCorpusError("no words")
    return len(set(words)) / len(words)


def density_table(dataset: Dataset, specs: Sequence[PreprocSpec],
                  resources: Resources | None = None) -> list[FeatureDensityRecord]:
    recs = [feature_density(extract_corpus(dataset.documents, s, resources), s.name) for s in specs]
    return sort_records(recs)


def sort_records(records: Iterable[FeatureDensityRecord]) -> list[FeatureDensityRecord]:
    # ratio comparison by cross-multiplication keeps the order exact
    from functools import cmp_to_key

    def cmp(a: FeatureDensityRecord, b: FeatureDensityRecord) -> int:
        lhs, rhs = a.distinct * b.total, b.distinct * a.total
        if lhs != rhs:
            return -1 if lhs < rhs else 1
        return (a.spec_name > b.spec_name) - (a.spec_name < b.spec_name)

    return sorted(records, key=cmp_to_key(cmp))


def format_fd(fd: float) -> str:
    return f"{fd:.4f}"
