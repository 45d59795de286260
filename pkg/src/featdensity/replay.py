"""Loaders for published-table transcriptions and for this tool's own CSVs.

Bundled assets live under ``featdensity/data/replay``. Lines starting with
``#`` are provenance or header comments and are skipped.
"""

from __future__ import annotations

import csv
from importlib import resources as _res
from pathlib import Path
from typing import Iterator

from .analysis import Score, StabilityEntry
from .density import FeatureDensityRecord
from .featgen import parse_spec_name


def replay_dir() -> Path:
    return Path(str(_res.files("featdensity") / "data" / "replay"))


def resolve(name: str | Path) -> Path:
    """A filesystem path, or the name of a bundled replay asset."""
    p = Path(name)
    if p.exists():
        return p
    bundled = replay_dir() / p.name
    if bundled.exists():
        return bundled
    raise FileNotFoundError(f"{name}: not a file and not a bundled replay asset")


def read_rows(path: str | Path) -> Iterator[dict[str, str]]:
    with open(resolve(path), encoding="utf-8", newline="") as fh:
        yield from csv.DictReader(line for line in fh if not line.startswith("#"))


def _canon(label: str) -> str:
    return parse_spec_name(label, lenient=True).name


def load_fd(path: str | Path) -> list[FeatureDensityRecord]:
    return [FeatureDensityRecord(_canon(r["spec"]), int(r["distinct"]), int(r["total"]))
            for r in read_rows(path)]


def load_published_fd(path: str | Path) -> dict[str, str]:
    """Printed fd strings keyed by spec, for comparisons against the source."""
    return {_canon(r["spec"]): r["fd"] for r in read_rows(path)}


def load_scores(path: str | Path, classifier: str | None = None) -> list[Score]:
    """Rows with spec, classifier and mean_f1 (or f1); dispersion is optional."""
    out = []
    for r in read_rows(path):
        if classifier and r["classifier"] != classifier:
            continue
        f1 = r.get("mean_f1") or r.get("f1")
        if f1 in (None, "", "-"):
            continue
        out.append(Score(_canon(r["spec"]), r["classifier"], float(f1), float(r.get("dispersion") or 0.0)))
    return out


def load_appendix(path: str | Path) -> list[StabilityEntry]:
    return [StabilityEntry(_canon(r["spec"]), r["classifier"], float(r["f1"]), float(r["dispersion"]))
            for r in read_rows(path)]


def load_stability(path: str | Path) -> dict[tuple[str, str], float]:
    return {(_canon(r["spec"]), r["classifier"]): float(r["stability"]) for r in read_rows(path)}


def load_rho(path: str | Path) -> dict[str, float]:
    return {r["classifier"]: float(r["rho"]) for r in read_rows(path)}
