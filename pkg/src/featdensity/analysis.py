"""FD/F1 correlation, stability scores and FD-range filtering."""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Iterable, Protocol, Sequence

from .density import FeatureDensityRecord
from .featgen import SpecError, parse_spec_name


class UndefinedCorrelationError(ValueError):
    pass


class ScoreLike(Protocol):
    spec_name: str
    classifier: str
    mean_f1: float


@dataclass(frozen=True)
class Score:
    """A (spec, classifier) F1 with optional dispersion; EvalResult has the same shape."""

    spec_name: str
    classifier: str
    mean_f1: float
    dispersion: float = 0.0


@dataclass(frozen=True)
class CorrelationReport:
    classifier: str
    pairs_used: int
    rho: float
    excluded_specs: tuple[str, ...] = ()


@dataclass(frozen=True)
class StabilityEntry:
    spec_name: str
    classifier: str
    f1: float
    dispersion: float

    @property
    def stability(self) -> float:
        # decimal subtraction of the printed values: 0.7 - 0.2 ties with 0.6 - 0.1
        return float(Decimal(repr(self.f1)) - Decimal(repr(self.dispersion)))


def pearson(pairs: Iterable[tuple[float, float]]) -> float:
    pts = [(float(x), float(y)) for x, y in pairs]
    if len(pts) < 3:
        raise UndefinedCorrelationError(f"need at least 3 pairs, got {len(pts)}")
    n = len(pts)
    mx = math.fsum(x for x, _ in pts) / n
    my = math.fsum(y for _, y in pts) / n
    sxx = math.fsum((x - mx) ** 2 for x, _ in pts)
    syy = math.fsum((y - my) ** 2 for _, y in pts)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("a coordinate series is constant")
    sxy = math.fsum((x - mx) * (y - my) for x, y in pts)
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def is_pos_only(spec_name: str) -> bool:
    try:
        return parse_spec_name(spec_name).base == "POSONLY"
    except SpecError:
        return False


def correlate_fd_f1(records: Iterable[FeatureDensityRecord], results: Iterable[ScoreLike],
                    exclusion: Callable[[str], bool] | None = is_pos_only,
                    fd_of: Callable[[FeatureDensityRecord], float] | None = None) -> list[CorrelationReport]:
    """Pearson rho between FD and F1 for each classifier, sorted by classifier.

    ``fd_of`` picks the density value per record; the default is the exact
    ratio distinct/total.
    """
    fd = {r.spec_name: (fd_of(r) if fd_of else r.fd) for r in records}
    by_clf: dict[str, dict[str, float]] = {}
    for r in results:
        if r.spec_name not in fd:
            raise KeyError(f"no density record for spec {r.spec_name!r}")
        by_clf.setdefault(r.classifier, {})[r.spec_name] = float(r.mean_f1)
    out = []
    for clf in sorted(by_clf):
        scores = by_clf[clf]
        excluded = tuple(sorted(s for s in scores if exclusion and exclusion(s)))
        kept = sorted(s for s in scores if s not in excluded)
        rho = pearson((fd[s], scores[s]) for s in kept)
        out.append(CorrelationReport(clf, len(kept), rho, excluded))
    return out


def stability(entries: Iterable[tuple[str, str, float, float] | StabilityEntry]) -> list[StabilityEntry]:
    """F1 minus dispersion per pair, best first; ties by spec then classifier."""
    out = []
    for e in entries:
        if not isinstance(e, StabilityEntry):
            e = StabilityEntry(*e)
        if e.dispersion < 0:
            raise ValueError(f"negative dispersion for {e.spec_name}/{e.classifier}")
        out.append(e)
    return sorted(out, key=lambda e: (-e.stability, e.spec_name, e.classifier))


def fd_range_filter(records: Sequence[FeatureDensityRecord], base_spec: str = "TOK",
                    low_mult: float = 0.5, high_mult: float = 2.0,
                    fd_of: Callable[[FeatureDensityRecord], float] | None = None) -> list[str]:
    """Specs whose FD lies in [low_mult, high_mult] x FD(base_spec), inclusive."""
    get = fd_of or (lambda r: r.fd)
    base = next((r for r in records if r.spec_name == base_spec), None)
    if base is None:
        raise KeyError(f"base spec {base_spec!r} not among the records")
    b = get(base)
    lo = low_mult * b
    hi = math.inf if math.isinf(high_mult) else high_mult * b
    return [r.spec_name for r in records if lo <= get(r) <= hi]
