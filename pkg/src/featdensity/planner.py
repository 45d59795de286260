"""FD-guided pruning of the preprocessing search.

Stage 0 drops families that are reliably weak, stage 1 runs a fixed
16-spec priority set, and stage 2 walks the remaining specs outward from
the stage-1 winner by FD distance until the run budget is spent.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

from .density import FeatureDensityRecord
from .featgen import PreprocSpec, enumerate_specs

N_SPECS = 68


class PlanAborted(RuntimeError):
    """The oracle failed; ``trace`` holds every run completed before the failure."""

    def __init__(self, spec: str, cause: BaseException, trace: "PlanTrace"):
        super().__init__(f"oracle failed on {spec}: {cause}")
        self.spec = spec
        self.cause = cause
        self.trace = trace


def _stage0_reason(spec: PreprocSpec, neural: bool) -> str | None:
    if spec.base == "POSONLY":
        return "POS-only features are the weakest region"
    if spec.base == "CHNK":
        return "chunk features are weak for every classifier"
    if spec.base == "DEP" and not neural:
        return "dependency pairs are weak for non-neural classifiers"
    return None


def _is_priority(spec: PreprocSpec) -> bool:
    return spec.base in ("TOK", "LEM") and spec.pos_mode != "none"


@dataclass(frozen=True)
class PruningPlan:
    classifier: str
    neural: bool
    budget: int
    stage0_excluded: tuple[tuple[str, str], ...]
    stage1: tuple[str, ...]
    stage2_pool: tuple[str, ...]
    fd: Mapping[str, float] = field(repr=False)

    def stage2_order(self, pivot: str) -> list[str]:
        """Stage-2 pool by ascending |fd - fd(pivot)|, ties by name."""
        p = self.fd[pivot]
        return sorted(self.stage2_pool, key=lambda s: (abs(self.fd[s] - p), s))

    def to_dict(self) -> dict:
        return {
            "classifier": self.classifier,
            "neural": self.neural,
            "budget": self.budget,
            "stage0_excluded": [{"spec": s, "reason": r} for s, r in self.stage0_excluded],
            "stage1": list(self.stage1),
            "stage2_pool": list(self.stage2_pool),
        }


def build_plan(records: Iterable[FeatureDensityRecord], classifier: str, neural: bool,
               budget: int, fd_of: Callable[[FeatureDensityRecord], float] | None = None) -> PruningPlan:
    if budget < 0:
        raise ValueError("budget must be non-negative")
    fd = {r.spec_name: (fd_of(r) if fd_of else r.fd) for r in records}
    specs = enumerate_specs()
    missing = [s.name for s in specs if s.name not in fd]
    if missing:
        raise ValueError(f"density table lacks {len(missing)} spec(s): {', '.join(missing[:5])}")
    stage0, stage1, pool = [], [], []
    for s in specs:
        reason = _stage0_reason(s, neural)
        if reason:
            stage0.append((s.name, reason))
        elif _is_priority(s):
            stage1.append(s.name)
        else:
            pool.append(s.name)
    return PruningPlan(classifier, neural, budget, tuple(stage0), tuple(stage1), tuple(pool),
                       {s.name: fd[s.name] for s in specs})


@dataclass(frozen=True)
class TraceEntry:
    spec: str
    stage: int
    f1: float
    seconds: float


@dataclass
class PlanTrace:
    plan: PruningPlan
    runs: list[TraceEntry] = field(default_factory=list)
    pivot: str | None = None

    @property
    def best(self) -> TraceEntry | None:
        if not self.runs:
            return None
        return min(self.runs, key=lambda e: (-e.f1, e.spec))

    @property
    def executed(self) -> list[str]:
        return [e.spec for e in self.runs]

    def to_dict(self) -> dict:
        best = self.best
        return {
            "plan": self.plan.to_dict(),
            "pivot": self.pivot,
            "runs": [{"spec": e.spec, "stage": e.stage, "f1": e.f1, "seconds": e.seconds} for e in self.runs],
            "best": None if best is None else {"spec": best.spec, "f1": best.f1},
        }


Oracle = Callable[[str], object]


def _call(oracle: Oracle, spec: str) -> tuple[float, float]:
    # bare floats come from table lookups and carry no cost
    out = oracle(spec)
    if isinstance(out, (int, float)):
        return float(out), 0.0
    return float(out.mean_f1), float(getattr(out, "wall_seconds", 0.0))


def _run_stage(trace: PlanTrace, specs: Sequence[str], stage: int, oracle: Oracle, jobs: int) -> None:
    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [(s, pool.submit(_call, oracle, s)) for s in specs]
            # commit in plan order so the trace does not depend on scheduling
            for s, fut in futures:
                try:
                    f1, sec = fut.result()
                except Exception as exc:
                    raise PlanAborted(s, exc, trace) from exc
                trace.runs.append(TraceEntry(s, stage, f1, sec))
        return
    for s in specs:
        try:
            f1, sec = _call(oracle, s)
        except Exception as exc:
            raise PlanAborted(s, exc, trace) from exc
        trace.runs.append(TraceEntry(s, stage, f1, sec))


def execute_plan(plan: PruningPlan, oracle: Oracle, jobs: int = 1) -> PlanTrace:
    """Run stage 1, pick the pivot, then stage 2 in FD-proximity order.

    ``oracle`` maps a spec name to an F1 or to an object with ``mean_f1``.
    """
    trace = PlanTrace(plan)
    _run_stage(trace, plan.stage1, 1, oracle, jobs)
    trace.pivot = trace.best.spec
    order = plan.stage2_order(trace.pivot)[: plan.budget]
    _run_stage(trace, order, 2, oracle, jobs)
    return trace


def uniform_cost(total: float, n_specs: int = N_SPECS) -> float:
    return total / n_specs


def savings(executed: Iterable[str] | PlanTrace, cost: float | Mapping[str, float]) -> tuple[int, float]:
    """(runs avoided, cost avoided) relative to running every spec once.

    ``cost`` is a per-run constant or a per-spec mapping covering all specs.
    """
    ran = set(executed.executed if isinstance(executed, PlanTrace) else executed)
    names = [s.name for s in enumerate_specs()]
    unknown = ran.difference(names)
    if unknown:
        raise ValueError(f"unknown spec(s) in trace: {sorted(unknown)}")
    avoided = [s for s in names if s not in ran]
    if isinstance(cost, Mapping):
        missing = [s for s in names if s not in cost]
        if missing:
            raise ValueError(f"cost model lacks {len(missing)} spec(s)")
        return len(avoided), sum(cost[s] for s in avoided)
    return len(avoided), cost * len(avoided)
