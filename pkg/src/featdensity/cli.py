"""Command-line entry point: ``featdensity <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Sequence

from . import __version__, replay
from .analysis import StabilityEntry, correlate_fd_f1, stability
from .corpus import ConlluParseError, ValidationError, validate
from .density import density_table, format_fd
from .energy import DeviceProfile, energy, savings_report
from .featgen import CapabilityError, SpecError, enumerate_specs, parse_spec_name
from .learners import EvalResult, ResultStore, evaluate, run_matrix
from .manifest import (ManifestError, RunManifest, canonical_hash, file_digest, load_manifest, num,
                       write_csv, write_json)
from .planner import build_plan, execute_plan, savings, uniform_cost

log = logging.getLogger("featdensity")

VALIDATION_ERRORS = (ValidationError, ConlluParseError, SpecError, CapabilityError, FileNotFoundError)


def _need_manifest(args) -> RunManifest:
    if not args.manifest:
        raise ManifestError(f"{args.command} needs --manifest")
    return load_manifest(args.manifest, seed=args.seed, out=args.out)


def _replay_out(args, kind: str, files: Sequence[str], extra: dict | None = None) -> tuple[Path, str]:
    """Output dir and hash for manifest-free replay commands."""
    ident = {"command": kind, "inputs": {Path(f).name: file_digest(replay.resolve(f)) for f in files},
             **(extra or {})}
    out = Path(args.out) if args.out else (load_manifest(args.manifest).output_dir if args.manifest else Path("out"))
    return out, canonical_hash(ident)


# commands ------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    m = _need_manifest(args)
    ds = m.load_dataset()
    problems = validate(ds)
    write_csv(m.output_dir / "corpus.csv", ["doc_id", "label", "sentences", "tokens"],
              ([d.id, d.label, len(d.sentences), d.n_tokens] for d in ds.documents), m.hash)
    write_csv(m.output_dir / "violations.csv", ["doc_id", "sentence", "rule", "detail"],
              ([v.doc_id, v.sentence, v.rule, v.detail] for v in problems), m.hash)
    counts = Counter(ds.labels)
    print(f"{len(ds)} documents, {sum(d.n_tokens for d in ds.documents)} tokens; "
          + ", ".join(f"{k}={counts[k]}" for k in ds.label_set))
    if problems:
        print(f"{len(problems)} violation(s); see violations.csv", file=sys.stderr)
        return 1
    return 0


def cmd_density(args) -> int:
    m = _need_manifest(args)
    specs = m.selected_specs()
    res = m.resources()
    ds = m.load_dataset()
    recs = density_table(ds, specs, res)
    write_csv(m.output_dir / "density.csv", ["spec", "distinct", "total", "fd"],
              ([r.spec_name, r.distinct, r.total, format_fd(r.fd)] for r in recs), m.hash)
    for r in recs:
        print(f"{r.spec_name:<16} {format_fd(r.fd)}")
    return 0


def _write_results(m: RunManifest, results: Sequence[EvalResult]) -> None:
    write_csv(m.output_dir / "results.csv", ["spec", "classifier", "fold", "f1", "seconds"],
              ([r.spec_name, r.classifier, i, num(f), f"{s:.3f}"]
               for r in results for i, (f, s) in enumerate(zip(r.per_fold_f1, r.fold_seconds))), m.hash)
    write_csv(m.output_dir / "summary.csv", ["spec", "classifier", "mean_f1", "dispersion", "seconds"],
              ([r.spec_name, r.classifier, num(r.mean_f1), num(r.dispersion), f"{r.wall_seconds:.3f}"]
               for r in results), m.hash)


def cmd_run(args) -> int:
    m = _need_manifest(args)
    specs = m.selected_specs()
    res = m.resources()
    ds = m.load_dataset()
    try:
        store = ResultStore(m.output_dir / "results.jsonl", m.hash)
    except ValueError as exc:
        raise ManifestError(str(exc)) from None
    n = len(specs) * len(m.classifiers)
    done = [0]

    def progress(r: EvalResult) -> None:
        done[0] += 1
        log.info("[%d/%d] %s %s f1=%.4f", done[0], n, r.spec_name, r.classifier, r.mean_f1)

    results = run_matrix(ds, specs, m.classifiers, m.protocol, res, m.seed, store,
                         args.jobs, m.smote, progress)
    _write_results(m, results)
    print(f"{len(results)} cells written to {m.output_dir}")
    return 0


def _analysis_outputs(out: Path, h: str, records, scores, appendix: list[StabilityEntry] | None) -> None:
    from .plotting import scatter_by_classifier

    reports = correlate_fd_f1(records, scores)
    write_csv(out / "correlation.csv", ["classifier", "pairs", "rho"],
              ([r.classifier, r.pairs_used, f"{r.rho:.4f}"] for r in reports), h)
    for r in reports:
        print(f"{r.classifier:<14} pairs={r.pairs_used:<3} rho={r.rho:+.4f}")
    if appendix:
        ranked = stability(appendix)
        write_csv(out / "stability.csv", ["spec", "classifier", "f1", "dispersion", "stability"],
                  ([e.spec_name, e.classifier, num(e.f1), num(e.dispersion), num(e.stability)] for e in ranked), h)
    fd = {r.spec_name: r.fd for r in records}
    scatter_by_classifier(fd, scores, out, f"featdensity {__version__} manifest={h}")


def cmd_analyze(args) -> int:
    if args.replay:
        if len(args.replay) not in (2, 3):
            raise ManifestError("--replay takes FD.csv F1.csv [APPENDIX.csv]")
        out, h = _replay_out(args, "analyze", args.replay)
        records = replay.load_fd(args.replay[0])
        scores = replay.load_scores(args.replay[1])
        appendix = replay.load_appendix(args.replay[2]) if len(args.replay) == 3 else None
        _analysis_outputs(out, h, records, scores, appendix)
        return 0
    m = _need_manifest(args)
    dens, summ = m.output_dir / "density.csv", m.output_dir / "summary.csv"
    for p, cmd in ((dens, "density"), (summ, "run")):
        if not p.exists():
            raise ManifestError(f"{p} missing; run the {cmd} command first")
    scores = replay.load_scores(summ)
    entries = [StabilityEntry(s.spec_name, s.classifier, s.mean_f1, s.dispersion) for s in scores]
    _analysis_outputs(m.output_dir, m.hash, replay.load_fd(dens), scores, entries)
    return 0


def _oracle_tables(path: str, classifier: str | None):
    """FD records and an F1 lookup from one oracle CSV (FD columns optional)."""
    rows = list(replay.read_rows(path))
    clfs = sorted({r["classifier"] for r in rows})
    if classifier is None:
        if len(clfs) != 1:
            raise ManifestError(f"oracle holds {len(clfs)} classifiers; pick one with --classifier")
        classifier = clfs[0]
    scores = {s.spec_name: s.mean_f1 for s in replay.load_scores(path, classifier)}
    if not scores:
        raise ManifestError(f"oracle has no rows for classifier {classifier!r}")
    records = replay.load_fd(path) if rows and "distinct" in rows[0] else None
    if records:
        seen = {}
        for r in records:
            seen.setdefault(r.spec_name, r)
        records = list(seen.values())
    return classifier, records, scores


def cmd_plan(args) -> int:
    m = load_manifest(args.manifest, seed=args.seed, out=args.out) if args.manifest else None
    settings = m.plan if m else None
    clf = args.classifier or (settings.classifier if settings and not args.oracle else None)
    neural = args.neural if args.neural is not None else (settings.neural if settings else False)
    budget = args.budget if args.budget is not None else (settings.budget if settings else 8)
    if args.oracle:
        clf, records, table = _oracle_tables(args.oracle, clf)
        if args.replay:
            records = replay.load_fd(args.replay[0])
        if records is None:
            raise ManifestError("oracle lacks FD columns; pass the FD table with --replay")
        inputs = [args.oracle] + list(args.replay or [])
        out, h = _replay_out(args, "plan", inputs, {"classifier": clf, "neural": neural, "budget": budget,
                                                   "total_wh": args.total_wh})

        def oracle(spec: str) -> float:
            if spec not in table:
                raise KeyError(f"oracle has no F1 for {spec}")
            return table[spec]
        plan = build_plan(records, clf, neural, budget)
        trace = execute_plan(plan, oracle)
        per_run = uniform_cost(args.total_wh) if args.total_wh is not None else None
        device, mult = None, 1.0
    else:
        if m is None:
            raise ManifestError("plan needs --manifest or --oracle")
        out, h = m.output_dir, m.hash
        cfg = next((c for c in m.classifiers if c.label == clf), None)
        if cfg is None:
            raise ManifestError(f"plan classifier {clf!r} is not among the manifest classifiers")
        ds, res = m.load_dataset(), m.resources()
        records = density_table(ds, enumerate_specs(), res)
        plan = build_plan(records, clf, neural, budget)
        trace = execute_plan(plan, lambda s: evaluate(ds, parse_spec_name(s), cfg, m.protocol, res, m.seed,
                                                      use_smote=m.smote), jobs=args.jobs)
        device, mult = m.device, m.multiplier
        wh = [energy(e.seconds, device, mult).wh for e in trace.runs]
        per_run = sum(wh) / len(wh)
    runs_avoided, wh_avoided = savings(trace, per_run if per_run is not None else 0.0)
    payload = trace.to_dict()
    payload["savings"] = {"runs_executed": len(trace.runs), "runs_avoided": runs_avoided,
                          "per_run_wh": per_run,
                          "energy": savings_report(wh_avoided).as_dict() if per_run is not None else None}
    write_json(out / "plan.json", payload, h)
    best = trace.best
    print(f"classifier {clf}; stage 1 pivot {trace.pivot}")
    for e in trace.runs:
        print(f"  stage {e.stage} {e.spec:<16} f1={e.f1:.3f}")
    print(f"best {best.spec} f1={best.f1:.3f} after {len(trace.runs)} of 68 runs; {runs_avoided} avoided")
    if per_run is not None:
        rep = savings_report(wh_avoided)
        print(f"avoided {rep.wh:.2f} Wh = {rep.co2e_g:.2f} g CO2e = {rep.car_km:.3f} car-km")
    return 0


def cmd_energy(args) -> int:
    if args.seconds is not None:
        if args.watts is None:
            raise ManifestError("--seconds needs --watts")
        r = energy(args.seconds, DeviceProfile("cli", args.watts), args.multiplier)
        print(json.dumps(r.as_dict(), sort_keys=True))
        return 0
    if args.replay:
        path = args.replay[0]
        out, h = _replay_out(args, "energy", [path], {"multiplier": args.multiplier})
        rows = []
        for r in replay.read_rows(path):
            rep = energy(float(r["seconds"]), DeviceProfile(r["device"], float(r["watts"])), args.multiplier)
            pub = float(r["wh"])
            rows.append([r["language"], r["classifier"], r["device"], r["watts"], r["seconds"], r["wh"],
                         f"{rep.wh:.2f}", f"{abs(rep.wh - pub) / pub:.5f}", f"{rep.co2e_g:.2f}", f"{rep.car_km:.4f}"])
        write_csv(out / "energy.csv", ["language", "classifier", "device", "watts", "seconds", "published_wh",
                                       "wh", "rel_err", "co2e_g", "car_km"], rows, h)
        worst = max(float(r[7]) for r in rows)
        print(f"{len(rows)} rows; worst relative deviation {worst:.5f}")
        return 0
    m = _need_manifest(args)
    summ = m.output_dir / "summary.csv"
    if not summ.exists():
        raise ManifestError(f"{summ} missing; run the run command first")
    secs: dict[str, float] = {}
    for r in replay.read_rows(summ):
        secs[r["classifier"]] = secs.get(r["classifier"], 0.0) + float(r["seconds"])
    rows = []
    for clf in sorted(secs):
        rep = energy(secs[clf], m.device, m.multiplier, m.intensity_g_per_kwh, m.car_g_per_km)
        rows.append([clf, f"{rep.seconds:.3f}", num(rep.watts), f"{rep.wh:.4f}", f"{rep.co2e_g:.4f}",
                     f"{rep.car_km:.6f}"])
        print(f"{clf:<14} {rep.wh:.4f} Wh  {rep.co2e_g:.4f} g CO2e")
    write_csv(m.output_dir / "energy.csv", ["classifier", "seconds", "watts", "wh", "co2e_g", "car_km"], rows, m.hash)
    return 0


# parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="featdensity", description="Feature-density experiment tooling.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="run manifest (JSON)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--seed", type=int, help="override the manifest seed")
    common.add_argument("--out", help="output directory (overrides the manifest)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common], help="parse and validate the corpus")
    sub.add_parser("density", parents=[common], help="feature density per spec")
    sub.add_parser("run", parents=[common], help="train and evaluate the spec x classifier matrix")
    a = sub.add_parser("analyze", parents=[common], help="correlation, stability and scatter plots")
    a.add_argument("--replay", nargs="+", metavar="CSV", help="FD.csv F1.csv [APPENDIX.csv]")
    pl = sub.add_parser("plan", parents=[common], help="FD-guided pruned search")
    pl.add_argument("--oracle", metavar="CSV", help="F1 table to simulate runs from")
    pl.add_argument("--replay", nargs=1, metavar="FD.csv", help="FD table for --oracle")
    pl.add_argument("--budget", type=int, help="stage-2 run budget")
    pl.add_argument("--classifier", help="classifier to plan for")
    pl.add_argument("--neural", action=argparse.BooleanOptionalAction, default=None)
    pl.add_argument("--total-wh", type=float, help="full-matrix energy for the uniform cost model")
    e = sub.add_parser("energy", parents=[common], help="energy and CO2e of runs")
    e.add_argument("--replay", nargs=1, metavar="CSV", help="runtime table with seconds, watts, wh")
    e.add_argument("--seconds", type=float)
    e.add_argument("--watts", type=float)
    e.add_argument("--multiplier", type=float, default=1.0)
    return p


COMMANDS = {"ingest": cmd_ingest, "density": cmd_density, "run": cmd_run, "analyze": cmd_analyze,
            "plan": cmd_plan, "energy": cmd_energy}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
