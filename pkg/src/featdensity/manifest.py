"""Run manifests, manifest hashing and header-stamped CSV output."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import __version__
from .corpus import Dataset, ValidationError, load_labels_jsonl, parse_conllu
from .energy import CAR_G_PER_KM, INTENSITY_G_PER_KWH, DeviceProfile
from .featgen import PreprocSpec, Resources, enumerate_specs, parse_spec_name
from .learners import ClassifierConfig, Protocol

TOOL = "featdensity"


class ManifestError(ValidationError):
    pass


def canonical_hash(obj: Any) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def header(manifest_hash: str) -> str:
    return f"{TOOL} {__version__} manifest={manifest_hash}"


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              manifest_hash: str) -> Path:
    """RFC 4180 CSV (CRLF line ends) preceded by one ``#`` header comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# {header(manifest_hash)}\r\n")
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        w.writerows(rows)
    return path


def write_json(path: str | Path, payload: Mapping[str, Any], manifest_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"_header": header(manifest_hash), **payload}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def num(x: float) -> str:
    """Stable short float text: 0.727 - 0.234 prints as 0.493."""
    return f"{x:.10g}"


@dataclass(frozen=True)
class PlanSettings:
    classifier: str = "linsvm_sgd"
    neural: bool = False
    budget: int = 8


@dataclass(frozen=True)
class RunManifest:
    """Parsed manifest. ``raw`` is the JSON object after CLI overrides; its
    hash is stamped on every output."""

    base_dir: Path
    corpus: tuple[Path, ...]
    labels: Path | None
    language: str
    stopwords: Path | None
    specs: str | tuple[str, ...]
    classifiers: tuple[ClassifierConfig, ...]
    protocol: Protocol
    split: Path | None
    seed: int
    smote: bool
    device: DeviceProfile
    multiplier: float
    intensity_g_per_kwh: float
    car_g_per_km: float
    plan: PlanSettings
    output_dir: Path
    raw: Mapping[str, Any] = field(repr=False, compare=False, default_factory=dict)

    @property
    def hash(self) -> str:
        return canonical_hash(self.raw)

    def selected_specs(self) -> list[PreprocSpec]:
        if self.specs == "all":
            return enumerate_specs()
        if self.specs == "plan":
            raise ManifestError("spec selection 'plan' is served by the plan command")
        return [parse_spec_name(n) for n in self.specs]

    def resources(self) -> Resources:
        return Resources.for_language(self.language, self.stopwords)

    def load_dataset(self) -> Dataset:
        labels = None
        if self.labels is not None:
            with open(self.labels, encoding="utf-8") as fh:
                labels = load_labels_jsonl(fh)
        text = "\n".join(p.read_text(encoding="utf-8-sig") for p in self.corpus)
        split = None
        if self.split is not None:
            obj = json.loads(self.split.read_text(encoding="utf-8"))
            split = (obj["train"], obj["test"])
        return parse_conllu(text, labels=labels, language=self.language, split=split)


def _path(base: Path, value: str | None, what: str, must_exist: bool = True) -> Path | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ManifestError(f"{what} must be a path string")
    p = Path(value)
    p = p if p.is_absolute() else base / p
    if must_exist and not p.exists():
        raise ManifestError(f"{what} not found: {p}")
    return p


def _classifiers(items: Any, seed: int) -> tuple[ClassifierConfig, ...]:
    if items is None:
        items = ["naive_bayes", "knn", "logreg_sgd", "linsvm_sgd", "mlp"]
    out = []
    for it in items:
        if isinstance(it, str):
            it = {"kind": it}
        try:
            out.append(ClassifierConfig(it["kind"], it.get("hyperparameters", {}), seed, it.get("name", "")))
        except (KeyError, ValueError) as exc:
            raise ManifestError(f"bad classifier entry {it!r}: {exc}") from None
    return tuple(out)


def _protocol(obj: Any) -> Protocol:
    obj = obj or {"kind": "kfold", "folds": 10}
    try:
        return Protocol(obj.get("kind", "kfold"), int(obj.get("folds", 10 if obj.get("kind", "kfold") == "kfold" else 1)))
    except (ValueError, AttributeError) as exc:
        raise ManifestError(f"bad protocol {obj!r}: {exc}") from None


def load_manifest(path: str | Path, seed: int | None = None, out: str | Path | None = None) -> RunManifest:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError(f"manifest not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    if seed is not None:
        raw["seed"] = seed
    raw.setdefault("seed", 0)
    base = path.resolve().parent

    corpus = raw.get("corpus")
    if isinstance(corpus, str):
        corpus = [corpus]
    if not corpus:
        raise ManifestError("manifest needs at least one corpus path")
    specs = raw.get("specs", "all")
    if not (specs in ("all", "plan") or (isinstance(specs, list) and all(isinstance(s, str) for s in specs))):
        raise ManifestError("specs must be 'all', 'plan' or a list of names")
    if isinstance(specs, list):
        for s in specs:
            parse_spec_name(s)
    stop = _path(base, raw.get("stopwords"), "stopword file")
    prot = _protocol(raw.get("protocol"))
    split = _path(base, (raw.get("protocol") or {}).get("split"), "split file")
    if prot.kind == "holdout" and split is None:
        raise ManifestError("holdout protocol needs protocol.split")
    dev = raw.get("device") or {"name": "cpu", "watts": 163.0}
    en = raw.get("energy") or {}
    pl = raw.get("plan") or {}
    out_dir = Path(out) if out is not None else _path(base, raw.get("output_dir", "out"), "output", must_exist=False)
    try:
        device = DeviceProfile(str(dev.get("name", "cpu")), float(dev["watts"]))
        plan = PlanSettings(str(pl.get("classifier", "linsvm_sgd")), bool(pl.get("neural", False)),
                            int(pl.get("budget", 8)))
    except (KeyError, ValueError, TypeError) as exc:
        raise ManifestError(f"bad device or plan section: {exc}") from None
    return RunManifest(
        base_dir=base,
        corpus=tuple(_path(base, c, "corpus file") for c in corpus),
        labels=_path(base, raw.get("labels"), "label sidecar"),
        language=str(raw.get("language", "en")),
        stopwords=stop,
        specs=specs if isinstance(specs, str) else tuple(specs),
        classifiers=_classifiers(raw.get("classifiers"), int(raw["seed"])),
        protocol=prot,
        split=split,
        seed=int(raw["seed"]),
        smote=bool(raw.get("smote", True)),
        device=device,
        multiplier=float(en.get("multiplier", 1.0)),
        intensity_g_per_kwh=float(en.get("intensity_g_per_kwh", INTENSITY_G_PER_KWH)),
        car_g_per_km=float(en.get("car_g_per_km", CAR_G_PER_KM)),
        plan=plan,
        output_dir=out_dir,
        raw=raw,
    )
