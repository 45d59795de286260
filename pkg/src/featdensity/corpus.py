"""CoNLL-U ingestion into an immutable document model, plus validation."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import IO, Iterable, Mapping, Sequence

log = logging.getLogger(__name__)

_IOB = re.compile(r"^[BIESLU]-")


class ConlluParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotatedToken:
    index: int
    form: str
    lemma: str
    upos: str
    ner: str = "O"
    head: int | None = 0  # None when the HEAD column is "_"
    deprel: str = "dep"


@dataclass(frozen=True)
class AnnotatedDocument:
    id: str
    sentences: tuple[tuple[AnnotatedToken, ...], ...]
    label: str
    language: str = "en"
    meta: Mapping[str, str] = field(default_factory=dict)

    def tokens(self) -> Iterable[AnnotatedToken]:
        for sent in self.sentences:
            yield from sent

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)


@dataclass(frozen=True)
class Dataset:
    documents: tuple[AnnotatedDocument, ...]
    label_set: tuple[str, ...]
    split: tuple[tuple[str, ...], tuple[str, ...]] | None = None

    def __post_init__(self):
        ids = [d.id for d in self.documents]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValidationError(f"duplicate document ids: {dup[:5]}")
        if self.split is not None:
            train, test = self.split
            if set(train) & set(test) or set(train) | set(test) != set(ids) \
                    or len(train) + len(test) != len(ids):
                raise ValidationError("split does not partition the document ids")

    def __len__(self) -> int:
        return len(self.documents)

    @property
    def labels(self) -> list[str]:
        return [d.label for d in self.documents]

    def by_id(self) -> dict[str, AnnotatedDocument]:
        return {d.id: d for d in self.documents}

    def subset(self, keep) -> "Dataset":
        """Documents for which ``keep(doc)`` is true; the split is dropped."""
        docs = tuple(d for d in self.documents if keep(d))
        return Dataset(docs, self.label_set)

    def with_split(self, train_ids: Sequence[str], test_ids: Sequence[str]) -> "Dataset":
        return Dataset(self.documents, self.label_set, (tuple(train_ids), tuple(test_ids)))


@dataclass(frozen=True)
class Violation:
    doc_id: str
    sentence: int | None  # 0-based, None for document-level rules
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        where = self.doc_id if self.sentence is None else f"{self.doc_id}#{self.sentence}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def _parse_misc_ner(misc: str) -> str:
    if misc == "_":
        return "O"
    for item in misc.split("|"):
        key, sep, value = item.partition("=")
        if sep and key == "NER":
            value = _IOB.sub("", value.strip())
            return value or "O"
    return "O"


def _comment(line: str) -> tuple[str, str] | None:
    body = line[1:].strip()
    if body.startswith("newdoc"):
        rest = body[len("newdoc"):].strip()
        if rest.startswith("id"):
            _, _, val = rest.partition("=")
            return "newdoc id", val.strip()
        return "newdoc id", ""
    key, sep, value = body.partition("=")
    if not sep:
        return None
    return key.strip(), value.strip()


def parse_conllu(text: str | bytes, labels: Mapping[str, str] | None = None,
                 language: str = "en", label_set: Sequence[str] | None = None,
                 split: tuple[Sequence[str], Sequence[str]] | None = None) -> Dataset:
    """Parse CoNLL-U into a Dataset.

    Documents start at ``# newdoc id``. A sentence outside any document becomes
    its own document keyed by ``# sent_id``. Labels come from ``labels`` or a
    ``# label =`` comment; the mapping wins when both are present.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8-sig")
    elif text.startswith("﻿"):
        text = text[1:]
    labels = dict(labels or {})

    docs: list[dict] = []
    cur_doc: dict | None = None
    cur_sent: list[AnnotatedToken] = []
    sent_meta: dict[str, str] = {}

    def close_sentence():
        nonlocal cur_doc, cur_sent, sent_meta
        if cur_sent:
            if cur_doc is None or cur_doc.get("_standalone"):
                sid = sent_meta.get("sent_id") or f"s{len(docs) + 1}"
                meta = {"label": sent_meta["label"]} if "label" in sent_meta else {}
                cur_doc = {"id": sid, "sents": [], "meta": meta, "_standalone": True}
                docs.append(cur_doc)
            cur_doc["sents"].append(tuple(cur_sent))
        cur_sent = []
        sent_meta = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            close_sentence()
            continue
        if line.startswith("#"):
            kv = _comment(line)
            if kv is None:
                continue
            key, value = kv
            if key == "newdoc id":
                close_sentence()
                if not value:
                    raise ConlluParseError(lineno, "newdoc without id")
                cur_doc = {"id": value, "sents": [], "meta": {}}
                docs.append(cur_doc)
            elif key == "sent_id":
                sent_meta["sent_id"] = value
            elif key == "text":
                pass
            elif cur_doc is not None and not cur_doc.get("_standalone") and not cur_doc["sents"] and not cur_sent:
                cur_doc["meta"][key] = value
            elif key == "label":
                sent_meta["label"] = value
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluParseError(lineno, f"expected 10 tab-separated columns, found {len(cols)}")
        tid = cols[0]
        if "-" in tid or "." in tid:
            log.warning("line %d: skipping multiword/empty node %s", lineno, tid)
            continue
        try:
            index = int(tid)
        except ValueError:
            raise ConlluParseError(lineno, f"bad token id {tid!r}") from None
        head_s = cols[6]
        if head_s == "_":
            head = None
        else:
            try:
                head = int(head_s)
            except ValueError:
                raise ConlluParseError(lineno, f"bad head {head_s!r}") from None
        if not cols[1]:
            raise ConlluParseError(lineno, "empty FORM")
        cur_sent.append(AnnotatedToken(
            index=index, form=cols[1], lemma=cols[2], upos=cols[3],
            ner=_parse_misc_ner(cols[9]), head=head, deprel=cols[7]))
    close_sentence()

    ids_seen: set[str] = set()
    built: list[AnnotatedDocument] = []
    for d in docs:
        if not d["sents"]:
            continue
        if d["id"] in ids_seen:
            raise ValidationError(f"duplicate document id {d['id']!r}")
        ids_seen.add(d["id"])
        meta = dict(d["meta"])
        comment_label = meta.pop("label", None)
        label = labels.get(d["id"], comment_label)
        if label is None:
            raise ValidationError(f"document {d['id']!r} has no label")
        if comment_label is not None and d["id"] in labels and labels[d["id"]] != comment_label:
            log.info("document %s: sidecar label %r overrides comment %r",
                     d["id"], labels[d["id"]], comment_label)
        built.append(AnnotatedDocument(d["id"], tuple(d["sents"]), label, language, meta))

    unknown = sorted(set(labels) - ids_seen)
    if unknown:
        raise ValidationError(f"labels map names unknown document ids: {unknown[:5]}")
    if label_set is None:
        label_set = sorted({d.label for d in built})
    else:
        stray = sorted({d.label for d in built} - set(label_set))
        if stray:
            raise ValidationError(f"labels outside the declared label set: {stray}")
    split_t = None if split is None else (tuple(split[0]), tuple(split[1]))
    return Dataset(tuple(built), tuple(label_set), split_t)


def validate(dataset: Dataset) -> list[Violation]:
    out: list[Violation] = []
    labels = set(dataset.label_set)
    for doc in dataset.documents:
        if doc.label not in labels:
            out.append(Violation(doc.id, None, "label not in label set", doc.label))
        if not doc.sentences:
            out.append(Violation(doc.id, None, "empty document"))
        for si, sent in enumerate(doc.sentences):
            if not sent:
                out.append(Violation(doc.id, si, "empty sentence"))
                continue
            n = len(sent)
            roots = 0
            for pos, tok in enumerate(sent, start=1):
                if tok.index != pos:
                    out.append(Violation(doc.id, si, "non-sequential token index", str(tok.index)))
                if not tok.form:
                    out.append(Violation(doc.id, si, "empty form", str(tok.index)))
                if not tok.lemma or not tok.upos or not tok.deprel:
                    out.append(Violation(doc.id, si, "empty annotation field", str(tok.index)))
                if tok.head is None:
                    continue
                if tok.head == 0:
                    roots += 1
                elif tok.head == tok.index:
                    out.append(Violation(doc.id, si, "self loop", str(tok.index)))
                elif tok.head < 0 or tok.head > n:
                    out.append(Violation(doc.id, si, "head out of bounds",
                                         f"token {tok.index} head {tok.head}"))
            if all(t.head is not None for t in sent):
                if roots > 1:
                    out.append(Violation(doc.id, si, "multiple roots", str(roots)))
                elif roots == 0:
                    out.append(Violation(doc.id, si, "no root"))
    return out


def load_labels_jsonl(stream: IO[str] | Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"labels line {lineno}: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ValidationError(f"labels line {lineno}: expected an object")
        for key in ("id", "label"):
            if not isinstance(obj.get(key), str):
                raise ValidationError(f"labels line {lineno}: missing string field {key!r}")
        if obj["id"] in out:
            raise ValidationError(f"labels line {lineno}: duplicate id {obj['id']!r}")
        out[obj["id"]] = obj["label"]
    return out


def to_conllu(dataset: Dataset) -> str:
    """Serialize back to CoNLL-U; labels and document metadata go into comments."""
    lines: list[str] = []
    for doc in dataset.documents:
        lines.append(f"# newdoc id = {doc.id}")
        lines.append(f"# label = {doc.label}")
        for key in sorted(doc.meta):
            lines.append(f"# {key} = {doc.meta[key]}")
        for si, sent in enumerate(doc.sentences, start=1):
            lines.append(f"# sent_id = {doc.id}-{si}")
            lines.append("# text = " + " ".join(t.form for t in sent))
            for t in sent:
                misc = "_" if t.ner == "O" else f"NER={t.ner}"
                head = "_" if t.head is None else str(t.head)
                lines.append("\t".join([str(t.index), t.form, t.lemma, t.upos, "_", "_",
                                        head, t.deprel, "_", misc]))
            lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")
