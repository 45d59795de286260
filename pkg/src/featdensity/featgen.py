"""Preprocessing specifications and feature extraction.

A spec is a base representation (tokens, lemmas, chunks, dependency pairs or
bare POS tags) plus modifier flags. ``extract`` turns one annotated document
into a flat feature sequence under a spec.
"""

from __future__ import annotations

import itertools
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources as _res
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import AnnotatedDocument, AnnotatedToken

MERGE = "⊕"
JOINER = "␣"
FILE_JOINER = "_"

BASES = ("TOK", "LEM", "CHNK", "DEP", "POSONLY")
POS_MODES = ("none", "merged", "separate")
NER_MODES = ("none", "annotate", "replace")

NOMINAL = frozenset({"NOUN", "PROPN", "PRON"})
VERBAL = frozenset({"VERB", "AUX"})
UNATTACHED = frozenset({"PUNCT", "SYM"})

_POS_SUFFIX = {"none": "", "merged": "POS", "separate": "POSS"}
_NER_SUFFIX = {"none": "", "annotate": "NER", "replace": "NERR"}


class CapabilityError(ValueError):
    """The document lacks an annotation layer this preprocessing needs."""


class SpecError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class PreprocSpec:
    base: str
    pos_mode: str = "none"
    ner_mode: str = "none"
    stop_filter: bool = False
    alpha_filter: bool = False

    def __post_init__(self):
        if self.base not in BASES:
            raise SpecError(f"unknown base {self.base!r}")
        if self.pos_mode not in POS_MODES or self.ner_mode not in NER_MODES:
            raise SpecError(f"bad modifier in {self!r}")
        if self.pos_mode != "none" and self.base not in ("TOK", "LEM"):
            raise SpecError(f"POS modifiers need a TOK or LEM base, got {self.base}")
        if self.ner_mode != "none" and self.base == "POSONLY":
            raise SpecError("NER modifiers cannot apply to a POS-only base")
        if self.pos_mode != "none" and self.ner_mode != "none":
            raise SpecError("POS and NER modifiers never co-occur")

    @property
    def name(self) -> str:
        base = "POS" if self.base == "POSONLY" else self.base
        return (base + _POS_SUFFIX[self.pos_mode] + _NER_SUFFIX[self.ner_mode]
                + ("STOP" if self.stop_filter else "") + ("ALPHA" if self.alpha_filter else ""))

    @property
    def family(self) -> str:
        return self.base

    def __str__(self) -> str:
        return self.name


@lru_cache(maxsize=1)
def _all_specs() -> tuple[PreprocSpec, ...]:
    out = []
    flags = list(itertools.product((False, True), (False, True)))
    for base in ("TOK", "LEM"):
        for pos, ner in (("none", "none"), ("merged", "none"), ("separate", "none"),
                         ("none", "annotate"), ("none", "replace")):
            out += [PreprocSpec(base, pos, ner, s, a) for s, a in flags]
    for base in ("CHNK", "DEP"):
        for ner in NER_MODES:
            out += [PreprocSpec(base, "none", ner, s, a) for s, a in flags]
    out += [PreprocSpec("POSONLY", "none", "none", s, a) for s, a in flags]
    return tuple(out)


def enumerate_specs() -> list[PreprocSpec]:
    """All 68 combinations in a fixed order: TOK, LEM, CHNK, DEP, POS-only."""
    return list(_all_specs())


_CANON = re.compile(r"^(TOK|LEM|CHNK|DEP|POS)(POSS|POS|NERR|NER)?(STOP)?(ALPHA)?$")
_MOD = {"POS": ("merged", "none"), "POSS": ("separate", "none"),
        "NER": ("none", "annotate"), "NERR": ("none", "replace"), None: ("none", "none")}


def _parse_strict(name: str) -> PreprocSpec | None:
    # the regex alone is ambiguous (TOKPOSSTOP = POS+STOP, never POSS+TOP), so
    # try every split the grammar allows and keep the valid one
    m = _CANON.match(name)
    if not m:
        return None
    candidates = []
    for mod in ("POSS", "POS", "NERR", "NER", None):
        base = m.group(1)
        rest = name[len(base):]
        if mod:
            if not rest.startswith(mod):
                continue
            rest = rest[len(mod):]
        stop = rest.startswith("STOP")
        if stop:
            rest = rest[4:]
        alpha = rest == "ALPHA"
        if rest not in ("", "ALPHA"):
            continue
        pos, ner = _MOD[mod]
        try:
            spec = PreprocSpec("POSONLY" if base == "POS" else base, pos, ner, stop, alpha)
        except SpecError:
            continue
        if spec.name == name:
            candidates.append(spec)
    return candidates[0] if candidates else None


def parse_spec_name(name: str, lenient: bool = False) -> PreprocSpec:
    """Inverse of ``PreprocSpec.name``.

    ``lenient`` also accepts label variants seen in hand-made result tables:
    CHK/CHKN for CHNK, lower-case flag suffixes, ``POSTOP`` for POS+STOP,
    POSS as a POS-only prefix and the PASS misspelling of POSS.
    """
    spec = _parse_strict(name)
    if spec is not None:
        return spec
    if lenient:
        n = name.strip().upper()
        n = n.replace("PASS", "POSS")
        stems = [n]
        if n.startswith("CHKNK"):  # CHKNKERR: doubled K for CHNKNERR
            stems = ["CHNKN" + n[5:]]
        elif n.startswith("CHKN"):
            stems = ["CHNK" + n[4:], "CHNK" + n[3:]]
        elif n.startswith("CHK"):
            stems = ["CHNK" + n[3:]]
        tries = []
        for s in stems:
            tries += [s, s.replace("POSTOP", "POSSTOP")]
            if s.startswith("POSS"):
                tail = s[4:]
                tries += ["POS" + tail, "POS" + tail.replace("POSTOP", "POSSTOP")]
        for t in tries:
            spec = _parse_strict(t)
            if spec is not None:
                return spec
    raise SpecError(f"not a preprocessing spec name: {name!r}")


# alphabet policies -----------------------------------------------------------

def is_letters(s: str) -> bool:
    return bool(s) and all(unicodedata.category(c).startswith("L") for c in s)


def _is_japanese_script(c: str) -> bool:
    o = ord(c)
    return (0x3040 <= o <= 0x30FF or 0x31F0 <= o <= 0x31FF or 0x3400 <= o <= 0x4DBF
            or 0x4E00 <= o <= 0x9FFF or 0xF900 <= o <= 0xFAFF or 0xFF66 <= o <= 0xFF9F
            or c in "々〆ヶ")


def is_letters_ja(s: str) -> bool:
    return bool(s) and all(unicodedata.category(c).startswith("L") or _is_japanese_script(c)
                           for c in s)


def alpha_policy(language: str) -> Callable[[str], bool]:
    return is_letters_ja if language.lower().startswith("ja") else is_letters


# stopwords ---------------------------------------------------------------------

def read_stopwords(lines: Iterable[str]) -> frozenset[str]:
    out = set()
    for line in lines:
        word = line.split("#", 1)[0].strip()
        if word:
            out.add(word.lower())
    return frozenset(out)


def load_stopwords(path: str | Path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return read_stopwords(fh)


def default_stopwords(language: str) -> frozenset[str]:
    code = language.lower().split("-")[0]
    ref = _res.files("featdensity") / "data" / "stopwords" / f"{code}.txt"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled stopword list for {language!r}")
    return read_stopwords(ref.read_text(encoding="utf-8").splitlines())


@dataclass(frozen=True)
class Resources:
    stopwords: frozenset[str] = frozenset()
    alpha: Callable[[str], bool] = field(default=is_letters, compare=False)

    @classmethod
    def for_language(cls, language: str, stopword_path: str | Path | None = None) -> "Resources":
        words = load_stopwords(stopword_path) if stopword_path else default_stopwords(language)
        return cls(words, alpha_policy(language))


# chunks and dependency pairs ---------------------------------------------------

@dataclass(frozen=True)
class Chunk:
    token_indices: tuple[int, ...]
    head_index: int
    kind: str  # noun | verb | other

    def __post_init__(self):
        idx = self.token_indices
        if not idx or list(idx) != list(range(idx[0], idx[0] + len(idx))):
            raise ValueError("chunk range must be non-empty and contiguous")
        if self.head_index not in idx:
            raise ValueError("chunk head outside its range")


def _require_heads(sentence: Sequence[AnnotatedToken]) -> None:
    n = len(sentence)
    for t in sentence:
        if t.head is None:
            raise CapabilityError("dependency heads are missing")
        if t.head < 0 or t.head > n:
            raise CapabilityError(f"head {t.head} out of bounds in a {n}-token sentence")


def chunk(sentence: Sequence[AnnotatedToken]) -> list[Chunk]:
    """Partition a sentence into noun, verb and single-token ``other`` chunks.

    Every nominal or verbal token anchors a chunk. Other tokens join the chunk
    of their nearest anchoring ancestor when they sit in a contiguous run around
    that anchor whose head chains stay inside the run. Punctuation and symbols
    never join. Anything left over becomes its own ``other`` chunk.
    """
    _require_heads(sentence)
    n = len(sentence)
    if n == 0:
        return []
    tok = {t.index: t for t in sentence}

    def is_anchor(i: int) -> bool:
        return tok[i].upos in NOMINAL or tok[i].upos in VERBAL

    anchor_of: dict[int, int | None] = {}
    for i in tok:
        if tok[i].upos in UNATTACHED:
            anchor_of[i] = None
            continue
        j, steps = i, 0
        while not is_anchor(j) and tok[j].head and steps <= n:
            j = tok[j].head
            steps += 1
            if tok[j].upos in UNATTACHED:
                break
        anchor_of[i] = j if is_anchor(j) else None

    def chain_inside(i: int, a: int, lo: int, hi: int) -> bool:
        steps = 0
        while i != a:
            i = tok[i].head
            steps += 1
            if not (lo <= i <= hi) or steps > n:
                return False
        return True

    owner: dict[int, int] = {}
    chunks: list[Chunk] = []
    for a in sorted(i for i in tok if is_anchor(i)):
        members = {i for i, anc in anchor_of.items() if anc == a}
        lo = hi = a
        while lo - 1 in members:
            lo -= 1
        while hi + 1 in members:
            hi += 1
        while True:
            ok = {i for i in range(lo, hi + 1) if chain_inside(i, a, lo, hi)}
            nlo, nhi = a, a
            while nlo - 1 >= lo and nlo - 1 in ok:
                nlo -= 1
            while nhi + 1 <= hi and nhi + 1 in ok:
                nhi += 1
            if (nlo, nhi) == (lo, hi):
                break
            lo, hi = nlo, nhi
        kind = "noun" if tok[a].upos in NOMINAL else "verb"
        chunks.append(Chunk(tuple(range(lo, hi + 1)), a, kind))
        for i in range(lo, hi + 1):
            owner[i] = len(chunks) - 1
    for i in tok:
        if i not in owner:
            chunks.append(Chunk((i,), i, "other"))
    chunks.sort(key=lambda c: c.token_indices[0])
    return chunks


def _pair_features(sentence: Sequence[AnnotatedToken], chunks: Sequence[Chunk],
                   texts: Sequence[str | None]) -> list[str]:
    tok = {t.index: t for t in sentence}
    where = {i: ci for ci, c in enumerate(chunks) for i in c.token_indices}
    out = []
    for ci, c in enumerate(chunks):
        root = tok[c.head_index]
        if not root.head:
            continue
        gi = where[root.head]
        if gi == ci:
            continue
        dep_text, gov_text = texts[ci], texts[gi]
        if dep_text and gov_text:
            out.append(f"{gov_text}→{root.deprel}→{dep_text}")
    return out


def dep_features(sentence: Sequence[AnnotatedToken], unit_of: Callable[[AnnotatedToken], str | None],
                 chunks: Sequence[Chunk] | None = None) -> list[str]:
    """``governor→deprel→dependent`` for every chunk attached to another chunk.

    Chunk text joins ``unit_of`` over the chunk's tokens; tokens mapped to None
    are dropped, and a pair with an empty side is skipped.
    """
    if chunks is None:
        chunks = chunk(sentence)
    tok = {t.index: t for t in sentence}
    texts = []
    for c in chunks:
        parts = [u for u in (unit_of(tok[i]) for i in c.token_indices) if u]
        texts.append(JOINER.join(parts) if parts else None)
    return _pair_features(sentence, chunks, texts)


# extraction ------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSequence:
    doc_id: str
    features: tuple[str, ...]
    spec: PreprocSpec
    label: str = ""

    def __len__(self) -> int:
        return len(self.features)


def _check_capability(doc: AnnotatedDocument, spec: PreprocSpec) -> None:
    toks = list(doc.tokens())
    if spec.base in ("CHNK", "DEP") and any(t.head is None for t in toks):
        raise CapabilityError(f"{spec.name} needs dependency heads; document {doc.id} has none")
    if (spec.base == "POSONLY" or spec.pos_mode != "none" or spec.base in ("CHNK", "DEP")) \
            and any(t.upos in ("", "_") for t in toks):
        raise CapabilityError(f"{spec.name} needs POS tags; document {doc.id} lacks them")
    if spec.base == "LEM" and any(t.lemma in ("", "_") for t in toks):
        raise CapabilityError(f"{spec.name} needs lemmas; document {doc.id} lacks them")


def _ner_unit(unit: str, tag: str, mode: str) -> str:
    if mode == "none" or tag == "O":
        return unit
    return unit + MERGE + tag if mode == "annotate" else tag


def extract(doc: AnnotatedDocument, spec: PreprocSpec, stopwords: frozenset[str] | set[str] = frozenset(),
            alpha_policy: Callable[[str], bool] = is_letters) -> FeatureSequence:
    """Feature sequence for one document.

    Pipeline: base units, NER annotation or replacement, POS attachment, then
    the stopword and alphabet filters. Filters act per token, so a removed
    token takes its attached tags with it. For the POS-only base the alphabet
    test looks at the tag itself, which always passes.
    """
    _check_capability(doc, spec)

    def stopped(t: AnnotatedToken) -> bool:
        return spec.stop_filter and (t.form.lower() in stopwords or t.lemma.lower() in stopwords)

    feats: list[str] = []
    for sent in doc.sentences:
        if spec.base in ("CHNK", "DEP"):
            feats.extend(_chunk_level(sent, spec, stopped, alpha_policy))
            continue
        for t in sent:
            if stopped(t):
                continue
            if spec.base == "POSONLY":
                if spec.alpha_filter and not alpha_policy(t.upos):
                    continue
                feats.append(t.upos)
                continue
            word = t.form if spec.base == "TOK" else t.lemma
            if spec.alpha_filter and not alpha_policy(word):
                continue
            unit = _ner_unit(word, t.ner, spec.ner_mode)
            if spec.pos_mode == "merged":
                feats.append(unit + MERGE + t.upos)
            elif spec.pos_mode == "separate":
                feats += [unit, t.upos]
            else:
                feats.append(unit)
    return FeatureSequence(doc.id, tuple(feats), spec, doc.label)


def _chunk_level(sent, spec, stopped, alpha) -> list[str]:
    chunks = chunk(sent)
    tok = {t.index: t for t in sent}
    texts: list[str | None] = []
    for c in chunks:
        kept = [tok[i].form for i in c.token_indices
                if not stopped(tok[i]) and not (spec.alpha_filter and not alpha(tok[i].form))]
        if not kept:
            texts.append(None)
            continue
        texts.append(_ner_unit(JOINER.join(kept), tok[c.head_index].ner, spec.ner_mode))
    if spec.base == "CHNK":
        return [t for t in texts if t]
    return _pair_features(sent, chunks, texts)


def extract_corpus(docs: Iterable[AnnotatedDocument], spec: PreprocSpec,
                   resources: Resources | None = None) -> list[FeatureSequence]:
    res = resources or Resources()
    return [extract(d, spec, res.stopwords, res.alpha) for d in docs]


def dump_features(seqs: Iterable[FeatureSequence]) -> str:
    """One document per line, features space-separated, chunk joiner as underscore."""
    lines = []
    for s in seqs:
        lines.append(" ".join(f.replace(JOINER, FILE_JOINER).replace(" ", FILE_JOINER)
                              for f in s.features))
    return "\n".join(lines) + ("\n" if lines else "")
