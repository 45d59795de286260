"""Synthetic annotated corpus for desk-scale runs.

Generates short English-like documents with lemmas, UPOS tags, entity tags
and dependency trees, in two classes. Part of the corpus is marked
``subset = separable``: those documents use only their own class's cue words,
so a linear model can separate them perfectly. The rest mix cues with noise.
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import AnnotatedDocument, AnnotatedToken, Dataset, to_conllu

DETS = ["the", "a", "this", "that", "every", "some"]
ADJS = ["big", "small", "old", "new", "red", "quiet", "long", "early", "local", "famous",
        "green", "cold", "warm", "short", "busy", "empty", "modern", "simple", "cheap", "open",
        "dark", "bright", "wide", "narrow", "young"]
NOUNS = [("dog", "dogs"), ("city", "cities"), ("film", "films"), ("book", "books"),
         ("car", "cars"), ("teacher", "teachers"), ("park", "parks"), ("meal", "meals"),
         ("song", "songs"), ("game", "games"), ("street", "streets"), ("house", "houses"),
         ("phone", "phones"), ("team", "teams"), ("river", "rivers"), ("garden", "gardens"),
         ("ticket", "tickets"), ("window", "windows"), ("coffee", "coffees"), ("train", "trains"),
         ("room", "rooms"), ("hotel", "hotels"), ("shop", "shops"), ("friend", "friends"),
         ("bus", "buses"), ("market", "markets"), ("museum", "museums"), ("bridge", "bridges"),
         ("concert", "concerts"), ("menu", "menus"), ("driver", "drivers"), ("waiter", "waiters"),
         ("school", "schools"), ("lesson", "lessons"), ("show", "shows"), ("story", "stories")]
TVERBS = [("see", "sees", "saw"), ("watch", "watches", "watched"), ("buy", "buys", "bought"),
          ("read", "reads", "read"), ("visit", "visits", "visited"), ("find", "finds", "found"),
          ("bring", "brings", "brought"), ("write", "writes", "wrote"), ("open", "opens", "opened"),
          ("carry", "carries", "carried"), ("order", "orders", "ordered"), ("choose", "chooses", "chose"),
          ("paint", "paints", "painted"), ("check", "checks", "checked"), ("book", "books", "booked"),
          ("follow", "follows", "followed"), ("share", "shares", "shared"), ("try", "tries", "tried")]
IVERBS = [("arrive", "arrives", "arrived"), ("leave", "leaves", "left"), ("sleep", "sleeps", "slept"),
          ("wait", "waits", "waited"), ("walk", "walks", "walked"), ("run", "runs", "ran"),
          ("stay", "stays", "stayed"), ("return", "returns", "returned"), ("travel", "travels", "travelled")]
ADVS = ["quickly", "today", "again", "slowly", "yesterday", "often", "later", "early", "there", "here"]
ADPS = ["in", "on", "near", "with", "at", "from", "behind", "after"]
PRONS = [("I", "I"), ("you", "you"), ("we", "we"), ("they", "they"), ("she", "she"), ("he", "he")]
PERSONS = ["Anna", "Marek", "Kenji", "Laura", "Tom", "Yuki", "Piotr", "Maria", "Omar", "Lena",
           "Hiro", "Ewa", "Sam", "Nina"]
PLACES = [["Paris"], ["Warsaw"], ["Tokyo"], ["Berlin"], ["New", "York"], ["Krakow"], ["Osaka"],
          ["Lisbon"], ["San", "Diego"]]
ORGS = [["Nokia"], ["Acme"], ["Red", "Cross"], ["Globex"], ["City", "Library"]]
YEARS = ["2017", "2018", "2019", "2020"]
NUMS = ["3", "12", "7", "40", "2"]

CUES = {
    "pos": {"adj": ["wonderful", "lovely", "great", "brilliant", "pleasant", "delightful",
                    "superb", "charming", "friendly", "perfect"],
            "verb": [("love", "loves", "loved"), ("enjoy", "enjoys", "enjoyed"),
                     ("adore", "adores", "adored"), ("praise", "praises", "praised")],
            "adv": ["happily", "gladly", "warmly"]},
    "neg": {"adj": ["awful", "terrible", "horrible", "dreadful", "nasty", "boring", "ugly",
                    "miserable", "rude", "broken"],
            "verb": [("hate", "hates", "hated"), ("despise", "despises", "despised"),
                     ("dislike", "dislikes", "disliked"), ("ruin", "ruins", "ruined")],
            "adv": ["sadly", "badly", "angrily"]},
}
LABELS = ("neg", "pos")


@dataclass
class _Tok:
    form: str
    lemma: str
    upos: str
    deprel: str = "dep"
    head: int = 0
    ner: str = "O"


@dataclass
class _Sentence:
    toks: list[_Tok] = field(default_factory=list)

    def add(self, form, lemma, upos, deprel="dep", ner="O") -> int:
        self.toks.append(_Tok(form, lemma, upos, deprel, 0, ner))
        return len(self.toks)

    def attach(self, dep: int, head: int, rel: str | None = None):
        self.toks[dep - 1].head = head
        if rel:
            self.toks[dep - 1].deprel = rel

    def finish(self) -> tuple[AnnotatedToken, ...]:
        return tuple(AnnotatedToken(i, t.form, t.lemma, t.upos, t.ner, t.head, t.deprel)
                     for i, t in enumerate(self.toks, start=1))


class _Gen:
    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.clean = False

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def coin(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def cue_class(self, label: str, clean: bool, p_own: float) -> str:
        # documents in the separable subset never borrow the other class's cues
        if clean or self.clean or self.coin(p_own):
            return label
        return "neg" if label == "pos" else "pos"

    def noun_phrase(self, s: _Sentence, adj: str | None, allow_det=True) -> tuple[int, list[int]]:
        """Returns (noun index, modifier indices whose head is the noun)."""
        mods = []
        plural = self.coin(0.3)
        if allow_det and not plural:
            d = self.pick(DETS)
            mods.append(s.add(d, d, "DET", "det"))
        if adj:
            mods.append(s.add(adj, adj, "ADJ", "amod"))
        sing, plur = self.pick(NOUNS)
        form = plur if plural else sing
        n = s.add(form, sing, "NOUN")
        for m in mods:
            s.attach(m, n)
        return n, mods

    def entity(self, s: _Sentence, parts: list[str], tag: str) -> int:
        idx = []
        for k, p in enumerate(parts):
            idx.append(s.add(p, p, "PROPN", "flat" if k else "dep", ("B-" if k == 0 else "I-") + tag))
        for j in idx[1:]:
            s.attach(j, idx[0])
        return idx[0]

    def adjective(self, label: str, clean: bool, p_own: float, p_cue: float) -> str | None:
        if clean or self.coin(p_cue):
            return self.pick(CUES[self.cue_class(label, clean, p_own)]["adj"])
        return self.pick(ADJS) if self.coin(0.5) else None

    def verb(self, label: str, clean: bool, p_own: float, p_cue: float, transitive=True):
        if clean or self.coin(p_cue):
            return self.pick(CUES[self.cue_class(label, clean, p_own)]["verb"])
        return self.pick(TVERBS if transitive else IVERBS)

    def sentence(self, label: str, clean: bool, p_own: float, p_cue: float) -> tuple[AnnotatedToken, ...]:
        s = _Sentence()
        self.clean = clean
        kind = int(self.rng.integers(5))
        tense = int(self.rng.integers(1, 3))
        if kind == 0:  # NP V NP (PP) .
            subj, _ = self.noun_phrase(s, self.adjective(label, False, p_own, p_cue * 0.5))
            v = s.add(*self._vform(self.verb(label, clean, p_own, p_cue), tense), "VERB", "root")
            obj, _ = self.noun_phrase(s, self.adjective(label, clean, p_own, p_cue))
            s.attach(subj, v, "nsubj"); s.attach(obj, v, "obj")
            if self.coin(0.4):
                a = self.pick(ADPS)
                ai = s.add(a, a, "ADP", "case")
                pn, _ = self.noun_phrase(s, None)
                s.attach(ai, pn); s.attach(pn, v, "obl")
        elif kind == 1:  # PRON V DET ADJ NOUN (NUM) .
            form, lemma = self.pick(PRONS)
            p = s.add(form, lemma, "PRON")
            v = s.add(*self._vform(self.verb(label, clean, p_own, p_cue), tense), "VERB", "root")
            if self.coin(0.3):
                num = self.pick(NUMS)
                ni = s.add(num, num, "NUM", "nummod")
                obj, _ = self.noun_phrase(s, self.adjective(label, clean, p_own, p_cue), allow_det=False)
                s.attach(ni, obj)
            else:
                obj, _ = self.noun_phrase(s, self.adjective(label, clean, p_own, p_cue))
            s.attach(p, v, "nsubj"); s.attach(obj, v, "obj")
        elif kind == 2:  # PERSON V (in PLACE) (ADV) .
            pi = self.entity(s, [self.pick(PERSONS)], "PER")
            v = s.add(*self._vform(self.verb(label, False, p_own, p_cue * 0.3, transitive=False), tense),
                      "VERB", "root")
            s.attach(pi, v, "nsubj")
            if self.coin(0.7):
                a = self.pick(["in", "to", "from"])
                ai = s.add(a, a, "ADP", "case")
                tag, parts = ("LOC", self.pick(PLACES)) if self.coin(0.7) else ("ORG", self.pick(ORGS))
                li = self.entity(s, parts, tag)
                s.attach(ai, li); s.attach(li, v, "obl")
            if clean or self.coin(p_cue):
                adv = self.pick(CUES[self.cue_class(label, clean, p_own)]["adv"])
            else:
                adv = self.pick(ADVS)
            s.attach(s.add(adv, adv, "ADV", "advmod"), v)
            if self.coin(0.25):
                yi = s.add("in", "in", "ADP", "case")
                y = self.pick(YEARS)
                year = s.add(y, y, "NUM", "obl", "B-DATE")
                s.attach(yi, year); s.attach(year, v)
        elif kind == 3:  # NP is ADJ .
            subj, _ = self.noun_phrase(s, None)
            cop = s.add("is" if s.toks[subj - 1].form == s.toks[subj - 1].lemma else "are", "be", "AUX", "cop")
            adj = self.adjective(label, clean, p_own, p_cue) or self.pick(ADJS)
            root = s.add(adj, adj, "ADJ", "root")
            s.attach(subj, root, "nsubj"); s.attach(cop, root)
        else:  # PRON AUX V NP and V .
            form, lemma = self.pick(PRONS)
            p = s.add(form, lemma, "PRON")
            aux = self.pick([("will", "will"), ("did", "do"), ("can", "can")])
            ai = s.add(aux[0], aux[1], "AUX", "aux")
            vv = self.verb(label, clean, p_own, p_cue)
            v = s.add(vv[0], vv[0], "VERB", "root")
            obj, _ = self.noun_phrase(s, self.adjective(label, clean, p_own, p_cue))
            s.attach(p, v, "nsubj"); s.attach(ai, v); s.attach(obj, v, "obj")
            if self.coin(0.4):
                ci = s.add("and", "and", "CCONJ", "cc")
                v2 = self.verb(label, False, p_own, p_cue * 0.3, transitive=False)
                vi = s.add(v2[0], v2[0], "VERB", "conj")
                s.attach(ci, vi); s.attach(vi, v)
        punct = "!" if self.coin(0.15) else "."
        root = next(i for i, t in enumerate(s.toks, start=1) if t.head == 0 and t.deprel == "root")
        s.attach(s.add(punct, punct, "PUNCT", "punct"), root)
        return s.finish()

    @staticmethod
    def _vform(v, tense: int) -> tuple[str, str]:
        return v[tense], v[0]


def generate(n_docs: int = 500, seed: int = 7, separable: int = 200, pos_share: float = 0.6,
             p_own: float = 0.7, p_cue: float = 0.45) -> Dataset:
    rng = np.random.default_rng(seed)
    gen = _Gen(rng)
    docs = []
    for i in range(n_docs):
        label = "pos" if rng.random() < pos_share else "neg"
        clean = i < separable
        n_sent = int(rng.integers(1, 4))
        sents = tuple(gen.sentence(label, clean, p_own, p_cue) for _ in range(n_sent))
        meta = {"subset": "separable" if clean else "noisy"}
        docs.append(AnnotatedDocument(f"doc{i:04d}", sents, label, "en", meta))
    return Dataset(tuple(docs), LABELS)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="write the synthetic corpus as CoNLL-U plus a label sidecar")
    ap.add_argument("out_dir", type=Path)
    ap.add_argument("--docs", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    ds = generate(args.docs, args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "toy.conllu").write_text(to_conllu(ds), encoding="utf-8")
    with open(args.out_dir / "toy_labels.jsonl", "w", encoding="utf-8") as fh:
        for d in ds.documents:
            fh.write(json.dumps({"id": d.id, "label": d.label}) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
