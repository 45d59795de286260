"""Vocabulary, TF-IDF bag-of-features vectors and SMOTE oversampling."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .featgen import FeatureSequence


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    df: tuple[int, ...]
    n_docs: int

    def __len__(self) -> int:
        return len(self.index)

    def idf(self) -> np.ndarray:
        return np.log(self.n_docs / np.asarray(self.df, dtype=float))


@dataclass(frozen=True)
class FeatureVector:
    doc_id: str
    indices: tuple[int, ...]
    weights: tuple[float, ...]
    label: str
    dim: int

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError("indices must be strictly increasing")
        if len(self.indices) != len(self.weights):
            raise ValueError("indices and weights differ in length")
        if self.indices and not (0 <= self.indices[0] and self.indices[-1] < self.dim):
            raise ValueError("index outside the vector dimension")

    def dense(self) -> np.ndarray:
        out = np.zeros(self.dim)
        out[list(self.indices)] = self.weights
        return out


def fit_vocabulary(train: Sequence[FeatureSequence | Sequence[str]]) -> Vocabulary:
    if not train:
        raise ValueError("cannot fit a vocabulary on an empty training set")
    df: Counter[str] = Counter()
    for seq in train:
        feats = seq.features if isinstance(seq, FeatureSequence) else seq
        df.update(set(feats))
    terms = sorted(df)
    return Vocabulary({t: i for i, t in enumerate(terms)}, tuple(df[t] for t in terms), len(train))


def _vector(seq, vocab: Vocabulary, weight) -> FeatureVector:
    feats = seq.features if isinstance(seq, FeatureSequence) else seq
    tf = Counter(f for f in feats if f in vocab.index)
    pairs = []
    for term, count in tf.items():
        i = vocab.index[term]
        w = weight(count, vocab.df[i])
        if w != 0.0:
            pairs.append((i, w))
    pairs.sort()
    doc_id = seq.doc_id if isinstance(seq, FeatureSequence) else ""
    label = seq.label if isinstance(seq, FeatureSequence) else ""
    return FeatureVector(doc_id, tuple(i for i, _ in pairs), tuple(w for _, w in pairs),
                         label, len(vocab))


def tfidf(seq: FeatureSequence | Sequence[str], vocab: Vocabulary) -> FeatureVector:
    """Raw term count times ln(|D| / n_t); unseen features are dropped."""
    n = vocab.n_docs
    return _vector(seq, vocab, lambda tf, df: tf * math.log(n / df))


def counts(seq: FeatureSequence | Sequence[str], vocab: Vocabulary) -> FeatureVector:
    return _vector(seq, vocab, lambda tf, df: float(tf))


@dataclass(frozen=True)
class SparseRows:
    """Minimal CSR matrix: enough for per-row SGD and dense mini-batches."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    n_cols: int

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], dim: int | None = None) -> "SparseRows":
        if dim is None:
            dim = vectors[0].dim if vectors else 0
        for v in vectors:
            if v.dim != dim:
                raise ValueError(f"vector dimension {v.dim} does not match {dim}")
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
        idx = np.fromiter((i for v in vectors for i in v.indices), dtype=np.int64, count=int(indptr[-1]))
        dat = np.fromiter((w for v in vectors for w in v.weights), dtype=float, count=int(indptr[-1]))
        return cls(indptr, idx, dat, dim)

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.data[a:b]

    def dense(self, rows: Sequence[int] | np.ndarray | None = None) -> np.ndarray:
        rows = np.arange(self.n_rows) if rows is None else np.asarray(rows)
        out = np.zeros((len(rows), self.n_cols))
        for k, r in enumerate(rows):
            idx, dat = self.row(int(r))
            out[k, idx] = dat
        return out

    def has_nan(self) -> bool:
        return not np.all(np.isfinite(self.data))


# SMOTE -------------------------------------------------------------------------

def _smote_draws(X: np.ndarray, y: list[str], k: int, rng: np.random.Generator):
    classes = sorted(set(y))
    if len(classes) != 2:
        raise ValueError(f"SMOTE needs exactly two classes, found {len(classes)}")
    if k < 1:
        raise ValueError("k must be at least 1")
    cnt = Counter(y)
    minority = min(classes, key=lambda c: (cnt[c], c))
    need = max(cnt.values()) - cnt[minority]
    rows = np.array([i for i, lab in enumerate(y) if lab == minority])
    if need == 0:
        return minority, rows[:0], rows[:0], np.zeros(0)
    if len(rows) < 2:
        raise ValueError("SMOTE needs at least two minority samples")
    M = X[rows]
    sq = np.sum(M * M, axis=1)
    dist = sq[:, None] + sq[None, :] - 2.0 * (M @ M.T)
    np.fill_diagonal(dist, np.inf)
    kk = min(k, len(rows) - 1)
    # stable sort keeps neighbour choice deterministic under distance ties
    nbrs = np.argsort(dist, axis=1, kind="stable")[:, :kk]
    base = rng.integers(0, len(rows), size=need)
    pick = nbrs[base, rng.integers(0, kk, size=need)]
    return minority, rows[base], rows[pick], rng.random(need)


def smote_arrays(X: np.ndarray, y: Sequence[str], k: int = 5,
                 rng: np.random.Generator | int | None = 0) -> tuple[np.ndarray, list[str]]:
    """Oversample the minority class of a two-class dense matrix.

    Each synthetic row is x + lam * (x_nn - x) for a random minority row x, one
    of its k nearest minority neighbours x_nn (Euclidean) and lam ~ U[0, 1].
    Returns the input rows followed by the synthetic ones.
    """
    y = list(y)
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    minority, base, pick, lam = _smote_draws(X, y, k, rng)
    synth = X[base] + lam[:, None] * (X[pick] - X[base])
    return np.vstack([X, synth]), y + [minority] * len(base)


def smote(vectors: Sequence[FeatureVector], k: int = 5,
          seed: int | np.random.Generator = 0) -> list[FeatureVector]:
    """SMOTE over sparse vectors; synthetic ids are ``<base id>~smote<n>``."""
    labels = [v.label for v in vectors]
    cols = sorted({i for v in vectors for i in v.indices})
    pos = {c: j for j, c in enumerate(cols)}
    X = np.zeros((len(vectors), len(cols)))
    for r, v in enumerate(vectors):
        X[r, [pos[i] for i in v.indices]] = v.weights
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    minority, base, pick, lam = _smote_draws(X, labels, k, rng)
    out = list(vectors)
    cols_a = np.asarray(cols, dtype=np.int64)
    for n, (b, p, t) in enumerate(zip(base, pick, lam)):
        row = X[b] + t * (X[p] - X[b])
        nz = np.nonzero(row)[0]
        out.append(FeatureVector(f"{vectors[b].doc_id}~smote{n}", tuple(int(i) for i in cols_a[nz]),
                                 tuple(float(w) for w in row[nz]), minority, vectors[0].dim))
    return out


def dump_vectors(vectors: Iterable[FeatureVector], stream: IO[str]) -> None:
    """``doc_id<TAB>label<TAB>idx:weight ...`` with 6 significant digits."""
    for v in vectors:
        body = " ".join(f"{i}:{w:.6g}" for i, w in zip(v.indices, v.weights))
        stream.write(f"{v.doc_id}\t{v.label}\t{body}\n")
