"""Classifier suite, metrics and the cross-validation harness.

All learners are small numpy implementations that consume TF-IDF vectors:
multinomial naive Bayes, cosine k-nearest-neighbours, logistic regression and
a linear SVM trained by plain SGD, and a one-hidden-layer MLP trained with Adam.
"""

from __future__ import annotations

import json
import math
import os
import time
import zlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .corpus import Dataset
from .featgen import FeatureSequence, PreprocSpec, Resources, extract_corpus
from .vectorize import FeatureVector, SparseRows, fit_vocabulary, smote, tfidf

KINDS = ("naive_bayes", "knn", "logreg_sgd", "linsvm_sgd", "mlp")

DEFAULTS: dict[str, dict[str, float | int]] = {
    "naive_bayes": {"alpha": 1.0},
    "knn": {"k": 1},
    "logreg_sgd": {"lr": 0.01, "l2": 1e-4, "epochs": 50},
    "linsvm_sgd": {"lr": 0.01, "l2": 1e-4, "epochs": 50},
    "mlp": {"hidden": 64, "dropout": 0.5, "lr": 1e-3, "beta1": 0.9, "beta2": 0.999,
            "eps": 1e-8, "epochs": 30, "batch_size": 64},
}


class TrainingError(ValueError):
    pass


class StratificationError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str
    hyperparameters: Mapping[str, float | int] = field(default_factory=dict)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown {self.kind} hyperparameters: {sorted(unknown)}")
        p = self.params
        if self.kind == "knn" and int(p["k"]) < 1:
            raise ValueError("knn.k must be >= 1")
        if self.kind == "mlp" and not 0.0 <= float(p["dropout"]) < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if "epochs" in p and int(p["epochs"]) < 1:
            raise ValueError("epochs must be >= 1")

    @property
    def params(self) -> dict[str, float | int]:
        return {**DEFAULTS[self.kind], **self.hyperparameters}

    @property
    def label(self) -> str:
        return self.name or self.kind


# models ------------------------------------------------------------------------

class Model:
    labels: tuple[str, ...]
    n_features: int

    def scores(self, X: SparseRows) -> np.ndarray:
        raise NotImplementedError

    def predict(self, X: SparseRows) -> list[str]:
        if X.n_rows == 0:
            return []
        # argmax returns the first maximum, so ties go to the earliest label
        return [self.labels[j] for j in np.argmax(self.scores(X), axis=1)]


class NaiveBayes(Model):
    def __init__(self, alpha: float = 1.0):
        self.alpha = alpha

    def fit(self, X: SparseRows, y: np.ndarray, n_classes: int) -> "NaiveBayes":
        D = X.dense()
        if np.any(D < 0):
            raise TrainingError("multinomial naive Bayes needs non-negative features")
        counts = np.zeros((n_classes, X.n_cols))
        np.add.at(counts, y, D)
        smoothed = counts + self.alpha
        self.feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        prior = np.bincount(y, minlength=n_classes).astype(float)
        self.class_log_prior = np.log(prior / prior.sum())
        return self

    def scores(self, X: SparseRows) -> np.ndarray:
        return X.dense() @ self.feature_log_prob.T + self.class_log_prior

    def predict_proba(self, X: SparseRows) -> np.ndarray:
        jll = self.scores(X)
        jll -= jll.max(axis=1, keepdims=True)
        p = np.exp(jll)
        return p / p.sum(axis=1, keepdims=True)


class KNN(Model):
    def __init__(self, k: int = 1):
        self.k = int(k)

    @staticmethod
    def _unit(D: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(D, axis=1, keepdims=True)
        return np.divide(D, norm, out=np.zeros_like(D), where=norm > 0)

    def fit(self, X: SparseRows, y: np.ndarray, n_classes: int) -> "KNN":
        self.train = self._unit(X.dense())
        self.y = y
        self.n_classes = n_classes
        return self

    def scores(self, X: SparseRows) -> np.ndarray:
        sim = self._unit(X.dense()) @ self.train.T
        k = min(self.k, len(self.y))
        order = np.argsort(-sim, axis=1, kind="stable")[:, :k]
        votes = np.zeros((X.n_rows, self.n_classes))
        for r in range(X.n_rows):
            for rank, j in enumerate(order[r]):
                # nearer neighbours break vote ties
                votes[r, self.y[j]] += 1.0 + 1e-6 * (k - rank)
        return votes


class LinearSGD(Model):
    """Per-sample SGD on a linear model with L2 penalty.

    ``loss="log"`` is multinomial logistic regression; ``loss="hinge"`` is a
    one-vs-rest linear SVM. The weight matrix is kept as ``scale * V`` so the
    L2 shrinkage costs O(1) per step and updates touch only a row's non-zeros.
    """

    def __init__(self, loss: str, lr: float = 0.01, l2: float = 1e-4, epochs: int = 50):
        if loss not in ("log", "hinge"):
            raise ValueError(loss)
        self.loss, self.lr, self.l2, self.epochs = loss, float(lr), float(l2), int(epochs)

    def _grad_out(self, s: np.ndarray, c: int) -> np.ndarray:
        if self.loss == "log":
            p = np.exp(s - s.max())
            p /= p.sum()
            p[c] -= 1.0
            return p
        sign = -np.ones_like(s)
        sign[c] = 1.0
        return np.where(sign * s < 1.0, -sign, 0.0)

    def _grad_binary(self, s: float, c: int) -> float:
        if self.loss == "log":
            # derivative of log(1 + exp(-y s)) for y = 2c - 1
            if s >= 0:
                p = 1.0 / (1.0 + math.exp(-s))
            else:
                e = math.exp(s)
                p = e / (1.0 + e)
            return p - c
        y = 1.0 if c else -1.0
        return -y if y * s < 1.0 else 0.0

    def objective(self, X: SparseRows | np.ndarray, y: np.ndarray) -> float:
        """Mean training loss plus the L2 term, for the model as currently fitted."""
        D = X if isinstance(X, np.ndarray) else X.dense()
        if self.binary:
            s = D @ self.W[1] + self.b[1]
            m = np.where(y == 1, 1.0, -1.0) * s
            data = np.logaddexp(0.0, -m) if self.loss == "log" else np.maximum(0.0, 1.0 - m)
            return float(data.mean() + 0.5 * self.l2 * np.sum(self.W[1] ** 2))
        S = self.scores(D)
        if self.loss == "log":
            S = S - S.max(axis=1, keepdims=True)
            data = -(S[np.arange(len(y)), y] - np.log(np.exp(S).sum(axis=1)))
        else:
            sign = -np.ones_like(S)
            sign[np.arange(len(y)), y] = 1.0
            data = np.maximum(0.0, 1.0 - sign * S).sum(axis=1)
        return float(data.mean() + 0.5 * self.l2 * np.sum(self.W ** 2))

    def fit(self, X: SparseRows, y: np.ndarray, n_classes: int, rng: np.random.Generator) -> "LinearSGD":
        # two classes use a single weight vector (class 1 versus class 0);
        # more classes use a softmax or one-vs-rest weight matrix
        self.binary = n_classes == 2
        C, d = (1 if self.binary else n_classes), X.n_cols
        V = np.zeros((C, d))
        b = np.zeros(C)
        scale = 1.0
        lr = self.lr
        shrink = 1.0 - lr * self.l2
        self.loss_history: list[float] = []
        rows = [X.row(i) for i in range(X.n_rows)]
        D = X.dense()
        v0 = V[0]
        for _ in range(self.epochs):
            for i in rng.permutation(X.n_rows):
                idx, val = rows[i]
                if self.binary:
                    g = self._grad_binary(scale * float(v0[idx] @ val) + b[0], int(y[i]))
                    scale *= shrink
                    if g:
                        v0[idx] -= (lr * g / scale) * val
                        b[0] -= lr * g
                else:
                    g = self._grad_out(scale * (V[:, idx] @ val) + b, y[i])
                    scale *= shrink
                    if g.any():
                        V[:, idx] -= (lr / scale) * np.outer(g, val)
                        b -= lr * g
                if scale < 1e-6:
                    V *= scale
                    scale = 1.0
            self._set_weights(scale * V, b)
            self.loss_history.append(self.objective(D, y))
        return self

    def _set_weights(self, W: np.ndarray, b: np.ndarray) -> None:
        if self.binary:
            self.W = np.vstack([np.zeros_like(W[0]), W[0]])
            self.b = np.array([0.0, b[0]])
        else:
            self.W, self.b = W, b.copy()

    def scores(self, X: SparseRows | np.ndarray) -> np.ndarray:
        D = X if isinstance(X, np.ndarray) else X.dense()
        return D @ self.W.T + self.b


def mlp_forward_backward(params: dict[str, np.ndarray], X: np.ndarray, Y: np.ndarray,
                         mask: np.ndarray | None = None) -> tuple[float, dict[str, np.ndarray]]:
    """Mean softmax cross-entropy and its gradients.

    ``mask`` is an inverted-dropout multiplier for the hidden layer (already
    divided by the keep probability); None disables dropout.
    """
    W1, b1, W2, b2 = params["W1"], params["b1"], params["W2"], params["b2"]
    n = X.shape[0]
    z1 = X @ W1 + b1
    a1 = np.maximum(z1, 0.0)
    h = a1 if mask is None else a1 * mask
    z2 = h @ W2 + b2
    z2 = z2 - z2.max(axis=1, keepdims=True)
    logp = z2 - np.log(np.exp(z2).sum(axis=1, keepdims=True))
    loss = float(-(Y * logp).sum() / n)
    dz2 = (np.exp(logp) - Y) / n
    dh = dz2 @ W2.T
    da1 = dh if mask is None else dh * mask
    dz1 = da1 * (z1 > 0)
    grads = {"W1": X.T @ dz1, "b1": dz1.sum(axis=0), "W2": h.T @ dz2, "b2": dz2.sum(axis=0)}
    return loss, grads


class MLP(Model):
    def __init__(self, hidden=64, dropout=0.5, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8,
                 epochs=30, batch_size=64):
        self.hidden, self.dropout, self.lr = int(hidden), float(dropout), float(lr)
        self.beta1, self.beta2, self.eps = float(beta1), float(beta2), float(eps)
        self.epochs, self.batch_size = int(epochs), int(batch_size)

    def fit(self, X: SparseRows, y: np.ndarray, n_classes: int, rng: np.random.Generator) -> "MLP":
        d, H, C = X.n_cols, self.hidden, n_classes
        self.params = {
            "W1": rng.normal(0.0, np.sqrt(2.0 / max(d, 1)), size=(d, H)),
            "b1": np.zeros(H),
            "W2": rng.normal(0.0, np.sqrt(2.0 / H), size=(H, C)),
            "b2": np.zeros(C),
        }
        m = {k: np.zeros_like(v) for k, v in self.params.items()}
        v2 = {k: np.zeros_like(v) for k, v in self.params.items()}
        D = X.dense()
        Y = np.eye(C)[y]
        keep = 1.0 - self.dropout
        t = 0
        self.loss_history: list[float] = []
        for _ in range(self.epochs):
            order = rng.permutation(X.n_rows)
            total = 0.0
            for start in range(0, len(order), self.batch_size):
                batch = order[start:start + self.batch_size]
                mask = None
                if self.dropout > 0:
                    mask = (rng.random((len(batch), H)) < keep) / keep
                loss, grads = mlp_forward_backward(self.params, D[batch], Y[batch], mask)
                total += loss * len(batch)
                t += 1
                for k, g in grads.items():
                    m[k] = self.beta1 * m[k] + (1 - self.beta1) * g
                    v2[k] = self.beta2 * v2[k] + (1 - self.beta2) * g * g
                    mhat = m[k] / (1 - self.beta1 ** t)
                    vhat = v2[k] / (1 - self.beta2 ** t)
                    self.params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
            self.loss_history.append(total / X.n_rows)
        return self

    def predict_proba(self, X: SparseRows) -> np.ndarray:
        z = np.maximum(X.dense() @ self.params["W1"] + self.params["b1"], 0.0)
        z = z @ self.params["W2"] + self.params["b2"]
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=1, keepdims=True)

    def scores(self, X: SparseRows) -> np.ndarray:
        return self.predict_proba(X)


def _rng(seed: int | np.random.Generator) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def train(config: ClassifierConfig, vectors: Sequence[FeatureVector],
          label_set: Sequence[str] | None = None, rng: int | np.random.Generator | None = None) -> Model:
    if not vectors:
        raise TrainingError("no training vectors")
    labels = [v.label for v in vectors]
    present = sorted(set(labels))
    if len(present) < 2:
        raise TrainingError("training data must contain at least two classes")
    order = tuple(label_set) if label_set is not None else tuple(present)
    stray = set(present) - set(order)
    if stray:
        raise TrainingError(f"labels outside the label set: {sorted(stray)}")
    X = SparseRows.from_vectors(vectors)
    if X.has_nan():
        raise TrainingError("training vectors contain NaN or infinite weights")
    pos = {lab: i for i, lab in enumerate(order)}
    y = np.array([pos[lab] for lab in labels], dtype=np.int64)
    p = config.params
    gen = _rng(config.seed if rng is None else rng)
    if config.kind == "naive_bayes":
        model: Model = NaiveBayes(float(p["alpha"])).fit(X, y, len(order))
    elif config.kind == "knn":
        model = KNN(int(p["k"])).fit(X, y, len(order))
    elif config.kind in ("logreg_sgd", "linsvm_sgd"):
        loss = "log" if config.kind == "logreg_sgd" else "hinge"
        model = LinearSGD(loss, p["lr"], p["l2"], int(p["epochs"])).fit(X, y, len(order), gen)
    else:
        model = MLP(**p).fit(X, y, len(order), gen)
    model.labels = order
    model.n_features = X.n_cols
    return model


def predict(model: Model, vectors: Sequence[FeatureVector]) -> list[str]:
    if not vectors:
        return []
    for v in vectors:
        if v.dim != model.n_features:
            raise ValueError(f"vector dimension {v.dim} != model dimension {model.n_features}")
    X = SparseRows.from_vectors(vectors, model.n_features)
    if X.has_nan():
        raise ValueError("vectors contain NaN or infinite weights")
    return model.predict(X)


# metrics ------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionCounts:
    labels: tuple[str, ...]
    tp: tuple[int, ...]
    fp: tuple[int, ...]
    fn: tuple[int, ...]


def confusion(gold: Sequence[str], pred: Sequence[str], label_set: Sequence[str]) -> ConfusionCounts:
    if len(gold) != len(pred):
        raise ValueError(f"length mismatch: {len(gold)} gold vs {len(pred)} predicted")
    tp, fp, fn = Counter(), Counter(), Counter()
    for g, p in zip(gold, pred):
        if g == p:
            tp[g] += 1
        else:
            fp[p] += 1
            fn[g] += 1
    labs = tuple(label_set)
    return ConfusionCounts(labs, tuple(tp[l] for l in labs), tuple(fp[l] for l in labs),
                           tuple(fn[l] for l in labs))


def _safe_div(a: float, b: float) -> float:
    return a / b if b else 0.0


def macro_f1(gold: Sequence[str], pred: Sequence[str], label_set: Sequence[str]) -> float:
    """Unweighted mean of per-class F1; any zero denominator yields 0."""
    cc = confusion(gold, pred, label_set)
    if not cc.labels:
        return 0.0
    f1s = []
    for tp, fp, fn in zip(cc.tp, cc.fp, cc.fn):
        p, r = _safe_div(tp, tp + fp), _safe_div(tp, tp + fn)
        f1s.append(_safe_div(2 * p * r, p + r))
    return sum(f1s) / len(f1s)


# harness ------------------------------------------------------------------------

@dataclass(frozen=True)
class Protocol:
    kind: str = "kfold"  # kfold | holdout
    folds: int = 10

    def __post_init__(self):
        if self.kind not in ("kfold", "holdout"):
            raise ValueError(f"unknown protocol {self.kind!r}")
        if self.kind == "kfold" and self.folds < 2:
            raise ValueError("k-fold needs at least two folds")

    @classmethod
    def kfold(cls, n: int) -> "Protocol":
        return cls("kfold", n)

    @classmethod
    def holdout(cls) -> "Protocol":
        return cls("holdout", 1)


@dataclass(frozen=True)
class EvalResult:
    spec_name: str
    classifier: str
    per_fold_f1: tuple[float, ...]
    mean_f1: float
    dispersion: float
    wall_seconds: float = field(compare=False)
    fold_seconds: tuple[float, ...] = field(default=(), compare=False)

    @classmethod
    def from_folds(cls, spec: str, clf: str, f1s: Sequence[float],
                   fold_seconds: Sequence[float] = ()) -> "EvalResult":
        f1s = tuple(float(f) for f in f1s)
        disp = float(np.std(f1s, ddof=1)) if len(f1s) > 1 else 0.0
        secs = tuple(float(s) for s in fold_seconds)
        return cls(spec, clf, f1s, float(np.mean(f1s)), disp, sum(secs), secs)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EvalResult":
        d = json.loads(line)
        d["per_fold_f1"] = tuple(d["per_fold_f1"])
        d["fold_seconds"] = tuple(d.get("fold_seconds", ()))
        return cls(**d)


def stratified_folds(labels: Sequence[str], n_folds: int, seed: int = 0) -> list[np.ndarray]:
    """Test-index arrays; each class is shuffled and dealt round-robin."""
    if n_folds < 2:
        raise ValueError("need at least two folds")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF01D]))
    cnt = Counter(labels)
    short = sorted(c for c, n in cnt.items() if n < n_folds)
    if short:
        raise StratificationError(
            f"classes {short} have fewer members than the {n_folds} folds; some fold would miss them")
    assign = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in sorted(cnt):
        idx = np.array([i for i, lab in enumerate(labels) if lab == c])
        idx = idx[rng.permutation(len(idx))]
        assign[idx] = (offset + np.arange(len(idx))) % n_folds
        offset += len(idx)
    return [np.flatnonzero(assign == f) for f in range(n_folds)]


def _stream(seed: int, *parts: str | int) -> np.random.Generator:
    words = [seed & 0xFFFFFFFF] + [zlib.crc32(str(p).encode()) for p in parts]
    return np.random.default_rng(np.random.SeedSequence(words))


def _splits(dataset: Dataset, protocol: Protocol, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    n = len(dataset)
    if protocol.kind == "holdout":
        if dataset.split is None:
            raise ValueError("holdout protocol needs a dataset split")
        pos = {d.id: i for i, d in enumerate(dataset.documents)}
        train_ids, test_ids = dataset.split
        tr = np.array(sorted(pos[i] for i in train_ids))
        te = np.array(sorted(pos[i] for i in test_ids))
        if set(dataset.labels[i] for i in te) - set(dataset.labels[i] for i in tr):
            raise StratificationError("holdout test set has a class absent from training")
        return [(tr, te)]
    out = []
    for test in stratified_folds(dataset.labels, protocol.folds, seed):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        out.append((np.flatnonzero(mask), test))
    return out


def evaluate(dataset: Dataset, spec: PreprocSpec, config: ClassifierConfig, protocol: Protocol,
             resources: Resources | None = None, seed: int = 0,
             sequences: Sequence[FeatureSequence] | None = None,
             use_smote: bool = True, smote_k: int = 5) -> EvalResult:
    """Per fold: fit vocabulary on train, TF-IDF both sides, SMOTE the train
    side (two-class data only), train, predict and score macro-F1."""
    seqs = sequences if sequences is not None else extract_corpus(dataset.documents, spec, resources)
    f1s, secs = [], []
    for fold, (tr, te) in enumerate(_splits(dataset, protocol, seed)):
        rng = _stream(seed, spec.name, config.label, fold)
        t0 = time.perf_counter()
        train_seqs = [seqs[i] for i in tr]
        vocab = fit_vocabulary(train_seqs)
        train_vecs = [tfidf(s, vocab) for s in train_seqs]
        test_vecs = [tfidf(seqs[i], vocab) for i in te]
        if use_smote and len({v.label for v in train_vecs}) == 2:
            train_vecs = smote(train_vecs, smote_k, rng)
        model = train(config, train_vecs, dataset.label_set, rng)
        pred = predict(model, test_vecs)
        secs.append(time.perf_counter() - t0)
        f1s.append(macro_f1([v.label for v in test_vecs], pred, dataset.label_set))
    return EvalResult.from_folds(spec.name, config.label, f1s, secs)


class ResultStore:
    """Append-only JSONL of finished cells, keyed by (spec, classifier)."""

    def __init__(self, path: str | Path, fingerprint: str = ""):
        self.path = Path(path)
        self.fingerprint = fingerprint
        self.done: dict[tuple[str, str], EvalResult] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
            if lines and lines[0].startswith("#"):
                stored = lines[0][1:].strip()
                if fingerprint and stored != fingerprint:
                    raise ValueError(f"{self.path} belongs to a different manifest ({stored})")
                lines = lines[1:]
            for line in lines:
                if line.strip():
                    r = EvalResult.from_json(line)
                    self.done[(r.spec_name, r.classifier)] = r
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(f"# {fingerprint}\n")

    def add(self, r: EvalResult) -> None:
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(r.to_json() + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.done[(r.spec_name, r.classifier)] = r


def _run_spec(args) -> list[EvalResult]:
    dataset, spec, configs, protocol, resources, seed, use_smote = args
    seqs = extract_corpus(dataset.documents, spec, resources)
    return [evaluate(dataset, spec, c, protocol, resources, seed, seqs, use_smote) for c in configs]


def run_matrix(dataset: Dataset, specs: Sequence[PreprocSpec], configs: Sequence[ClassifierConfig],
               protocol: Protocol, resources: Resources | None = None, seed: int = 0,
               store: ResultStore | None = None, jobs: int = 1, use_smote: bool = True,
               progress: Callable[[EvalResult], None] | None = None) -> list[EvalResult]:
    """One EvalResult per (spec, config), in spec-major order.

    Cells already present in ``store`` are reused, so an interrupted run resumes
    where it stopped. With ``jobs > 1`` specs are spread over worker processes;
    only this process writes to the store.
    """
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ValueError("classifier configs need distinct names")
    done = dict(store.done) if store else {}
    todo = []
    for s in specs:
        missing = [c for c in configs if (s.name, c.label) not in done]
        if missing:
            todo.append((dataset, s, missing, protocol, resources, seed, use_smote))

    def commit(results: Iterable[EvalResult]):
        for r in results:
            done[(r.spec_name, r.classifier)] = r
            if store:
                store.add(r)
            if progress:
                progress(r)

    if jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for results in pool.map(_run_spec, todo):
                commit(results)
    else:
        for task in todo:
            commit(_run_spec(task))
    return [done[(s.name, c.label)] for s in specs for c in configs]
