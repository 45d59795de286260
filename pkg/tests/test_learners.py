import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featdensity.featgen import FeatureSequence, PreprocSpec, extract_corpus, parse_spec_name
from featdensity.learners import (KINDS, ClassifierConfig, EvalResult, Protocol, ResultStore, StratificationError,
                                  TrainingError, confusion, evaluate, macro_f1, mlp_forward_backward, predict,
                                  run_matrix, stratified_folds, train)
from featdensity.vectorize import FeatureVector, SparseRows, counts, fit_vocabulary, tfidf


def vec(idx_w, label, dim):
    idx = tuple(i for i, _ in idx_w)
    return FeatureVector("", idx, tuple(float(w) for _, w in idx_w), label, dim)


def test_nb_hand_computed_likelihoods():
    v = fit_vocabulary([["x", "x"], ["y"]])
    vecs = [counts(FeatureSequence("1", ("x", "x"), PreprocSpec("TOK"), "A"), v),
            counts(FeatureSequence("2", ("y",), PreprocSpec("TOK"), "B"), v)]
    m = train(ClassifierConfig("naive_bayes"), vecs, ("A", "B"))
    p = np.exp(m.feature_log_prob)
    assert p[0, v.index["x"]] == pytest.approx(3 / 4)
    assert p[1, v.index["x"]] == pytest.approx(1 / 3)


def test_nb_posteriors_sum_to_one(toy):
    seqs = extract_corpus(toy.documents[:150], parse_spec_name("TOK"))
    v = fit_vocabulary(seqs)
    vecs = [tfidf(s, v) for s in seqs]
    m = train(ClassifierConfig("naive_bayes"), vecs, toy.label_set)
    post = m.predict_proba(SparseRows.from_vectors(vecs))
    assert np.all(np.abs(post.sum(axis=1) - 1.0) < 1e-9)


def test_nb_tie_goes_to_first_label():
    vecs = [vec([(0, 1)], "b", 2), vec([(1, 1)], "a", 2)]
    m = train(ClassifierConfig("naive_bayes"), vecs, ("a", "b"))
    assert predict(m, [vec([], "?", 2)]) == ["a"]


def test_knn_recovers_training_label():
    vecs = [vec([(0, 1.0)], "a", 3), vec([(1, 2.0)], "b", 3), vec([(2, 1.0), (0, 0.1)][::-1], "a", 3)]
    m = train(ClassifierConfig("knn"), vecs)
    assert predict(m, vecs) == ["a", "b", "a"]


def test_linear_svm_separable_2d():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.1, 1.0, size=(60, 2))
    labels = ["up" if y > x else "down" for x, y in pts]
    keep = [i for i, (x, y) in enumerate(pts) if abs(y - x) > 0.2]
    vecs = [vec([(0, pts[i, 0]), (1, pts[i, 1])], labels[i], 2) for i in keep]
    m = train(ClassifierConfig("linsvm_sgd"), vecs, ("down", "up"), rng=1)
    gold = [v.label for v in vecs]
    assert macro_f1(gold, predict(m, vecs), ("down", "up")) == 1.0


def test_predict_contracts():
    vecs = [vec([(0, 1)], "a", 2), vec([(1, 1)], "b", 2)]
    m = train(ClassifierConfig("mlp", {"epochs": 5}), vecs)
    assert predict(m, []) == []
    proba = m.predict_proba(SparseRows.from_vectors(vecs))
    assert predict(m, vecs) == [m.labels[j] for j in proba.argmax(axis=1)]
    with pytest.raises(ValueError):
        predict(m, [vec([(0, 1)], "a", 3)])


def test_training_errors():
    with pytest.raises(TrainingError):
        train(ClassifierConfig("knn"), [])
    with pytest.raises(TrainingError):
        train(ClassifierConfig("knn"), [vec([(0, 1)], "a", 1)])
    with pytest.raises(TrainingError):
        train(ClassifierConfig("knn"), [vec([(0, math.nan)], "a", 1), vec([(0, 1)], "b", 1)])
    with pytest.raises(ValueError):
        ClassifierConfig("svm")
    with pytest.raises(ValueError):
        ClassifierConfig("mlp", {"dropout": 1.0})


def test_mlp_gradients_match_finite_differences():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(4, 5))
    Y = np.eye(3)[[0, 2, 1, 2]]
    params = {"W1": rng.normal(size=(5, 6)), "b1": rng.normal(size=6) * 0.1,
              "W2": rng.normal(size=(6, 3)), "b2": rng.normal(size=3) * 0.1}
    _, grads = mlp_forward_backward(params, X, Y)
    h = 1e-6
    for name, p in params.items():
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up, _ = mlp_forward_backward(params, X, Y)
            p[idx] = old - h
            down, _ = mlp_forward_backward(params, X, Y)
            p[idx] = old
            num = (up - down) / (2 * h)
            ana = grads[name][idx]
            assert abs(num - ana) <= 1e-4 * max(abs(num), abs(ana), 1e-8), (name, idx, num, ana)


@pytest.mark.parametrize("kind", ["linsvm_sgd", "logreg_sgd"])
def test_sgd_loss_non_increasing_on_separable_set(toy, kind):
    sep = toy.subset(lambda d: d.meta.get("subset") == "separable")
    seqs = extract_corpus(sep.documents, parse_spec_name("TOK"))
    v = fit_vocabulary(seqs)
    vecs = [tfidf(s, v) for s in seqs]
    m = train(ClassifierConfig(kind), vecs, sep.label_set, rng=0)
    assert np.all(np.diff(m.loss_history) <= 0)
    assert macro_f1([x.label for x in vecs], predict(m, vecs), sep.label_set) == 1.0


def test_multiclass_linear_models_run():
    rng = np.random.default_rng(2)
    vecs = [vec([(c, 1.0 + rng.random())], "abc"[c], 3) for c in (0, 1, 2) for _ in range(5)]
    for kind in ("linsvm_sgd", "logreg_sgd"):
        m = train(ClassifierConfig(kind), vecs, rng=0)
        assert m.W.shape == (3, 3)
        assert predict(m, vecs) == [v.label for v in vecs]


def test_macro_f1_examples():
    assert macro_f1(list("AABB"), list("AABB"), "AB") == 1.0
    assert macro_f1(list("AABB"), list("ABBB"), "AB") == pytest.approx((2 / 3 + 4 / 5) / 2)
    assert round(macro_f1(list("AABB"), list("ABBB"), "AB"), 4) == 0.7333
    assert round(macro_f1(list("AABB"), list("AAAA"), "AB"), 4) == 0.3333
    cc = confusion(list("AABB"), list("ABBB"), "AB")
    assert (cc.tp, cc.fp, cc.fn) == ((1, 2), (0, 1), (1, 0))
    with pytest.raises(ValueError):
        macro_f1(["A"], [], "AB")


@given(st.lists(st.tuples(st.sampled_from("ABC"), st.sampled_from("ABC")), min_size=1, max_size=20), st.randoms())
def test_macro_f1_permutation_symmetric(pairs, rnd):
    shuffled = pairs[:]
    rnd.shuffle(shuffled)
    f = lambda ps: macro_f1([g for g, _ in ps], [p for _, p in ps], "ABC")
    assert f(pairs) == pytest.approx(f(shuffled), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=12, max_size=80), st.integers(2, 6), st.integers(0, 99))
def test_stratified_fold_proportions(labels, n, seed):
    from collections import Counter

    cnt = Counter(labels)
    if min(cnt.values()) < n:
        with pytest.raises(StratificationError):
            stratified_folds(labels, n, seed)
        return
    folds = stratified_folds(labels, n, seed)
    assert sorted(np.concatenate(folds).tolist()) == list(range(len(labels)))
    for f in folds:
        fc = Counter(labels[i] for i in f)
        for c in cnt:
            assert abs(fc[c] - cnt[c] / n) < 1


def test_evaluate_protocols(toy, en_resources):
    small = toy.subset(lambda d: int(d.id[3:]) < 100)
    spec = parse_spec_name("TOK")
    cfg = ClassifierConfig("naive_bayes")
    r = evaluate(small, spec, cfg, Protocol.kfold(10), en_resources, seed=3)
    assert len(r.per_fold_f1) == 10
    assert all(len(f) == 10 for f in stratified_folds(small.labels, 10, 3))
    again = evaluate(small, spec, cfg, Protocol.kfold(10), en_resources, seed=3)
    assert again == r  # timing fields do not take part in equality
    ids = [d.id for d in small.documents]
    split = small.with_split(ids[:80], ids[80:])
    h = evaluate(split, spec, cfg, Protocol.holdout(), en_resources, seed=3)
    assert len(h.per_fold_f1) == 1 and h.dispersion == 0.0


def test_same_seed_identical_except_time(toy, en_resources):
    small = toy.subset(lambda d: int(d.id[3:]) < 80)
    args = (small, parse_spec_name("LEMPOS"), ClassifierConfig("mlp", {"epochs": 3}), Protocol.kfold(4), en_resources, 9)
    a, b = evaluate(*args), evaluate(*args)
    assert (a.per_fold_f1, a.mean_f1, a.dispersion) == (b.per_fold_f1, b.mean_f1, b.dispersion)


def test_eval_result_json_round_trip():
    r = EvalResult.from_folds("TOK", "knn", [0.5, 0.7], [0.1, 0.2])
    assert r.dispersion == pytest.approx(np.std([0.5, 0.7], ddof=1))
    assert EvalResult.from_json(r.to_json()) == r


def test_run_matrix_count_and_resume(tmp_path, toy, en_resources):
    small = toy.subset(lambda d: int(d.id[3:]) < 60)
    specs = [parse_spec_name(n) for n in ("TOK", "POS", "DEP")]
    cfgs = [ClassifierConfig(k, {"epochs": 2} if k in ("mlp", "logreg_sgd", "linsvm_sgd") else {}) for k in KINDS]
    path = tmp_path / "r.jsonl"
    seen = []

    def die_after_seven(r):
        seen.append(r)
        if len(seen) == 7:
            raise KeyboardInterrupt

    with pytest.raises(KeyboardInterrupt):
        run_matrix(small, specs, cfgs, Protocol.kfold(3), en_resources, 1, ResultStore(path, "fp"), progress=die_after_seven)
    stored = path.read_text().splitlines()
    assert len(stored) == 1 + 7
    recomputed = []
    out = run_matrix(small, specs, cfgs, Protocol.kfold(3), en_resources, 1, ResultStore(path, "fp"),
                     progress=recomputed.append)
    assert len(out) == 15
    assert len(recomputed) == 15 - 7
    assert path.read_text().splitlines()[:8] == stored
    fresh = run_matrix(small, specs, cfgs, Protocol.kfold(3), en_resources, 1)
    assert fresh == out
    with pytest.raises(ValueError):
        ResultStore(path, "other-manifest")
