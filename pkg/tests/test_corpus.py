import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featdensity.corpus import (ConlluParseError, Dataset, ValidationError, load_labels_jsonl, parse_conllu,
                                to_conllu, validate)

from helpers import doc, tok

DOGS = "1\tDogs\tdog\tNOUN\t_\t_\t2\tnsubj\t_\t_\n2\tbark\tbark\tVERB\t_\t_\t0\troot\t_\t_\n" \
       "3\t.\t.\tPUNCT\t_\t_\t2\tpunct\t_\t_\n"


def test_single_sentence_document():
    ds = parse_conllu("# newdoc id = d1\n" + DOGS, labels={"d1": "neg"})
    assert len(ds) == 1
    assert ds.documents[0].n_tokens == 3
    assert ds.documents[0].label == "neg"


def test_nine_columns_names_line():
    bad = "# newdoc id = d1\n# label = x\n1\tDogs\tdog\tNOUN\t_\t_\t0\troot\t_\n"
    with pytest.raises(ConlluParseError) as exc:
        parse_conllu(bad)
    assert exc.value.line == 3
    assert "line 3" in str(exc.value)


def test_misc_ner_key():
    line = "1\tJohn\tJohn\tPROPN\t_\t_\t0\troot\t_\tNER=PER|SpaceAfter=No\n"
    ds = parse_conllu("# newdoc id = d\n# label = x\n" + line)
    assert ds.documents[0].sentences[0][0].ner == "PER"


@pytest.mark.parametrize("misc,expected", [("NER=B-LOC", "LOC"), ("NER=I-LOC", "LOC"), ("_", "O"),
                                           ("SpaceAfter=No", "O"), ("NER=O", "O")])
def test_iob_prefix_stripped(misc, expected):
    line = f"1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t{misc}\n"
    assert parse_conllu("# newdoc id = d\n# label = a\n" + line).documents[0].sentences[0][0].ner == expected


def test_sidecar_label_wins_over_comment():
    ds = parse_conllu("# newdoc id = d1\n# label = pos\n" + DOGS, labels={"d1": "neg"})
    assert ds.documents[0].label == "neg"


def test_missing_label_and_unknown_sidecar_id():
    with pytest.raises(ValidationError):
        parse_conllu("# newdoc id = d1\n" + DOGS)
    with pytest.raises(ValidationError):
        parse_conllu("# newdoc id = d1\n" + DOGS, labels={"d1": "a", "ghost": "b"})


def test_multiword_and_empty_nodes_skipped(caplog):
    text = ("# newdoc id = d\n# label = a\n1-2\tdon't\t_\t_\t_\t_\t_\t_\t_\t_\n" + DOGS.replace("\n3", "\n3.1\tx\tx\tX\t_\t_\t_\t_\t_\t_\n3"))
    ds = parse_conllu(text)
    assert ds.documents[0].n_tokens == 3
    assert "skipping" in caplog.text


def test_bom_crlf_and_standalone_sentences():
    text = "﻿# sent_id = s1\r\n# label = a\r\n" + DOGS.replace("\n", "\r\n") + "\r\n# sent_id = s2\r\n# label = b\r\n" + DOGS
    ds = parse_conllu(text.encode("utf-8"))
    assert [d.id for d in ds.documents] == ["s1", "s2"]
    assert ds.labels == ["a", "b"]


def test_validate_clean_and_rules():
    good = Dataset((doc("a", [tok(1, "x", head=0, deprel="root")]),), ("a",))
    assert validate(good) == []
    two_roots = Dataset((doc("a", [tok(1, "x", head=0), tok(2, "y", head=0)]),), ("a",))
    assert [v.rule for v in validate(two_roots)] == ["multiple roots"]
    oob = Dataset((doc("a", [tok(1, "x", head=0), tok(2, "y", head=7), tok(3, "z", head=1)]),), ("a",))
    assert [v.rule for v in validate(oob)] == ["head out of bounds"]
    loop = Dataset((doc("a", [tok(1, "x", head=0), tok(2, "y", head=2)]),), ("a",))
    assert [v.rule for v in validate(loop)] == ["self loop"]
    stray = Dataset((doc("a", [tok(1, "x")], label="zzz"),), ("a",))
    assert [v.rule for v in validate(stray)] == ["label not in label set"]


def test_labels_jsonl():
    two = io.StringIO('{"id": "a", "label": "x"}\n{"id": "b", "label": "y"}\n')
    assert load_labels_jsonl(two) == {"a": "x", "b": "y"}
    with pytest.raises(ValidationError):
        load_labels_jsonl(io.StringIO('{"id": "a", "label": "x"}\n{"id": "a", "label": "y"}\n'))
    assert load_labels_jsonl(io.StringIO("")) == {}
    with pytest.raises(ValidationError):
        load_labels_jsonl(io.StringIO('{"id": "a"}\n'))


def test_duplicate_ids_and_bad_split_rejected():
    d = doc("a", [tok(1, "x")])
    with pytest.raises(ValidationError):
        Dataset((d, d), ("a",))
    with pytest.raises(ValidationError):
        Dataset((d,), ("a",), (("a",), ("a",)))


def test_bundled_corpus_is_valid(toy):
    assert len(toy) == 500
    assert toy.label_set == ("neg", "pos")
    assert validate(toy) == []


def test_round_trip_bundled(toy):
    again = parse_conllu(to_conllu(toy))
    assert again == toy


_form = st.text(alphabet="abcXYZ.,!é", min_size=1, max_size=6)
_upos = st.sampled_from(["NOUN", "VERB", "ADJ", "DET", "PUNCT", "PROPN"])
_ner = st.sampled_from(["O", "PER", "LOC"])


@st.composite
def _sentence(draw):
    n = draw(st.integers(1, 8))
    root = draw(st.integers(1, n))
    toks = []
    for i in range(1, n + 1):
        head = 0 if i == root else draw(st.sampled_from([j for j in range(1, n + 1) if j != i]))
        toks.append(tok(i, draw(_form), draw(_form), draw(_upos), head, "root" if head == 0 else "dep", draw(_ner)))
    return toks


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(_sentence(), min_size=1, max_size=3), min_size=1, max_size=4),
       st.sampled_from(["a", "b"]))
def test_round_trip_property(docs, label):
    ds = Dataset(tuple(doc(f"d{i}", *sents, label=label) for i, sents in enumerate(docs)), (label,))
    again = parse_conllu(to_conllu(ds))
    assert again == ds
    assert sum(d.n_tokens for d in again.documents) == sum(d.n_tokens for d in ds.documents)
