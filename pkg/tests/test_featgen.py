from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from featdensity.featgen import (JOINER, CapabilityError, PreprocSpec, SpecError, alpha_policy, chunk,
                                 default_stopwords, dep_features, dump_features, enumerate_specs, extract,
                                 is_letters, is_letters_ja, parse_spec_name, read_stopwords)
from helpers import doc, tok


def the_big_dog_barked():
    return [tok(1, "the", "the", "DET", 3, "det"), tok(2, "big", "big", "ADJ", 3, "amod"),
            tok(3, "dog", "dog", "NOUN", 4, "nsubj"), tok(4, "barked", "bark", "VERB", 0, "root")]


def test_sixty_eight_specs_with_family_sizes():
    specs = enumerate_specs()
    assert len(specs) == 68
    assert len({s.name for s in specs}) == 68
    assert Counter(s.base for s in specs) == {"TOK": 20, "LEM": 20, "CHNK": 12, "DEP": 12, "POSONLY": 4}


def test_enumeration_is_stable_and_names_round_trip():
    assert [s.name for s in enumerate_specs()] == [s.name for s in enumerate_specs()]
    for s in enumerate_specs():
        assert parse_spec_name(s.name) == s


def test_canonical_name_examples():
    assert PreprocSpec("LEM", "separate", "none", True, True).name == "LEMPOSSSTOPALPHA"
    assert PreprocSpec("POSONLY", stop_filter=True).name == "POSSTOP"
    assert PreprocSpec("CHNK", ner_mode="replace", alpha_filter=True).name == "CHNKNERRALPHA"


@pytest.mark.parametrize("bad", [dict(base="CHNK", pos_mode="merged"), dict(base="TOK", pos_mode="merged", ner_mode="annotate"),
                                 dict(base="POSONLY", ner_mode="replace"), dict(base="WORD")])
def test_invalid_combinations(bad):
    with pytest.raises(SpecError):
        PreprocSpec(**bad)


def test_lenient_parsing_of_printed_labels():
    assert parse_spec_name("CHKNERSTOP", lenient=True).name == "CHNKNERSTOP"
    assert parse_spec_name("LEMPASS", lenient=True).name == "LEMPOSS"
    assert parse_spec_name("POSTOP", lenient=True).name == "POSSTOP"
    with pytest.raises(SpecError):
        parse_spec_name("CHKNERSTOP")
    with pytest.raises(SpecError):
        parse_spec_name("FOO", lenient=True)


def test_extract_examples(dogs_bark):
    assert extract(dogs_bark, parse_spec_name("TOK")).features == ("Dogs", "bark", ".")
    assert extract(dogs_bark, parse_spec_name("LEMPOS")).features == ("dog⊕NOUN", "bark⊕VERB", ".⊕PUNCT")
    assert extract(dogs_bark, parse_spec_name("TOKALPHA")).features == ("Dogs", "bark")
    assert extract(dogs_bark, parse_spec_name("TOKPOSS")).features == ("Dogs", "NOUN", "bark", "VERB", ".", "PUNCT")
    assert extract(dogs_bark, parse_spec_name("POS")).features == ("NOUN", "VERB", "PUNCT")


def test_ner_replace_and_annotate():
    d = doc("j", [tok(1, "John", "John", "PROPN", 2, "nsubj", ner="PER"), tok(2, "left", "leave", "VERB", 0, "root")])
    assert extract(d, parse_spec_name("TOKNERR")).features == ("PER", "left")
    assert extract(d, parse_spec_name("TOKNER")).features == ("John⊕PER", "left")
    assert extract(d, parse_spec_name("LEMNER")).features == ("John⊕PER", "leave")


def test_stop_filter_drops_token_with_its_tags():
    d = doc("s", the_big_dog_barked())
    stop = frozenset({"the"})
    assert extract(d, parse_spec_name("TOKPOSSSTOP"), stop).features == ("big", "ADJ", "dog", "NOUN", "barked", "VERB")
    assert extract(d, parse_spec_name("POSSTOP"), stop).features == ("ADJ", "NOUN", "VERB")


def test_chunk_rule():
    chunks = chunk(the_big_dog_barked())
    assert [(c.token_indices, c.kind) for c in chunks] == [((1, 2, 3), "noun"), ((4,), "verb")]
    assert [(c.token_indices, c.kind) for c in chunk([tok(1, "hi", upos="INTJ", head=0)])] == [((1,), "other")]
    sent = the_big_dog_barked() + [tok(5, ".", ".", "PUNCT", 4, "punct")]
    assert chunk(sent)[-1].token_indices == (5,) and chunk(sent)[-1].kind == "other"


def test_dep_features_examples():
    assert dep_features(the_big_dog_barked(), lambda t: t.form) == [f"barked→nsubj→the{JOINER}big{JOINER}dog"]
    assert dep_features([tok(1, "dog", head=0)], lambda t: t.form) == []
    six = the_big_dog_barked() + [tok(5, "and", "and", "CCONJ", 6, "cc"), tok(6, "whined", "whine", "VERB", 4, "conj")]
    assert dep_features(six, lambda t: t.form) == [f"barked→nsubj→the{JOINER}big{JOINER}dog",
                                                     f"barked→conj→and{JOINER}whined"]


def test_chunk_specs_and_dump():
    d = doc("c", the_big_dog_barked())
    seq = extract(d, parse_spec_name("CHNK"))
    assert seq.features == (f"the{JOINER}big{JOINER}dog", "barked")
    assert extract(d, parse_spec_name("CHNKSTOP"), frozenset({"the"})).features == (f"big{JOINER}dog", "barked")
    assert dump_features([seq]) == "the_big_dog barked\n"


def test_capability_errors():
    no_heads = doc("n", [tok(1, "x", head=None)])
    with pytest.raises(CapabilityError):
        extract(no_heads, parse_spec_name("DEP"))
    assert extract(no_heads, parse_spec_name("TOK")).features == ("x",)
    no_lemma = doc("l", [tok(1, "x", lemma="_")])
    with pytest.raises(CapabilityError):
        extract(no_lemma, parse_spec_name("LEM"))


def test_alphabet_policies():
    assert is_letters("Dogs") and not is_letters("can't") and not is_letters("")
    assert is_letters_ja("東京タワー") and is_letters_ja("ひらがな") and not is_letters_ja("2019年")
    assert alpha_policy("ja-JP") is is_letters_ja and alpha_policy("pl") is is_letters


def test_stopword_lists():
    assert read_stopwords(["# comment", "The  ", "", "and # trailing"]) == {"the", "and"}
    for lang in ("en", "pl", "ja"):
        assert default_stopwords(lang)
    with pytest.raises(FileNotFoundError):
        default_stopwords("xx")


def test_poss_doubles_feature_count(toy):
    for d in toy.documents[:50]:
        for base in ("TOK", "LEM"):
            assert len(extract(d, PreprocSpec(base, "separate"))) == 2 * d.n_tokens


def test_chunks_partition_every_sentence(toy):
    for d in toy.documents:
        for s in d.sentences:
            idx = [i for c in chunk(s) for i in c.token_indices]
            assert sorted(idx) == [t.index for t in s]


def test_filters_only_remove(toy, en_resources):
    for d in toy.documents[:60]:
        for s in enumerate_specs():
            if s.stop_filter or s.alpha_filter:
                continue
            full = Counter(extract(d, s).features)
            for stop in (False, True):
                for alpha in (False, True):
                    v = PreprocSpec(s.base, s.pos_mode, s.ner_mode, stop, alpha)
                    if s.base in ("CHNK", "DEP"):
                        continue  # chunk texts shrink rather than vanish
                    sub = Counter(extract(d, v, en_resources.stopwords, en_resources.alpha).features)
                    assert not sub - full


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(["John", "Anna", "Paris", "went", "PER", "LOC"]),
                          st.sampled_from(["O", "PER", "LOC"])), min_size=1, max_size=12))
def test_nerr_never_adds_distinct_units(pairs):
    toks = [tok(i + 1, w, ner=n) for i, (w, n) in enumerate(pairs)]
    tags = {n for _, n in pairs if n != "O"}
    # the property is stated for documents where every tag is already a word
    toks += [tok(len(toks) + k + 1, t) for k, t in enumerate(sorted(tags))]
    d = doc("n", toks)
    plain = set(extract(d, parse_spec_name("TOK")).features)
    assert len(set(extract(d, parse_spec_name("TOKNERR")).features)) <= len(plain)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.sampled_from(["a", "b", "the", "Dog", "7", "."]), min_size=1, max_size=10))
def test_extract_deterministic(words):
    d = doc("h", [tok(i + 1, w, head=0 if i == 0 else 1) for i, w in enumerate(words)])
    for s in enumerate_specs():
        assert extract(d, s, frozenset({"the"})) == extract(d, s, frozenset({"the"}))
