from featdensity.corpus import AnnotatedDocument, AnnotatedToken


def tok(i, form, lemma=None, upos="NOUN", head=0, deprel="dep", ner="O"):
    return AnnotatedToken(i, form, lemma if lemma is not None else form.lower(), upos, ner, head, deprel)


def doc(doc_id, *sentences, label="a"):
    return AnnotatedDocument(doc_id, tuple(tuple(s) for s in sentences), label)
