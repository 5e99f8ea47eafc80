import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import reachable_remainders

from multiq.errors import LexiconError, NoReduction, UnknownToken
from multiq.grammar import (
    CATEGORY_TYPES,
    N,
    S,
    UNIT,
    AtomicType,
    LexicalCategory,
    Lexicon,
    PregroupType,
    Token,
    parse_sentence,
    reduce,
    tokenize,
)

TRANSITIVE = N.r @ S @ N.l


def test_exactly_four_atomic_types():
    assert {a.value for a in AtomicType} == {"n", "s", "p", "img"}


def test_adjoints_and_unit():
    assert N.l.factors == ((AtomicType.NOUN, -1),)
    assert N.r.factors == ((AtomicType.NOUN, 1),)
    assert (N @ S).r.factors == ((AtomicType.SENTENCE, 1), (AtomicType.NOUN, 1))
    assert UNIT.is_unit and len(UNIT) == 0
    assert str(TRANSITIVE) == "n.r@s@n.l"


def test_category_type_table():
    assert CATEGORY_TYPES[LexicalCategory.NOUN] == N
    assert CATEGORY_TYPES[LexicalCategory.TRANSITIVE_VERB] == TRANSITIVE
    assert CATEGORY_TYPES[LexicalCategory.INTRANSITIVE_VERB] == N.r @ S
    assert CATEGORY_TYPES[LexicalCategory.DETERMINER] == N @ N.l
    assert CATEGORY_TYPES[LexicalCategory.ADJECTIVE] == N @ N.l
    assert CATEGORY_TYPES[LexicalCategory.PREPOSITION] == S.r @ S @ N.l
    # The image atom is never produced by the lexicon.
    assert all(
        (AtomicType.IMAGE, 0) not in t.factors for t in CATEGORY_TYPES.values()
    )


class TestReduce:
    def test_right_adjoint_cancels(self):
        remainder, links = reduce([N, N.r])
        assert remainder == UNIT and links == [(0, 1)]

    def test_left_adjoint_cancels(self):
        remainder, links = reduce([N.l, N])
        assert remainder == UNIT and links == [(0, 1)]

    def test_transitive_sentence(self):
        remainder, links = reduce([N, TRANSITIVE, N])
        assert remainder == S
        assert len(links) == 2
        assert links == [(0, 1), (3, 4)]

    def test_irreducible_returns_itself(self):
        remainder, links = reduce([N, S])
        assert remainder == N @ S and links == []

    def test_wrong_side_does_not_cancel(self):
        # s.r @ s only contracts as s then s.r, never the other way round.
        remainder, _ = reduce([S.r, S])
        assert remainder == S.r @ S

    @given(
        st.sampled_from(list(AtomicType)),
        st.integers(min_value=-1, max_value=1),
    )
    def test_snake_cancellation_law(self, atom, z):
        t = PregroupType.atom(atom, z)
        t_r = PregroupType.atom(atom, z + 1)
        t_l = PregroupType.atom(atom, z - 1)
        assert reduce([t, t_r]) == (UNIT, [(0, 1)])
        assert reduce([t_l, t]) == (UNIT, [(0, 1)])


class TestTokenize:
    def test_possessive_split(self, lexicon):
        toks = tokenize("the mother's hand", lexicon)
        assert toks == [Token("the"), Token("mother", possessive=True), Token("hand")]
        assert toks[1].surface() == "mother's"

    def test_auxiliary_fusion(self, lexicon):
        assert [t.text for t in tokenize("A dog is sitting", lexicon)] == ["a", "dog", "is_sitting"]

    def test_punctuation_and_case(self, lexicon):
        assert [t.text for t in tokenize("Dogs chase cats.", lexicon)] == ["dogs", "chase", "cats"]

    def test_unknown_word(self, lexicon):
        with pytest.raises(UnknownToken):
            tokenize("dogs chase unicorns", lexicon)

    def test_unfusable_auxiliary(self, lexicon):
        with pytest.raises(UnknownToken):
            tokenize("the dog is", lexicon)
        with pytest.raises(UnknownToken):
            tokenize("a dog is cats", lexicon)


class TestParseSentence:
    def test_transitive_example(self, lexicon):
        p = parse_sentence("Dogs chase cats", lexicon)
        assert list(p.types) == [N, TRANSITIVE, N]
        assert p.result == S
        assert len(p.reductions) == 2

    def test_bare_noun_is_not_a_sentence(self, lexicon):
        with pytest.raises(NoReduction):
            parse_sentence("dogs", lexicon)

    def test_intransitive_with_prepositional_phrase(self, lexicon):
        # Checked against the exhaustive cancellation search below.
        p = parse_sentence("A dog is sitting on the road", lexicon)
        assert p.result == S
        flat = tuple(f for t in p.types for f in t.factors)
        assert S.factors in reachable_remainders(flat)
        # With a transitive verb type instead (extra object slot), no
        # cancellation order reaches the bare sentence type.
        transitive_flat = flat[:5] + (N.l.factors[0],) + flat[5:]
        assert S.factors not in reachable_remainders(transitive_flat)

    def test_possessive_object(self, lexicon):
        p = parse_sentence("A child holds the mother's hand", lexicon)
        assert p.result == S
        assert p.types[4] == N @ N.l  # possessive noun typed as a modifier

    def test_empty_sentence(self, lexicon):
        with pytest.raises(NoReduction):
            parse_sentence("   ", lexicon)

    def test_off_fragment_word_order(self, lexicon):
        with pytest.raises(NoReduction):
            parse_sentence("chase dogs cats", lexicon)

    def test_deterministic(self, lexicon):
        a = parse_sentence("The boy kicks a ball in the park", lexicon)
        b = parse_sentence("The boy kicks a ball in the park", lexicon)
        assert a == b

    def test_frame_fields(self, lexicon):
        p = parse_sentence("The big dog chases the small cat", lexicon)
        f = p.frame
        assert p.tokens[f.subject.head] == "dog"
        assert p.tokens[f.verb] == "chases"
        assert p.tokens[f.obj.head] == "cat"
        assert [p.tokens[i] for i in f.subject.mods] == ["big"]


def _assert_noncrossing(links):
    for a, (i, j) in enumerate(links):
        for k, l in links[a + 1 :]:
            crossing = (i < k < j < l) or (k < i < l < j)
            assert not crossing, f"links ({i},{j}) and ({k},{l}) cross"


def test_corpus_totality_and_planarity(lexicon, structured, unstructured, structured_sample, unstructured_sample):
    sentences = []
    for e in structured + structured_sample:
        sentences += [e.pos_sentence, e.neg_sentence]
    sentences += [e.sentence for e in unstructured + unstructured_sample]
    assert len(sentences) > 600
    for sentence in sentences:
        p = parse_sentence(sentence, lexicon)
        assert p.result == S
        _assert_noncrossing(list(p.reductions))


class TestLexiconFile:
    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("# comment\n\ndog\tNOUN\nchase\tTRANSITIVE_VERB  # inline\n")
        lex = Lexicon.from_file(path)
        assert "dog" in lex and "chase" in lex

    def test_missing_tab(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("dog NOUN\n")
        with pytest.raises(LexiconError):
            Lexicon.from_file(path)

    def test_unknown_category(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("dog\tVERBISH\n")
        with pytest.raises(LexiconError):
            Lexicon.from_file(path)

    def test_duplicate_word(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("dog\tNOUN\ndog\tNOUN\n")
        with pytest.raises(LexiconError):
            Lexicon.from_file(path)

    def test_lookup_miss_is_hard_error(self, lexicon):
        with pytest.raises(UnknownToken):
            lexicon.lookup("zebra")
