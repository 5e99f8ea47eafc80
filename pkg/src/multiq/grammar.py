"""Pregroup type algebra, lexicon, and a deterministic parser for the SVO caption fragment.

Grammaticality is type reduction: every word carries a pregroup type, and a
sentence is grammatical when the concatenated type sequence cancels down to the
single sentence atom.  The fragment covered is

    Det? Adj* N  (Aux? V)  [Det? Adj* N]  (P Det? Adj* N)?

where a possessive-marked noun ("mother's") occupies an adjective slot.
Auxiliaries are fused with the following verb at tokenization ("is sitting" ->
"is_sitting"), so the parser only ever sees one token per verb.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import LexiconError, NoReduction, UnknownToken


class AtomicType(Enum):
    """The four atomic type generators."""

    NOUN = "n"
    SENTENCE = "s"
    PREPOSITIONAL_PHRASE = "p"
    IMAGE = "img"


@dataclass(frozen=True)
class PregroupType:
    """An ordered product of atomic types with adjoint orders.

    Each factor is ``(atom, z)`` where z=0 is the base type, z=-1 the left
    adjoint and z=+1 the right adjoint.  The empty product is the monoidal
    unit.
    """

    factors: tuple[tuple[AtomicType, int], ...] = ()

    @classmethod
    def atom(cls, a: AtomicType, z: int = 0) -> "PregroupType":
        return cls(((a, z),))

    def __matmul__(self, other: "PregroupType") -> "PregroupType":
        return PregroupType(self.factors + other.factors)

    @property
    def l(self) -> "PregroupType":
        """Left adjoint: reverse the factors and decrement each order."""
        return PregroupType(tuple((a, z - 1) for a, z in reversed(self.factors)))

    @property
    def r(self) -> "PregroupType":
        """Right adjoint: reverse the factors and increment each order."""
        return PregroupType(tuple((a, z + 1) for a, z in reversed(self.factors)))

    @property
    def is_unit(self) -> bool:
        return not self.factors

    def __len__(self) -> int:
        return len(self.factors)

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        parts = []
        for a, z in self.factors:
            suffix = "" if z == 0 else (".l" * -z if z < 0 else ".r" * z)
            parts.append(a.value + suffix)
        return "@".join(parts)


UNIT = PregroupType()
N = PregroupType.atom(AtomicType.NOUN)
S = PregroupType.atom(AtomicType.SENTENCE)
P = PregroupType.atom(AtomicType.PREPOSITIONAL_PHRASE)
IMG = PregroupType.atom(AtomicType.IMAGE)


class LexicalCategory(Enum):
    NOUN = "NOUN"
    TRANSITIVE_VERB = "TRANSITIVE_VERB"
    INTRANSITIVE_VERB = "INTRANSITIVE_VERB"
    DETERMINER = "DETERMINER"
    ADJECTIVE = "ADJECTIVE"
    PREPOSITION = "PREPOSITION"
    AUXILIARY = "AUXILIARY"


# Category -> pregroup type.  Auxiliaries never reach typing (they are fused
# into the following verb), and possessive-marked nouns are typed like
# adjectives at their modifier position.
CATEGORY_TYPES: dict[LexicalCategory, PregroupType] = {
    LexicalCategory.NOUN: N,
    LexicalCategory.TRANSITIVE_VERB: N.r @ S @ N.l,
    LexicalCategory.INTRANSITIVE_VERB: N.r @ S,
    LexicalCategory.DETERMINER: N @ N.l,
    LexicalCategory.ADJECTIVE: N @ N.l,
    LexicalCategory.PREPOSITION: S.r @ S @ N.l,
}

MODIFIER_TYPE = N @ N.l  # type of a possessive noun in an adjective slot

_VERB_CATEGORIES = (LexicalCategory.TRANSITIVE_VERB, LexicalCategory.INTRANSITIVE_VERB)


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    category: LexicalCategory

    @property
    def type(self) -> PregroupType:
        if self.category is LexicalCategory.AUXILIARY:
            raise LexiconError(f"auxiliary {self.word!r} has no standalone type")
        return CATEGORY_TYPES[self.category]


class Lexicon:
    """Closed vocabulary mapping lowercase tokens to categories."""

    def __init__(self, entries: dict[str, LexiconEntry]):
        self._entries = entries

    @classmethod
    def from_pairs(cls, pairs) -> "Lexicon":
        entries = {}
        for word, category in pairs:
            entries[word] = LexiconEntry(word, LexicalCategory(category))
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "Lexicon":
        """Load a tab-separated ``word<TAB>category`` file; ``#`` starts a comment."""
        entries = {}
        for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise LexiconError(f"{path}:{lineno}: expected 'word<TAB>category', got {raw!r}")
            word, category = parts[0].strip(), parts[1].strip()
            try:
                cat = LexicalCategory(category)
            except ValueError:
                raise LexiconError(f"{path}:{lineno}: unknown category {category!r}") from None
            if word in entries:
                raise LexiconError(f"{path}:{lineno}: duplicate entry for {word!r}")
            entries[word] = LexiconEntry(word, cat)
        return cls(entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, word: str) -> LexiconEntry:
        try:
            return self._entries[word]
        except KeyError:
            raise UnknownToken(word) from None

    def words(self) -> list[str]:
        return sorted(self._entries)


@dataclass(frozen=True)
class Token:
    """A lexical token: lowercase text with the possessive marker stripped."""

    text: str
    possessive: bool = False

    def surface(self) -> str:
        return self.text + "'s" if self.possessive else self.text


_PUNCT = ".,!?;:\"()[]"
_WORD_RE = re.compile(r"[a-z][a-z_-]*")


def tokenize(sentence: str, lexicon: Lexicon) -> list[Token]:
    """Lowercase, strip punctuation, split possessives, and fuse auxiliaries.

    Raises UnknownToken for any word outside the lexicon, including fused
    auxiliary+verb forms that the lexicon does not list.
    """
    raw = []
    for chunk in sentence.lower().split():
        word = chunk.strip(_PUNCT).replace("’", "'")
        if not word:
            continue
        possessive = word.endswith("'s")
        if possessive:
            word = word[:-2]
        if not _WORD_RE.fullmatch(word):
            raise UnknownToken(word)
        raw.append(Token(word, possessive))

    tokens: list[Token] = []
    i = 0
    while i < len(raw):
        tok = raw[i]
        if tok.text in lexicon and lexicon.lookup(tok.text).category is LexicalCategory.AUXILIARY:
            if i + 1 >= len(raw):
                raise UnknownToken(tok.text)
            fused = f"{tok.text}_{raw[i + 1].text}"
            if fused not in lexicon:
                raise UnknownToken(fused)
            tokens.append(Token(fused, False))
            i += 2
            continue
        if tok.text not in lexicon:
            raise UnknownToken(tok.text)
        tokens.append(tok)
        i += 1
    return tokens


@dataclass(frozen=True)
class NounPhrase:
    """Token indices of one noun phrase: optional determiner, modifiers, head."""

    det: int | None
    mods: tuple[int, ...]
    head: int


@dataclass(frozen=True)
class Frame:
    """The fragment structure of a parsed sentence."""

    subject: NounPhrase
    verb: int
    obj: NounPhrase | None
    prep: int | None
    prep_obj: NounPhrase | None


@dataclass(frozen=True)
class Parse:
    tokens: tuple[str, ...]
    types: tuple[PregroupType, ...]
    reductions: tuple[tuple[int, int], ...]  # cup links over flattened factor positions
    result: PregroupType
    word_tokens: tuple[Token, ...]
    frame: Frame | None


def reduce(types: list[PregroupType] | tuple[PregroupType, ...]):
    """Cancel adjacent adjoint pairs to a normal form.

    Returns ``(remainder, links)`` where links are (i, j) pairs over the
    flattened factor positions.  A link is valid when the two factors share an
    atom and the right one's order is the left one's plus one, covering both
    t . t.r and t.l . t cancellations.  Irreducible input comes back unchanged
    with no links.
    """
    flat: list[tuple[AtomicType, int]] = []
    for t in types:
        flat.extend(t.factors)

    stack: list[int] = []  # positions of factors not yet cancelled
    links: list[tuple[int, int]] = []
    for j, (atom, z) in enumerate(flat):
        if stack:
            i = stack[-1]
            a_top, z_top = flat[i]
            if a_top is atom and z == z_top + 1:
                stack.pop()
                links.append((i, j))
                continue
        stack.append(j)

    remainder = PregroupType(tuple(flat[i] for i in stack))
    links.sort()
    return remainder, links


def _match_np(tokens: list[Token], cats: list[LexicalCategory], i: int):
    """Match ``Det? (Adj | N's)* N`` starting at token i, or return None."""
    det = None
    if i < len(tokens) and cats[i] is LexicalCategory.DETERMINER:
        det = i
        i += 1
    mods = []
    while i < len(tokens) and (
        cats[i] is LexicalCategory.ADJECTIVE
        or (cats[i] is LexicalCategory.NOUN and tokens[i].possessive)
    ):
        mods.append(i)
        i += 1
    if i < len(tokens) and cats[i] is LexicalCategory.NOUN and not tokens[i].possessive:
        return NounPhrase(det, tuple(mods), i), i + 1
    return None


def _match_frame(tokens: list[Token], cats: list[LexicalCategory]) -> Frame | None:
    m = _match_np(tokens, cats, 0)
    if m is None:
        return None
    subject, i = m
    if i >= len(tokens) or cats[i] not in _VERB_CATEGORIES:
        return None
    verb = i
    i += 1
    obj = None
    if cats[verb] is LexicalCategory.TRANSITIVE_VERB:
        m = _match_np(tokens, cats, i)
        if m is None:
            return None
        obj, i = m
    prep = None
    prep_obj = None
    if i < len(tokens) and cats[i] is LexicalCategory.PREPOSITION:
        prep = i
        m = _match_np(tokens, cats, i + 1)
        if m is None:
            return None
        prep_obj, i = m
    if i != len(tokens):
        return None
    return Frame(subject, verb, obj, prep, prep_obj)


def parse_sentence(sentence: str, lexicon: Lexicon) -> Parse:
    """Parse a sentence of the SVO fragment down to the sentence type.

    Deterministic: typing is fixed by the lexicon (with possessive nouns typed
    as modifiers) and the reduction is the leftmost cancellation strategy.
    Raises UnknownToken or NoReduction.
    """
    if not sentence.strip():
        raise NoReduction("empty sentence")
    tokens = tokenize(sentence, lexicon)
    cats = [lexicon.lookup(t.text).category for t in tokens]

    frame = _match_frame(tokens, cats)
    if frame is None:
        raise NoReduction(f"{sentence!r} does not match the SVO fragment")

    types = []
    for tok, cat in zip(tokens, cats):
        if tok.possessive:
            types.append(MODIFIER_TYPE)
        else:
            types.append(CATEGORY_TYPES[cat])

    result, links = reduce(types)
    if result != S:
        raise NoReduction(f"{sentence!r} reduces to {result}, not {S}")
    return Parse(
        tokens=tuple(t.text for t in tokens),
        types=tuple(types),
        reductions=tuple(links),
        result=result,
        word_tokens=tuple(tokens),
        frame=frame,
    )
