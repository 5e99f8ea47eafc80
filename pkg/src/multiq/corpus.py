"""Generators for the shipped lexicon and dataset files.

Everything here is deterministic: corpora are rebuilt from fixed word pools
and a fixed seed, so the committed JSONL files can be regenerated and checked
byte for byte (``python -m multiq.corpus``).  Captions are synthetic
subject-verb-object sentences; image files are not part of the artifact, only
their ids.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .data import StructuredEntry, UnstructuredEntry, swap_subject_object
from .grammar import LexicalCategory, Lexicon

SEED = 20240901

PEOPLE = ["child", "mother", "father", "boy", "girl", "man", "woman", "teacher", "farmer", "nurse", "baby", "player"]
ANIMALS = ["dog", "cat", "horse", "bird", "rabbit", "cow", "monkey", "bear", "lion", "duck", "goat"]
THINGS = ["ball", "book", "bag", "stick", "cart", "kite", "rope", "box", "toy", "flag", "drum", "hand"]
PLACES = ["road", "park", "field", "grass", "river", "beach", "street", "garden", "yard", "bed", "pool", "tree"]
PLURALS = ["dogs", "cats", "horses", "birds", "rabbits", "cows", "monkeys", "bears", "lions", "boys", "girls", "ducks"]
ADJECTIVES = ["big", "small", "old", "young", "little", "happy", "brown", "white", "black"]
DETERMINERS = ["a", "the"]
PREPOSITIONS = ["on", "in", "near", "by"]

# The 13 structured-task verbs, one surface form each.
STRUCTURED_VERBS = [
    "holds", "chases", "carries", "pushes", "pulls", "follows", "feeds",
    "hugs", "lifts", "touches", "watches", "kicks", "kisses",
]
PLURAL_VERBS = ["chase", "follow", "watch", "push", "pull", "carry", "feed"]
ING_INTRANSITIVE = ["sitting", "running", "standing", "walking", "sleeping", "jumping", "playing", "swimming"]
ING_TRANSITIVE = ["riding", "holding", "chasing", "carrying", "pushing", "pulling", "watching", "feeding"]


def build_lexicon_pairs() -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = []

    def add(words, category: LexicalCategory):
        for w in words:
            pairs.append((w, category.value))

    add(PEOPLE + ANIMALS + THINGS + PLACES + PLURALS, LexicalCategory.NOUN)
    add(ADJECTIVES, LexicalCategory.ADJECTIVE)
    add(DETERMINERS, LexicalCategory.DETERMINER)
    add(PREPOSITIONS, LexicalCategory.PREPOSITION)
    add(["is", "are"], LexicalCategory.AUXILIARY)
    add(STRUCTURED_VERBS + PLURAL_VERBS, LexicalCategory.TRANSITIVE_VERB)
    add([f"is_{v}" for v in ING_TRANSITIVE], LexicalCategory.TRANSITIVE_VERB)
    add([f"is_{v}" for v in ING_INTRANSITIVE], LexicalCategory.INTRANSITIVE_VERB)
    add([f"are_{v}" for v in ING_INTRANSITIVE], LexicalCategory.INTRANSITIVE_VERB)
    return sorted(set(pairs))


def build_lexicon() -> Lexicon:
    return Lexicon.from_pairs(build_lexicon_pairs())


def _cap(words: list[str]) -> str:
    s = " ".join(words)
    return s[0].upper() + s[1:]


# Subject/object pools per structured verb; the first number is how many of
# the ten entries use the possessive object construction.
_STRUCTURED_POOLS: dict[str, tuple[int, list[str], list[str]]] = {
    "holds": (6, PEOPLE, ["hand", "bag", "book", "toy", "flag"]),
    "chases": (0, ANIMALS, ANIMALS),
    "carries": (0, ["horse", "mother", "father", "man", "farmer", "boy"], ["baby", "bag", "box", "girl", "child", "drum"]),
    "pushes": (0, ["boy", "girl", "man", "farmer", "player", "woman"], ["cart", "box", "ball", "drum", "stick", "kite"]),
    "pulls": (0, ["goat", "horse", "dog", "farmer", "boy", "cow"], ["cart", "rope", "stick", "box", "kite", "flag"]),
    "follows": (0, ["dog", "cat", "duck", "goat", "child", "girl"], ["boy", "farmer", "teacher", "mother", "horse", "man"]),
    "feeds": (0, ["girl", "boy", "farmer", "nurse", "mother", "child"], ["duck", "rabbit", "goat", "cow", "bird", "horse"]),
    "hugs": (0, ["mother", "father", "girl", "boy", "nurse", "teacher"], ["child", "baby", "bear", "dog", "cat", "rabbit"]),
    "lifts": (0, ["father", "man", "player", "farmer", "woman", "boy"], ["baby", "box", "drum", "bag", "child", "cart"]),
    "touches": (3, ["child", "girl", "boy", "nurse", "woman", "teacher"], ["rabbit", "horse", "cat", "drum", "flag", "toy"]),
    "watches": (0, ["cat", "dog", "bird", "child", "man", "teacher"], ["bird", "duck", "monkey", "player", "horse", "rabbit"]),
    "kicks": (0, ["player", "boy", "girl", "man", "horse", "cow"], ["ball", "box", "stick", "cart", "drum", "bag"]),
    "kisses": (3, ["mother", "father", "girl", "woman", "boy", "nurse"], ["baby", "child", "cat", "dog", "rabbit", "horse"]),
}


def build_structured_corpus(lexicon: Lexicon | None = None) -> list[StructuredEntry]:
    """The 130-entry swapped-caption corpus: 13 verbs x 10 entries."""
    lexicon = lexicon or build_lexicon()
    rng = np.random.default_rng(SEED)
    entries: list[StructuredEntry] = []
    for verb in STRUCTURED_VERBS:
        n_poss, subjects, objects = _STRUCTURED_POOLS[verb]
        sentences: list[str] = []
        if verb == "holds":
            # Anchor caption for the possessive construction.
            sentences.append("A child holds the mother's hand")

        guard = 0
        while len(sentences) < 10:
            guard += 1
            assert guard < 1000, f"pool too small for {verb}"
            subject = str(rng.choice(subjects))
            if len(sentences) < n_poss:
                possessor = str(rng.choice([p for p in PEOPLE if p != subject]))
                possessed = str(rng.choice(_STRUCTURED_POOLS["holds"][2]))
                det_s, det_o = rng.choice([["a", "the"], ["the", "a"], ["the", "the"]])
                words = [det_s, subject, verb, det_o, possessor + "'s", possessed]
            else:
                obj = str(rng.choice([o for o in objects if o != subject]))
                det_s, det_o = rng.choice([["the", "the"], ["a", "the"], ["the", "a"]])
                words = [det_s, subject, verb, det_o, obj]
                if len(sentences) % 3 == 2:
                    adj = str(rng.choice(ADJECTIVES))
                    slot = 1 if len(sentences) % 2 else 4
                    words = words[:slot] + [adj] + words[slot:]
            sentence = _cap(words)
            if sentence in sentences:
                continue
            sentences.append(sentence)

        for i, pos in enumerate(sentences):
            neg = swap_subject_object(pos, lexicon)
            entries.append(StructuredEntry(pos, neg, f"img_{verb}_{i:02d}"))
    return entries


def build_structured_sample(lexicon: Lexicon | None = None) -> list[StructuredEntry]:
    """Desk-scale 20-entry sample: bare plural captions over a small vocabulary."""
    lexicon = lexicon or build_lexicon()
    nouns = ["dogs", "cats", "birds", "horses", "boys", "girls", "cows", "monkeys"]
    entries = []
    i = 0
    for verb in ["chase", "follow", "watch", "push", "pull"]:
        for _ in range(4):
            subject = nouns[i % len(nouns)]
            obj = nouns[(i + 1 + i // len(nouns)) % len(nouns)]
            if subject == obj:
                obj = nouns[(i + 2) % len(nouns)]
            pos = _cap([subject, verb, obj])
            entries.append(StructuredEntry(pos, swap_subject_object(pos, lexicon), f"img_d{i:02d}"))
            i += 1
    return entries


def build_unstructured_corpus(lexicon: Lexicon | None = None) -> list[UnstructuredEntry]:
    """The 350-entry caption/image-pair corpus."""
    lexicon = lexicon or build_lexicon()
    rng = np.random.default_rng(SEED + 1)
    sentences: list[tuple[str, str]] = [  # (sentence, verb tag)
        ("A dog is sitting on the road", "sitting"),
        ("Dogs chase cats", "chase"),
    ]
    seen = {s for s, _ in sentences}

    def push(words: list[str], tag: str) -> None:
        sentence = _cap(words)
        if sentence not in seen:
            seen.add(sentence)
            sentences.append((sentence, tag))

    singulars = ANIMALS + ["man", "woman", "boy", "girl", "child", "baby"]
    while len(sentences) < 172:
        v = str(rng.choice(ING_INTRANSITIVE))
        subject = str(rng.choice(singulars))
        place = str(rng.choice(PLACES))
        prep = str(rng.choice(PREPOSITIONS))
        det = str(rng.choice(DETERMINERS))
        push([det, subject, f"is_{v}", prep, "the", place], v)
    while len(sentences) < 262:
        v = str(rng.choice(ING_TRANSITIVE))
        subject = str(rng.choice(["man", "woman", "boy", "girl", "farmer", "nurse"]))
        obj = str(rng.choice([n for n in ANIMALS + THINGS if n != subject]))
        det_s, det_o = rng.choice([["a", "a"], ["the", "a"], ["a", "the"]])
        push([det_s, subject, f"is_{v}", det_o, obj], v)
    while len(sentences) < 322:
        v = str(rng.choice(PLURAL_VERBS))
        subject = str(rng.choice(PLURALS))
        obj = str(rng.choice([n for n in PLURALS if n != subject]))
        push([subject, v, obj], v)
    while len(sentences) < 350:
        v = str(rng.choice(STRUCTURED_VERBS))
        subject = str(rng.choice(["boy", "girl", "man", "player", "farmer", "teacher"]))
        obj = str(rng.choice([n for n in THINGS if n != subject]))
        place = str(rng.choice(PLACES))
        push(["the", subject, v, "a", obj, "in", "the", place], v)

    all_tags = ING_INTRANSITIVE + ING_TRANSITIVE + PLURAL_VERBS + STRUCTURED_VERBS
    entries = []
    for i, (sentence, tag) in enumerate(sentences):
        alt = str(rng.choice([t for t in all_tags if t != tag]))
        entries.append(
            UnstructuredEntry(sentence, f"img_u{i:04d}_{tag}", f"img_u{i:04d}_{alt}")
        )
    return entries


def build_unstructured_sample(lexicon: Lexicon | None = None) -> list[UnstructuredEntry]:
    """Desk-scale 20-entry sample of short captions."""
    corpus = build_unstructured_corpus(lexicon)
    short = [e for e in corpus if len(e.sentence.split()) <= 4]
    rest = [e for e in corpus if len(e.sentence.split()) > 4]
    return (short + rest)[:20]


def write_all(outdir: str | Path) -> None:
    """Regenerate every shipped data file under `outdir`."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    lexicon = build_lexicon()

    lines = ["# word<TAB>category"]
    lines += [f"{w}\t{c}" for w, c in build_lexicon_pairs()]
    (outdir / "lexicon.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    def dump(entries, name: str) -> None:
        with open(outdir / name, "w", encoding="utf-8") as fh:
            for e in entries:
                fh.write(json.dumps(dataclasses.asdict(e), sort_keys=True) + "\n")

    dump(build_structured_corpus(lexicon), "structured.jsonl")
    dump(build_unstructured_corpus(lexicon), "unstructured.jsonl")
    dump(build_structured_sample(lexicon), "structured_sample.jsonl")
    dump(build_unstructured_sample(lexicon), "unstructured_sample.jsonl")


if __name__ == "__main__":
    write_all(Path(__file__).parent / "datasets")
