"""Dataset schemas, loaders, the swapped-sentence builder, and feature tables.

Datasets are JSON-lines files.  An unstructured entry pairs a caption with a
positive and a negative image id; a structured entry pairs an image id with a
caption and its subject/object swap.  Images themselves are never shipped,
only ids plus a feature file (or a seeded synthetic table).
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateSwap,
    DimMismatch,
    DuplicateEntry,
    MissingFeatures,
    MultiqError,
    ParseError,
    SchemaError,
)
from .grammar import Lexicon, NounPhrase, parse_sentence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnstructuredEntry:
    sentence: str
    pos_image: str
    neg_image: str


@dataclass(frozen=True)
class StructuredEntry:
    pos_sentence: str
    neg_sentence: str
    image: str


def _render(words: list[str]) -> str:
    sentence = " ".join(words)
    return sentence[0].upper() + sentence[1:]


def swap_subject_object(sentence: str, lexicon: Lexicon) -> str:
    """Exchange the subject and object participants of a transitive caption.

    Whole noun phrases move (determiners and adjectives travel with their
    noun).  When the object is a possessive construction ("the mother's
    hand"), the participant is the possessor: "A child holds the mother's
    hand" becomes "The mother holds a child's hand", with the head noun and
    the possessive marker staying in place.  The output re-parses to the
    sentence type; the first word is re-capitalized.
    """
    try:
        parse = parse_sentence(sentence, lexicon)
    except MultiqError as exc:
        raise ParseError(sentence, exc) from exc
    frame = parse.frame
    if frame.obj is None:
        raise ParseError(sentence, ValueError("no object to swap with"))
    tokens = parse.word_tokens

    def possessive_mod(np_: NounPhrase) -> int | None:
        poss = [i for i in np_.mods if tokens[i].possessive]
        return poss[0] if poss else None

    def np_words(np_: NounPhrase, drop_possessive: bool = False) -> list[str]:
        idx = ([] if np_.det is None else [np_.det]) + list(np_.mods) + [np_.head]
        out = []
        for i in idx:
            out.append(tokens[i].text if drop_possessive else tokens[i].surface())
        return out

    subj, obj = frame.subject, frame.obj
    obj_poss = possessive_mod(obj)

    if obj_poss is not None:
        # Participants: the subject phrase and the possessor (with the
        # object's determiner).  The possessed head stays put.
        a_words = np_words(subj)
        a_head = tokens[subj.head].text
        b_det = [] if obj.det is None else [tokens[obj.det].text]
        b_head = tokens[obj_poss].text
        if a_head == b_head:
            raise DegenerateSwap(f"subject and possessor are both {a_head!r}")
        new_subject = b_det + [b_head]
        new_object = [w for w in a_words[:-1]] + [a_head + "'s", tokens[obj.head].text]
    else:
        a_head, b_head = tokens[subj.head].text, tokens[obj.head].text
        if a_head == b_head:
            raise DegenerateSwap(f"subject and object are both {a_head!r}")
        new_subject = np_words(obj)
        new_object = np_words(subj)

    words = new_subject + [tokens[frame.verb].text] + new_object
    if frame.prep is not None:
        words.append(tokens[frame.prep].text)
        words.extend(np_words(frame.prep_obj))
    swapped = _render(words)
    try:
        parse_sentence(swapped, lexicon)
    except MultiqError as exc:  # pragma: no cover - guards generator bugs
        raise ParseError(swapped, exc) from exc
    return swapped


def _require(obj: dict, key: str, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise SchemaError(lineno, f"missing or empty field {key!r}")
    return value


def load_dataset(path: str | Path, task: str, lexicon: Lexicon):
    """Load and validate a JSONL dataset for `task` in {unstructured, structured}.

    Every sentence must parse, image ids must be consistent, duplicates are
    rejected, and structured entries must satisfy
    ``neg_sentence == swap_subject_object(pos_sentence)``.
    """
    if task not in ("unstructured", "structured"):
        raise ValueError(f"unknown task {task!r}")
    entries = []
    seen = set()
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise SchemaError(lineno, f"invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise SchemaError(lineno, "entry must be a JSON object")

        if task == "unstructured":
            entry = UnstructuredEntry(
                sentence=_require(obj, "sentence", lineno),
                pos_image=_require(obj, "pos_image", lineno),
                neg_image=_require(obj, "neg_image", lineno),
            )
            if entry.pos_image == entry.neg_image:
                raise SchemaError(lineno, "pos_image equals neg_image")
            sentences = [entry.sentence]
        else:
            entry = StructuredEntry(
                pos_sentence=_require(obj, "pos_sentence", lineno),
                neg_sentence=_require(obj, "neg_sentence", lineno),
                image=_require(obj, "image", lineno),
            )
            sentences = [entry.pos_sentence, entry.neg_sentence]

        for sentence in sentences:
            try:
                parse_sentence(sentence, lexicon)
            except MultiqError as exc:
                raise ParseError(sentence, exc) from exc
        if task == "structured":
            expected = swap_subject_object(entry.pos_sentence, lexicon)
            if expected != entry.neg_sentence:
                raise SchemaError(
                    lineno,
                    f"neg_sentence {entry.neg_sentence!r} is not the swap {expected!r}",
                )
        if entry in seen:
            raise DuplicateEntry(f"line {lineno}: duplicate entry {entry}")
        seen.add(entry)
        entries.append(entry)
    log.info("loaded %d %s entries from %s", len(entries), task, path)
    return entries


def image_ids(entries) -> list[str]:
    ids: list[str] = []
    for e in entries:
        new = (e.pos_image, e.neg_image) if isinstance(e, UnstructuredEntry) else (e.image,)
        ids.extend(i for i in new if i not in ids)
    return ids


class FeatureTable:
    """Per-image feature vectors plus the per-dimension standardization.

    Angles for circuit encoding are pi * tanh(z) of the standardized value; a
    dimension with zero variance maps to angle 0 for every image.
    """

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.dim = dim
        self.vectors = {k: np.asarray(v, dtype=float) for k, v in vectors.items()}
        for k, v in self.vectors.items():
            if v.shape != (dim,):
                raise DimMismatch(f"vector for {k!r} has shape {v.shape}, expected ({dim},)")
        if self.vectors:
            stacked = np.stack(list(self.vectors.values()))
            self.mean = stacked.mean(axis=0)
            self.std = stacked.std(axis=0)
        else:
            self.mean = np.zeros(dim)
            self.std = np.zeros(dim)

    def __contains__(self, image_id: str) -> bool:
        return image_id in self.vectors

    def __len__(self) -> int:
        return len(self.vectors)

    def angles(self, image_id: str) -> np.ndarray:
        if image_id not in self.vectors:
            raise MissingFeatures(image_id)
        safe_std = np.where(self.std > 0, self.std, 1.0)
        z = (self.vectors[image_id] - self.mean) / safe_std
        return np.where(self.std > 0, np.pi * np.tanh(z), 0.0)


def synthetic_features(ids, dim: int = 20, seed: int = 0) -> FeatureTable:
    """Deterministic pseudo-random features keyed by (seed, image id).

    Each value is a uniform draw in [-1, 1) read off sha256(seed|id|block), so
    the table is reproducible across platforms and independent of insertion
    order.
    """
    vectors = {}
    for image_id in ids:
        values: list[float] = []
        block = 0
        while len(values) < dim:
            digest = hashlib.sha256(f"{seed}|{image_id}|{block}".encode()).digest()
            for off in range(0, 32, 8):
                u = int.from_bytes(digest[off : off + 8], "big") / 2**64
                values.append(2.0 * u - 1.0)
            block += 1
        vectors[image_id] = np.array(values[:dim])
    return FeatureTable(vectors, dim)


def load_features(path: str | Path, expected_dim: int) -> FeatureTable:
    """Read a ``image_id,f0,...,f{dim-1}`` CSV into a standardized table."""
    vectors = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(rows, None)
        if header is None or header[0] != "image_id" or len(header) != expected_dim + 1:
            raise DimMismatch(
                f"{path}: header must be image_id,f0,...,f{expected_dim - 1}"
            )
        for lineno, row in enumerate(rows, 2):
            if not row:
                continue
            if len(row) != expected_dim + 1:
                raise DimMismatch(f"{path} row {lineno}: expected {expected_dim} values, got {len(row) - 1}")
            try:
                vectors[row[0]] = np.array([float(x) for x in row[1:]])
            except ValueError as exc:
                raise DimMismatch(f"{path} row {lineno}: {exc}") from None
    log.info("loaded %d feature vectors from %s", len(vectors), path)
    return FeatureTable(vectors, expected_dim)


def write_features(table: FeatureTable, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id"] + [f"f{i}" for i in range(table.dim)])
        for image_id in sorted(table.vectors):
            writer.writerow([image_id] + [repr(float(x)) for x in table.vectors[image_id]])


def dataset_path(name: str) -> Path:
    """Path of a data file shipped with the package."""
    return Path(__file__).parent / "datasets" / name
