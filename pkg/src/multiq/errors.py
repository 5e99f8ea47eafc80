"""Exception types shared across the toolkit."""


class MultiqError(Exception):
    """Base class for all toolkit errors."""


class UnknownToken(MultiqError):
    """A token has no lexicon entry (including unfusable auxiliaries)."""

    def __init__(self, word: str):
        super().__init__(f"unknown token: {word!r}")
        self.word = word


class NoReduction(MultiqError):
    """The type sequence of a sentence does not reduce to the sentence type."""


class LexiconError(MultiqError):
    """Malformed lexicon file."""


class ShapeError(MultiqError):
    """A diagram or circuit does not type-check."""


class ArityError(MultiqError):
    """Wrong number of parameters supplied to an ansatz layer."""


class MissingFeatures(MultiqError):
    """An image state has no feature vector bound."""

    def __init__(self, image_id: str):
        super().__init__(f"no feature vector for image {image_id!r}")
        self.image_id = image_id


class UnboundSlot(MultiqError):
    """A circuit references a parameter slot with no binding."""


class QubitCapExceeded(MultiqError):
    """Circuit exceeds the simulator's qubit cap."""


class SchemaError(MultiqError):
    """A dataset line violates the entry schema."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ParseError(MultiqError):
    """A dataset sentence failed to parse."""

    def __init__(self, sentence: str, cause: Exception | None = None):
        detail = f": {cause}" if cause is not None else ""
        super().__init__(f"cannot parse {sentence!r}{detail}")
        self.sentence = sentence


class DuplicateEntry(MultiqError):
    """The same dataset entry appears twice."""


class DimMismatch(MultiqError):
    """A feature row has the wrong number of values."""


class DegenerateSwap(MultiqError):
    """Subject and object are token-identical; swapping is a no-op."""


class ConfigError(MultiqError):
    """Invalid experiment configuration."""
