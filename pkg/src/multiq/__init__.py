"""Compositional text/image matching with parameterized quantum circuits."""

__version__ = "0.1.0"

from .ansatz import Circuit, Gate, GateKind, QubitMap, Slot, compile_diagram, parameter_count, sim14_layer
from .data import (
    FeatureTable,
    StructuredEntry,
    UnstructuredEntry,
    load_dataset,
    load_features,
    swap_subject_object,
    synthetic_features,
)
from .diagram import Box, BoxKind, Diagram, ModelKind, attach_comparison, build_diagram, canonical_form
from .grammar import (
    AtomicType,
    LexicalCategory,
    Lexicon,
    LexiconEntry,
    Parse,
    PregroupType,
    parse_sentence,
    reduce,
)
from .simulator import EvalResult, apply_gate, evaluate
from .training import (
    CircuitFactory,
    ParamStore,
    RunMetrics,
    SpsaConfig,
    bce_loss,
    evaluate_accuracy,
    spsa_step,
    train_run,
)
