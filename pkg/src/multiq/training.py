"""Trainable parameters, SPSA optimization, and accuracy evaluation.

A run is reproducible bit-for-bit from (seed, config, data): one seeded
generator drives parameter initialization, the train/val/test split, batch
shuffling, and the SPSA perturbation draws, in that order.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import ansatz, simulator
from .data import FeatureTable, StructuredEntry, UnstructuredEntry
from .diagram import ModelKind, attach_comparison, build_diagram
from .grammar import Lexicon, parse_sentence

CLAMP = 1e-7


class ParamStore:
    """Flat trainable vector plus the symbol table mapping words to slot ranges.

    Slots are allocated on first use, in compilation order, and initialized
    uniformly in [0, 2*pi) from the store's own seeded generator, so a fixed
    allocation order yields identical initial vectors across runs.
    """

    def __init__(self, rng_seed: int = 0):
        self.rng_seed = rng_seed
        self.theta = np.zeros(0)
        self.symbols: dict[tuple[str, str], range] = {}
        self.comparison: range | None = None
        self.last_loss = float("nan")
        self._rng = np.random.default_rng(rng_seed)

    def _allocate(self, count: int) -> range:
        start = len(self.theta)
        self.theta = np.concatenate([self.theta, self._rng.uniform(0.0, 2 * math.pi, count)])
        return range(start, start + count)

    def word_slots(self, label: str, type_key: str, count: int) -> range:
        key = (label, type_key)
        if key not in self.symbols:
            self.symbols[key] = self._allocate(count)
        return self.symbols[key]

    def comparison_slots(self, count: int) -> range:
        if self.comparison is None:
            self.comparison = self._allocate(count)
        return self.comparison

    @property
    def dim(self) -> int:
        return len(self.theta)


@dataclass(frozen=True)
class SpsaConfig:
    """Gain schedule for simultaneous-perturbation updates."""

    a: float = 0.02
    c: float = 0.06
    A: float = 0.0
    alpha: float = 0.602
    gamma: float = 0.101
    epochs: int = 120
    batch_size: int = 7

    def __post_init__(self):
        if self.a <= 0 or self.c <= 0 or self.A < 0:
            raise ValueError("gains must satisfy a, c > 0 and A >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    @classmethod
    def for_epochs(cls, epochs: int, batch_size: int, a: float = 0.02, c: float = 0.06) -> "SpsaConfig":
        # Stability offset scales with the run length.
        return cls(a=a, c=c, A=0.001 * epochs, epochs=epochs, batch_size=batch_size)

    def a_k(self, k: int) -> float:
        return self.a / (self.A + k + 1) ** self.alpha

    def c_k(self, k: int) -> float:
        return self.c / (k + 1) ** self.gamma


def bce_loss(p: float, label: int) -> float:
    """Binary cross-entropy with the probability clamped to [1e-7, 1 - 1e-7]."""
    p = min(max(p, CLAMP), 1.0 - CLAMP)
    return -(label * math.log(p) + (1 - label) * math.log(1.0 - p))


def batch_loss(theta: np.ndarray, samples) -> float:
    """Mean BCE over (circuit, label) samples at the given parameter vector."""
    total = 0.0
    for circuit, label in samples:
        total += bce_loss(simulator.evaluate(circuit, theta).p_match, label)
    return total / len(samples)


def spsa_gradient(theta: np.ndarray, k: int, loss_fn, cfg: SpsaConfig, delta: np.ndarray):
    """Two-sided gradient estimate along an explicit Rademacher direction.

    Returns (ghat, probe_loss_average).  delta is +/-1, so the elementwise
    inverse in the estimator equals delta itself.
    """
    ck = cfg.c_k(k)
    loss_plus = loss_fn(theta + ck * delta)
    loss_minus = loss_fn(theta - ck * delta)
    ghat = (loss_plus - loss_minus) / (2.0 * ck) * delta
    return ghat, (loss_plus + loss_minus) / 2.0


def spsa_update(theta: np.ndarray, k: int, loss_fn, cfg: SpsaConfig, rng: np.random.Generator):
    """One simultaneous-perturbation descent step on a generic loss."""
    delta = rng.integers(0, 2, size=len(theta)) * 2.0 - 1.0
    ghat, probe_loss = spsa_gradient(theta, k, loss_fn, cfg, delta)
    return theta - cfg.a_k(k) * ghat, probe_loss


def spsa_step(store: ParamStore, k: int, samples, cfg: SpsaConfig, rng: np.random.Generator) -> ParamStore:
    """One SPSA update of the store's parameters against a batch's mean BCE.

    Mutates and returns the store; the average of the two probe losses is
    recorded on ``store.last_loss``.
    """
    store.theta, store.last_loss = spsa_update(
        store.theta, k, lambda theta: batch_loss(theta, samples), cfg, rng
    )
    return store


class CircuitFactory:
    """Compiles dataset entries into circuits against a shared store.

    Circuits are cached per (sentence, image); the cache is only a speed-up,
    because recompiling against the same store reproduces identical circuits.
    """

    def __init__(
        self,
        lexicon: Lexicon,
        model: ModelKind,
        qmap: ansatz.QubitMap,
        store: ParamStore,
        features: FeatureTable,
    ):
        self.lexicon = lexicon
        self.model = model
        self.qmap = qmap
        self.store = store
        self.features = features
        self._cache: dict[tuple[str, str], ansatz.Circuit] = {}

    def sentence_circuit(self, sentence: str, image_id: str) -> ansatz.Circuit:
        key = (sentence, image_id)
        if key not in self._cache:
            parse = parse_sentence(sentence, self.lexicon)
            d = attach_comparison(build_diagram(self.model, parse), image_id)
            self._cache[key] = ansatz.compile_diagram(d, self.qmap, self.store, self.features)
        return self._cache[key]

    def entry_samples(self, entry) -> list[tuple[ansatz.Circuit, int]]:
        """The two contrastive (circuit, label) samples of one dataset entry."""
        if isinstance(entry, UnstructuredEntry):
            return [
                (self.sentence_circuit(entry.sentence, entry.pos_image), 1),
                (self.sentence_circuit(entry.sentence, entry.neg_image), 0),
            ]
        if isinstance(entry, StructuredEntry):
            return [
                (self.sentence_circuit(entry.pos_sentence, entry.image), 1),
                (self.sentence_circuit(entry.neg_sentence, entry.image), 0),
            ]
        raise TypeError(f"not a dataset entry: {entry!r}")


def evaluate_accuracy(theta: np.ndarray, entry_pairs) -> float:
    """Fraction of entries ranking the positive sample above the negative.

    `entry_pairs` is a list of (positive circuit, negative circuit).  An exact
    probability tie scores one half, so a model that cannot distinguish the
    pair lands exactly at chance level.
    """
    score = 0.0
    for c_pos, c_neg in entry_pairs:
        p_pos = simulator.evaluate(c_pos, theta).p_match
        p_neg = simulator.evaluate(c_neg, theta).p_match
        if p_pos > p_neg:
            score += 1.0
        elif p_pos == p_neg:
            score += 0.5
    return score / len(entry_pairs)


@dataclass
class RunMetrics:
    seed: int
    train_loss: list[float] = field(default_factory=list)  # one value per epoch
    val_accuracy: list[float] = field(default_factory=list)
    test_accuracy: float = 0.0
    best_epoch: int = 0
    wall_time_s: float = 0.0


def split_entries(entries, rng: np.random.Generator, ratios=(0.6, 0.2, 0.2)):
    """Seeded 60/20/20 train/val/test split (re-drawn per seed)."""
    order = rng.permutation(len(entries))
    n_train = int(round(ratios[0] * len(entries)))
    n_val = int(round(ratios[1] * len(entries)))
    pick = lambda idx: [entries[i] for i in idx]
    return (
        pick(order[:n_train]),
        pick(order[n_train : n_train + n_val]),
        pick(order[n_train + n_val :]),
    )


def _pairs(factory: CircuitFactory, entries):
    return [tuple(c for c, _ in factory.entry_samples(e)) for e in entries]


def train_run(
    entries,
    lexicon: Lexicon,
    model: ModelKind,
    features: FeatureTable,
    cfg: SpsaConfig,
    seed: int,
    qmap: ansatz.QubitMap | None = None,
    split: bool = True,
) -> RunMetrics:
    """Train one seed end to end and report per-epoch metrics.

    With ``split=False`` the whole entry list is used for train, val, and test
    alike (desk-scale experiments).  The final test accuracy is measured at
    the parameters of the best validation epoch (ties resolved to the
    earliest); with zero epochs that is the initialization.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    store = ParamStore(rng_seed=seed)
    qmap = qmap or ansatz.QubitMap()

    if split:
        train, val, test = split_entries(entries, rng)
    else:
        train = val = test = list(entries)

    factory = CircuitFactory(lexicon, model, qmap, store, features)
    train_samples = [factory.entry_samples(e) for e in train]
    val_pairs = _pairs(factory, val)
    test_pairs = _pairs(factory, test)

    metrics = RunMetrics(seed=seed)
    best_theta = store.theta.copy()
    best_val = -1.0
    k = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(train_samples))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = []
            for i in order[start : start + cfg.batch_size]:
                batch.extend(train_samples[i])
            spsa_step(store, k, batch, cfg, rng)
            epoch_losses.append(store.last_loss)
            k += 1
        val_acc = evaluate_accuracy(store.theta, val_pairs) if val_pairs else 0.0
        metrics.train_loss.append(float(np.mean(epoch_losses)))
        metrics.val_accuracy.append(val_acc)
        if val_acc > best_val:
            best_val = val_acc
            best_theta = store.theta.copy()
            metrics.best_epoch = epoch

    metrics.test_accuracy = evaluate_accuracy(best_theta, test_pairs) if test_pairs else 0.0
    metrics.wall_time_s = time.perf_counter() - t0
    return metrics
