"""String-diagram IR and the five sentence/image model builders.

A diagram is a DAG of typed boxes.  State boxes (words, image) have no inputs;
cups, spiders and the comparison box consume wires.  Wires carry one atomic
factor each.  Box order is always topological: a wire runs from an earlier box
to a later one, or to the diagram output (destination box index -1).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum

from .errors import NoReduction, ShapeError
from .grammar import IMG, S, AtomicType, Parse, PregroupType

OUTPUT = -1  # wire destination marking a diagram output


class BoxKind(Enum):
    WORD = "WORD"
    CUP = "CUP"
    SPIDER = "SPIDER"
    IMAGE_STATE = "IMAGE_STATE"
    COMPARISON = "COMPARISON"


class ModelKind(Enum):
    CAT = "cat"
    BOW = "bow"
    SEQ = "seq"
    LTREE = "ltree"
    CFG = "cfg"


@dataclass(frozen=True)
class Box:
    kind: BoxKind
    label: str
    dom: PregroupType
    cod: PregroupType


@dataclass(frozen=True)
class Wire:
    src: tuple[int, int]  # (box index, cod port)
    dst: tuple[int, int]  # (box index, dom port) or (OUTPUT, position)
    type: tuple[AtomicType, int]


@dataclass(frozen=True)
class Diagram:
    boxes: tuple[Box, ...]
    wires: tuple[Wire, ...]
    inputs: PregroupType
    outputs: PregroupType

    def to_dict(self) -> dict:
        return {
            "boxes": [
                {
                    "kind": b.kind.value,
                    "label": b.label,
                    "dom": [[a.value, z] for a, z in b.dom.factors],
                    "cod": [[a.value, z] for a, z in b.cod.factors],
                }
                for b in self.boxes
            ],
            "wires": [
                {"src": list(w.src), "dst": list(w.dst), "type": [w.type[0].value, w.type[1]]}
                for w in self.wires
            ],
            "inputs": [[a.value, z] for a, z in self.inputs.factors],
            "outputs": [[a.value, z] for a, z in self.outputs.factors],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class _Builder:
    """Accumulates boxes and wires; tracks open (unconsumed) cod ports."""

    def __init__(self):
        self.boxes: list[Box] = []
        self.wires: list[Wire] = []

    def add(self, box: Box) -> int:
        self.boxes.append(box)
        return len(self.boxes) - 1

    def connect(self, src: tuple[int, int], dst: tuple[int, int], ftype):
        self.wires.append(Wire(src, dst, ftype))

    def finish(self, open_ports: list[tuple[tuple[int, int], tuple[AtomicType, int]]]) -> Diagram:
        out_factors = []
        for pos, (port, ftype) in enumerate(open_ports):
            self.connect(port, (OUTPUT, pos), ftype)
            out_factors.append(ftype)
        return Diagram(
            boxes=tuple(self.boxes),
            wires=tuple(self.wires),
            inputs=PregroupType(),
            outputs=PregroupType(tuple(out_factors)),
        )


def _word_box(label: str, cod: PregroupType) -> Box:
    return Box(BoxKind.WORD, label, PregroupType(), cod)


def _build_cat(parse: Parse) -> Diagram:
    if parse.result != S:
        raise NoReduction(f"parse result is {parse.result}, expected {S}")
    b = _Builder()
    # Flattened factor position -> (box, port) across word boxes in order.
    port_of: list[tuple[int, int]] = []
    ftypes: list[tuple[AtomicType, int]] = []
    for token, wtype in zip(parse.tokens, parse.types):
        idx = b.add(_word_box(token, wtype))
        for port, factor in enumerate(wtype.factors):
            port_of.append((idx, port))
            ftypes.append(factor)

    linked = set()
    for (i, j) in parse.reductions:
        dom = PregroupType((ftypes[i], ftypes[j]))
        cup = b.add(Box(BoxKind.CUP, "", dom, PregroupType()))
        b.connect(port_of[i], (cup, 0), ftypes[i])
        b.connect(port_of[j], (cup, 1), ftypes[j])
        linked.update((i, j))

    open_ports = [(port_of[k], ftypes[k]) for k in range(len(ftypes)) if k not in linked]
    return b.finish(open_ports)


def _spider(b: _Builder, srcs: list[tuple[int, int]]) -> tuple[int, int]:
    """Merge >= 2 same-type wires into one via a spider box; returns its cod port."""
    dom = PregroupType(tuple(S.factors * len(srcs)))
    idx = b.add(Box(BoxKind.SPIDER, "", dom, S))
    for port, src in enumerate(srcs):
        b.connect(src, (idx, port), S.factors[0])
    return (idx, 0)


def _build_bow(parse: Parse) -> Diagram:
    # Order-free by construction: word boxes are laid out in sorted token
    # order, so any permutation of the same tokens builds the same diagram.
    b = _Builder()
    ports = [(b.add(_word_box(t, S)), 0) for t in sorted(parse.tokens)]
    if len(ports) == 1:
        return b.finish([(ports[0], S.factors[0])])
    out = _spider(b, ports)
    return b.finish([(out, S.factors[0])])


def _build_fold(parse: Parse) -> Diagram:
    # Left fold: (((w1 w2) w3) ...), one 2-to-1 merge per step.
    b = _Builder()
    ports = [(b.add(_word_box(t, S)), 0) for t in parse.tokens]
    acc = ports[0]
    for nxt in ports[1:]:
        acc = _spider(b, [acc, nxt])
    return b.finish([(acc, S.factors[0])])


def _build_cfg(parse: Parse) -> Diagram:
    # Merge order follows the fragment tree: noun phrases are folded
    # internally, the verb merges with its object, then the PP, then the
    # subject joins last.
    frame = parse.frame
    if frame is None:
        raise NoReduction("CFG model needs a fragment parse")
    b = _Builder()
    ports = [(b.add(_word_box(t, S)), 0) for t in parse.tokens]

    def fold(indices: list[int]):
        acc = ports[indices[0]]
        for i in indices[1:]:
            acc = _spider(b, [acc, ports[i]])
        return acc

    def np_indices(np_) -> list[int]:
        out = [] if np_.det is None else [np_.det]
        out.extend(np_.mods)
        out.append(np_.head)
        return out

    subject = fold(np_indices(frame.subject))
    vp = ports[frame.verb]
    if frame.obj is not None:
        vp = _spider(b, [vp, fold(np_indices(frame.obj))])
    if frame.prep is not None:
        pp = _spider(b, [ports[frame.prep], fold(np_indices(frame.prep_obj))])
        vp = _spider(b, [vp, pp])
    root = _spider(b, [subject, vp])
    return b.finish([(root, S.factors[0])])


_BUILDERS = {
    ModelKind.CAT: _build_cat,
    ModelKind.BOW: _build_bow,
    ModelKind.SEQ: _build_fold,
    ModelKind.LTREE: _build_fold,
    ModelKind.CFG: _build_cfg,
}


def build_diagram(model: ModelKind, parse: Parse) -> Diagram:
    """Build the sentence diagram for one of the five models.

    CAT realizes the pregroup reduction with cups; the other four give every
    word a sentence-type wire and merge wires with spiders (a single flat one
    for BOW, a left fold for SEQ and LTREE, the fragment tree for CFG).
    """
    if not parse.tokens:
        raise NoReduction("no tokens")
    d = _BUILDERS[model](parse)
    validate(d)
    return d


def attach_comparison(sentence_diagram: Diagram, image_id: str) -> Diagram:
    """Append the image state and the comparison box joining it to the sentence.

    The result has a single sentence-type output whose measurement gives the
    text/image match probability.
    """
    if sentence_diagram.outputs != S:
        raise ShapeError(f"expected a single {S} output, got {sentence_diagram.outputs}")
    for box in sentence_diagram.boxes:
        if box.kind in (BoxKind.IMAGE_STATE, BoxKind.COMPARISON):
            raise ShapeError("diagram already carries an image")

    b = _Builder()
    b.boxes = list(sentence_diagram.boxes)
    s_src = None
    for w in sentence_diagram.wires:
        if w.dst[0] == OUTPUT:
            s_src = w.src
        else:
            b.wires.append(w)

    img_idx = b.add(Box(BoxKind.IMAGE_STATE, image_id, PregroupType(), IMG))
    cmp_idx = b.add(Box(BoxKind.COMPARISON, "", S @ IMG, S))
    b.connect(s_src, (cmp_idx, 0), S.factors[0])
    b.connect((img_idx, 0), (cmp_idx, 1), IMG.factors[0])
    d = b.finish([((cmp_idx, 0), S.factors[0])])
    validate(d)
    return d


def validate(d: Diagram) -> None:
    """Structural type check; raises ShapeError on any violation."""
    in_use: dict[tuple[int, int], tuple[AtomicType, int]] = {}
    out_use: dict[tuple[int, int], tuple[AtomicType, int]] = {}
    n_out = len(d.outputs.factors)
    for w in d.wires:
        sb, sp = w.src
        if not (0 <= sb < len(d.boxes)) or not (0 <= sp < len(d.boxes[sb].cod)):
            raise ShapeError(f"bad wire source {w.src}")
        if d.boxes[sb].cod.factors[sp] != w.type:
            raise ShapeError(f"wire type {w.type} does not match producer port")
        if w.src in out_use:
            raise ShapeError(f"cod port {w.src} used twice")
        out_use[w.src] = w.type
        db, dp = w.dst
        if db == OUTPUT:
            if not (0 <= dp < n_out) or d.outputs.factors[dp] != w.type:
                raise ShapeError(f"bad output wire {w}")
        else:
            if not (0 <= db < len(d.boxes)) or not (0 <= dp < len(d.boxes[db].dom)):
                raise ShapeError(f"bad wire destination {w.dst}")
            if d.boxes[db].dom.factors[dp] != w.type:
                raise ShapeError(f"wire type {w.type} does not match consumer port")
            if sb >= db:
                raise ShapeError(f"wire {w} is not forward-directed")
        if w.dst in in_use:
            raise ShapeError(f"dom port {w.dst} used twice")
        in_use[w.dst] = w.type

    for i, box in enumerate(d.boxes):
        for p in range(len(box.dom)):
            if (i, p) not in in_use:
                raise ShapeError(f"dom port ({i},{p}) of {box.kind.value} unconnected")
        for p in range(len(box.cod)):
            if (i, p) not in out_use:
                raise ShapeError(f"cod port ({i},{p}) of {box.kind.value} unconnected")
        if box.kind is BoxKind.CUP:
            if box.cod.factors or len(box.dom) != 2:
                raise ShapeError("cup must consume exactly two factors")
            (a1, z1), (a2, z2) = box.dom.factors
            if a1 is not a2 or z2 != z1 + 1:
                raise ShapeError(f"cup dom {box.dom} is not an adjoint pair")
        elif box.kind is BoxKind.SPIDER:
            if len(box.dom) < 2 or len(box.cod) != 1:
                raise ShapeError("spider must merge >= 2 wires into 1")
            if any(f != box.cod.factors[0] for f in box.dom.factors):
                raise ShapeError("spider ports must share one type")
        elif box.kind is BoxKind.COMPARISON:
            if box.dom != S @ IMG or box.cod != S:
                raise ShapeError("comparison must take s (x) img to s")
    for pos in range(n_out):
        if (OUTPUT, pos) not in in_use:
            raise ShapeError(f"output {pos} unconnected")


_KIND_ORDER = {k: i for i, k in enumerate(BoxKind)}


def canonical_form(d: Diagram) -> Diagram:
    """Renumber boxes and wires into a canonical order.

    Boxes are ordered by an iteratively refined structural color (kind, label,
    types, then neighborhood), spider inputs are reindexed by their producers,
    and the wire list is sorted.  Diagrams equal up to box/port permutation
    compare bit-identical afterwards; the map is idempotent.
    """
    n = len(d.boxes)
    in_wires: list[list[Wire]] = [[] for _ in range(n)]
    out_wires: list[list[Wire]] = [[] for _ in range(n)]
    for w in d.wires:
        out_wires[w.src[0]].append(w)
        if w.dst[0] != OUTPUT:
            in_wires[w.dst[0]].append(w)

    # Colors are fixed-length digests so refinement rounds stay cheap and
    # totally ordered; the primary sort key below keeps kind/label readable.
    def digest(payload: str) -> str:
        return hashlib.sha256(payload.encode()).hexdigest()

    colors = [
        digest(repr((b.kind.value, b.label, b.dom.factors, b.cod.factors))) for b in d.boxes
    ]
    for _ in range(n):
        nxt = []
        for i, b in enumerate(d.boxes):
            # Spider inputs are symmetric: ignore their port numbers.
            if b.kind is BoxKind.SPIDER:
                inc = tuple(sorted(colors[w.src[0]] for w in in_wires[i]))
            else:
                inc = tuple(sorted((w.dst[1], colors[w.src[0]]) for w in in_wires[i]))
            outg = tuple(
                sorted(
                    (w.src[1], "OUT" if w.dst[0] == OUTPUT else colors[w.dst[0]])
                    for w in out_wires[i]
                )
            )
            nxt.append(digest(repr((colors[i], inc, outg))))
        if nxt == colors:
            break
        colors = nxt

    order = sorted(
        range(n),
        key=lambda i: (_KIND_ORDER[d.boxes[i].kind], d.boxes[i].label, colors[i], i),
    )
    new_id = {old: new for new, old in enumerate(order)}
    boxes = tuple(d.boxes[i] for i in order)

    wires = []
    for w in d.wires:
        src = (new_id[w.src[0]], w.src[1])
        dst = w.dst if w.dst[0] == OUTPUT else (new_id[w.dst[0]], w.dst[1])
        wires.append(Wire(src, dst, w.type))

    # Reassign spider dom ports by producer order so symmetric inputs land
    # deterministically.
    by_dst_box: dict[int, list[Wire]] = {}
    for w in wires:
        if w.dst[0] != OUTPUT and boxes[w.dst[0]].kind is BoxKind.SPIDER:
            by_dst_box.setdefault(w.dst[0], []).append(w)
    remapped = {}
    for bi, ws in by_dst_box.items():
        for port, w in enumerate(sorted(ws, key=lambda w: w.src)):
            remapped[id(w)] = Wire(w.src, (bi, port), w.type)
    wires = [remapped.get(id(w), w) for w in wires]
    wires.sort(key=lambda w: (w.src, w.dst))

    return Diagram(boxes, tuple(wires), d.inputs, d.outputs)
