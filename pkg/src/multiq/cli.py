"""Experiment harness: train/evaluate runs, inspection subcommands, reporting.

A run is configured by a JSON document; every field can be overridden by the
command-line flag of the same name.  Results land in the output directory as
``seed-<k>/metrics.csv`` plus one aggregated ``results.json``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .ansatz import QubitMap, compile_diagram
from .corpus import build_lexicon
from .data import (
    dataset_path,
    image_ids,
    load_dataset,
    load_features,
    swap_subject_object,
    synthetic_features,
    write_features,
)
from .diagram import ModelKind, attach_comparison, build_diagram, canonical_form
from .errors import ConfigError, MultiqError
from .grammar import Lexicon, parse_sentence
from .simulator import evaluate, final_state
from .training import CircuitFactory, ParamStore, RunMetrics, SpsaConfig, train_run

log = logging.getLogger(__name__)

TASK_DEFAULTS = {"unstructured": (200, 20), "structured": (120, 7)}


@dataclass
class ExperimentConfig:
    model: str = "cat"
    task: str = "structured"
    data: str = ""
    features: str = ""
    synthetic_seed: int | None = None
    lexicon: str = ""
    epochs: int | None = None
    batch: int | None = None
    a: float = 0.02
    c: float = 0.06
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    out: str = "runs"

    def resolved(self) -> "ExperimentConfig":
        cfg = ExperimentConfig(**asdict(self))
        if cfg.task not in TASK_DEFAULTS:
            raise ConfigError(f"unknown task {cfg.task!r}")
        if cfg.model not in [m.value for m in ModelKind]:
            raise ConfigError(f"unknown model {cfg.model!r}")
        epochs, batch = TASK_DEFAULTS[cfg.task]
        cfg.epochs = epochs if cfg.epochs is None else cfg.epochs
        cfg.batch = batch if cfg.batch is None else cfg.batch
        if cfg.epochs < 0 or cfg.batch < 1:
            raise ConfigError("epochs must be >= 0 and batch >= 1")
        if not cfg.data:
            cfg.data = str(dataset_path(f"{cfg.task}.jsonl"))
        if not cfg.lexicon:
            cfg.lexicon = str(dataset_path("lexicon.tsv"))
        if not cfg.features and cfg.synthetic_seed is None:
            raise ConfigError("provide --features PATH or --synthetic-seed N")
        if not cfg.seeds:
            raise ConfigError("at least one seed required")
        return cfg

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(obj) - {f.name for f in __import__("dataclasses").fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**obj)


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """Train every seed of a configuration and write metrics + results files.

    A failing seed is recorded and the remaining seeds still run.  Returns the
    per-seed result records that go into results.json.
    """
    cfg = cfg.resolved()
    lexicon = Lexicon.from_file(cfg.lexicon)
    entries = load_dataset(cfg.data, cfg.task, lexicon)
    if cfg.synthetic_seed is not None:
        features = synthetic_features(image_ids(entries), dim=QubitMap().feature_dim, seed=cfg.synthetic_seed)
    else:
        features = load_features(cfg.features, expected_dim=QubitMap().feature_dim)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    spsa = SpsaConfig.for_epochs(cfg.epochs, cfg.batch, a=cfg.a, c=cfg.c)
    records = []
    for seed in cfg.seeds:
        try:
            metrics = train_run(entries, lexicon, ModelKind(cfg.model), features, spsa, seed)
            _write_metrics(metrics, out / f"seed-{seed}" / "metrics.csv")
            records.append(
                {
                    "seed": seed,
                    "test_accuracy": metrics.test_accuracy,
                    "best_epoch": metrics.best_epoch,
                    "wall_time_s": round(metrics.wall_time_s, 3),
                }
            )
            log.info("seed %d: test accuracy %.4f", seed, metrics.test_accuracy)
        except MultiqError as exc:
            log.error("seed %d failed: %s", seed, exc)
            records.append({"seed": seed, "error": str(exc)})

    accs = [r["test_accuracy"] for r in records if "test_accuracy" in r]
    config_echo = asdict(cfg)
    # The run id identifies what was computed, not where it was written.
    id_fields = {k: v for k, v in config_echo.items() if k != "out"}
    results = {
        "version": __version__,
        "run_id": hashlib.sha256(json.dumps(id_fields, sort_keys=True).encode()).hexdigest()[:12],
        "config": config_echo,
        "backend": {"probabilities": "exact-statevector", "comparison_block": "trainable"},
        "seeds": records,
        "mean_test_accuracy": float(np.mean(accs)) if accs else None,
        "best_test_accuracy": float(np.max(accs)) if accs else None,
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    (out / "results.json").write_text(json.dumps(results, indent=2) + "\n", encoding="utf-8")
    return records


def _write_metrics(metrics: RunMetrics, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_accuracy"])
        for epoch, (loss, acc) in enumerate(zip(metrics.train_loss, metrics.val_accuracy)):
            writer.writerow([epoch, repr(loss), repr(acc)])


def _fail(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.version_option(__version__)
def main():
    """Compositional text/image matching on simulated quantum circuits."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


def _config_options(fn):
    opts = [
        click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config; flags override its fields."),
        click.option("--model", type=click.Choice([m.value for m in ModelKind]), default=None),
        click.option("--task", type=click.Choice(list(TASK_DEFAULTS)), default=None),
        click.option("--data", type=click.Path(exists=True), default=None, help="JSONL dataset (defaults to the shipped corpus)."),
        click.option("--features", type=click.Path(exists=True), default=None, help="Feature CSV."),
        click.option("--synthetic-seed", type=int, default=None, help="Generate synthetic features with this seed."),
        click.option("--lexicon", type=click.Path(exists=True), default=None),
        click.option("--epochs", type=int, default=None),
        click.option("--batch", type=int, default=None),
        click.option("--a", type=float, default=None, help="SPSA learning-rate gain."),
        click.option("--c", type=float, default=None, help="SPSA perturbation gain."),
        click.option("--seeds", type=str, default=None, help="Comma-separated seed list."),
        click.option("--out", type=click.Path(), default=None),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@main.command()
@_config_options
def train(config_path, **flags):
    """Train one model/task configuration across seeds."""
    try:
        cfg = ExperimentConfig.from_file(config_path) if config_path else ExperimentConfig()
        if flags.get("seeds") is not None:
            flags["seeds"] = [int(s) for s in flags["seeds"].split(",") if s]
        for key, value in flags.items():
            if value is not None:
                setattr(cfg, key, value)
        records = run_experiment(cfg)
    except (MultiqError, OSError, json.JSONDecodeError) as exc:
        _fail(exc)
    failed = [r for r in records if "error" in r]
    for r in records:
        if "error" in r:
            click.echo(f"seed {r['seed']}: FAILED ({r['error']})")
        else:
            click.echo(f"seed {r['seed']}: test accuracy {r['test_accuracy']:.4f}")
    if failed:
        sys.exit(1)


@main.command()
@click.argument("sentence")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
def parse(sentence, lexicon_path):
    """Parse a sentence and print its types and reduction links."""
    try:
        lexicon = Lexicon.from_file(lexicon_path) if lexicon_path else build_lexicon()
        p = parse_sentence(sentence, lexicon)
    except MultiqError as exc:
        _fail(exc)
    click.echo(json.dumps({
        "tokens": list(p.tokens),
        "types": [str(t) for t in p.types],
        "reductions": [list(r) for r in p.reductions],
        "result": str(p.result),
    }, indent=2))


@main.command()
@click.argument("sentence")
@click.option("--model", type=click.Choice([m.value for m in ModelKind]), default="cat")
@click.option("--image", default=None, help="Attach this image id and the comparison box.")
@click.option("--canonical", is_flag=True, help="Dump the canonical form.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--dump-diagrams", "dump_path", type=click.Path(), default=None, help="Write JSON here instead of stdout.")
def diagram(sentence, model, image, canonical, lexicon_path, dump_path):
    """Build a sentence diagram and dump it as JSON."""
    try:
        lexicon = Lexicon.from_file(lexicon_path) if lexicon_path else build_lexicon()
        d = build_diagram(ModelKind(model), parse_sentence(sentence, lexicon))
        if image is not None:
            d = attach_comparison(d, image)
        if canonical:
            d = canonical_form(d)
    except MultiqError as exc:
        _fail(exc)
    text = d.to_json(indent=2)
    if dump_path:
        Path(dump_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command(name="compile")
@click.argument("sentence")
@click.option("--model", type=click.Choice([m.value for m in ModelKind]), default="cat")
@click.option("--image", default=None, help="Attach this image id before compiling.")
@click.option("--synthetic-seed", type=int, default=0, help="Seed for the image feature vector.")
@click.option("--param-seed", type=int, default=0, help="Seed for the trainable parameters.")
@click.option("--eval", "do_eval", is_flag=True, help="Evaluate at the seeded parameters.")
@click.option("--trace-state", is_flag=True, help="With --eval, also dump the final amplitudes.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
@click.option("--dump-circuits", "dump_path", type=click.Path(), default=None, help="Write JSON here instead of stdout.")
def compile_cmd(sentence, model, image, synthetic_seed, param_seed, do_eval, trace_state, lexicon_path, dump_path):
    """Compile a sentence (optionally with an image) into a circuit."""
    try:
        lexicon = Lexicon.from_file(lexicon_path) if lexicon_path else build_lexicon()
        d = build_diagram(ModelKind(model), parse_sentence(sentence, lexicon))
        features = None
        if image is not None:
            d = attach_comparison(d, image)
            features = synthetic_features([image], dim=QubitMap().feature_dim, seed=synthetic_seed)
        store = ParamStore(rng_seed=param_seed)
        circuit = compile_diagram(d, QubitMap(), store, features)
    except MultiqError as exc:
        _fail(exc)
    payload = circuit.to_dict()
    if do_eval:
        result = evaluate(circuit, store.theta)
        payload["eval"] = {
            "p_match": result.p_match,
            "postselect_weight": result.postselect_weight,
            "vanished": result.vanished,
        }
        if trace_state:
            state = final_state(circuit, store.theta)
            payload["eval"]["state"] = [[z.real, z.imag] for z in state]
    text = json.dumps(payload, indent=2)
    if dump_path:
        Path(dump_path).write_text(text + "\n", encoding="utf-8")
    else:
        click.echo(text)


@main.command()
@click.argument("sentence")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
def swap(sentence, lexicon_path):
    """Print the subject/object-swapped form of a caption."""
    try:
        lexicon = Lexicon.from_file(lexicon_path) if lexicon_path else build_lexicon()
        click.echo(swap_subject_object(sentence, lexicon))
    except MultiqError as exc:
        _fail(exc)


@main.group()
def features():
    """Feature-table utilities."""


@features.command(name="gen")
@click.option("--data", "data_path", type=click.Path(exists=True), required=True)
@click.option("--task", type=click.Choice(list(TASK_DEFAULTS)), required=True)
@click.option("--dim", type=int, default=20)
@click.option("--seed", type=int, default=0)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None)
def features_gen(data_path, task, dim, seed, out_path, lexicon_path):
    """Generate a synthetic feature CSV for every image id in a dataset."""
    try:
        lexicon = Lexicon.from_file(lexicon_path) if lexicon_path else build_lexicon()
        entries = load_dataset(data_path, task, lexicon)
        table = synthetic_features(image_ids(entries), dim=dim, seed=seed)
        write_features(table, out_path)
    except MultiqError as exc:
        _fail(exc)
    click.echo(f"wrote {len(table)} vectors to {out_path}")


@main.command()
@click.option("--runs", "runs_dir", type=click.Path(exists=True), required=True, help="Output directory of a train run.")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write the curve CSV here.")
def report(runs_dir, out_path):
    """Aggregate per-seed metrics.csv files into convergence-curve data."""
    runs = sorted(Path(runs_dir).glob("seed-*/metrics.csv"))
    if not runs:
        _fail(FileNotFoundError(f"no seed-*/metrics.csv under {runs_dir}"))
    curves = {}
    for path in runs:
        seed = path.parent.name
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                curves.setdefault(int(row["epoch"]), {})[seed] = float(row["val_accuracy"])
    seeds = sorted({s for row in curves.values() for s in row})
    lines = [",".join(["epoch", "mean_val_accuracy"] + seeds)]
    for epoch in sorted(curves):
        vals = [curves[epoch].get(s) for s in seeds]
        present = [v for v in vals if v is not None]
        cells = [str(epoch), repr(sum(present) / len(present))] + ["" if v is None else repr(v) for v in vals]
        lines.append(",".join(cells))
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
        click.echo(f"wrote {len(curves)} epochs x {len(seeds)} seeds to {out_path}")
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
