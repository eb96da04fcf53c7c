"""Config-driven orchestration: ingest, split, train, evaluate, report.

Artifacts land under the config's output directory:

    <out>/<setup>/plan.json
    <out>/<setup>/<model>/checkpoint.bin + checkpoint.json
    <out>/<setup>/<model>/curves.csv
    <out>/<setup>/<model>/eval.json
    <out>/report.csv, <out>/report.txt

Every command is a pure function of (config, seed): rerunning writes the
same bytes.  A failed run leaves a FAILED marker in its directory.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict
from pathlib import Path

from .config import ExperimentConfig, SetupSpec
from .detectors import TrainSettings, train_detector
from .detectors.table_transformer import TableTransformer, TableTransformerConfig
from .detectors.text_transformer import TextTransformer, TextTransformerConfig
from .detectors.trigram_logreg import TrigramLogReg, TrigramLogRegConfig
from .ingestion import (
    REAL_ORIGIN,
    ColumnSchema,
    RowRecord,
    TableDataset,
    load_table,
    pool_rows,
    schema_index,
)
from .metrics import evaluate_scores
from .splits import SplitPlan, split_rows, validate_plan
from .errors import SplitError

_MODEL_CLASSES = {
    "trigram_logreg": TrigramLogReg,
    "text_transformer": TextTransformer,
    "table_transformer": TableTransformer,
}
_MODEL_CONFIGS = {
    "trigram_logreg": TrigramLogRegConfig,
    "text_transformer": TextTransformerConfig,
    "table_transformer": TableTransformerConfig,
}
_SETTINGS_FIELDS = (
    "epochs",
    "batch_size",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "dtype",
    "n_quantiles",
)


def load_tables(cfg: ExperimentConfig) -> list[TableDataset]:
    tables = []
    for entry in cfg.manifest:
        schema = None
        if entry.schema is not None:
            schema = [ColumnSchema(k, v) for k, v in entry.schema.items()]
        tables.append(
            load_table(entry.path, schema=schema, origin=entry.origin, name=entry.name)
        )
    return tables


def build_pool(tables: list[TableDataset]):
    return pool_rows(tables), schema_index(tables)


def filter_pool(records: list[RowRecord], generators) -> list[RowRecord]:
    """Keep real rows plus synthetic rows from the selected generators."""
    if generators is None:
        return list(records)
    allowed = set(generators)
    return [
        r for r in records if r.origin == REAL_ORIGIN or r.origin in allowed
    ]


def settings_for(cfg: ExperimentConfig, kind: str, seed: int) -> tuple[TrainSettings, object]:
    merged = {k: v for k, v in cfg.train.items() if k in _SETTINGS_FIELDS}
    per_model = cfg.train.get(kind, {})
    merged.update({k: v for k, v in per_model.items() if k in _SETTINGS_FIELDS})
    settings = TrainSettings(seed=seed, **merged)

    cfg_cls = _MODEL_CONFIGS[kind]
    cfg_fields = set(cfg_cls.__dataclass_fields__)
    model_kwargs = {k: v for k, v in per_model.items() if k in cfg_fields}
    return settings, cfg_cls(**model_kwargs)


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_curves(curves, path: Path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "split", "auc"])
    for rec in curves:
        writer.writerow([rec.epoch, "train", f"{rec.train_auc:.6f}"])
        writer.writerow([rec.epoch, "val", f"{rec.val_auc:.6f}"])
    path.write_text(buf.getvalue(), encoding="utf-8")


def run_ingest(cfg: ExperimentConfig) -> Path:
    """Pool all manifest tables and write pooled.jsonl plus a summary."""
    tables = load_tables(cfg)
    records, schemas = build_pool(tables)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    pooled = out / "pooled.jsonl"
    with pooled.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "cells": list(rec.cells),
                        "dataset": rec.dataset_name,
                        "origin": rec.origin,
                        "label": rec.binary_label,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    summary = {
        "n_records": len(records),
        "n_real": sum(1 for r in records if r.binary_label == 0),
        "n_synthetic": sum(1 for r in records if r.binary_label == 1),
        "datasets": {
            name: [{"name": c.name, "kind": c.kind} for c in schema]
            for name, schema in sorted(schemas.items())
        },
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8"
    )
    return pooled


def _setup_plan(cfg: ExperimentConfig, setup: SetupSpec):
    tables = load_tables(cfg)
    records, schemas = build_pool(tables)
    records_f = filter_pool(records, setup.generators)
    plan = split_rows(records_f, setup.split)
    report = validate_plan(plan, records_f, setup.split)
    if not report.ok:
        raise SplitError(
            f"setup {setup.name!r}: invalid plan: " + "; ".join(report.violations)
        )
    return records_f, schemas, plan, report


def run_split(cfg: ExperimentConfig, setup_name: str | None = None) -> list[Path]:
    written = []
    for setup in cfg.setups:
        if setup_name is not None and setup.name != setup_name:
            continue
        _, _, plan, report = _setup_plan(cfg, setup)
        setup_dir = cfg.output_dir / setup.name
        setup_dir.mkdir(parents=True, exist_ok=True)
        plan_path = setup_dir / "plan.json"
        plan.save(plan_path)
        (setup_dir / "split_report.json").write_text(
            json.dumps(
                {"ok": report.ok, "violations": list(report.violations), "counts": report.counts},
                indent=2,
                sort_keys=True,
            ),
            encoding="utf-8",
        )
        written.append(plan_path)
    return written


def run_train(cfg: ExperimentConfig) -> list[Path]:
    """Train every (setup, model) pair; returns the run directories."""
    run_dirs = []
    for setup in cfg.setups:
        records_f, schemas, plan, _ = _setup_plan(cfg, setup)
        setup_dir = cfg.output_dir / setup.name
        setup_dir.mkdir(parents=True, exist_ok=True)
        plan_path = setup_dir / "plan.json"
        plan.save(plan_path)
        plan_hash = _sha256_file(plan_path)
        for kind in cfg.models:
            run_dir = setup_dir / kind
            run_dir.mkdir(parents=True, exist_ok=True)
            failed_marker = run_dir / "FAILED"
            if failed_marker.exists():
                failed_marker.unlink()
            try:
                settings, model_cfg = settings_for(cfg, kind, cfg.seed)
                result = train_detector(
                    kind, records_f, schemas, plan, settings, model_cfg
                )
                result.model.save(
                    run_dir,
                    extra={
                        "setup": setup.name,
                        "plan_file": "../plan.json",
                        "plan_sha256": plan_hash,
                        "config_digest": cfg.digest,
                        "train_settings": asdict(settings),
                        "best_epoch": result.best_epoch,
                        "best_val_auc": round(result.best_val_auc, 6),
                    },
                )
                _write_curves(result.curves, run_dir / "curves.csv")
            except Exception as exc:
                failed_marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
                raise
            run_dirs.append(run_dir)
    return run_dirs


def load_model(run_dir: Path):
    manifest = json.loads((run_dir / "checkpoint.json").read_text(encoding="utf-8"))
    cls = _MODEL_CLASSES[manifest["kind"]]
    return cls.load(run_dir), manifest


def run_evaluate(cfg: ExperimentConfig) -> list[Path]:
    """Score the test split of every trained (setup, model) pair."""
    written = []
    for setup in cfg.setups:
        setup_dir = cfg.output_dir / setup.name
        plan = SplitPlan.load(setup_dir / "plan.json")
        tables = load_tables(cfg)
        records, schemas = build_pool(tables)
        records_f = filter_pool(records, setup.generators)
        labels = [records_f[int(i)].binary_label for i in plan.test]
        for kind in cfg.models:
            run_dir = setup_dir / kind
            model, manifest = load_model(run_dir)
            scores = model.predict_pool(records_f, plan.test, schemas)
            result = evaluate_scores(scores, labels)
            payload = {
                "setup": setup.name,
                "model": kind,
                "auc": round(result.auc, 6),
                "accuracy": round(result.accuracy, 6),
                "n_pos": result.n_pos,
                "n_neg": result.n_neg,
                "threshold": result.threshold,
                "plan_sha256": manifest.get("plan_sha256"),
                "checkpoint_sha256": manifest.get("bin_sha256"),
                "config_digest": cfg.digest,
            }
            path = run_dir / "eval.json"
            path.write_text(
                json.dumps(payload, indent=2, sort_keys=True), encoding="utf-8"
            )
            written.append(path)
    return written


def run_report(out_dir) -> tuple[Path, Path]:
    """Collect eval.json files into report.csv plus an aligned text matrix."""
    out_dir = Path(out_dir)
    rows = []
    for eval_path in sorted(out_dir.glob("*/*/eval.json")):
        rows.append(json.loads(eval_path.read_text(encoding="utf-8")))
    rows.sort(key=lambda r: (r["setup"], r["model"]))

    csv_path = out_dir / "report.csv"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["setup", "model", "auc", "accuracy", "n_test", "plan_sha256", "checkpoint_sha256"]
    )
    for r in rows:
        writer.writerow(
            [
                r["setup"],
                r["model"],
                f"{r['auc']:.6f}",
                f"{r['accuracy']:.6f}",
                r["n_pos"] + r["n_neg"],
                r["plan_sha256"],
                r["checkpoint_sha256"],
            ]
        )
    csv_path.write_text(buf.getvalue(), encoding="utf-8")

    setups = sorted({r["setup"] for r in rows})
    models = sorted({r["model"] for r in rows})
    by_key = {(r["setup"], r["model"]): r for r in rows}
    width = max([len(s) for s in setups] + [10])
    col_w = max([len(m) for m in models] + [18])
    lines = [" " * width + "  " + "  ".join(m.ljust(col_w) for m in models)]
    for s in setups:
        cells = []
        for m in models:
            r = by_key.get((s, m))
            cells.append(
                f"AUC={r['auc']:.3f} Acc={r['accuracy']:.3f}".ljust(col_w)
                if r
                else "-".ljust(col_w)
            )
        lines.append(s.ljust(width) + "  " + "  ".join(cells))
    txt_path = out_dir / "report.txt"
    txt_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return csv_path, txt_path
