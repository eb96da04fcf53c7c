"""YAML experiment configs: dataset manifest, setups, model/training knobs.

Validation errors name the offending field path, e.g.
``setups[1].split.protocol: unknown protocol 'foo'``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .ingestion import REAL_ORIGIN
from .splits import PROTOCOLS, SplitSpec

_TRAIN_KEYS = {
    "epochs",
    "batch_size",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "dtype",
    "n_quantiles",
}
_MODEL_KEYS = {
    "trigram_logreg": _TRAIN_KEYS | {"l2", "n_buckets"},
    "text_transformer": _TRAIN_KEYS | {"d_model", "layers", "heads", "ff", "dropout", "max_len"},
    "table_transformer": _TRAIN_KEYS
    | {"d_model", "layers", "heads", "ff", "dropout", "max_cardinality"},
}
_SPLIT_KEYS = {
    "protocol",
    "test_tables",
    "test_generators",
    "val_fraction",
    "test_fraction",
    "seed",
    "real_split_mode",
}


@dataclass(frozen=True)
class TableEntry:
    name: str
    path: Path
    origin: str
    schema: dict[str, str] | None = None


@dataclass(frozen=True)
class SetupSpec:
    name: str
    split: SplitSpec
    generators: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int
    output_dir: Path
    manifest: tuple[TableEntry, ...]
    models: tuple[str, ...]
    setups: tuple[SetupSpec, ...]
    train: dict
    digest: str


def config_digest(raw: dict) -> str:
    return hashlib.sha256(
        json.dumps(raw, sort_keys=True, default=str).encode("utf-8")
    ).hexdigest()


def _require(raw: dict, key: str, where: str):
    if key not in raw:
        raise ConfigError(f"{where}.{key}: missing required field")
    return raw[key]


def _parse_split(raw: dict, where: str, default_seed: int) -> SplitSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = set(raw) - _SPLIT_KEYS
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown field")
    protocol = _require(raw, "protocol", where)
    if protocol not in PROTOCOLS:
        raise ConfigError(f"{where}.protocol: unknown protocol {protocol!r}")
    try:
        return SplitSpec(
            protocol=protocol,
            test_tables=frozenset(raw.get("test_tables", ())),
            test_generators=frozenset(raw.get("test_generators", ())),
            val_fraction=float(raw.get("val_fraction", 0.1)),
            test_fraction=float(raw.get("test_fraction", 0.2)),
            seed=int(raw.get("seed", default_seed)),
            real_split_mode=raw.get("real_split_mode", "table_level"),
        )
    except Exception as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_manifest(raw, base_dir: Path) -> tuple[TableEntry, ...]:
    tables = _require(raw, "tables", "manifest")
    if not isinstance(tables, list) or not tables:
        raise ConfigError("manifest.tables: expected a nonempty list")
    entries = []
    for i, item in enumerate(tables):
        where = f"manifest.tables[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: expected a mapping")
        name = _require(item, "name", where)
        path = base_dir / str(_require(item, "path", where))
        if not path.exists():
            raise ConfigError(f"{where}.path: file not found: {path}")
        origin = item.get("origin", REAL_ORIGIN)
        schema = item.get("schema")
        if schema is not None and not isinstance(schema, dict):
            raise ConfigError(f"{where}.schema: expected a mapping of column -> kind")
        entries.append(TableEntry(str(name), path, str(origin), schema))
    return tuple(entries)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    base_dir = path.parent

    seed = int(raw.get("seed", 0))
    output_dir = base_dir / str(_require(raw, "output_dir", "config"))
    manifest = _parse_manifest(_require(raw, "manifest", "config"), base_dir)

    models = _require(raw, "models", "config")
    if not isinstance(models, list) or not models:
        raise ConfigError("models: expected a nonempty list")
    for m in models:
        if m not in _MODEL_KEYS:
            raise ConfigError(f"models: unknown model kind {m!r}")

    raw_setups = _require(raw, "setups", "config")
    if not isinstance(raw_setups, list) or not raw_setups:
        raise ConfigError("setups: expected a nonempty list")
    known_generators = {e.origin for e in manifest if e.origin != REAL_ORIGIN}
    setups = []
    for i, item in enumerate(raw_setups):
        where = f"setups[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where}: expected a mapping")
        name = str(_require(item, "name", where))
        split = _parse_split(_require(item, "split", where), f"{where}.split", seed)
        generators = item.get("generators")
        if generators is not None:
            generators = tuple(str(g) for g in generators)
            missing = set(generators) - known_generators
            if missing:
                raise ConfigError(
                    f"{where}.generators: not in manifest: {sorted(missing)}"
                )
        bad_gens = split.test_generators - known_generators
        if bad_gens:
            raise ConfigError(
                f"{where}.split.test_generators: not in manifest: {sorted(bad_gens)}"
            )
        setups.append(SetupSpec(name, split, generators))
    names = [s.name for s in setups]
    if len(set(names)) != len(names):
        raise ConfigError("setups: names must be unique")

    train = raw.get("train", {})
    if not isinstance(train, dict):
        raise ConfigError("train: expected a mapping")
    for key in train:
        if key in _TRAIN_KEYS or key in _MODEL_KEYS:
            continue
        raise ConfigError(f"train.{key}: unknown field")
    for kind, allowed in _MODEL_KEYS.items():
        sub = train.get(kind, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"train.{kind}: expected a mapping")
        unknown = set(sub) - allowed
        if unknown:
            raise ConfigError(f"train.{kind}.{sorted(unknown)[0]}: unknown field")

    return ExperimentConfig(
        seed=seed,
        output_dir=output_dir,
        manifest=manifest,
        models=tuple(models),
        setups=tuple(setups),
        train=train,
        digest=config_digest(raw),
    )
