"""Train/validation/test assignment under the four shift protocols.

``no_shift`` splits the pooled rows uniformly (stratified by label).
``cross_table`` holds out whole tables, ``cross_generator`` holds out
generators, and ``full_shift`` applies both constraints at once, dropping
every synthetic row whose (table, generator) membership straddles the two
sides.  Plans are pure functions of (rows, spec) and serialize to JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import SplitError
from .ingestion import REAL_ORIGIN, RowRecord

PROTOCOLS = ("no_shift", "cross_generator", "cross_table", "full_shift")

DROP_TABLE_ONLY = "table in test holdout but generator is not"
DROP_GENERATOR_ONLY = "generator in test holdout but table is not"


@dataclass(frozen=True)
class SplitSpec:
    protocol: str
    test_tables: frozenset[str] = frozenset()
    test_generators: frozenset[str] = frozenset()
    val_fraction: float = 0.1
    test_fraction: float = 0.2
    seed: int = 0
    real_split_mode: str = "table_level"

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise SplitError(f"unknown protocol {self.protocol!r}")
        if not (0.0 < self.val_fraction <= 0.5):
            raise SplitError(f"val_fraction must be in (0, 0.5], got {self.val_fraction}")
        if not (0.0 < self.test_fraction < 1.0):
            raise SplitError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.real_split_mode not in ("table_level", "row_level"):
            raise SplitError(f"unknown real_split_mode {self.real_split_mode!r}")
        if self.protocol in ("cross_table", "full_shift") and not self.test_tables:
            raise SplitError(f"{self.protocol} requires a nonempty test_tables set")
        if self.protocol in ("cross_generator", "full_shift") and not self.test_generators:
            raise SplitError(f"{self.protocol} requires a nonempty test_generators set")


@dataclass(frozen=True)
class SplitPlan:
    protocol: str
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    dropped: dict[int, str] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "protocol": self.protocol,
                "train": self.train.tolist(),
                "val": self.val.tolist(),
                "test": self.test.tolist(),
                "dropped": [[i, self.dropped[i]] for i in sorted(self.dropped)],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "SplitPlan":
        data = json.loads(text)
        return cls(
            protocol=data["protocol"],
            train=np.asarray(data["train"], dtype=np.int64),
            val=np.asarray(data["val"], dtype=np.int64),
            test=np.asarray(data["test"], dtype=np.int64),
            dropped={int(i): reason for i, reason in data["dropped"]},
        )

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "SplitPlan":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class SplitReport:
    ok: bool
    violations: tuple[str, ...]
    counts: dict


def table_names(records: list[RowRecord]) -> list[str]:
    return sorted({r.dataset_name for r in records})


def generator_names(records: list[RowRecord]) -> list[str]:
    return sorted({r.origin for r in records if r.origin != REAL_ORIGIN})


def _labels(records, indices) -> set[int]:
    return {records[int(i)].binary_label for i in indices}


def _require_both_labels(records, indices, side: str) -> None:
    got = _labels(records, indices)
    if got != {0, 1}:
        raise SplitError(f"{side} side does not contain both labels (has {sorted(got)})")


def _sorted_array(indices) -> np.ndarray:
    return np.asarray(sorted(int(i) for i in indices), dtype=np.int64)


def _stratified_carve(records, indices, fraction, rng) -> tuple[list[int], list[int]]:
    """Split indices into (kept, carved) stratified by binary label."""
    kept: list[int] = []
    carved: list[int] = []
    by_label: dict[int, list[int]] = {0: [], 1: []}
    for i in indices:
        by_label[records[int(i)].binary_label].append(int(i))
    for label in (0, 1):
        idx = np.asarray(by_label[label], dtype=np.int64)
        if idx.size == 0:
            continue
        perm = rng.permutation(idx.size)
        n_carved = int(round(fraction * idx.size))
        carved.extend(idx[perm[:n_carved]])
        kept.extend(idx[perm[n_carved:]])
    return kept, carved


def split_no_shift(records: list[RowRecord], spec: SplitSpec) -> SplitPlan:
    """Uniform random split stratified by label; nothing is dropped."""
    rng = np.random.default_rng(spec.seed)
    all_idx = list(range(len(records)))
    _require_both_labels(records, all_idx, "input")
    rest, test = _stratified_carve(records, all_idx, spec.test_fraction, rng)
    val_frac_of_rest = spec.val_fraction / (1.0 - spec.test_fraction)
    train, val = _stratified_carve(records, rest, val_frac_of_rest, rng)
    plan = SplitPlan(
        "no_shift", _sorted_array(train), _sorted_array(val), _sorted_array(test)
    )
    _require_both_labels(records, plan.train, "train")
    _require_both_labels(records, plan.test, "test")
    return plan


def _check_holdout(holdout: frozenset[str], observed: list[str], what: str) -> None:
    unknown = holdout - set(observed)
    if unknown:
        raise SplitError(f"unknown {what} in holdout: {sorted(unknown)}")
    if set(observed) <= holdout:
        raise SplitError(f"test {what} holdout {sorted(holdout)} leaves no training {what}")


def _carve_val_by_table(records, train_side, rng) -> tuple[list[int], list[int]]:
    """Reserve one train-side table for validation (table-disjoint val set).

    Falls back to a stratified row carve when fewer than two tables are
    available on the training side.
    """
    tables = sorted({records[int(i)].dataset_name for i in train_side})
    if len(tables) < 2:
        return _stratified_carve(records, train_side, 0.1, rng)
    val_table = tables[int(rng.integers(len(tables)))]
    train = [i for i in train_side if records[int(i)].dataset_name != val_table]
    val = [i for i in train_side if records[int(i)].dataset_name == val_table]
    return train, val


def split_group_holdout(
    records: list[RowRecord], group_key: str, spec: SplitSpec
) -> SplitPlan:
    """Single-criterion holdout: ``table`` or ``generator``; nothing dropped.

    Cross-table sends every row (real and synthetic) of the held-out tables
    to test.  Cross-generator sends the held-out generators' synthetic rows
    to test; real rows follow ``real_split_mode`` (whole tables by default,
    so the test side keeps real rows to score against).
    """
    if group_key not in ("table", "generator"):
        raise SplitError(f"group_key must be 'table' or 'generator', got {group_key!r}")
    rng = np.random.default_rng(spec.seed)

    if group_key == "table":
        observed = table_names(records)
        if len(observed) < 2:
            raise SplitError("cross_table needs at least two distinct tables")
        _check_holdout(spec.test_tables, observed, "tables")
        test = [
            i for i, r in enumerate(records) if r.dataset_name in spec.test_tables
        ]
        train_side = [
            i for i, r in enumerate(records) if r.dataset_name not in spec.test_tables
        ]
        train, val = _carve_val_by_table(records, train_side, rng)
        protocol = "cross_table"
    else:
        observed = generator_names(records)
        if len(observed) < 2:
            raise SplitError("cross_generator needs at least two distinct generators")
        _check_holdout(spec.test_generators, observed, "generators")
        test = [i for i, r in enumerate(records) if r.origin in spec.test_generators]
        train_side = [
            i
            for i, r in enumerate(records)
            if r.origin != REAL_ORIGIN and r.origin not in spec.test_generators
        ]
        real_idx = [i for i, r in enumerate(records) if r.origin == REAL_ORIGIN]
        if spec.real_split_mode == "table_level":
            real_tables = sorted({records[i].dataset_name for i in real_idx})
            n_test_tables = max(1, int(round(spec.test_fraction * len(real_tables))))
            if n_test_tables >= len(real_tables):
                raise SplitError(
                    "real table holdout would exhaust all real tables; "
                    "lower test_fraction or add tables"
                )
            picked = rng.choice(len(real_tables), size=n_test_tables, replace=False)
            test_real_tables = {real_tables[int(p)] for p in picked}
            for i in real_idx:
                if records[i].dataset_name in test_real_tables:
                    test.append(i)
                else:
                    train_side.append(i)
        else:
            kept, carved = _stratified_carve(records, real_idx, spec.test_fraction, rng)
            test.extend(carved)
            train_side.extend(kept)
        train, val = _stratified_carve(records, train_side, spec.val_fraction, rng)
        protocol = "cross_generator"

    plan = SplitPlan(
        protocol, _sorted_array(train), _sorted_array(val), _sorted_array(test)
    )
    _require_both_labels(records, plan.train, "train")
    _require_both_labels(records, plan.test, "test")
    return plan


def split_full_shift(records: list[RowRecord], spec: SplitSpec) -> SplitPlan:
    """Hold out tables and generators at once, dropping conflicted rows.

    A synthetic row lands in test when both its table and its generator are
    held out, in train when neither is, and is dropped when exactly one is.
    Real rows follow their table.
    """
    _check_holdout(spec.test_tables, table_names(records), "tables")
    _check_holdout(spec.test_generators, generator_names(records), "generators")
    rng = np.random.default_rng(spec.seed)

    train_side: list[int] = []
    test: list[int] = []
    dropped: dict[int, str] = {}
    for i, r in enumerate(records):
        table_out = r.dataset_name in spec.test_tables
        if r.origin == REAL_ORIGIN:
            (test if table_out else train_side).append(i)
            continue
        gen_out = r.origin in spec.test_generators
        if table_out and gen_out:
            test.append(i)
        elif table_out:
            dropped[i] = DROP_TABLE_ONLY
        elif gen_out:
            dropped[i] = DROP_GENERATOR_ONLY
        else:
            train_side.append(i)

    if not train_side or not test:
        raise SplitError("full shift left an empty train or test side after dropping")
    train, val = _carve_val_by_table(records, train_side, rng)
    plan = SplitPlan(
        "full_shift",
        _sorted_array(train),
        _sorted_array(val),
        _sorted_array(test),
        dropped,
    )
    _require_both_labels(records, plan.train, "train")
    _require_both_labels(records, plan.test, "test")
    return plan


def split_rows(records: list[RowRecord], spec: SplitSpec) -> SplitPlan:
    if spec.protocol == "no_shift":
        return split_no_shift(records, spec)
    if spec.protocol == "cross_table":
        return split_group_holdout(records, "table", spec)
    if spec.protocol == "cross_generator":
        return split_group_holdout(records, "generator", spec)
    return split_full_shift(records, spec)


def _side_counts(records, indices) -> dict:
    tables = sorted({records[int(i)].dataset_name for i in indices})
    generators = sorted(
        {records[int(i)].origin for i in indices if records[int(i)].origin != REAL_ORIGIN}
    )
    labels = [records[int(i)].binary_label for i in indices]
    return {
        "n": len(labels),
        "n_real": int(labels.count(0)),
        "n_synthetic": int(labels.count(1)),
        "tables": tables,
        "generators": generators,
    }


def validate_plan(plan: SplitPlan, records: list[RowRecord], spec: SplitSpec) -> SplitReport:
    """Re-derive the group sets per side and check every protocol constraint."""
    violations: list[str] = []
    train, val, test = set(plan.train.tolist()), set(plan.val.tolist()), set(plan.test.tolist())
    dropped = set(plan.dropped)

    sides = [("train", train), ("val", val), ("test", test), ("dropped", dropped)]
    for i, (name_a, a) in enumerate(sides):
        for name_b, b in sides[i + 1 :]:
            overlap = a & b
            if overlap:
                violations.append(
                    f"{name_a}/{name_b} overlap on {len(overlap)} rows "
                    f"(e.g. index {min(overlap)})"
                )
    union = train | val | test | dropped
    if union != set(range(len(records))):
        violations.append(
            f"partition covers {len(union)} of {len(records)} rows"
        )

    for side_name, side in (("train", train), ("test", test)):
        got = _labels(records, side)
        if got != {0, 1}:
            violations.append(f"{side_name} side has labels {sorted(got)}")

    train_side = train | val
    if spec.protocol in ("cross_table", "full_shift"):
        shared = {records[i].dataset_name for i in train_side} & {
            records[i].dataset_name for i in test
        }
        for name in sorted(shared):
            violations.append(f"table {name!r} appears on both sides")
    if spec.protocol in ("cross_generator", "full_shift"):
        train_gens = {
            records[i].origin for i in train_side if records[i].origin != REAL_ORIGIN
        }
        test_gens = {
            records[i].origin for i in test if records[i].origin != REAL_ORIGIN
        }
        for name in sorted(train_gens & test_gens):
            violations.append(f"generator {name!r} appears on both sides")

    if spec.protocol == "full_shift":
        expected_drops = {
            i
            for i, r in enumerate(records)
            if r.origin != REAL_ORIGIN
            and (r.dataset_name in spec.test_tables) != (r.origin in spec.test_generators)
        }
        if dropped != expected_drops:
            extra = sorted(dropped - expected_drops)[:3]
            missing = sorted(expected_drops - dropped)[:3]
            violations.append(
                f"drop set mismatch: unexpected {extra}, missing {missing}"
            )
    elif dropped:
        violations.append(f"{spec.protocol} must not drop rows, dropped {len(dropped)}")

    counts = {
        "train": _side_counts(records, train),
        "val": _side_counts(records, val),
        "test": _side_counts(records, test),
        "dropped": len(dropped),
    }
    return SplitReport(ok=not violations, violations=tuple(violations), counts=counts)


def group_kfold_specs(
    records: list[RowRecord], group_key: str, base: SplitSpec
) -> list[SplitSpec]:
    """Leave-one-group-out enumeration over tables or generators."""
    if group_key == "table":
        groups = table_names(records)
        return [
            replace(base, protocol="cross_table", test_tables=frozenset({g}))
            for g in groups
        ]
    if group_key == "generator":
        groups = generator_names(records)
        return [
            replace(base, protocol="cross_generator", test_generators=frozenset({g}))
            for g in groups
        ]
    raise SplitError(f"group_key must be 'table' or 'generator', got {group_key!r}")
