"""tabdet: table-agnostic synthetic tabular data detection baselines."""

from .ingestion import (
    CATEGORICAL,
    NUMERICAL,
    REAL_ORIGIN,
    ColumnSchema,
    RowRecord,
    TableDataset,
    load_table,
    pool_rows,
    schema_index,
    toy_corrupt,
)
from .metrics import EvalResult, accuracy, evaluate_scores, roc_auc
from .splits import SplitPlan, SplitSpec, group_kfold_specs, split_rows, validate_plan
from .table_encoding import (
    EncodedRow,
    encode_row,
    fit_dataset_encoders,
    fit_ordinal,
    fit_quantile,
)
from .text_encoding import (
    CharVocab,
    LinearizedRow,
    TrigramBag,
    build_char_vocab,
    extract_trigrams,
    linearize_row,
    tokenize_chars,
)

__version__ = "0.1.0"

__all__ = [
    "CATEGORICAL",
    "CharVocab",
    "ColumnSchema",
    "EncodedRow",
    "EvalResult",
    "LinearizedRow",
    "NUMERICAL",
    "REAL_ORIGIN",
    "RowRecord",
    "SplitPlan",
    "SplitSpec",
    "TableDataset",
    "TrigramBag",
    "accuracy",
    "build_char_vocab",
    "encode_row",
    "evaluate_scores",
    "extract_trigrams",
    "fit_dataset_encoders",
    "fit_ordinal",
    "fit_quantile",
    "group_kfold_specs",
    "linearize_row",
    "load_table",
    "pool_rows",
    "roc_auc",
    "schema_index",
    "split_rows",
    "tokenize_chars",
    "toy_corrupt",
    "validate_plan",
]
