"""The three baseline detectors and their training entry points."""

from .batching import (
    TableBatch,
    bags_to_csr,
    eval_linearize,
    tokenize_batch,
    variable_width_batching,
)
from .table_transformer import TableTransformer, TableTransformerConfig
from .text_transformer import TextTransformer, TextTransformerConfig
from .training import (
    MODEL_KINDS,
    EpochRecord,
    TrainResult,
    TrainSettings,
    train_detector,
)
from .trigram_logreg import TrigramLogReg, TrigramLogRegConfig

__all__ = [
    "MODEL_KINDS",
    "EpochRecord",
    "TableBatch",
    "TableTransformer",
    "TableTransformerConfig",
    "TextTransformer",
    "TextTransformerConfig",
    "TrainResult",
    "TrainSettings",
    "TrigramLogReg",
    "TrigramLogRegConfig",
    "bags_to_csr",
    "eval_linearize",
    "tokenize_batch",
    "train_detector",
    "variable_width_batching",
]
