"""Headers and a validator for every CSV the pipeline emits."""

from __future__ import annotations

import csv

from .data import CSV_HEADER as DATASET_HEADER
from .learner import LEARNING_CSV_HEADER
from .rollout import ROLLOUT_CSV_HEADER
from .valuation import VALUE_CSV_HEADER

DIVERGENCE_CSV_HEADER = ["step", "divergence"]
LEARNING_CURVE_CSV_HEADER = ["epoch", "train_loss", "val_loss"]

SCHEMAS = {
    "dataset": DATASET_HEADER,
    "rollout": ROLLOUT_CSV_HEADER,
    "divergence": DIVERGENCE_CSV_HEADER,
    "learning_curve": LEARNING_CURVE_CSV_HEADER,
    "values": VALUE_CSV_HEADER,
    "learning_run": LEARNING_CSV_HEADER,
}


class SchemaError(ValueError):
    pass


def validate_csv(path, kind: str) -> int:
    """Check header and per-row field count; returns the number of data rows."""
    header = SCHEMAS[kind]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if got != header:
            raise SchemaError(f"{path}: header {got} != expected {header}")
        n = 0
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: {len(row)} fields, expected {len(header)}")
            n += 1
    return n
