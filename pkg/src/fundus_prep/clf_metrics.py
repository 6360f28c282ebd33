"""Binary screening metrics over the five severity grades.

Grade 0 is the negative (disease-free) class; grades 1-4 are positive. The
2x2 matrix uses a swapped cell convention relative to textbook usage:

    fn = actual negative, predicted positive
    fp = actual positive, predicted negative

accuracy/sensitivity/specificity below consume these cells as named, which is
what the reference reports this tool reproduces expect. ``relabeled()`` gives
the conventional labeling for interop.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LABELS
from .errors import ManifestError

POSITIVE = "positive"
NEGATIVE = "negative"


def binarize(label: int) -> str:
    """Grade 0 -> negative, grades 1-4 -> positive."""
    if label not in LABELS:
        raise ValueError(f"label {label} outside 0-4")
    return NEGATIVE if label == 0 else POSITIVE


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def relabeled(self) -> dict:
        """Counts under the conventional fp/fn meaning (cells swapped)."""
        return {"tp": self.tp, "tn": self.tn, "fp": self.fn, "fn": self.fp}


@dataclass(frozen=True)
class MulticlassMatrix:
    """5x5 counts, rows = actual grade, columns = predicted grade."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (5, 5) or (arr < 0).any():
            raise ValueError("multiclass matrix must be 5x5 nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def binary(self) -> ConfusionMatrix:
        c = self.counts
        return ConfusionMatrix(
            tp=int(c[1:, 1:].sum()),
            tn=int(c[0, 0]),
            fn=int(c[0, 1:].sum()),
            fp=int(c[1:, 0].sum()),
        )


def confusion(actual, predicted) -> tuple[ConfusionMatrix, MulticlassMatrix]:
    """Count binary and 5x5 matrices from parallel grade lists."""
    if len(actual) != len(predicted):
        raise ValueError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    grid = np.zeros((5, 5), dtype=np.int64)
    for a, p in zip(actual, predicted):
        if a not in LABELS or p not in LABELS:
            raise ValueError(f"label pair ({a}, {p}) outside 0-4")
        grid[a, p] += 1
    multiclass = MulticlassMatrix(grid)
    return multiclass.binary(), multiclass


@dataclass(frozen=True)
class ScreeningMetrics:
    """The three ratios; sensitivity/specificity are None when undefined."""

    accuracy: float
    sensitivity: float | None
    specificity: float | None

    def as_percentages(self) -> dict:
        def pct(v):
            return None if v is None else round(v * 100.0, 2)

        return {
            "accuracy_pct": pct(self.accuracy),
            "sensitivity_pct": pct(self.sensitivity),
            "specificity_pct": pct(self.specificity),
        }


def metrics(cm: ConfusionMatrix) -> ScreeningMetrics:
    """accuracy = (tp+tn)/total, sensitivity = tp/(tp+fn),
    specificity = tn/(tn+fp), with the cell convention documented above."""
    if cm.total == 0:
        raise ValueError("cannot compute metrics for an empty matrix")
    accuracy = (cm.tp + cm.tn) / cm.total
    sensitivity = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    specificity = cm.tn / (cm.tn + cm.fp) if cm.tn + cm.fp > 0 else None
    return ScreeningMetrics(accuracy, sensitivity, specificity)


def read_predictions(path) -> tuple[list[str], list[int], list[int]]:
    """Read a predictions CSV with header ``id,actual,predicted``."""
    path = Path(path)
    ids, actual, predicted = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "actual", "predicted"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ManifestError(f"{path}: header must contain {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                a = int(row["actual"])
                p = int(row["predicted"])
            except (TypeError, ValueError, KeyError):
                raise ManifestError(f"{path}: row {lineno}: labels must be integers")
            if a not in LABELS or p not in LABELS:
                raise ManifestError(f"{path}: row {lineno}: labels outside 0-4")
            ids.append(row["id"])
            actual.append(a)
            predicted.append(p)
    if not ids:
        raise ManifestError(f"{path}: no prediction rows")
    return ids, actual, predicted
