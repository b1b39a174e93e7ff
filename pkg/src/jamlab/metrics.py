"""Confusion matrix, accuracy and F1."""

from __future__ import annotations

import warnings
from typing import Iterable, Sequence

import numpy as np

from .synthesis import CLASSES, Family


class ZeroSupportWarning(UserWarning):
    pass


def confusion(labels: Sequence[int], predictions: Sequence[int], n_classes: int) -> np.ndarray:
    """Rows are ground truth, columns are predictions."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    predictions = np.asarray(predictions, dtype=np.int64).ravel()
    if labels.shape != predictions.shape:
        raise ValueError(f"{labels.size} labels vs {predictions.size} predictions")
    if labels.size and (min(labels.min(), predictions.min()) < 0 or max(labels.max(), predictions.max()) >= n_classes):
        raise ValueError(f"class index outside [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, predictions), 1)
    return cm


def overall_accuracy(cm: np.ndarray) -> float:
    total = int(cm.sum())
    if total == 0:
        raise ValueError("no samples")
    return float(np.trace(cm)) / total


def precision_recall(cm: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cm = np.asarray(cm, dtype=float)
    tp = np.diag(cm)
    predicted = cm.sum(axis=0)
    support = cm.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = np.where(predicted > 0, tp / predicted, 0.0)
        r = np.where(support > 0, tp / support, 0.0)
    return p, r


def f1_per_class(cm: np.ndarray) -> np.ndarray:
    """Per-class F1; classes without support score 0 and raise a ZeroSupportWarning."""
    p, r = precision_recall(cm)
    support = np.asarray(cm).sum(axis=1)
    missing = np.flatnonzero(support == 0)
    if missing.size:
        warnings.warn(f"classes {missing.tolist()} have no support; F1 set to 0", ZeroSupportWarning, stacklevel=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(p + r > 0, 2 * p * r / (p + r), 0.0)
    f1[missing] = 0.0
    return f1


def macro_f1(cm: np.ndarray, classes: Iterable[int] | None = None) -> float:
    f1 = f1_per_class(cm)
    idx = list(range(len(f1))) if classes is None else list(classes)
    if not idx:
        raise ValueError("empty class subset")
    return float(np.mean(f1[idx]))


def family_groups(class_ids: Sequence[int] | None = None) -> dict[str, list[int]]:
    """Map family name to the class indices present, in the given index space.

    With ``class_ids`` (global ids of a subset, in model output order), indices are positions in that list.
    """
    ids = list(range(len(CLASSES))) if class_ids is None else list(class_ids)
    groups: dict[str, list[int]] = {f.value: [] for f in Family}
    for pos, cid in enumerate(ids):
        groups[CLASSES[cid].family.value].append(pos)
    return {k: v for k, v in groups.items() if v}
