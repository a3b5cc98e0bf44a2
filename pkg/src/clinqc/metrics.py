"""Quantitative assessment: TP/TN/BA metrics, k-fold cross validation of the
segment-then-classify stage, and the shuffled-indicator randomized baseline.

The TP and TN rates follow the printed form: both are normalized by
predicted-class counts (a precision-style quantity). The conventional
recall-style normalization by true-class counts is available via
``mode="recall"``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptyDenominator, FoldTooSmall, ValidationError
from .series import ADHERENCE, AdherenceLabels, VIOLATION


@dataclass
class FoldMetrics:
    """Metrics for one evaluation: any rate may be None when undefined."""

    tp: float | None
    tn: float | None
    ba: float | None

    def defined(self) -> bool:
        return self.tp is not None and self.tn is not None


@dataclass
class MetricsReport:
    """Per-fold TP/TN/BA with aggregate mean and standard deviation."""

    folds: list[FoldMetrics]
    strategy: str = "single"

    def _collect(self, attr: str) -> np.ndarray:
        vals = [getattr(f, attr) for f in self.folds]
        if any(v is None for v in vals):
            raise EmptyDenominator(f"{attr} undefined on at least one fold")
        return np.asarray(vals, dtype=float)

    def mean(self, attr: str = "ba") -> float:
        return float(self._collect(attr).mean())

    def std(self, attr: str = "ba") -> float:
        return float(self._collect(attr).std())

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "folds": [{"tp": f.tp, "tn": f.tn, "ba": f.ba} for f in self.folds],
            "mean": {a: (self.mean(a) if self._all_defined(a) else None)
                     for a in ("tp", "tn", "ba")},
            "std": {a: (self.std(a) if self._all_defined(a) else None)
                    for a in ("tp", "tn", "ba")},
        }

    def _all_defined(self, attr: str) -> bool:
        return all(getattr(f, attr) is not None for f in self.folds)


def tp_tn_ba(predicted: np.ndarray, truth: np.ndarray, positive_class=ADHERENCE,
             mode: str = "printed") -> FoldMetrics:
    """TP, TN and balanced accuracy for one prediction run.

    ``mode="printed"`` normalizes by predicted-class counts; ``"recall"``
    by true-class counts. Undefined rates (empty denominator) are reported
    as None, never coerced to 0 or 1.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValidationError("predicted and truth must have equal length")
    if mode not in ("printed", "recall"):
        raise ValidationError("mode must be 'printed' or 'recall'")
    pred_pos = predicted == positive_class
    true_pos = truth == positive_class
    if mode == "printed":
        tp_den = int(pred_pos.sum())
        tn_den = int((~pred_pos).sum())
    else:
        tp_den = int(true_pos.sum())
        tn_den = int((~true_pos).sum())
    tp = float((pred_pos & true_pos).sum() / tp_den) if tp_den else None
    tn = float((~pred_pos & ~true_pos).sum() / tn_den) if tn_den else None
    ba = 0.5 * (tp + tn) if (tp is not None and tn is not None) else None
    return FoldMetrics(tp=tp, tn=tn, ba=ba)


@dataclass
class FoldPlan:
    """Partition of 0..n-1 into folds of contiguous blocks (or shuffled)."""

    n: int
    k: int
    strategy: str = "blocks"
    seed: int = 0
    folds: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError("need at least 2 folds")
        if self.n < self.k:
            raise FoldTooSmall("fewer points than folds")
        if self.strategy not in ("blocks", "shuffled"):
            raise ValidationError("strategy must be 'blocks' or 'shuffled'")
        if not self.folds:
            indices = np.arange(self.n)
            if self.strategy == "shuffled":
                indices = np.random.default_rng(self.seed).permutation(self.n)
            self.folds = [np.sort(part) for part in np.array_split(indices, self.k)]


TrainFn = Callable[[np.ndarray, AdherenceLabels], object]
PredictFn = Callable[[object, np.ndarray], np.ndarray]


def kfold_cv(inputs: np.ndarray, labels: AdherenceLabels, k: int,
             train: TrainFn, predict: PredictFn, seed: int = 0,
             strategy: str = "blocks", positive_class=ADHERENCE,
             mode: str = "printed") -> MetricsReport:
    """Cross-validate a train/predict pair.

    Folds are contiguous time blocks by default, preventing temporal
    leakage between train and test in autocorrelated series.
    """
    inputs = np.asarray(inputs)
    if len(inputs) != len(labels):
        raise ValidationError("inputs and labels must have equal length")
    plan = FoldPlan(n=len(inputs), k=k, strategy=strategy, seed=seed)
    u = labels.labels
    folds = []
    for held_out in plan.folds:
        train_mask = np.ones(plan.n, dtype=bool)
        train_mask[held_out] = False
        train_labels = u[train_mask]
        if len(set(train_labels)) < 2:
            raise FoldTooSmall("a training split lost one of the classes")
        model = train(inputs[train_mask],
                      AdherenceLabels(rate=labels.rate, labels=train_labels))
        predictions = predict(model, inputs[held_out])
        folds.append(tp_tn_ba(predictions, u[held_out],
                              positive_class=positive_class, mode=mode))
    return MetricsReport(folds=folds, strategy=strategy)


def shuffled_baseline(inputs: np.ndarray, labels: AdherenceLabels, k: int,
                      train: TrainFn, predict: PredictFn, seed: int = 0,
                      strategy: str = "blocks", positive_class=ADHERENCE,
                      mode: str = "printed") -> MetricsReport:
    """Randomized control: permute the inputs, keep the labels fixed.

    Destroying the indicator/label association should drive BA to about
    0.5 on balanced data.
    """
    inputs = np.asarray(inputs)
    rng = np.random.default_rng(seed)
    permuted = inputs[rng.permutation(len(inputs))]
    return kfold_cv(permuted, labels, k, train, predict, seed=seed,
                    strategy=strategy, positive_class=positive_class, mode=mode)
