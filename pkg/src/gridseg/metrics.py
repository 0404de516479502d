"""Binary segmentation metrics with uncertain-pixel masking.

Ground-truth label -1 marks pixels excluded from every count.  Metrics
whose denominator is empty are reported as None (rendered n/a in tables,
null in JSON), never silently coerced to 0 or 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidParameterError

TABLE_ROWS = ("IoU", "Accuracy", "Recall", "Precision", "F1-score")


@dataclass(frozen=True)
class MetricsReport:
    """Confusion counts plus derived scores for one mask pair or a pool."""

    tp: int
    fp: int
    tn: int
    fn: int
    ignored: int
    iou: float | None
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    aggregation: str = "single"

    @classmethod
    def from_counts(cls, tp: int, fp: int, tn: int, fn: int, ignored: int,
                    aggregation: str = "single") -> "MetricsReport":
        def ratio(num, den):
            return num / den if den else None

        precision = ratio(tp, tp + fp)
        recall = ratio(tp, tp + fn)
        if precision is None or recall is None or precision + recall == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        return cls(
            tp=tp, fp=fp, tn=tn, fn=fn, ignored=ignored,
            iou=ratio(tp, tp + fp + fn),
            accuracy=ratio(tp + tn, tp + fp + tn + fn),
            precision=precision,
            recall=recall,
            f1=f1,
            aggregation=aggregation,
        )

    def to_dict(self) -> dict:
        return {
            "iou": self.iou,
            "accuracy": self.accuracy,
            "recall": self.recall,
            "precision": self.precision,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "tn": self.tn,
            "fn": self.fn,
            "ignored": self.ignored,
            "aggregation": self.aggregation,
        }


def _labels(mask) -> np.ndarray:
    if hasattr(mask, "labels"):
        mask = mask.labels
    return np.asarray(mask)


def score(pred, truth) -> MetricsReport:
    """Score a predicted binary mask against ground truth.

    pred must be strictly 0/1; truth may also contain -1 for uncertain
    pixels, which drop out of all counts.
    """
    p = _labels(pred)
    t = _labels(truth)
    if p.shape != t.shape:
        raise DimensionError(f"prediction shape {p.shape} != truth shape {t.shape}")
    if not np.all((p == 0) | (p == 1)):
        raise InvalidParameterError("prediction labels must be 0 or 1")
    if not np.all((t == 0) | (t == 1) | (t == -1)):
        raise InvalidParameterError("truth labels must be -1, 0 or 1")
    valid = t != -1
    pv = p[valid]
    tv = t[valid]
    tp = int(np.count_nonzero((pv == 1) & (tv == 1)))
    fp = int(np.count_nonzero((pv == 1) & (tv == 0)))
    tn = int(np.count_nonzero((pv == 0) & (tv == 0)))
    fn = int(np.count_nonzero((pv == 0) & (tv == 1)))
    return MetricsReport.from_counts(tp, fp, tn, fn, ignored=int(p.size - pv.size))


def score_batch(pairs) -> tuple[MetricsReport, list[MetricsReport]]:
    """Micro-averaged aggregate over (pred, truth) pairs, plus per-item reports.

    Micro averaging pools the confusion counts before deriving any ratio,
    so items with more valid pixels weigh proportionally more.
    """
    pairs = list(pairs)
    if not pairs:
        raise InvalidParameterError("score_batch needs at least one (pred, truth) pair")
    items = [score(p, t) for p, t in pairs]
    agg = MetricsReport.from_counts(
        tp=sum(r.tp for r in items),
        fp=sum(r.fp for r in items),
        tn=sum(r.tn for r in items),
        fn=sum(r.fn for r in items),
        ignored=sum(r.ignored for r in items),
        aggregation="micro",
    )
    return agg, items


def format_table(report: MetricsReport) -> str:
    """Fixed-width metric table in the conventional row order."""
    values = (report.iou, report.accuracy, report.recall, report.precision, report.f1)
    lines = [f"{'Metric':<12}{'Value':>8}"]
    for name, v in zip(TABLE_ROWS, values):
        lines.append(f"{name:<12}{'n/a' if v is None else format(v, '.3f'):>8}")
    return "\n".join(lines)
