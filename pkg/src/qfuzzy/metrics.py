"""Binary classification metrics. Label 1 is the positive class; ties at the
threshold predict positive."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError, QFuzzyError

SUMMARY_FIELDS = ("accuracy", "precision", "recall", "f1", "fp_rate", "fn_rate", "fd_rate")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]
    auc: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["fpr", "tpr"])
        writer.writerows((repr(f), repr(t)) for f, t in self.points)
        return buf.getvalue()


def _pair(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise LengthMismatchError(f"{s.shape} scores vs {y.shape} labels")
    if not np.isin(y, (0, 1)).all():
        raise QFuzzyError("labels must be 0 or 1", code="non-binary-labels")
    return s, y.astype(int)


def confusion(scores, labels, threshold: float = 0.5) -> ConfusionCounts:
    s, y = _pair(scores, labels)
    pred = s >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def _ratio(num: float, den: float, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def summary(c: ConfusionCounts) -> dict:
    """The seven headline rates.

    Ratios with a zero denominator are reported as 0 and listed under
    ``"undefined"``.
    """
    if c.total == 0:
        raise QFuzzyError("no samples to summarize", code="empty-counts")
    undefined: list[str] = []
    precision = _ratio(c.tp, c.tp + c.fp, "precision", undefined)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", undefined)
    f1 = _ratio(2 * precision * recall, precision + recall, "f1", undefined)
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "fp_rate": _ratio(c.fp, c.fp + c.tn, "fp_rate", undefined),
        "fn_rate": _ratio(c.fn, c.fn + c.tp, "fn_rate", undefined),
        "fd_rate": _ratio(c.fp, c.fp + c.tp, "fd_rate", undefined),
        "undefined": undefined,
    }


def roc_auc(scores, labels) -> RocCurve:
    """ROC by sweeping thresholds over distinct scores, high to low.

    Samples sharing a score enter together, so ties produce a diagonal
    segment; the area is the trapezoid sum over the resulting points.
    """
    s, y = _pair(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise QFuzzyError("ROC needs both classes present", code="single-class-input")
    order = np.argsort(-s, kind="mergesort")
    s_sorted = s[order]
    y_sorted = y[order]
    # last index of each run of equal scores
    ends = np.r_[np.nonzero(np.diff(s_sorted))[0], len(s_sorted) - 1]
    tps = np.cumsum(y_sorted)[ends]
    fps = (ends + 1) - tps
    tpr = np.r_[0, tps] / n_pos
    fpr = np.r_[0, fps] / n_neg
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(tuple(zip(fpr.tolist(), tpr.tolist())), auc)
