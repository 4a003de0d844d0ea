"""Precision / recall / F1 and support-weighted F1 evaluation.

Coarse evaluation scores the binary hostile vs non-hostile decision (a
post counts as hostile when any hostile bit is set). Fine evaluation
scores each of the four hostile classes one-vs-rest and weights the
per-class F1 by gold support. Zero denominators yield 0 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import HOSTILE_NAMES
from .errors import InputError

FINE_COLUMNS = ("defamation", "fake", "hate", "offensive")  # table order


@dataclass(frozen=True)
class ClassScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    support: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "ClassScore":
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        return cls(tp=tp, fp=fp, fn=fn, precision=precision, recall=recall, f1=f1, support=tp + fn)

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


@dataclass(frozen=True)
class EvalReport:
    coarse: dict  # {"hostile": ClassScore, "non-hostile": ClassScore}
    coarse_weighted_f1: float
    fine: dict  # {"fake": ClassScore, ...}
    fine_weighted_f1: float

    def to_dict(self) -> dict:
        return {
            "coarse": {name: score.to_dict() for name, score in self.coarse.items()},
            "coarse_weighted_f1": self.coarse_weighted_f1,
            "fine": {name: score.to_dict() for name, score in self.fine.items()},
            "fine_weighted_f1": self.fine_weighted_f1,
        }


def binary_class_score(pred, gold) -> ClassScore:
    """Score one binary class from boolean prediction/gold vectors."""
    pred = np.asarray(pred, dtype=bool)
    gold = np.asarray(gold, dtype=bool)
    tp = int(np.sum(pred & gold))
    fp = int(np.sum(pred & ~gold))
    fn = int(np.sum(~pred & gold))
    return ClassScore.from_counts(tp, fp, fn)


def _weighted_f1(scores: list[ClassScore]) -> float:
    total = sum(s.support for s in scores)
    if total == 0:
        return 0.0
    return sum(s.support * s.f1 for s in scores) / total


def coarse_weighted_f1(pred_hostile, gold_hostile) -> float:
    """Support-weighted F1 over the hostile and non-hostile classes."""
    pred_hostile = np.asarray(pred_hostile, dtype=bool)
    gold_hostile = np.asarray(gold_hostile, dtype=bool)
    hostile = binary_class_score(pred_hostile, gold_hostile)
    non_hostile = binary_class_score(~pred_hostile, ~gold_hostile)
    return _weighted_f1([hostile, non_hostile])


def fine_weighted_f1(pred4, gold4) -> float:
    """Support-weighted F1 over the four hostile classes."""
    pred4 = np.asarray(pred4)
    gold4 = np.asarray(gold4)
    if pred4.shape != gold4.shape or pred4.ndim != 2 or pred4.shape[1] != 4:
        raise InputError(f"expected matching nx4 matrices, got {pred4.shape} vs {gold4.shape}")
    scores = [binary_class_score(pred4[:, c], gold4[:, c]) for c in range(4)]
    return _weighted_f1(scores)


def evaluate(pred, gold, fine_hostile_only: bool = False) -> EvalReport:
    """Build the full report from nx5 multi-hot prediction and gold matrices.

    With fine_hostile_only, fine scores are computed over gold-hostile
    posts only; the default scores every post (non-hostile gold rows
    contribute negatives).
    """
    pred = np.asarray(pred, dtype=np.int64)
    gold = np.asarray(gold, dtype=np.int64)
    if pred.shape != gold.shape or pred.ndim != 2 or pred.shape[1] != 5:
        raise InputError(f"expected matching nx5 matrices, got {pred.shape} vs {gold.shape}")
    if pred.shape[0] == 0:
        raise InputError("cannot evaluate zero posts")
    hostile_counts = gold[:, 1:].sum(axis=1)
    valid = ((gold[:, 0] == 1) & (hostile_counts == 0)) | ((gold[:, 0] == 0) & (hostile_counts > 0))
    if not np.all(valid):
        raise InputError("gold rows must satisfy the label-vector invariant")

    pred_hostile = pred[:, 1:].any(axis=1)
    gold_hostile = gold[:, 1:].any(axis=1)
    coarse = {
        "hostile": binary_class_score(pred_hostile, gold_hostile),
        "non-hostile": binary_class_score(~pred_hostile, ~gold_hostile),
    }

    rows = gold_hostile if fine_hostile_only else np.ones(len(gold), dtype=bool)
    fine = {}
    for c, name in enumerate(HOSTILE_NAMES):
        fine[name] = binary_class_score(pred[rows, c + 1], gold[rows, c + 1])

    return EvalReport(
        coarse=coarse,
        coarse_weighted_f1=_weighted_f1(list(coarse.values())),
        fine=fine,
        fine_weighted_f1=_weighted_f1(list(fine.values())),
    )


def report_row(report: EvalReport) -> tuple[float, ...]:
    """Six table values: coarse F1, per-class fine F1, weighted fine F1."""
    return (
        report.coarse_weighted_f1,
        report.fine["defamation"].f1,
        report.fine["fake"].f1,
        report.fine["hate"].f1,
        report.fine["offensive"].f1,
        report.fine_weighted_f1,
    )


_TABLE_COLUMNS = (
    "Coarse F1",
    "Defamation F1",
    "Fake F1",
    "Hate F1",
    "Offensive F1",
    "Weighted Fine F1",
)


def report_table(entries) -> str:
    """Render named results as an aligned text table.

    Each entry is (name, EvalReport) or (name, six floats); values are
    shown with four decimals.
    """
    entries = list(entries)
    if not entries:
        raise InputError("no reports to render")
    rows = []
    for name, value in entries:
        if not name:
            raise InputError("report name must be non-empty")
        values = report_row(value) if isinstance(value, EvalReport) else tuple(value)
        if len(values) != 6:
            raise InputError(f"entry {name!r}: expected 6 values, got {len(values)}")
        rows.append((str(name), [f"{v:.4f}" for v in values]))
    name_width = max(len("Model"), max(len(r[0]) for r in rows))
    widths = [max(len(col), 6) for col in _TABLE_COLUMNS]
    header = "  ".join(["Model".ljust(name_width)] + [c.rjust(w) for c, w in zip(_TABLE_COLUMNS, widths)])
    lines = [header, "-" * len(header)]
    for name, cells in rows:
        lines.append("  ".join([name.ljust(name_width)] + [c.rjust(w) for c, w in zip(cells, widths)]))
    return "\n".join(lines)
