"""F1-weighted fusion of per-model multi-hot outputs.

Each model contributes its nx5 multi-hot matrix; per post and class the
combined score is the fine-F1-weighted mean of the model bits, a bit is
set when its score reaches 0.5, and the cascade rule then restores the
non-hostile XOR hostile-labels consistency per row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .errors import InputError

ZERO_F1_SUBSTITUTE = 1e-6


@dataclass(frozen=True)
class ModelOutputs:
    """One model's multi-hot predictions; every row is a valid label vector.

    strict=False admits raw thresholded bits that skip the per-row
    invariant (for pipelines run with the cascade disabled).
    """

    model_id: str
    bits: np.ndarray  # (n, 5) int
    strict: bool = True

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int64)
        if bits.ndim != 2 or bits.shape[1] != 5:
            raise InputError(f"model {self.model_id!r}: expected an nx5 matrix, got {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise InputError(f"model {self.model_id!r}: outputs must be 0/1")
        if self.strict:
            hostile = bits[:, 1:].sum(axis=1)
            ok = ((bits[:, 0] == 1) & (hostile == 0)) | ((bits[:, 0] == 0) & (hostile > 0))
            if not np.all(ok):
                bad = int(np.nonzero(~ok)[0][0])
                raise InputError(f"model {self.model_id!r}: row {bad} violates the label-vector invariant")
        object.__setattr__(self, "bits", bits)


@dataclass(frozen=True)
class EnsembleWeights:
    """One positive fine-grained validation F1 per model."""

    ff1: tuple[float, ...]

    def __post_init__(self):
        if len(self.ff1) < 1:
            raise InputError("need at least one model weight")
        if any(w <= 0 for w in self.ff1) or sum(self.ff1) <= 0:
            raise InputError("ensemble weights must be positive")


@dataclass(frozen=True)
class EnsembleResult:
    scores: np.ndarray  # (n, 5) in [0, 1]
    bits: np.ndarray  # (n, 5) multi-hot, cascade-consistent


def fine_weight(pred4: np.ndarray, gold4: np.ndarray) -> float:
    """A model's ensemble weight: its fine weighted F1 on validation.

    An exact zero is replaced with a tiny positive weight so the model
    stays in the ensemble without influencing it.
    """
    value = metrics.fine_weighted_f1(pred4, gold4)
    return value if value > 0.0 else ZERO_F1_SUBSTITUTE


def enforce_cascade(bits, scores) -> tuple[int, int, int, int, int]:
    """Resolve one row to a valid non-hostile XOR hostile-labels vector.

    Conflicting rows keep the side with the larger score (ties go
    non-hostile); all-zero rows take the single highest-scoring class
    (ties go to the lowest class index).
    """
    bits = tuple(int(b) for b in bits)
    scores = tuple(float(s) for s in scores)
    if len(bits) != 5 or len(scores) != 5:
        raise InputError("cascade expects 5 bits and 5 scores")
    hostile_any = any(bits[1:])
    if bits[0] == 1 and not hostile_any:
        return bits
    if bits[0] == 0 and hostile_any:
        return bits
    if bits[0] == 1 and hostile_any:
        if scores[0] >= max(scores[1:]):
            return (1, 0, 0, 0, 0)
        return (0,) + bits[1:]
    # all bits zero: pick the single best-scoring class
    winner = 0
    for c in range(1, 5):
        if scores[c] > scores[winner]:
            winner = c
    out = [0, 0, 0, 0, 0]
    out[winner] = 1
    return tuple(out)


def combine(outputs: list[ModelOutputs], weights: EnsembleWeights, cascade: bool = True) -> EnsembleResult:
    """Weighted-mean scores, >= 0.5 threshold, then per-row cascade.

    Scores accumulate in model order so results are reproducible to the
    bit; scaling every weight by a common factor leaves them unchanged.
    """
    if len(outputs) != len(weights.ff1):
        raise InputError(f"{len(outputs)} model outputs but {len(weights.ff1)} weights")
    n = outputs[0].bits.shape[0]
    for out in outputs:
        if out.bits.shape[0] != n:
            raise InputError(f"model {out.model_id!r} has {out.bits.shape[0]} rows, expected {n}")
    numerator = np.zeros((n, 5))
    denominator = 0.0
    for out, w in zip(outputs, weights.ff1):
        numerator += out.bits * w
        denominator += w
    scores = numerator / denominator
    bits = (scores >= 0.5).astype(np.int64)
    if cascade:
        bits = np.array([enforce_cascade(bits[j], scores[j]) for j in range(n)], dtype=np.int64)
    return EnsembleResult(scores=scores, bits=bits)
