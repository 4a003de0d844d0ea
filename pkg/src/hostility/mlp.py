"""One-hidden-layer network over post embeddings, trained with AdamW.

Two head kinds share the trunk:

* ``coarse``: 2-logit softmax head for the hostile / non-hostile decision
  (class 0 = non-hostile, class 1 = hostile);
* ``fine``: 4-sigmoid head for the hostile labels, trained with
  binary cross-entropy on logits.

Inverted dropout is applied to the *input* embedding during training.
All math runs in float64 and every randomized step is driven by seeded
generators, so a (seed, config, data) triple reproduces bit-identical
parameters.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .embeddings import AlignedDataset
from .errors import DimensionError, InputError

HEAD_DIMS = {"coarse": 2, "fine": 4}
COARSE_CLASSES = ("non-hostile", "hostile")

CHECKPOINT_FORMAT = "MLP1"
_PARAM_ORDER = ("W1", "b1", "W2", "b2")
_DECAYED = {"W1", "W2"}  # biases are excluded from weight decay


class CheckpointError(InputError):
    """Malformed model checkpoint file."""


@dataclass
class TrainConfig:
    learning_rate: float = 3e-5
    weight_decay: float = 1e-3
    dropout_p: float = 0.2
    epochs: int = 5
    batch_size: int = 32
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InputError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.dropout_p < 1:
            raise InputError(f"dropout_p must lie in [0, 1), got {self.dropout_p}")
        if self.epochs < 0:
            raise InputError(f"epochs must be non-negative, got {self.epochs}")
        if self.batch_size < 1:
            raise InputError(f"batch_size must be positive, got {self.batch_size}")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise InputError("adam betas must lie in (0, 1)")
        if self.weight_decay < 0:
            raise InputError(f"weight_decay must be non-negative, got {self.weight_decay}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class MlpModel:
    head: str
    W1: np.ndarray  # (input_dim, hidden_dim)
    b1: np.ndarray  # (hidden_dim,)
    W2: np.ndarray  # (hidden_dim, out_dim)
    b2: np.ndarray  # (out_dim,)

    def __post_init__(self):
        if self.head not in HEAD_DIMS:
            raise InputError(f"unknown head kind {self.head!r}")
        k = HEAD_DIMS[self.head]
        if self.W2.shape != (self.W1.shape[1], k) or self.b1.shape != (self.W1.shape[1],) or self.b2.shape != (k,):
            raise DimensionError(
                f"inconsistent parameter shapes for head {self.head!r}: "
                f"W1 {self.W1.shape}, b1 {self.b1.shape}, W2 {self.W2.shape}, b2 {self.b2.shape}"
            )
        for name in _PARAM_ORDER:
            if not np.all(np.isfinite(getattr(self, name))):
                raise InputError(f"parameter {name} contains NaN or Inf")

    @property
    def input_dim(self) -> int:
        return self.W1.shape[0]

    @property
    def hidden_dim(self) -> int:
        return self.W1.shape[1]

    @property
    def out_dim(self) -> int:
        return self.W2.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_ORDER}


@dataclass
class OptState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


@dataclass(frozen=True)
class TrainHistory:
    train_loss: tuple[float, ...]
    val_weighted_f1: tuple[float, ...] | None = None


@dataclass(frozen=True)
class Grads:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    def by_name(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in _PARAM_ORDER}


def init_mlp(head: str, seed: int, input_dim: int = 768, hidden_dim: int = 256) -> MlpModel:
    """Glorot-uniform weights, zero biases, from a seeded generator."""
    if head not in HEAD_DIMS:
        raise InputError(f"unknown head kind {head!r}")
    out_dim = HEAD_DIMS[head]
    rng = np.random.default_rng(seed)
    limit1 = np.sqrt(6.0 / (input_dim + hidden_dim))
    limit2 = np.sqrt(6.0 / (hidden_dim + out_dim))
    return MlpModel(
        head=head,
        W1=rng.uniform(-limit1, limit1, size=(input_dim, hidden_dim)),
        b1=np.zeros(hidden_dim),
        W2=rng.uniform(-limit2, limit2, size=(hidden_dim, out_dim)),
        b2=np.zeros(out_dim),
    )


def init_opt_state(model: MlpModel) -> OptState:
    return OptState(
        m={name: np.zeros_like(p) for name, p in model.params().items()},
        v={name: np.zeros_like(p) for name, p in model.params().items()},
    )


def sample_dropout_masks(rng: np.random.Generator, shape, dropout_p: float) -> np.ndarray | None:
    """Inverted-dropout masks: 0 with probability p, else 1/(1-p)."""
    if dropout_p == 0.0:
        return None
    keep = rng.random(shape) >= dropout_p
    return keep / (1.0 - dropout_p)


def _softmax(Z: np.ndarray) -> np.ndarray:
    shifted = Z - Z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _sigmoid(Z: np.ndarray) -> np.ndarray:
    out = np.empty_like(Z, dtype=np.float64)
    pos = Z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-Z[pos]))
    ez = np.exp(Z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_batch(model: MlpModel, X: np.ndarray, masks: np.ndarray | None):
    Xd = X if masks is None else X * masks
    A1 = Xd @ model.W1 + model.b1
    H = np.maximum(A1, 0.0)
    Z = H @ model.W2 + model.b2
    return Xd, A1, H, Z


def forward(
    model: MlpModel,
    x: np.ndarray,
    mode: str = "infer",
    dropout_p: float = 0.0,
    mask_source: np.random.Generator | None = None,
):
    """Single-example pass; returns (hidden, logits).

    In train mode a fresh dropout mask is drawn from mask_source and
    applied to x; infer mode never drops.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_dim,):
        raise DimensionError(f"expected input of shape ({model.input_dim},), got {x.shape}")
    masks = None
    if mode == "train" and dropout_p > 0.0:
        if mask_source is None:
            raise InputError("train-mode forward with dropout needs a mask_source generator")
        masks = sample_dropout_masks(mask_source, (1, x.shape[0]), dropout_p)
    elif mode not in ("train", "infer"):
        raise InputError(f"unknown mode {mode!r}")
    _, _, H, Z = _forward_batch(model, x[None, :], masks)
    return H[0], Z[0]


def _batch_loss_from_logits(Z: np.ndarray, T: np.ndarray, head: str) -> float:
    if head == "coarse":
        shifted = Z - Z.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        return float(-(T * log_probs).sum() / Z.shape[0])
    # stable BCE with logits, averaged over the 4 units and the batch
    per_unit = np.maximum(Z, 0.0) - Z * T + np.log1p(np.exp(-np.abs(Z)))
    return float(per_unit.sum() / (Z.shape[0] * Z.shape[1]))


def loss(logits: np.ndarray, target: np.ndarray, head: str) -> float:
    """Loss of one example: softmax cross-entropy (coarse) or mean
    sigmoid BCE over the four units (fine)."""
    Z = np.asarray(logits, dtype=np.float64)[None, :]
    T = np.asarray(target, dtype=np.float64)[None, :]
    if Z.shape[1] != HEAD_DIMS[head] or T.shape != Z.shape:
        raise DimensionError(f"logits/target shapes {Z.shape[1]}/{T.shape[1]} do not fit head {head!r}")
    return _batch_loss_from_logits(Z, T, head)


def batch_loss(model: MlpModel, X: np.ndarray, T: np.ndarray, head: str, masks: np.ndarray | None = None) -> float:
    """Mean loss over a batch, with dropout masks fixed by the caller."""
    _, _, _, Z = _forward_batch(model, X, masks)
    return _batch_loss_from_logits(Z, T, head)


def _loss_and_grads(model: MlpModel, X: np.ndarray, T: np.ndarray, head: str, masks: np.ndarray | None):
    n = X.shape[0]
    Xd, A1, H, Z = _forward_batch(model, X, masks)
    value = _batch_loss_from_logits(Z, T, head)
    if head == "coarse":
        dZ = (_softmax(Z) - T) / n
    else:
        dZ = (_sigmoid(Z) - T) / (n * Z.shape[1])
    dW2 = H.T @ dZ
    db2 = dZ.sum(axis=0)
    dA1 = (dZ @ model.W2.T) * (A1 > 0)
    dW1 = Xd.T @ dA1
    db1 = dA1.sum(axis=0)
    return value, Grads(W1=dW1, b1=db1, W2=dW2, b2=db2)


def grad(model: MlpModel, X: np.ndarray, T: np.ndarray, head: str, masks: np.ndarray | None = None) -> Grads:
    """Analytic gradient of the mean batch loss w.r.t. every parameter."""
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if X.shape[0] == 0:
        raise InputError("gradient of an empty batch")
    if X.shape[1] != model.input_dim:
        raise DimensionError(f"expected {model.input_dim} input columns, got {X.shape[1]}")
    return _loss_and_grads(model, X, T, head, masks)[1]


def adamw_step(model: MlpModel, grads: Grads, state: OptState, cfg: TrainConfig) -> tuple[MlpModel, OptState]:
    """Decoupled-decay AdamW update; weight decay skips biases."""
    t = state.t + 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    g_by_name = grads.by_name()
    for name, theta in model.params().items():
        g = g_by_name[name]
        m = b1 * state.m[name] + (1 - b1) * g
        v = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        decay = cfg.weight_decay * theta if name in _DECAYED else 0.0
        new_params[name] = theta - cfg.learning_rate * (m_hat / (np.sqrt(v_hat) + cfg.adam_eps) + decay)
        new_m[name] = m
        new_v[name] = v
    return MlpModel(head=model.head, **new_params), OptState(m=new_m, v=new_v, t=t)


def coarse_targets(Y: np.ndarray) -> np.ndarray:
    """nx2 one-hot targets from nx5 multi-hot labels (class 1 = hostile)."""
    hostile = np.asarray(Y)[:, 1:].any(axis=1)
    T = np.zeros((len(hostile), 2))
    T[np.arange(len(hostile)), hostile.astype(int)] = 1.0
    return T


def fine_targets(Y: np.ndarray) -> np.ndarray:
    """nx4 targets: the hostile label bits."""
    return np.asarray(Y, dtype=np.float64)[:, 1:5]


def train_mlp(
    data: AlignedDataset,
    val: AlignedDataset | None,
    head: str,
    cfg: TrainConfig,
    hidden_dim: int = 256,
) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch AdamW training with per-epoch seeded shuffling.

    The fine head expects the training rows to be hostile posts only.
    Identical (data, head, cfg) inputs reproduce bit-identical models.
    """
    n = len(data)
    if n == 0:
        raise InputError("training dataset is empty")
    if head == "fine":
        if np.any(data.Y[:, 1:].sum(axis=1) == 0):
            raise InputError("fine head must be trained on hostile posts only")
        T = fine_targets(data.Y)
    else:
        T = coarse_targets(data.Y)

    model = init_mlp(head, cfg.seed, input_dim=data.X.shape[1], hidden_dim=hidden_dim)
    state = init_opt_state(model)
    rng = np.random.default_rng([cfg.seed, 1])  # training stream, distinct from init

    losses: list[float] = []
    val_f1: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            Xb, Tb = data.X[idx], T[idx]
            masks = sample_dropout_masks(rng, Xb.shape, cfg.dropout_p)
            value, grads = _loss_and_grads(model, Xb, Tb, head, masks)
            model, state = adamw_step(model, grads, state, cfg)
            total += value * len(idx)
        losses.append(total / n)
        if val is not None:
            probs = predict(model, val.X)
            if head == "coarse":
                val_f1.append(
                    metrics.coarse_weighted_f1(probs[:, 1] >= 0.5, val.Y[:, 1:].any(axis=1))
                )
            else:
                val_f1.append(metrics.fine_weighted_f1(probs >= 0.5, val.Y[:, 1:5]))
    history = TrainHistory(
        train_loss=tuple(losses),
        val_weighted_f1=tuple(val_f1) if val is not None else None,
    )
    return model, history


def predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Class probabilities: softmax rows (coarse) or per-unit sigmoid (fine)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionError(f"expected nx{model.input_dim} inputs, got {X.shape}")
    _, _, _, Z = _forward_batch(model, X, None)
    return _softmax(Z) if model.head == "coarse" else _sigmoid(Z)


def extract_finetuned(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Hidden-layer activations (infer mode): the fine-tuned representation."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise DimensionError(f"expected nx{model.input_dim} inputs, got {X.shape}")
    _, _, H, _ = _forward_batch(model, X, None)
    return H


def save_model(model: MlpModel, path, train_config: TrainConfig | None = None) -> None:
    """Checkpoint: one JSON header line, then float32 LE parameter blocks.

    Parameters are stored as binary32, so a freshly trained float64 model
    is rounded once on save; save -> load -> save reproduces the file
    byte-for-byte.
    """
    header = {
        "format": CHECKPOINT_FORMAT,
        "head": model.head,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "out_dim": model.out_dim,
        "train_config": train_config.to_dict() if train_config else None,
        "seed": train_config.seed if train_config else None,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8"))
        fh.write(b"\n")
        for name in _PARAM_ORDER:
            fh.write(getattr(model, name).astype("<f4").tobytes())


def load_model(path) -> tuple[MlpModel, dict]:
    """Inverse of save_model; returns the model and its header metadata."""
    with open(path, "rb") as fh:
        data = fh.read()
    newline = data.find(b"\n")
    if newline < 0:
        raise CheckpointError("missing header line")
    try:
        header = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"bad header: {exc}") from None
    if header.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"unsupported checkpoint format {header.get('format')!r}")
    head = header["head"]
    if head not in HEAD_DIMS:
        raise CheckpointError(f"unknown head kind {head!r}")
    d_in, d_hid, d_out = header["input_dim"], header["hidden_dim"], header["out_dim"]
    shapes = {"W1": (d_in, d_hid), "b1": (d_hid,), "W2": (d_hid, d_out), "b2": (d_out,)}
    offset = newline + 1
    params = {}
    for name in _PARAM_ORDER:
        count = int(np.prod(shapes[name]))
        nbytes = 4 * count
        if offset + nbytes > len(data):
            raise CheckpointError(f"truncated parameter block {name} (at byte {offset})")
        block = np.frombuffer(data, dtype="<f4", count=count, offset=offset)
        params[name] = block.astype(np.float64).reshape(shapes[name])
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes")
    return MlpModel(head=head, **params), header
