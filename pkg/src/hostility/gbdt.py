"""Second-order gradient-boosted trees with a logistic objective.

Exact greedy split search: every (feature, midpoint-between-consecutive-
distinct-values) candidate is scored with the Newton gain

    gain = 1/2 * (GL^2/(HL+lambda) + GR^2/(HR+lambda) - G^2/(H+lambda)) - gamma

and a node splits only when the best gain is positive and both children
carry at least ``min_child_hessian`` hessian mass. Ties break toward the
lowest feature index, then the lowest threshold, so results do not depend
on scheduling. Leaf weights -G/(H+lambda) are clamped to [-10, 10] to keep
margins bounded on separable data.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionError, InputError

LEAF_CLAMP = 10.0


@dataclass
class GbdtConfig:
    max_depth: int = 4
    n_rounds: int = 100
    eta: float = 0.3
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_hessian: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise InputError(f"max_depth must be positive, got {self.max_depth}")
        if self.n_rounds < 0:
            raise InputError(f"n_rounds must be non-negative, got {self.n_rounds}")
        if not 0 < self.eta <= 1:
            raise InputError(f"eta must lie in (0, 1], got {self.eta}")
        if self.reg_lambda < 0 or self.gamma < 0 or self.min_child_hessian < 0:
            raise InputError("reg_lambda, gamma, and min_child_hessian must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TreeNode:
    """Internal node (feature, threshold, children; x < threshold goes left)
    or leaf (weight)."""

    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    weight: float | None = None

    @property
    def is_leaf(self) -> bool:
        return self.weight is not None

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())


@dataclass
class Booster:
    base_margin: float
    trees: tuple[TreeNode, ...]
    config: GbdtConfig
    n_features: int
    train_losses: tuple[float, ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class BoosterSet:
    """One booster per fine label, in [fake, hate, offensive, defamation] order."""

    boosters: tuple[Booster, Booster, Booster, Booster]


def _leaf(G: float, H: float, lam: float) -> TreeNode:
    return TreeNode(weight=float(np.clip(-G / (H + lam), -LEAF_CLAMP, LEAF_CLAMP)))


def _best_split(X, g, h, idx, G, H, cfg: GbdtConfig):
    """Best (gain, feature, threshold) over all candidates, or None."""
    lam = cfg.reg_lambda
    base = G * G / (H + lam)
    n = len(idx)
    best_gain = 0.0
    best = None
    for f in range(X.shape[1]):
        vals = X[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        if sv[0] == sv[-1]:
            continue
        cg = np.cumsum(g[idx][order])
        ch = np.cumsum(h[idx][order])
        boundaries = np.nonzero(sv[1:] != sv[:-1])[0]
        thresholds = (sv[boundaries] + sv[boundaries + 1]) / 2.0
        # Midpoints normally put exactly boundary+1 rows on the left; derive
        # the count from the threshold itself so the gain always matches the
        # x < threshold predicate, even if the midpoint rounds onto a neighbor.
        lefts = np.searchsorted(sv, thresholds, side="left")
        valid = (lefts > 0) & (lefts < n)
        if not valid.any():
            continue
        GL = cg[lefts - 1]
        HL = ch[lefts - 1]
        GR = G - GL
        HR = H - HL
        valid &= (HL >= cfg.min_child_hessian) & (HR >= cfg.min_child_hessian)
        if not valid.any():
            continue
        gains = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - base) - cfg.gamma
        gains[~valid] = -np.inf
        k = int(np.argmax(gains))  # first occurrence = lowest threshold
        # Recompute the winner's gain from row-order sums: two features that
        # induce the same partition then tie bit-exactly, so the lowest
        # feature index wins regardless of per-feature summation order.
        thr = float(thresholds[k])
        mask = vals < thr
        GLc = float(g[idx][mask].sum())
        HLc = float(h[idx][mask].sum())
        GRc = G - GLc
        HRc = H - HLc
        gain = 0.5 * (GLc * GLc / (HLc + lam) + GRc * GRc / (HRc + lam) - base) - cfg.gamma
        if gain > best_gain:
            best_gain = gain
            best = (gain, f, thr)
    return best


def _build(X, g, h, idx, depth: int, cfg: GbdtConfig) -> TreeNode:
    G = float(g[idx].sum())
    H = float(h[idx].sum())
    if depth >= cfg.max_depth or len(idx) < 2:
        return _leaf(G, H, cfg.reg_lambda)
    best = _best_split(X, g, h, idx, G, H, cfg)
    if best is None:
        return _leaf(G, H, cfg.reg_lambda)
    _, f, thr = best
    mask = X[idx, f] < thr
    return TreeNode(
        feature=f,
        threshold=thr,
        left=_build(X, g, h, idx[mask], depth + 1, cfg),
        right=_build(X, g, h, idx[~mask], depth + 1, cfg),
    )


def fit_tree(X: np.ndarray, g: np.ndarray, h: np.ndarray, cfg: GbdtConfig) -> TreeNode:
    """Fit one tree to gradients/hessians by exact greedy search."""
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InputError(f"need a non-empty 2-D feature matrix, got shape {X.shape}")
    if not (len(g) == len(h) == X.shape[0]):
        raise InputError("g, h, and X row counts must match")
    if np.any(h < 0):
        raise InputError("hessians must be non-negative")
    if not np.all(np.isfinite(X)):
        raise InputError("features contain NaN or Inf")
    return _build(X, g, h, np.arange(X.shape[0]), 0, cfg)


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Raw leaf outputs (no learning-rate scaling)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0])
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if nd.is_leaf:
            out[idx] = nd.weight
        else:
            mask = X[idx, nd.feature] < nd.threshold
            stack.append((nd.left, idx[mask]))
            stack.append((nd.right, idx[~mask]))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log_loss(y: np.ndarray, margins: np.ndarray) -> float:
    """Mean logistic loss computed stably from margins."""
    return float(np.mean(y * np.logaddexp(0.0, -margins) + (1 - y) * np.logaddexp(0.0, margins)))


def fit_booster(X: np.ndarray, y: np.ndarray, cfg: GbdtConfig) -> Booster:
    """Newton boosting from a base probability of 0.5 (zero margin)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or len(y) != X.shape[0]:
        raise InputError(f"X {X.shape} and y ({len(y)},) do not align")
    if not np.all((y == 0) | (y == 1)):
        raise InputError("labels must be binary 0/1")
    if not np.all(np.isfinite(X)):
        raise InputError("features contain NaN or Inf")
    margins = np.zeros(X.shape[0])
    prev = log_loss(y, margins)
    trees: list[TreeNode] = []
    losses: list[float] = []
    for r in range(cfg.n_rounds):
        p = _sigmoid(margins)
        g = p - y
        h = p * (1 - p)
        tree = _build(X, g, h, np.arange(X.shape[0]), 0, cfg)
        margins = margins + cfg.eta * tree_predict(tree, X)
        cur = log_loss(y, margins)
        assert cur <= prev + 1e-9, f"round {r}: training log-loss rose from {prev} to {cur}"
        trees.append(tree)
        losses.append(cur)
        prev = cur
    return Booster(
        base_margin=0.0,
        trees=tuple(trees),
        config=cfg,
        n_features=X.shape[1],
        train_losses=tuple(losses),
    )


def predict_margin(booster: Booster, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != booster.n_features:
        raise DimensionError(f"expected nx{booster.n_features} inputs, got {X.shape}")
    margins = np.full(X.shape[0], booster.base_margin)
    for tree in booster.trees:
        margins += booster.config.eta * tree_predict(tree, X)
    return margins


def predict_proba(booster: Booster, X: np.ndarray) -> np.ndarray:
    return _sigmoid(predict_margin(booster, X))


def fit_one_vs_rest(X: np.ndarray, Y: np.ndarray, cfg: GbdtConfig) -> BoosterSet:
    """Four independent binary boosters, one per fine-label column."""
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[1] != 4:
        raise InputError(f"expected an nx4 label matrix, got {Y.shape}")
    boosters = tuple(fit_booster(X, Y[:, c], cfg) for c in range(4))
    return BoosterSet(boosters=boosters)


def _tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"weight": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _tree_to_dict(node.left),
        "right": _tree_to_dict(node.right),
    }


def _tree_from_dict(d: dict) -> TreeNode:
    if "weight" in d:
        return TreeNode(weight=float(d["weight"]))
    return TreeNode(
        feature=int(d["feature"]),
        threshold=float(d["threshold"]),
        left=_tree_from_dict(d["left"]),
        right=_tree_from_dict(d["right"]),
    )


def booster_to_dict(booster: Booster) -> dict:
    return {
        "format": "GBDT1",
        "base_margin": booster.base_margin,
        "n_features": booster.n_features,
        "config": booster.config.to_dict(),
        "trees": [_tree_to_dict(t) for t in booster.trees],
    }


def booster_from_dict(d: dict) -> Booster:
    if d.get("format") != "GBDT1":
        raise InputError(f"unsupported booster format {d.get('format')!r}")
    return Booster(
        base_margin=float(d["base_margin"]),
        trees=tuple(_tree_from_dict(t) for t in d["trees"]),
        config=GbdtConfig(**d["config"]),
        n_features=int(d["n_features"]),
    )


def save_booster(booster: Booster, path) -> None:
    """Human-inspectable JSON dump; floats round-trip exactly via repr."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(booster_to_dict(booster), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_booster(path) -> Booster:
    with open(path, encoding="utf-8") as fh:
        return booster_from_dict(json.load(fh))
