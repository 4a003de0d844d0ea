"""Independent reference implementations used to check the package.

Everything here is deliberately written the slow, obvious way (explicit
loops, exhaustive enumeration, finite differences) and shares no code
with the implementations it checks.
"""

from __future__ import annotations

import numpy as np

from hostility import mlp


# ---------------------------------------------------------------- gradients

def sample_smooth_batch(rng, model, n, head, dropout_p=0.0, eps=1e-3):
    """Random batch whose hidden pre-activations stay clear of the ReLU
    kink, so a central difference with step eps sees a smooth function."""
    k = mlp.HEAD_DIMS[head]
    while True:
        X = rng.standard_normal((n, model.input_dim))
        if head == "coarse":
            T = np.zeros((n, 2))
            T[np.arange(n), rng.integers(0, 2, n)] = 1.0
        else:
            T = (rng.random((n, k)) < 0.5).astype(float)
        masks = mlp.sample_dropout_masks(rng, X.shape, dropout_p)
        dropped = X if masks is None else X * masks
        pre = dropped @ model.W1 + model.b1
        margin = 4.0 * eps * (np.max(np.abs(dropped)) + 1.0)
        if np.min(np.abs(pre)) > margin:
            return X, T, masks


def fd_gradients(model, X, T, head, masks=None, eps=1e-3):
    """Central finite differences of the mean batch loss, per parameter."""
    grads = {}
    for name in ("W1", "b1", "W2", "b2"):
        param = getattr(model, name)
        out = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = param[i]
            param[i] = orig + eps
            up = mlp.batch_loss(model, X, T, head, masks)
            param[i] = orig - eps
            down = mlp.batch_loss(model, X, T, head, masks)
            param[i] = orig
            out[i] = (up - down) / (2 * eps)
        grads[name] = out
    return grads


def max_relative_error(analytic: dict, reference: dict) -> float:
    worst = 0.0
    for name, ref in reference.items():
        a = np.asarray(analytic[name], dtype=np.float64)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(ref)), 1.0)
        worst = max(worst, float(np.max(np.abs(a - ref) / denom)))
    return worst


# ---------------------------------------------------------------- gbdt tree

def oracle_fit_tree(X, g, h, max_depth, reg_lambda, gamma, min_child_hessian):
    """Exhaustive greedy tree builder returning nested dicts."""
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)

    def leaf(rows):
        G = float(np.sum(g[rows]))
        H = float(np.sum(h[rows]))
        w = -G / (H + reg_lambda)
        return {"weight": min(10.0, max(-10.0, w))}

    def build(rows, depth):
        if depth >= max_depth or len(rows) < 2:
            return leaf(rows)
        G = float(np.sum(g[rows]))
        H = float(np.sum(h[rows]))
        best = None
        for f in range(X.shape[1]):
            distinct = sorted(set(X[rows, f].tolist()))
            for a, b in zip(distinct, distinct[1:]):
                thr = (a + b) / 2.0
                mask = X[rows, f] < thr
                left, right = rows[mask], rows[~mask]
                if len(left) == 0 or len(right) == 0:
                    continue
                GL = float(np.sum(g[left]))
                HL = float(np.sum(h[left]))
                GR = G - GL
                HR = H - HL
                if HL < min_child_hessian or HR < min_child_hessian:
                    continue
                gain = (
                    0.5
                    * (
                        GL * GL / (HL + reg_lambda)
                        + GR * GR / (HR + reg_lambda)
                        - G * G / (H + reg_lambda)
                    )
                    - gamma
                )
                if best is None or gain > best[0]:
                    best = (gain, f, thr, left, right)
        if best is None or best[0] <= 0.0:
            return leaf(rows)
        _, f, thr, left, right = best
        return {
            "feature": f,
            "threshold": thr,
            "left": build(left, depth + 1),
            "right": build(right, depth + 1),
        }

    return build(np.arange(X.shape[0]), 0)


def trees_equal(node, oracle_node, weight_tol=1e-9) -> bool:
    """Implementation TreeNode vs oracle dict: split choice exact, weights close."""
    if node.is_leaf:
        return "weight" in oracle_node and abs(node.weight - oracle_node["weight"]) <= weight_tol
    if "weight" in oracle_node:
        return False
    return (
        node.feature == oracle_node["feature"]
        and node.threshold == oracle_node["threshold"]
        and trees_equal(node.left, oracle_node["left"], weight_tol)
        and trees_equal(node.right, oracle_node["right"], weight_tol)
    )


# ---------------------------------------------------------------- ensemble

def oracle_cascade(bits, scores):
    nh, hostile = bits[0], list(bits[1:])
    if nh == 1 and sum(hostile) == 0:
        return list(bits)
    if nh == 0 and sum(hostile) >= 1:
        return list(bits)
    if nh == 1 and sum(hostile) >= 1:
        if scores[0] >= max(scores[1:]):
            return [1, 0, 0, 0, 0]
        return [0] + hostile
    winner, best = 0, scores[0]
    for c in range(1, 5):
        if scores[c] > best:
            winner, best = c, scores[c]
    row = [0, 0, 0, 0, 0]
    row[winner] = 1
    return row


def oracle_combine(bit_matrices, weights, cascade=True):
    """Per-class weighted-mean-threshold fusion via plain loops."""
    m = len(bit_matrices)
    n = len(bit_matrices[0])
    den = 0.0
    for w in weights:
        den += w
    all_scores, all_bits = [], []
    for j in range(n):
        row_scores = []
        for c in range(5):
            num = 0.0
            for i in range(m):
                num += bit_matrices[i][j][c] * weights[i]
            row_scores.append(num / den)
        row_bits = [1 if s >= 0.5 else 0 for s in row_scores]
        if cascade:
            row_bits = oracle_cascade(row_bits, row_scores)
        all_scores.append(row_scores)
        all_bits.append(row_bits)
    return all_bits, all_scores


# ---------------------------------------------------------------- metrics

def _prf(tp, fp, fn):
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1, tp + fn


def oracle_evaluate(pred, gold):
    """Per-class confusion matrices built by explicit iteration."""
    n = len(gold)
    result = {}

    coarse = {}
    for cls, positive in (("hostile", True), ("non-hostile", False)):
        tp = fp = fn = 0
        for j in range(n):
            gold_pos = (sum(gold[j][1:]) >= 1) == positive
            pred_pos = (sum(pred[j][1:]) >= 1) == positive
            if pred_pos and gold_pos:
                tp += 1
            elif pred_pos and not gold_pos:
                fp += 1
            elif gold_pos:
                fn += 1
        coarse[cls] = _prf(tp, fp, fn)
    total = sum(v[3] for v in coarse.values())
    result["coarse"] = {k: v[2] for k, v in coarse.items()}
    result["coarse_weighted_f1"] = (
        sum(v[3] * v[2] for v in coarse.values()) / total if total else 0.0
    )

    fine = {}
    for c, name in ((1, "fake"), (2, "hate"), (3, "offensive"), (4, "defamation")):
        tp = fp = fn = 0
        for j in range(n):
            if pred[j][c] == 1 and gold[j][c] == 1:
                tp += 1
            elif pred[j][c] == 1:
                fp += 1
            elif gold[j][c] == 1:
                fn += 1
        fine[name] = _prf(tp, fp, fn)
    total = sum(v[3] for v in fine.values())
    result["fine"] = {k: v[2] for k, v in fine.items()}
    result["fine_weighted_f1"] = sum(v[3] * v[2] for v in fine.values()) / total if total else 0.0
    return result


def random_gold_rows(rng, n):
    """n random label rows satisfying the non-hostile XOR hostile rule."""
    rows = []
    for _ in range(n):
        if rng.random() < 0.5:
            rows.append([1, 0, 0, 0, 0])
        else:
            hostile = (rng.random(4) < 0.4).astype(int)
            if hostile.sum() == 0:
                hostile[rng.integers(4)] = 1
            rows.append([0, *hostile.tolist()])
    return rows
