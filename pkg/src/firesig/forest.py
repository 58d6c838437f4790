"""Random forest over pattern feature vectors, built from scratch.

Axis-aligned trees with Gini-impurity splits, per-tree bootstrap samples
and per-split random feature subsets.  All randomness flows from seed
substreams and every comparison that picks a split is carried out in
exact integer arithmetic, so a forest is a pure function of
(data, hyperparameters, seed) on any platform.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InsufficientData
from .features import describe_feature

MODEL_FORMAT = "firesig-forest"
MODEL_VERSION = 1


@dataclass
class ForestHyperparams:
    n_trees: int = 100
    max_depth: int = 12
    min_samples_leaf: int = 2
    features_per_split: int = 0  # 0 = ceil(sqrt(n_features))

    def resolve_mtry(self, n_features):
        if self.features_per_split > 0:
            return min(self.features_per_split, n_features)
        return min(int(math.ceil(math.sqrt(n_features))), n_features)


@dataclass
class DecisionTree:
    """Flat node arrays; node 0 is the root, children index -1 marks a leaf."""

    feature: np.ndarray  # int, -1 on leaves
    threshold: np.ndarray  # float, nan on leaves
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # per-node class histogram (training occupancy)

    def n_nodes(self):
        return len(self.feature)

    def leaf_for(self, x):
        node = 0
        while self.left[node] >= 0:
            if x[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return node


@dataclass
class ForestModel:
    trees: list
    class_names: list
    feature_dim: int
    train_seed: int
    hyperparams: ForestHyperparams


@dataclass
class Prediction:
    label: str
    probabilities: np.ndarray  # per class, order follows model.class_names
    votes: np.ndarray  # tree counts per class


@dataclass
class ExplanationStep:
    feature_index: int
    description: str
    threshold: float
    value: float
    went_left: bool

    def render(self):
        op = "≤" if self.went_left else ">"
        arrow = "left" if self.went_left else "right"
        return (
            f"{self.description} = {self.value:.4f} {op} "
            f"{self.threshold:.4f} → {arrow}"
        )


@dataclass
class ExplanationPath:
    steps: list  # ExplanationStep along tree 0
    leaf_histogram: np.ndarray
    leaf_label: str
    feature_usage: list  # (feature_index, split count across the forest)
    class_names: list = field(default_factory=list)

    def render(self):
        lines = ["decision path (tree 0):"]
        for i, step in enumerate(self.steps, 1):
            lines.append(f"  {i}. {step.render()}")
        pairs = ", ".join(
            f"{c}:{int(n)}" for c, n in zip(self.class_names, self.leaf_histogram) if n
        )
        lines.append(f"  leaf: {self.leaf_label} ({pairs})")
        lines.append("most-used split features across the forest:")
        for idx, count in self.feature_usage[:20]:
            lines.append(f"  {describe_feature(idx)}: {count} splits")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _tree_rng(seed, tree_index):
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([int(seed), int(tree_index)]))
    )


def _gini_counts(counts):
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.sum(p * p))


def _best_split(X, y, idx, feats, n_classes, min_leaf):
    """Best (feature, threshold) over the candidate features, or None.

    Candidates are scored by the exact Gini objective
    S = sum(cL^2)/nL + sum(cR^2)/nR written as the integer fraction A/D;
    floats only shortlist candidates, the final comparison is exact.
    Ties break toward the lowest feature index, then lowest threshold.
    """
    m = len(idx)
    Xn = X[np.ix_(idx, feats)]
    yn = y[idx]

    order = np.argsort(Xn, axis=0, kind="stable")
    sx = np.take_along_axis(Xn, order, axis=0)
    onehot = (yn[order][:, :, None] == np.arange(n_classes)[None, None, :]).astype(
        np.int64
    )
    lc = np.cumsum(onehot, axis=0)  # left counts after position p
    total = lc[-1]  # per-feature totals (identical across features)
    rc = total[None, :, :] - lc

    nl = np.arange(1, m + 1, dtype=np.int64)[:, None]
    nr = m - nl
    a = (lc * lc).sum(axis=2) * nr + (rc * rc).sum(axis=2) * nl
    d = (nl * nr).ravel()  # same for every feature column

    valid = np.zeros((m, len(feats)), dtype=bool)
    valid[: m - 1] = sx[1:] > sx[:-1]
    valid &= (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None

    score = np.where(valid, a / np.where(d > 0, d, 1)[:, None], -np.inf)
    best_f = float(score.max())
    shortlist = np.argwhere(score >= best_f - 1e-9 * abs(best_f) - 1e-300)
    # exact comparison over the shortlist, scanning in (feature, position)
    # order so ties keep the lowest feature index / lowest threshold
    shortlist = shortlist[np.lexsort((shortlist[:, 0], shortlist[:, 1]))]
    best = None
    for p, f in shortlist:
        cand = (int(a[p, f]), int(d[p]), int(f), int(p))
        if best is None or cand[0] * best[1] > best[0] * cand[1]:
            best = cand
    a_b, d_b, f_b, p_b = best

    # must strictly improve on the parent impurity: A/D > sum(cP^2)/m
    parent_sq = int((total[0] * total[0]).sum())
    if a_b * m <= parent_sq * d_b:
        return None
    threshold = (sx[p_b, f_b] + sx[p_b + 1, f_b]) / 2.0
    return int(feats[f_b]), float(threshold)


def _grow_tree(X, y, sample_idx, n_classes, hp, rng):
    mtry = hp.resolve_mtry(X.shape[1])
    feature, threshold, left, right, counts = [], [], [], [], []

    def node_counts(idx):
        return np.bincount(y[idx], minlength=n_classes).astype(np.int64)

    def new_node(idx):
        feature.append(-1)
        threshold.append(float("nan"))
        left.append(-1)
        right.append(-1)
        counts.append(node_counts(idx))
        return len(feature) - 1

    # preorder growth keeps the rng draw sequence deterministic
    stack = [(new_node(sample_idx), sample_idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if (
            depth >= hp.max_depth
            or len(idx) < 2 * hp.min_samples_leaf
            or int(c.max()) == len(idx)
        ):
            continue
        feats = np.sort(rng.choice(X.shape[1], size=mtry, replace=False))
        split = _best_split(X, y, idx, feats, n_classes, hp.min_samples_leaf)
        if split is None:
            continue
        f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node] = f
        threshold[node] = thr
        ln = new_node(li)
        rn = new_node(ri)
        left[node] = ln
        right[node] = rn
        # push right first so the left subtree is grown (and draws rng) first
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))

    return DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64),
    )


def train(features, labels, hyperparams=None, seed=0, bootstrap_indices=None):
    """Fit a forest on labeled feature rows.

    bootstrap_indices optionally fixes the per-tree sample draw (list of
    index arrays); feature subsets still come from the seed substreams.
    """
    hp = hyperparams or ForestHyperparams()
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatch("feature matrix must be 2-D")
    labels = [str(l) for l in labels]
    if len(labels) != len(X):
        raise DimensionMismatch("labels and feature rows differ in length")
    class_names = sorted(set(labels))
    if len(class_names) < 2:
        raise InsufficientData("need at least 2 classes")
    code = {c: i for i, c in enumerate(class_names)}
    y = np.array([code[l] for l in labels], dtype=np.int64)
    class_sizes = np.bincount(y, minlength=len(class_names))
    if class_sizes.min() < hp.min_samples_leaf:
        lacking = class_names[int(class_sizes.argmin())]
        raise InsufficientData(
            f"class {lacking!r} has {class_sizes.min()} samples "
            f"(< min_samples_leaf={hp.min_samples_leaf})"
        )

    trees = []
    n = len(X)
    for t in range(hp.n_trees):
        rng = _tree_rng(seed, t)
        if bootstrap_indices is not None:
            idx = np.asarray(bootstrap_indices[t], dtype=np.int64)
        else:
            idx = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X, y, idx, len(class_names), hp, rng))

    return ForestModel(
        trees=trees,
        class_names=class_names,
        feature_dim=X.shape[1],
        train_seed=int(seed),
        hyperparams=hp,
    )


# ---------------------------------------------------------------------------
# prediction and evaluation
# ---------------------------------------------------------------------------


def _check_dim(model, X):
    if X.shape[-1] != model.feature_dim:
        raise DimensionMismatch(
            f"feature dim {X.shape[-1]} != model dim {model.feature_dim}"
        )


def predict_batch(model, X):
    """Vote matrix (n_samples x n_classes) across all trees."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_dim(model, X)
    n, k = len(X), len(model.class_names)
    votes = np.zeros((n, k), dtype=np.int64)
    rows = np.arange(n)
    for tree in model.trees:
        node = np.zeros(n, dtype=np.int64)
        while True:
            internal = tree.left[node] >= 0
            if not internal.any():
                break
            f = tree.feature[node[internal]]
            thr = tree.threshold[node[internal]]
            go_left = X[rows[internal], f] <= thr
            nxt = np.where(go_left, tree.left[node[internal]], tree.right[node[internal]])
            node[internal] = nxt
        leaf_class = np.argmax(tree.counts[node], axis=1)
        votes[rows, leaf_class] += 1
    return votes


def predict(model, x):
    """Majority vote of the forest for one feature vector."""
    if hasattr(x, "to_vector"):
        x = x.to_vector()
    votes = predict_batch(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0]
    probs = votes / votes.sum()
    label = model.class_names[int(np.argmax(votes))]
    return Prediction(label=label, probabilities=probs, votes=votes)


@dataclass
class EvalReport:
    class_names: list
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    accuracy: float
    confusion: np.ndarray  # row = truth, column = prediction

    @property
    def macro_precision(self):
        return float(self.precision.mean())

    @property
    def macro_recall(self):
        return float(self.recall.mean())

    @property
    def macro_f1(self):
        return float(self.f1.mean())

    def metrics_csv(self):
        lines = ["class,precision,recall,f1"]
        for i, name in enumerate(self.class_names):
            lines.append(
                f"{name},{self.precision[i]:.4f},{self.recall[i]:.4f},{self.f1[i]:.4f}"
            )
        lines.append(
            f"Average,{self.macro_precision:.4f},{self.macro_recall:.4f},"
            f"{self.macro_f1:.4f}"
        )
        lines.append(f"Accuracy,,,{self.accuracy:.4f}")
        return "\n".join(lines) + "\n"

    def confusion_csv(self):
        lines = ["truth\\prediction," + ",".join(self.class_names)]
        for i, name in enumerate(self.class_names):
            lines.append(name + "," + ",".join(str(int(v)) for v in self.confusion[i]))
        return "\n".join(lines) + "\n"


def evaluate(model, features, labels):
    """Per-class precision/recall/F1, macro averages, accuracy, confusion."""
    X = np.atleast_2d(np.asarray(features, dtype=np.float64))
    labels = [str(l) for l in labels]
    if len(labels) == 0:
        raise InsufficientData("empty evaluation set")
    votes = predict_batch(model, X)
    pred = np.argmax(votes, axis=1)
    k = len(model.class_names)
    code = {c: i for i, c in enumerate(model.class_names)}
    truth = np.array([code.get(l, -1) for l in labels])
    if (truth < 0).any():
        unknown = sorted({l for l in labels if l not in code})
        raise DimensionMismatch(f"labels not known to the model: {unknown}")

    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (truth, pred), 1)
    tp = np.diag(confusion).astype(np.float64)
    col = confusion.sum(axis=0).astype(np.float64)
    row = confusion.sum(axis=1).astype(np.float64)
    precision = np.divide(tp, col, out=np.zeros_like(tp), where=col > 0)
    recall = np.divide(tp, row, out=np.zeros_like(tp), where=row > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros_like(tp), where=pr > 0)
    accuracy = float(tp.sum() / confusion.sum())
    return EvalReport(
        class_names=list(model.class_names),
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        confusion=confusion,
    )


def explain(model, x):
    """Decision path of tree 0 plus forest-wide split-feature usage."""
    if hasattr(x, "to_vector"):
        x = x.to_vector()
    x = np.asarray(x, dtype=np.float64).ravel()
    _check_dim(model, x.reshape(1, -1))
    tree = model.trees[0]
    steps = []
    node = 0
    while tree.left[node] >= 0:
        f = int(tree.feature[node])
        thr = float(tree.threshold[node])
        went_left = bool(x[f] <= thr)
        steps.append(
            ExplanationStep(
                feature_index=f,
                description=describe_feature(f)
                if model.feature_dim == 372
                else f"feature {f}",
                threshold=thr,
                value=float(x[f]),
                went_left=went_left,
            )
        )
        node = int(tree.left[node] if went_left else tree.right[node])
    usage = np.zeros(model.feature_dim, dtype=np.int64)
    for t in model.trees:
        internal = t.feature[t.feature >= 0]
        np.add.at(usage, internal, 1)
    order = np.lexsort((np.arange(model.feature_dim), -usage))
    feature_usage = [(int(i), int(usage[i])) for i in order if usage[i] > 0]
    hist = tree.counts[node]
    return ExplanationPath(
        steps=steps,
        leaf_histogram=hist,
        leaf_label=model.class_names[int(np.argmax(hist))],
        feature_usage=feature_usage,
        class_names=list(model.class_names),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def model_to_dict(model):
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "class_names": model.class_names,
        "feature_dim": model.feature_dim,
        "train_seed": model.train_seed,
        "hyperparams": {
            "n_trees": model.hyperparams.n_trees,
            "max_depth": model.hyperparams.max_depth,
            "min_samples_leaf": model.hyperparams.min_samples_leaf,
            "features_per_split": model.hyperparams.features_per_split,
        },
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": [None if np.isnan(v) else v for v in t.threshold],
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "counts": t.counts.tolist(),
            }
            for t in model.trees
        ],
    }


def model_from_dict(doc):
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a firesig forest document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    hp = ForestHyperparams(**doc["hyperparams"])
    trees = [
        DecisionTree(
            feature=np.array(t["feature"], dtype=np.int64),
            threshold=np.array(
                [np.nan if v is None else v for v in t["threshold"]], dtype=np.float64
            ),
            left=np.array(t["left"], dtype=np.int64),
            right=np.array(t["right"], dtype=np.int64),
            counts=np.array(t["counts"], dtype=np.int64),
        )
        for t in doc["trees"]
    ]
    return ForestModel(
        trees=trees,
        class_names=list(doc["class_names"]),
        feature_dim=int(doc["feature_dim"]),
        train_seed=int(doc["train_seed"]),
        hyperparams=hp,
    )


def save_model(path, model):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(model_to_dict(model), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="ascii") as fh:
        return model_from_dict(json.load(fh))
