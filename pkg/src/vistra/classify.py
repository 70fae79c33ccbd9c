"""Random-forest classifier, data splitting, and evaluation reports.

Everything here is deterministic given a seed:

- tree i draws from numpy's default generator seeded with (seed XOR i),
  masked to 64 bits;
- bootstrap rows are n draws with replacement, then each split considers a
  freshly drawn feature subset (sorted ascending);
- candidate thresholds are midpoints between consecutive distinct sorted
  values, split gains are Gini, and ties break toward the lowest feature
  index, then the lowest threshold;
- forest prediction is a majority vote over trees, ties toward the
  smallest class label in sorted order (trees vote their leaf majority with
  the same tie rule).
"""

from dataclasses import dataclass, field
import json
import math

import numpy as np
from numba import njit

from .features import FeatureMatrix

__all__ = [
    "ForestParams",
    "ForestModel",
    "EvalReport",
    "rf_train",
    "rf_predict",
    "split_train_test",
    "kfold_cv",
]


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 200
    max_depth: int | None = None
    min_leaf: int = 1
    feature_frac: float | str = "sqrt"
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_trees, int) or self.n_trees < 1:
            raise ValueError(f"n_trees must be a positive integer, got {self.n_trees}")
        if self.max_depth is not None and (not isinstance(self.max_depth, int) or self.max_depth < 1):
            raise ValueError(f"max_depth must be None or a positive integer, got {self.max_depth}")
        if not isinstance(self.min_leaf, int) or self.min_leaf < 1:
            raise ValueError(f"min_leaf must be a positive integer, got {self.min_leaf}")
        if self.feature_frac != "sqrt":
            f = self.feature_frac
            if not isinstance(f, (int, float)) or not 0.0 < float(f) <= 1.0:
                raise ValueError(f"feature_frac must be 'sqrt' or a fraction in (0, 1], got {f!r}")

    def features_per_split(self, p: int) -> int:
        if self.feature_frac == "sqrt":
            return max(1, math.isqrt(p))
        return max(1, min(p, math.ceil(float(self.feature_frac) * p)))


@njit(cache=True)
def _scan_feature(v, y, n_classes, min_leaf):
    """Best Gini split along one pre-sorted feature column.

    v is sorted ascending with y aligned. Returns (weighted impurity,
    threshold); impurity is +inf when no valid cut exists. Thresholds are
    scanned ascending so the first strict improvement wins, which realizes
    the lowest-threshold tie-break.
    """
    n = v.shape[0]
    left = np.zeros(n_classes, dtype=np.int64)
    right = np.zeros(n_classes, dtype=np.int64)
    for i in range(n):
        right[y[i]] += 1
    best = np.inf
    best_thr = np.nan
    nl = 0
    for i in range(n - 1):
        c = y[i]
        left[c] += 1
        right[c] -= 1
        nl += 1
        if v[i] == v[i + 1]:
            continue
        nr = n - nl
        if nl < min_leaf or nr < min_leaf:
            continue
        gl = 1.0
        gr = 1.0
        for cc in range(n_classes):
            pl = left[cc] / nl
            gl -= pl * pl
            pr = right[cc] / nr
            gr -= pr * pr
        w = (nl * gl + nr * gr) / n
        if w < best:
            best = w
            best_thr = 0.5 * (v[i] + v[i + 1])
    return best, best_thr


class _Tree:
    """CART tree stored as parallel arrays; feature == -1 marks a leaf."""

    __slots__ = ("feature", "threshold", "left", "right", "leaf_class")

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_class: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        return len(self.feature) - 1

    def finalize(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.leaf_class = np.asarray(self.leaf_class, dtype=np.int64)

    def predict(self, rows: np.ndarray) -> np.ndarray:
        node = np.zeros(rows.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.where(feat >= 0)[0]
            if active.size == 0:
                break
            cur = node[active]
            go_left = rows[active, self.feature[cur]] < self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
        return self.leaf_class[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if np.isnan(t) else float(t) for t in self.threshold],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "leaf_class": self.leaf_class.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "_Tree":
        tree = cls()
        tree.feature = list(obj["feature"])
        tree.threshold = [np.nan if t is None else float(t) for t in obj["threshold"]]
        tree.left = list(obj["left"])
        tree.right = list(obj["right"])
        tree.leaf_class = list(obj["leaf_class"])
        tree.finalize()
        return tree


def _grow_tree(rows, y, n_classes, params: ForestParams, rng) -> _Tree:
    n, p = rows.shape
    k = params.features_per_split(p)
    max_depth = params.max_depth if params.max_depth is not None else 2**31
    tree = _Tree()
    root = tree._new_node()
    # (node_id, sample index array, depth); explicit stack, LIFO order is
    # deterministic and avoids recursion limits on deep trees
    stack = [(root, np.arange(n, dtype=np.int64), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        majority = int(np.argmax(counts))  # first max = smallest class index
        if depth >= max_depth or counts.max() == idx.size or idx.size < 2 * params.min_leaf:
            tree.leaf_class[node] = majority
            continue
        feats = np.sort(rng.choice(p, size=k, replace=False))
        best = np.inf
        best_feat = -1
        best_thr = np.nan
        sub_y = y[idx]
        for f in feats:
            col = rows[idx, f]
            order = np.argsort(col, kind="stable")
            imp, thr = _scan_feature(col[order], sub_y[order], n_classes, params.min_leaf)
            if imp < best:  # strict: earlier (lower) feature index wins ties
                best = imp
                best_feat = int(f)
                best_thr = float(thr)
        if best_feat < 0:
            tree.leaf_class[node] = majority
            continue
        go_left = rows[idx, best_feat] < best_thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        tree.feature[node] = best_feat
        tree.threshold[node] = best_thr
        lnode = tree._new_node()
        rnode = tree._new_node()
        tree.left[node] = lnode
        tree.right[node] = rnode
        stack.append((rnode, right_idx, depth + 1))
        stack.append((lnode, left_idx, depth + 1))
    tree.finalize()
    return tree


@dataclass
class ForestModel:
    classes: list[str]
    n_features: int
    trees: list
    params: ForestParams

    def to_dict(self) -> dict:
        return {
            "classes": self.classes,
            "n_features": self.n_features,
            "params": {
                "n_trees": self.params.n_trees,
                "max_depth": self.params.max_depth,
                "min_leaf": self.params.min_leaf,
                "feature_frac": self.params.feature_frac,
                "seed": self.params.seed,
            },
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "ForestModel":
        frac = obj["params"]["feature_frac"]
        params = ForestParams(
            n_trees=obj["params"]["n_trees"],
            max_depth=obj["params"]["max_depth"],
            min_leaf=obj["params"]["min_leaf"],
            feature_frac=frac if isinstance(frac, str) else float(frac),
            seed=obj["params"]["seed"],
        )
        return cls(
            classes=list(obj["classes"]),
            n_features=int(obj["n_features"]),
            trees=[_Tree.from_dict(t) for t in obj["trees"]],
            params=params,
        )


def rf_train(x: FeatureMatrix, params: ForestParams) -> ForestModel:
    """Train a bagged forest of CART trees on the feature matrix."""
    rows = x.rows
    n, p = rows.shape
    classes = sorted(set(x.labels))
    if len(classes) < 2:
        raise ValueError("training needs at least two distinct classes")
    if n < 2:
        raise ValueError("training needs at least two rows")
    code = {c: i for i, c in enumerate(classes)}
    y = np.asarray([code[lab] for lab in x.labels], dtype=np.int64)
    trees = []
    for i in range(params.n_trees):
        rng = np.random.default_rng((params.seed ^ i) & 0xFFFFFFFFFFFFFFFF)
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(rows[boot], y[boot], len(classes), params, rng))
    return ForestModel(classes=classes, n_features=p, trees=trees, params=params)


def rf_predict(model: ForestModel, x) -> list[str]:
    """Majority vote over the forest; ties go to the smallest label."""
    rows = x.rows if isinstance(x, FeatureMatrix) else np.asarray(x, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} feature columns, got {rows.shape[1] if rows.ndim == 2 else 'non-2-D'}")
    votes = np.zeros((rows.shape[0], len(model.classes)), dtype=np.int64)
    for tree in model.trees:
        pred = tree.predict(rows)
        votes[np.arange(rows.shape[0]), pred] += 1
    winners = np.argmax(votes, axis=1)  # first max = smallest label
    return [model.classes[i] for i in winners]


def _per_class_indices(labels: list[str]) -> dict[str, np.ndarray]:
    by: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by.setdefault(lab, []).append(i)
    return {lab: np.asarray(ix, dtype=np.int64) for lab, ix in sorted(by.items())}


def _take(x: FeatureMatrix, idx: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(
        rows=x.rows[idx],
        labels=[x.labels[i] for i in idx],
        column_meta=list(x.column_meta),
        snr_db=None if x.snr_db is None else [x.snr_db[i] for i in idx],
    )


def split_train_test(x: FeatureMatrix, ratio: float, seed: int) -> tuple[FeatureMatrix, FeatureMatrix]:
    """Stratified split: per class, round(ratio * n) rows train, rest test.

    Both sides keep at least one row per class; classes with fewer than two
    rows cannot be split and raise ValueError. Deterministic per seed.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for lab, idx in _per_class_indices(x.labels).items():
        if idx.size < 2:
            raise ValueError(f"class {lab!r} has fewer than 2 rows; cannot split")
        perm = rng.permutation(idx)
        n_train = int(round(ratio * idx.size))
        n_train = min(max(n_train, 1), idx.size - 1)
        train_idx.extend(perm[:n_train].tolist())
        test_idx.extend(perm[n_train:].tolist())
    return _take(x, np.asarray(sorted(train_idx))), _take(x, np.asarray(sorted(test_idx)))


@dataclass
class EvalReport:
    """Classification quality summary.

    accuracy is trace(confusion) / total; confusion rows are true labels,
    columns predicted, both in ``labels`` order. fold_accuracies is present
    for cross-validation runs. samples carries per-row (true, predicted,
    snr_db) so downstream tables (accuracy versus SNR) need no re-run.
    """

    accuracy: float
    labels: list[str]
    confusion: list[list[int]]
    per_class: dict[str, dict[str, float]]
    fold_accuracies: list[float] | None = None
    samples: list[dict] | None = None

    def to_json(self) -> str:
        payload = {
            "accuracy": self.accuracy,
            "labels": self.labels,
            "confusion": self.confusion,
            "per_class": self.per_class,
            "fold_accuracies": self.fold_accuracies,
            "samples": self.samples,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _build_report(y_true: list[str], y_pred: list[str], labels: list[str],
                  snr: list | None, fold_accuracies=None) -> EvalReport:
    index = {lab: i for i, lab in enumerate(labels)}
    conf = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        conf[index[t], index[p]] += 1
    total = int(conf.sum())
    accuracy = float(np.trace(conf)) / total
    per_class = {}
    for lab in labels:
        i = index[lab]
        col = int(conf[:, i].sum())
        row = int(conf[i, :].sum())
        per_class[lab] = {
            "precision": float(conf[i, i]) / col if col else 0.0,
            "recall": float(conf[i, i]) / row if row else 0.0,
        }
    samples = [
        {"index": k, "label": t, "pred": p, "snr_db": None if snr is None else snr[k]}
        for k, (t, p) in enumerate(zip(y_true, y_pred))
    ]
    return EvalReport(
        accuracy=accuracy,
        labels=labels,
        confusion=conf.tolist(),
        per_class=per_class,
        fold_accuracies=fold_accuracies,
        samples=samples,
    )


def evaluate_split(x: FeatureMatrix, ratio: float, params: ForestParams,
                   seed: int) -> tuple[EvalReport, ForestModel]:
    """Single stratified train/test split, trained and scored."""
    train, test = split_train_test(x, ratio, seed)
    model = rf_train(train, params)
    pred = rf_predict(model, test)
    labels = sorted(set(x.labels))
    report = _build_report(test.labels, pred, labels, test.snr_db)
    return report, model


def kfold_cv(x: FeatureMatrix, k: int, params: ForestParams, seed: int) -> EvalReport:
    """Stratified k-fold cross-validation.

    Per class, rows are shuffled once and dealt round-robin to the k folds,
    so fold sizes differ by at most one per class and every row is tested
    exactly once. Every class must have at least k rows. The pooled
    confusion matrix over all folds yields the headline accuracy; per-fold
    accuracies are reported alongside.
    """
    if not isinstance(k, int) or k < 2:
        raise ValueError(f"k must be an integer >= 2, got {k}")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for lab, idx in _per_class_indices(x.labels).items():
        if idx.size < k:
            raise ValueError(f"class {lab!r} has {idx.size} rows, fewer than k={k}")
        perm = rng.permutation(idx)
        for j, row in enumerate(perm.tolist()):
            folds[j % k].append(row)
    y_true: list[str] = []
    y_pred: list[str] = []
    snr_out: list = []
    order: list[int] = []
    fold_accuracies = []
    for f in range(k):
        test_rows = np.asarray(sorted(folds[f]), dtype=np.int64)
        train_rows = np.asarray(sorted(r for j in range(k) if j != f for r in folds[j]), dtype=np.int64)
        model = rf_train(_take(x, train_rows), params)
        test = _take(x, test_rows)
        pred = rf_predict(model, test)
        hits = sum(1 for t, p in zip(test.labels, pred) if t == p)
        fold_accuracies.append(hits / len(pred))
        y_true.extend(test.labels)
        y_pred.extend(pred)
        snr_out.extend(test.snr_db if test.snr_db is not None else [None] * len(pred))
        order.extend(test_rows.tolist())
    # restore original row order so sample entries line up with the input
    rank = np.argsort(np.asarray(order, dtype=np.int64), kind="stable")
    y_true = [y_true[i] for i in rank]
    y_pred = [y_pred[i] for i in rank]
    snr_out = [snr_out[i] for i in rank]
    labels = sorted(set(x.labels))
    return _build_report(y_true, y_pred, labels, snr_out, fold_accuracies=fold_accuracies)
