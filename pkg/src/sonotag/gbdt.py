"""Gradient-boosted decision trees with a one-vs-all multiclass wrapper.

Second-order boosting on logistic loss: per round, gradients g = p - y
and hessians h = p(1 - p) feed an exact greedy split search with gain
  0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam))
and leaf weight -G/(H+lam). Trees grow level-wise to a depth cap; a node
becomes a leaf when no candidate has positive gain or either side would
fall under min_child_weight hessian mass.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels

MODEL_MAGIC = b"FACEGB1"


@dataclass(frozen=True)
class GbdtParams:
    max_depth: int = 6
    n_rounds: int = 100
    learning_rate: float = 0.3
    l2_lambda: float = 1.0
    min_child_weight: float = 1.0

    def __post_init__(self) -> None:
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be at least 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.l2_lambda < 0.0:
            raise ValueError("l2_lambda must be non-negative")
        if self.min_child_weight < 0.0:
            raise ValueError("min_child_weight must be non-negative")


@dataclass
class Tree:
    """Flat node arrays; feature -1 marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    default_left: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size


def _sigmoid(margin: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(margin, -50.0, 50.0)))


def _grow_tree(X, order, g, h, params: GbdtParams):
    """One regression tree via level-wise exact greedy growth.

    Returns the tree and each training sample's leaf weight, so the boost
    update needs no traversal.
    """
    backend = _kernels.get_backend()
    n = g.size
    lam = params.l2_lambda

    feature: list[int] = [0]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    weight: list[float] = [0.0]

    node_of = np.zeros(n, dtype=np.int32)  # compact id within the active level
    active_ids = [0]  # tree node id per compact id
    sample_value = np.zeros(n)

    for depth in range(params.max_depth + 1):
        n_active = len(active_ids)
        if n_active == 0:
            break
        live = node_of >= 0
        g_sum = np.bincount(node_of[live], weights=g[live], minlength=n_active)
        h_sum = np.bincount(node_of[live], weights=h[live], minlength=n_active)

        if depth < params.max_depth:
            parent = g_sum * g_sum / (h_sum + lam)
            gain, feat, thr = backend.best_splits(
                X, order, g, h, node_of, n_active, g_sum, h_sum, parent, lam, params.min_child_weight
            )
        else:
            gain = np.full(n_active, -np.inf)
            feat = np.zeros(n_active, dtype=np.int32)
            thr = np.zeros(n_active)

        old = node_of.copy()
        next_ids: list[int] = []
        for c, tree_id in enumerate(active_ids):
            members = old == c
            if gain[c] <= 0.0:
                w = -g_sum[c] / (h_sum[c] + lam)
                feature[tree_id] = -1
                weight[tree_id] = w
                sample_value[members] = w
                node_of[members] = -1
                continue
            lc, rc = len(feature), len(feature) + 1
            feature[tree_id] = int(feat[c])
            threshold[tree_id] = float(thr[c])
            left[tree_id] = lc
            right[tree_id] = rc
            for _ in range(2):
                feature.append(0)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                weight.append(0.0)
            go_left = members & (X[:, int(feat[c])] < thr[c])
            node_of[go_left] = len(next_ids)
            node_of[members & ~go_left] = len(next_ids) + 1
            next_ids.extend((lc, rc))
        active_ids = next_ids

    tree = Tree(
        feature=np.asarray(feature, dtype=np.int32),
        threshold=np.asarray(threshold),
        left=np.asarray(left, dtype=np.int32),
        right=np.asarray(right, dtype=np.int32),
        weight=np.asarray(weight),
        default_left=np.ones(len(feature), dtype=np.uint8),
    )
    return tree, sample_value


@dataclass
class BinaryGbdt:
    """One boosted binary classifier: margin = base + lr * sum(trees)."""

    trees: list[Tree]
    base_score: float
    params: GbdtParams
    n_features: int
    train_loss: list[float] = field(default_factory=list)
    _packed: tuple | None = field(default=None, repr=False)

    def _pack(self):
        if self._packed is None:
            roots = []
            offset = 0
            for t in self.trees:
                roots.append(offset)
                offset += t.n_nodes
            shift = np.repeat(np.asarray(roots, dtype=np.int32), [t.n_nodes for t in self.trees])
            feature = np.concatenate([t.feature for t in self.trees])
            child_shift = np.where(feature >= 0, shift, 0).astype(np.int32)
            self._packed = (
                feature,
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([t.left for t in self.trees]).astype(np.int32) + child_shift,
                np.concatenate([t.right for t in self.trees]).astype(np.int32) + child_shift,
                np.concatenate([t.weight for t in self.trees]),
                np.asarray(roots, dtype=np.int32),
            )
        return self._packed

    def margin(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        feature, threshold, left, right, weight, roots = self._pack()
        acc = np.zeros(X.shape[0])
        _kernels.get_backend().predict_margin(X, feature, threshold, left, right, weight, roots, acc)
        return self.base_score + self.params.learning_rate * acc

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return _sigmoid(self.margin(X))


def train_binary(X: np.ndarray, y: np.ndarray, params: GbdtParams | None = None) -> BinaryGbdt:
    """Fit one binary booster on labels in {0, 1}."""
    params = params or GbdtParams()
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("X must be a non-empty 2-D array")
    if y.shape != (X.shape[0],):
        raise ValueError("y must be one label per row of X")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0 or 1")
    pos = y.mean()
    if pos == 0.0 or pos == 1.0:
        raise ValueError("training data contains a single class")

    prior = np.clip(pos, 1e-6, 1.0 - 1e-6)
    base = float(np.log(prior / (1.0 - prior)))
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int32))

    margin = np.full(X.shape[0], base)
    trees: list[Tree] = []
    losses: list[float] = []
    for _ in range(params.n_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        tree, sample_value = _grow_tree(X, order, g, h, params)
        trees.append(tree)
        margin = margin + params.learning_rate * sample_value
        losses.append(float(np.mean(np.logaddexp(0.0, margin) - y * margin)))
    return BinaryGbdt(trees=trees, base_score=base, params=params, n_features=X.shape[1], train_loss=losses)


@dataclass(frozen=True)
class PredictionResult:
    label: str
    score: float
    per_class: np.ndarray


@dataclass
class OvaModel:
    """One binary booster per class; winner is the highest raw score."""

    classes: tuple[str, ...]
    models: list[BinaryGbdt]

    @property
    def n_features(self) -> int:
        return self.models[0].n_features

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Per-class sigmoid scores, shape (n, n_classes)."""
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        return np.column_stack([m.predict_proba(X) for m in self.models])

    def predict_batch(self, X: np.ndarray, score_mode: str = "raw") -> tuple[np.ndarray, np.ndarray]:
        """(class indices, confidence scores) for every row.

        Argmax ties go to the lower class index. score_mode "raw" reports
        the winning sigmoid score; "normalized" divides by the per-row
        score total.
        """
        if score_mode not in ("raw", "normalized"):
            raise ValueError("score_mode must be 'raw' or 'normalized'")
        scores = self.predict_scores(X)
        winner = scores.argmax(axis=1)
        best = scores[np.arange(scores.shape[0]), winner]
        if score_mode == "normalized":
            best = best / scores.sum(axis=1)
        return winner, best

    def predict(self, x: np.ndarray, score_mode: str = "raw") -> PredictionResult:
        if score_mode not in ("raw", "normalized"):
            raise ValueError("score_mode must be 'raw' or 'normalized'")
        scores = self.predict_scores(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0]
        winner = int(scores.argmax())
        best = float(scores[winner])
        if score_mode == "normalized":
            best /= float(scores.sum())
        return PredictionResult(label=self.classes[winner], score=best, per_class=scores)


def train_ova(X: np.ndarray, labels, params: GbdtParams | None = None) -> OvaModel:
    """Fit one-vs-all boosters over the distinct labels (sorted order)."""
    labels = [str(lab) for lab in labels]
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError("training data contains a single class")
    y = np.asarray([classes.index(lab) for lab in labels])
    models = [train_binary(X, (y == c).astype(np.float64), params) for c in range(len(classes))]
    return OvaModel(classes=classes, models=models)


def _write_tree(out: bytearray, tree: Tree, node: int) -> None:
    if tree.feature[node] < 0:
        out += struct.pack("<Bd", 0, tree.weight[node])
        return
    out += struct.pack("<BIdB", 1, int(tree.feature[node]), float(tree.threshold[node]), int(tree.default_left[node]))
    _write_tree(out, tree, int(tree.left[node]))
    _write_tree(out, tree, int(tree.right[node]))


def _read_tree(data: bytes, pos: int, arrays) -> tuple[int, int]:
    feature, threshold, left, right, weight, default_left = arrays
    tag = data[pos]
    pos += 1
    node = len(feature)
    if tag == 0:
        (w,) = struct.unpack_from("<d", data, pos)
        pos += 8
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        weight.append(w)
        default_left.append(1)
        return node, pos
    if tag != 1:
        raise ValueError("corrupt model: bad node tag")
    feat, thr, dleft = struct.unpack_from("<IdB", data, pos)
    pos += struct.calcsize("<IdB")
    feature.append(int(feat))
    threshold.append(thr)
    left.append(-1)
    right.append(-1)
    weight.append(0.0)
    default_left.append(dleft)
    lc, pos = _read_tree(data, pos, arrays)
    rc, pos = _read_tree(data, pos, arrays)
    left[node] = lc
    right[node] = rc
    return node, pos


def serialize_model(model: OvaModel) -> bytes:
    out = bytearray()
    out += struct.pack("<7sI", MODEL_MAGIC, len(model.classes))
    for name in model.classes:
        raw = name.encode("utf-8")
        out += struct.pack("<H", len(raw)) + raw
    for booster in model.models:
        p = booster.params
        out += struct.pack(
            "<ddIIIdd",
            booster.base_score,
            p.learning_rate,
            booster.n_features,
            p.max_depth,
            p.n_rounds,
            p.l2_lambda,
            p.min_child_weight,
        )
        out += struct.pack("<I", len(booster.trees))
        for tree in booster.trees:
            _write_tree(out, tree, 0)
    return bytes(out)


def deserialize_model(data: bytes) -> OvaModel:
    head = struct.calcsize("<7sI")
    if len(data) < head:
        raise ValueError("corrupt model: truncated header")
    magic, n_classes = struct.unpack_from("<7sI", data, 0)
    if magic != MODEL_MAGIC:
        raise ValueError(f"bad model magic: {magic!r}")
    pos = head
    classes = []
    for _ in range(n_classes):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        classes.append(data[pos : pos + n].decode("utf-8"))
        pos += n
    models = []
    for _ in range(n_classes):
        base, lr, n_features, max_depth, n_rounds, lam, mcw = struct.unpack_from("<ddIIIdd", data, pos)
        pos += struct.calcsize("<ddIIIdd")
        (n_trees,) = struct.unpack_from("<I", data, pos)
        pos += 4
        params = GbdtParams(
            max_depth=max_depth, n_rounds=n_rounds, learning_rate=lr, l2_lambda=lam, min_child_weight=mcw
        )
        trees = []
        for _ in range(n_trees):
            arrays = ([], [], [], [], [], [])
            _, pos = _read_tree(data, pos, arrays)
            feature, threshold, left, right, weight, default_left = arrays
            trees.append(
                Tree(
                    feature=np.asarray(feature, dtype=np.int32),
                    threshold=np.asarray(threshold),
                    left=np.asarray(left, dtype=np.int32),
                    right=np.asarray(right, dtype=np.int32),
                    weight=np.asarray(weight),
                    default_left=np.asarray(default_left, dtype=np.uint8),
                )
            )
        models.append(BinaryGbdt(trees=trees, base_score=base, params=params, n_features=int(n_features)))
    return OvaModel(classes=tuple(classes), models=models)


def save_model(model: OvaModel, path: str | Path) -> None:
    Path(path).write_bytes(serialize_model(model))


def load_model(path: str | Path) -> OvaModel:
    return deserialize_model(Path(path).read_bytes())
