"""Histogram-based gradient-boosted trees for good/bad sounding classification.

Binary classifier under logistic loss with BAD as the positive class.
Each boosting round grows one regression tree leaf-wise on second-order
statistics: candidate splits are scored over per-feature histograms by

    gain = G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G_P^2/(H_P+lambda)

and leaves predict -G/(H+lambda), shrunk by the learning rate when
accumulated.  Besides the raw score and probability, a model reports a
normalized margin in [-1, 1]: the prior-centered raw score divided by the
sum over trees of each tree's largest absolute shrunk leaf value.  The
margin is the confidence surfaced to the human editor.

Training is deterministic: histogram sums run in fixed order, split ties
break on the lowest (feature, bin), and equal-gain leaves expand in
creation order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import BAD, GOOD

_PROB_EPS = 1e-12
BASE_SCORE_CLAMP = 15.0
MODEL_FORMAT_VERSION = "bathyedit-model v1"


class ModelFormatError(ValueError):
    """A model file is malformed or has an unknown version."""


@dataclass(frozen=True)
class TrainConfig:
    num_rounds: int = 100
    learning_rate: float = 0.1
    max_leaves: int = 31
    min_samples_leaf: int = 20
    num_bins: int = 255
    lambda_l2: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_rounds < 1:
            raise ValueError("num_rounds must be positive")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in (0,1]")
        if self.max_leaves < 2:
            raise ValueError("max_leaves must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be positive")
        if not 2 <= self.num_bins <= 256:
            raise ValueError("num_bins must be in [2, 256]")
        if self.lambda_l2 < 0.0:
            raise ValueError("lambda_l2 must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def grad_hess(prob: float, label: str) -> tuple[float, float]:
    """Gradient and hessian of the logistic loss at probability ``prob``.

    ``prob`` is the predicted probability of BAD; with y = 1 for BAD the
    gradient is prob - y and the hessian prob * (1 - prob).
    """
    if not 0.0 < prob < 1.0:
        raise ValueError(f"prob must lie strictly inside (0,1), got {prob}")
    if label not in (GOOD, BAD):
        raise ValueError(f"unknown label {label!r}")
    y = 1.0 if label == BAD else 0.0
    return prob - y, prob * (1.0 - prob)


def sigmoid(raw):
    return 1.0 / (1.0 + np.exp(-raw))


def logistic_loss(raw: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss of raw scores against boolean BAD labels."""
    p = np.clip(sigmoid(np.asarray(raw, dtype=np.float64)), _PROB_EPS, 1 - _PROB_EPS)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(-(y * np.log(p) + (1 - y) * np.log(1 - p))))


def build_bins(features: np.ndarray, num_bins: int) -> list[np.ndarray]:
    """Per-feature quantile split thresholds yielding at most num_bins bins.

    A value v falls in bin b when edges[b-1] < v <= edges[b]; a constant
    feature gets no edges (a single bin) and is never split on.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) == 0:
        raise ValueError("features must be a non-empty 2-d array")
    edges: list[np.ndarray] = []
    for f in range(features.shape[1]):
        col = features[:, f]
        distinct = np.unique(col)
        if len(distinct) <= 1:
            edges.append(np.empty(0, dtype=np.float64))
        elif len(distinct) <= num_bins:
            edges.append((distinct[:-1] + distinct[1:]) / 2.0)
        else:
            qs = np.quantile(col, np.arange(1, num_bins) / num_bins)
            edges.append(np.unique(qs))
    return edges


def apply_bins(edges: list[np.ndarray], features: np.ndarray) -> np.ndarray:
    """Map raw feature values to bin indices (int64, one column per feature)."""
    features = np.asarray(features, dtype=np.float64)
    binned = np.empty(features.shape, dtype=np.int64)
    for f, e in enumerate(edges):
        binned[:, f] = np.searchsorted(e, features[:, f], side="left")
    return binned


@dataclass
class Tree:
    """One regression tree as parallel node arrays; node 0 is the root.

    ``feature[i] == -1`` marks a leaf; leaf predictions are unshrunk and
    multiplied by the learning rate on accumulation.
    """

    feature: np.ndarray
    bin_threshold: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("feature", "bin_threshold", "threshold", "left", "right", "value")
        )

    @property
    def num_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def max_abs_leaf(self) -> float:
        leaves = self.value[self.feature < 0]
        return float(np.max(np.abs(leaves))) if len(leaves) else 0.0

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Route rows to leaves on raw feature values; returns leaf values."""
        n = len(features)
        idx = np.zeros(n, dtype=np.int64)
        while True:
            feat = self.feature[idx]
            internal = np.nonzero(feat >= 0)[0]
            if len(internal) == 0:
                return self.value[idx]
            at = idx[internal]
            go_left = features[internal, feat[internal]] <= self.threshold[at]
            idx[internal] = np.where(go_left, self.left[at], self.right[at])


@dataclass
class Model:
    """A trained forest plus the metadata needed to score new soundings."""

    trees: list[Tree]
    learning_rate: float
    base_score: float
    bin_edges: list[np.ndarray]
    num_features: int

    @property
    def norm_constant(self) -> float:
        """Sum over trees of the largest absolute shrunk leaf value."""
        return sum(self.learning_rate * t.max_abs_leaf() for t in self.trees)

    def predict_raw(self, features: np.ndarray) -> np.ndarray:
        features = self._check(features)
        raw = np.full(len(features), self.base_score, dtype=np.float64)
        for tree in self.trees:
            raw += self.learning_rate * tree.predict(features)
        return raw

    def staged_raw(self, features: np.ndarray):
        """Yield raw scores after 0, 1, ... len(trees) boosting rounds."""
        features = self._check(features)
        raw = np.full(len(features), self.base_score, dtype=np.float64)
        yield raw.copy()
        for tree in self.trees:
            raw += self.learning_rate * tree.predict(features)
            yield raw.copy()

    def predict_margin(self, features: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(features)
        norm = self.norm_constant
        if norm <= 0.0:
            return np.zeros_like(raw)
        return np.clip((raw - self.base_score) / norm, -1.0, 1.0)

    def _check(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.num_features:
            raise ValueError(
                f"expected feature matrix with {self.num_features} columns, "
                f"got shape {features.shape}"
            )
        return features


@dataclass(frozen=True)
class Score:
    raw: float
    prob_bad: float
    normalized_margin: float


def score(model: Model, features) -> Score:
    """Score one sounding: raw log-odds, BAD probability, normalized margin."""
    row = np.asarray(features, dtype=np.float64)
    if row.ndim != 1 or len(row) != model.num_features:
        raise ValueError(
            f"expected {model.num_features} features, got {row.shape}"
        )
    raw = float(model.predict_raw(row.reshape(1, -1))[0])
    margin = float(model.predict_margin(row.reshape(1, -1))[0])
    prob = float(np.clip(sigmoid(raw), _PROB_EPS, 1 - _PROB_EPS))
    return Score(raw=raw, prob_bad=prob, normalized_margin=margin)


class _NodeStats:
    """Histogram and totals of one pending leaf during growth."""

    __slots__ = ("rows", "gh", "hh", "ch", "g", "h", "c")

    def __init__(self, rows, gh, hh, ch):
        self.rows = rows
        self.gh = gh
        self.hh = hh
        self.ch = ch
        self.g = float(gh.sum())
        self.h = float(hh.sum())
        self.c = int(ch.sum())


def _histograms(binned, rows, g, h, num_features, num_bins):
    flat = (binned[rows] + np.arange(num_features) * num_bins).ravel()
    size = num_features * num_bins
    gh = np.bincount(flat, weights=np.repeat(g[rows], num_features), minlength=size)
    hh = np.bincount(flat, weights=np.repeat(h[rows], num_features), minlength=size)
    ch = np.bincount(flat, minlength=size)
    return (
        gh.reshape(num_features, num_bins),
        hh.reshape(num_features, num_bins),
        ch.reshape(num_features, num_bins).astype(np.int64),
    )


def _best_split(stats: _NodeStats, edges, lam, min_samples_leaf):
    """Highest-gain admissible split, ties to the lowest (feature, bin)."""
    best = None  # (gain, feature, bin)
    parent_term = stats.g**2 / (stats.h + lam) if stats.h + lam > 0 else np.inf
    for f, e in enumerate(edges):
        nb = len(e) + 1
        if nb < 2:
            continue
        gl = np.cumsum(stats.gh[f, :nb])[:-1]
        hl = np.cumsum(stats.hh[f, :nb])[:-1]
        cl = np.cumsum(stats.ch[f, :nb])[:-1]
        gr = stats.g - gl
        hr = stats.h - hl
        cr = stats.c - cl
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = (
                gl**2 / np.maximum(hl, 0.0) .__add__(lam).__rtruediv__(gl**2)
                if False
                else gl**2 / (np.maximum(hl, 0.0) + lam)
                + gr**2 / (np.maximum(hr, 0.0) + lam)
                - parent_term
            )
        valid = (cl >= min_samples_leaf) & (cr >= min_samples_leaf) & np.isfinite(gain)
        if not valid.any():
            continue
        gain = np.where(valid, gain, -np.inf)
        t = int(np.argmax(gain))
        if gain[t] >= 0.0 and (best is None or gain[t] > best[0]):
            best = (float(gain[t]), f, t)
    return best


def _grow_tree(binned, g, h, edges, config: TrainConfig, num_bins: int):
    """Grow one tree leaf-wise; returns (Tree, row->leaf-node map) or None."""
    n, num_features = binned.shape
    lam = config.lambda_l2
    feature: list[int] = [-1]
    bin_thr: list[int] = [0]
    threshold: list[float] = [0.0]
    left: list[int] = [-1]
    right: list[int] = [-1]
    value: list[float] = [0.0]

    root_rows = np.arange(n, dtype=np.int64)
    root = _NodeStats(root_rows, *_histograms(binned, root_rows, g, h, num_features, num_bins))
    pending: dict[int, _NodeStats] = {0: root}
    heap: list[tuple[float, int, int, tuple[float, int, int]]] = []
    order = 0
    root_split = _best_split(root, edges, lam, config.min_samples_leaf)
    if root_split is None:
        return None
    heapq.heappush(heap, (-root_split[0], order, 0, root_split))
    leaves = 1
    leaf_rows: dict[int, np.ndarray] = {0: root_rows}

    while heap and leaves < config.max_leaves:
        _, _, node, (gain, f, t) = heapq.heappop(heap)
        stats = pending.pop(node)
        go_left = binned[stats.rows, f] <= t
        rows_l = stats.rows[go_left]
        rows_r = stats.rows[~go_left]
        # smaller child by direct count, larger by subtraction from parent
        if len(rows_l) <= len(rows_r):
            small_rows, small_is_left = rows_l, True
        else:
            small_rows, small_is_left = rows_r, False
        sg, sh, sc = _histograms(binned, small_rows, g, h, num_features, num_bins)
        og, oh, oc = stats.gh - sg, stats.hh - sh, stats.ch - sc
        if small_is_left:
            child_l = _NodeStats(rows_l, sg, sh, sc)
            child_r = _NodeStats(rows_r, og, oh, oc)
        else:
            child_l = _NodeStats(rows_l, og, oh, oc)
            child_r = _NodeStats(rows_r, sg, sh, sc)

        id_l, id_r = len(feature), len(feature) + 1
        feature[node] = f
        bin_thr[node] = t
        threshold[node] = float(edges[f][t])
        left[node] = id_l
        right[node] = id_r
        for child_id, child in ((id_l, child_l), (id_r, child_r)):
            feature.append(-1)
            bin_thr.append(0)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(0.0)
            leaf_rows[child_id] = child.rows
            split = _best_split(child, edges, lam, config.min_samples_leaf)
            if split is not None:
                order += 1
                heapq.heappush(heap, (-split[0], order, child_id, split))
                pending[child_id] = child
        del leaf_rows[node]
        leaves += 1

    # Newton leaf values from each leaf's gradient/hessian totals
    leaf_of_row = np.zeros(n, dtype=np.int64)
    for node_id, rows in leaf_rows.items():
        gs = float(g[rows].sum())
        hs = float(h[rows].sum())
        value[node_id] = -gs / (hs + lam) if hs + lam > 0 else 0.0
        leaf_of_row[rows] = node_id

    tree = Tree(
        feature=np.array(feature, dtype=np.int64),
        bin_threshold=np.array(bin_thr, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        value=np.array(value, dtype=np.float64),
    )
    return tree, leaf_of_row


def labels_to_bool(labels) -> np.ndarray:
    """Coerce 'G'/'B' strings or booleans to a BAD-is-True array."""
    arr = np.asarray(labels)
    if arr.dtype == bool:
        return arr
    return arr == BAD


def train(features: np.ndarray, labels, config: TrainConfig) -> Model:
    """Fit a boosted forest; deterministic in (features, labels, config).

    ``labels`` may be 'G'/'B' strings or booleans with True meaning BAD.
    Boosting stops early once a round's root has no admissible split, so a
    single-class training set yields a prior-only model.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or len(features) == 0:
        raise ValueError("training set must be a non-empty 2-d feature matrix")
    y = labels_to_bool(labels)
    if len(y) != len(features):
        raise ValueError("features and labels disagree in length")

    prior = float(np.mean(y))
    if prior <= 0.0:
        base = -BASE_SCORE_CLAMP
    elif prior >= 1.0:
        base = BASE_SCORE_CLAMP
    else:
        base = float(np.clip(np.log(prior / (1.0 - prior)), -BASE_SCORE_CLAMP, BASE_SCORE_CLAMP))

    edges = build_bins(features, config.num_bins)
    binned = apply_bins(edges, features)
    yf = y.astype(np.float64)

    raw = np.full(len(features), base, dtype=np.float64)
    trees: list[Tree] = []
    for _ in range(config.num_rounds):
        p = np.clip(sigmoid(raw), _PROB_EPS, 1 - _PROB_EPS)
        g = p - yf
        h = p * (1.0 - p)
        grown = _grow_tree(binned, g, h, edges, config, config.num_bins)
        if grown is None:
            break
        tree, leaf_of_row = grown
        raw += config.learning_rate * tree.value[leaf_of_row]
        trees.append(tree)

    return Model(
        trees=trees,
        learning_rate=config.learning_rate,
        base_score=base,
        bin_edges=edges,
        num_features=features.shape[1],
    )


def _write_node(lines: list[str], tree: Tree, node: int) -> None:
    if tree.feature[node] < 0:
        lines.append(f"L {tree.value[node]!r}")
    else:
        lines.append(
            f"S {tree.feature[node]} {tree.bin_threshold[node]} {tree.threshold[node]!r}"
        )
        _write_node(lines, tree, int(tree.left[node]))
        _write_node(lines, tree, int(tree.right[node]))


def save_model(model: Model, path: str | Path) -> None:
    """Serialize a model as structured text; identical models, identical bytes."""
    lines = [MODEL_FORMAT_VERSION]
    lines.append(f"base_score {model.base_score!r}")
    lines.append(f"learning_rate {model.learning_rate!r}")
    lines.append(f"num_features {model.num_features}")
    for f, e in enumerate(model.bin_edges):
        lines.append(f"edges {f} {len(e)} " + " ".join(repr(v) for v in e.tolist()))
    lines.append(f"num_trees {len(model.trees)}")
    for i, tree in enumerate(model.trees):
        lines.append(f"tree {i} {len(tree.feature)}")
        _write_node(lines, tree, 0)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


class _NodeReader:
    def __init__(self, lines: list[str], start: int):
        self.lines = lines
        self.pos = start

    def read_tree(self) -> tuple[list, list, list, list, list, list]:
        feature, bins, thresholds, left, right, value = [], [], [], [], [], []

        def read_node() -> int:
            if self.pos >= len(self.lines):
                raise ModelFormatError("unexpected end of file inside a tree")
            parts = self.lines[self.pos].split()
            self.pos += 1
            node = len(feature)
            if parts[0] == "L" and len(parts) == 2:
                feature.append(-1)
                bins.append(0)
                thresholds.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(float(parts[1]))
            elif parts[0] == "S" and len(parts) == 4:
                feature.append(int(parts[1]))
                bins.append(int(parts[2]))
                thresholds.append(float(parts[3]))
                left.append(-1)
                right.append(-1)
                value.append(0.0)
                left[node] = read_node()
                right[node] = read_node()
            else:
                raise ModelFormatError(
                    f"line {self.pos}: unrecognized node record {self.lines[self.pos - 1]!r}"
                )
            return node

        read_node()
        return feature, bins, thresholds, left, right, value


def load_model(path: str | Path) -> Model:
    """Read a model file back; scores match the saved model bit for bit."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_FORMAT_VERSION:
        head = lines[0] if lines else ""
        raise ModelFormatError(f"unknown model format version {head!r}")
    try:
        base = float(lines[1].split()[1])
        lr = float(lines[2].split()[1])
        num_features = int(lines[3].split()[1])
        edges = []
        pos = 4
        for f in range(num_features):
            parts = lines[pos].split()
            if parts[0] != "edges" or int(parts[1]) != f:
                raise ModelFormatError(f"line {pos + 1}: expected edges for feature {f}")
            count = int(parts[2])
            edges.append(np.array([float(v) for v in parts[3 : 3 + count]], dtype=np.float64))
            pos += 1
        if not lines[pos].startswith("num_trees"):
            raise ModelFormatError(f"line {pos + 1}: expected num_trees")
        num_trees = int(lines[pos].split()[1])
        pos += 1
        trees = []
        for i in range(num_trees):
            header = lines[pos].split()
            if header[0] != "tree" or int(header[1]) != i:
                raise ModelFormatError(f"line {pos + 1}: expected tree {i}")
            expected_nodes = int(header[2])
            reader = _NodeReader(lines, pos + 1)
            feature, bins, thresholds, left, right, value = reader.read_tree()
            if len(feature) != expected_nodes:
                raise ModelFormatError(f"tree {i}: node count mismatch")
            trees.append(
                Tree(
                    feature=np.array(feature, dtype=np.int64),
                    bin_threshold=np.array(bins, dtype=np.int64),
                    threshold=np.array(thresholds, dtype=np.float64),
                    left=np.array(left, dtype=np.int64),
                    right=np.array(right, dtype=np.int64),
                    value=np.array(value, dtype=np.float64),
                )
            )
            pos = reader.pos
    except ModelFormatError:
        raise
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    return Model(
        trees=trees,
        learning_rate=lr,
        base_score=base,
        bin_edges=edges,
        num_features=num_features,
    )
