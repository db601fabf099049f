"""Score-producing binary classifiers behind one train/score interface.

Four kinds are provided: ``dummy`` (constant majority-class score), ``knn``
(standardised Euclidean vote fraction with tie expansion at the k-th
neighbour), ``random_forest`` and ``balanced_random_forest`` (Gini trees on
bootstrap bags; the balanced variant draws equal per-class counts per tree).
Scores are always in [0, 1] and every kind is bit-for-bit deterministic for
a fixed (spec, data) pair: all randomness flows from ``spec.seed`` through
the package-wide seed derivation.

Trees split numeric features at midpoints of sorted distinct values, choose
the split with minimal weighted Gini impurity and break ties by lowest
feature index, then lowest split value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .dataset import EncodedMatrix
from .errors import InputError, StateError
from .metrics import SENTINEL_THRESHOLD
from .seeding import rng_for

DUMMY = "dummy"
KNN = "knn"
RANDOM_FOREST = "random_forest"
BALANCED_RANDOM_FOREST = "balanced_random_forest"
KINDS = (DUMMY, KNN, RANDOM_FOREST, BALANCED_RANDOM_FOREST)

MODEL_FORMAT = "falsecall-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class ClassifierSpec:
    """Model kind plus hyperparameters and the seed all randomness hangs on."""

    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown classifier kind {self.kind!r}")


@dataclass(frozen=True)
class HyperParamSpace:
    """Sampling ranges for one classifier kind.

    ``int_ranges`` are inclusive bounds; parameters listed in ``odd_only``
    are drawn from the odd values inside their range.
    """

    kind: str
    int_ranges: dict = field(default_factory=dict)
    choices: dict = field(default_factory=dict)
    odd_only: frozenset = frozenset()

    @classmethod
    def default(cls, kind: str) -> "HyperParamSpace":
        if kind == DUMMY:
            return cls(kind=kind)
        if kind == KNN:
            return cls(kind=kind, int_ranges={"k": (1, 51)}, odd_only=frozenset({"k"}))
        if kind in (RANDOM_FOREST, BALANCED_RANDOM_FOREST):
            return cls(kind=kind,
                       int_ranges={"n_trees": (10, 300), "max_depth": (2, 30),
                                   "min_leaf": (1, 20)},
                       choices={"feature_subsample": ("sqrt", "log2", "all")})
        raise InputError(f"unknown classifier kind {kind!r}")

    def narrowed(self, **bounds) -> "HyperParamSpace":
        """Copy with tightened bounds, e.g. ``n_trees=(10, 60)``.

        Integer parameters take an inclusive (low, high) pair; choice
        parameters take a subset of their declared options.
        """
        ranges = dict(self.int_ranges)
        choices = dict(self.choices)
        for name, bound in bounds.items():
            if name in ranges:
                lo, hi = bound
                base_lo, base_hi = ranges[name]
                if lo < base_lo or hi > base_hi or lo > hi:
                    raise InputError(
                        f"bounds {name}=({lo}, {hi}) leave the declared range")
                ranges[name] = (int(lo), int(hi))
            elif name in choices:
                subset = tuple(bound)
                unknown = set(subset) - set(choices[name])
                if not subset or unknown:
                    raise InputError(
                        f"choices {name}={subset} leave the declared options")
                choices[name] = subset
            else:
                raise InputError(f"{self.kind} has no parameter {name!r}")
        return HyperParamSpace(kind=self.kind, int_ranges=ranges,
                               choices=choices, odd_only=self.odd_only)

    def sample(self, rng: np.random.Generator) -> dict:
        params = {}
        for name in sorted(self.int_ranges):
            lo, hi = self.int_ranges[name]
            if name in self.odd_only:
                odds = np.arange(lo + (lo % 2 == 0), hi + 1, 2)
                params[name] = int(odds[rng.integers(odds.size)])
            else:
                params[name] = int(rng.integers(lo, hi + 1))
        for name in sorted(self.choices):
            options = self.choices[name]
            params[name] = options[int(rng.integers(len(options)))]
        return params

    def validate(self, params: dict) -> None:
        known = set(self.int_ranges) | set(self.choices)
        unknown = set(params) - known
        if unknown:
            raise InputError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        for name, (lo, hi) in self.int_ranges.items():
            if name not in params:
                raise InputError(f"{self.kind}: missing hyperparameter {name!r}")
            value = params[name]
            if not lo <= value <= hi:
                raise InputError(f"{self.kind}: {name}={value} outside [{lo}, {hi}]")
            if name in self.odd_only and value % 2 == 0:
                raise InputError(f"{self.kind}: {name}={value} must be odd")
        for name, options in self.choices.items():
            if params.get(name) not in options:
                raise InputError(f"{self.kind}: {name} must be one of {options}")


@dataclass
class TrainedModel:
    """Fitted state plus the deployable decision threshold.

    The threshold is ``None`` until set (the dummy sets its own at training
    time so it always predicts the majority class); ``SENTINEL_THRESHOLD``
    means every row is classified 0.
    """

    spec: ClassifierSpec
    state: dict
    decision_threshold: Optional[float] = None
    metadata: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Decision trees


def _grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
               max_depth: Optional[int], min_leaf: int, n_candidates: int) -> dict:
    n_features = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    vote: list[int] = []

    def leaf(pos: int, count: int) -> int:
        node = len(feature)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        vote.append(1 if pos > count - pos else 0)
        return node

    def best_split(idx: np.ndarray, feats: np.ndarray):
        n = idx.size
        y_node = y[idx]
        total_pos = int(y_node.sum())
        best = None
        for f in feats:
            values = X[idx, f]
            order = np.argsort(values, kind="stable")
            vs = values[order]
            boundaries = np.nonzero(vs[1:] != vs[:-1])[0]
            if boundaries.size == 0:
                continue
            nl = boundaries + 1
            if min_leaf > 1:
                okay = (nl >= min_leaf) & (n - nl >= min_leaf)
                boundaries, nl = boundaries[okay], nl[okay]
                if boundaries.size == 0:
                    continue
            nr = n - nl
            pl = np.cumsum(y_node[order])[boundaries]
            pr = total_pos - pl
            gini_l = 1.0 - (pl / nl) ** 2 - ((nl - pl) / nl) ** 2
            gini_r = 1.0 - (pr / nr) ** 2 - ((nr - pr) / nr) ** 2
            weighted = (nl * gini_l + nr * gini_r) / n
            b = int(np.argmin(weighted))
            if best is None or weighted[b] < best[0]:
                cut = boundaries[b]
                best = (float(weighted[b]), int(f),
                        float((vs[cut] + vs[cut + 1]) / 2.0))
        return best

    def build(idx: np.ndarray, depth: int) -> int:
        n = idx.size
        pos = int(y[idx].sum())
        if (pos == 0 or pos == n or n < 2 * min_leaf
                or (max_depth is not None and depth >= max_depth)):
            return leaf(pos, n)
        if n_candidates < n_features:
            feats = np.sort(rng.choice(n_features, n_candidates, replace=False))
        else:
            feats = np.arange(n_features)
        split = best_split(idx, feats)
        if split is None:
            return leaf(pos, n)
        _, f, cut = split
        node = len(feature)
        feature.append(f)
        threshold.append(cut)
        left.append(-1)
        right.append(-1)
        vote.append(-1)
        go_left = X[idx, f] <= cut
        left[node] = build(idx[go_left], depth + 1)
        right[node] = build(idx[~go_left], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return {"feature": np.array(feature, dtype=np.int64),
            "threshold": np.array(threshold, dtype=float),
            "left": np.array(left, dtype=np.int64),
            "right": np.array(right, dtype=np.int64),
            "vote": np.array(vote, dtype=np.int64)}


def _apply_tree(tree: dict, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    node = np.zeros(n, dtype=np.int64)
    while True:
        feats = tree["feature"][node]
        internal = feats >= 0
        if not internal.any():
            return tree["vote"][node]
        rows = np.nonzero(internal)[0]
        x = X[rows, feats[rows]]
        go_left = x <= tree["threshold"][node[rows]]
        node[rows] = np.where(go_left, tree["left"][node[rows]],
                              tree["right"][node[rows]])


def _candidate_count(mode: str, n_features: int) -> int:
    if mode == "all":
        return n_features
    if mode == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if mode == "log2":
        return max(1, int(math.log2(n_features))) if n_features > 1 else 1
    raise InputError(f"unknown feature_subsample mode {mode!r}")


# ---------------------------------------------------------------------------
# Training


def _train_forest(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray) -> dict:
    params = spec.hyperparameters
    n_trees = int(params.get("n_trees", 100))
    max_depth = params.get("max_depth")
    max_depth = int(max_depth) if max_depth is not None else None
    min_leaf = int(params.get("min_leaf", 1))
    mode = params.get("feature_subsample", "all")
    if n_trees < 1:
        raise InputError("n_trees must be >= 1")
    if min_leaf < 1:
        raise InputError("min_leaf must be >= 1")
    n_candidates = _candidate_count(mode, X.shape[1])

    balanced = spec.kind == BALANCED_RANDOM_FOREST
    n = X.shape[0]
    class0 = np.nonzero(y == 0)[0]
    class1 = np.nonzero(y == 1)[0]
    per_class = min(class0.size, class1.size)

    trees = []
    bag_positive = []
    for t in range(n_trees):
        rng = rng_for(spec.seed, "tree", t)
        if balanced:
            bag = np.concatenate([rng.choice(class0, per_class, replace=True),
                                  rng.choice(class1, per_class, replace=True)])
            assert int(y[bag].sum()) == per_class == bag.size - int(y[bag].sum())
        else:
            bag = rng.integers(0, n, n)
        bag_positive.append(int(y[bag].sum()))
        trees.append(_grow_tree(X[bag], y[bag], rng, max_depth, min_leaf,
                                n_candidates))
    return {"trees": trees, "bag_positive_counts": bag_positive,
            "per_class_bag": per_class if balanced else None}


def _train_knn(spec: ClassifierSpec, X: np.ndarray, y: np.ndarray) -> dict:
    k = int(spec.hyperparameters.get("k", 5))
    if k < 1:
        raise InputError("k must be >= 1")
    if k > X.shape[0]:
        raise InputError(f"k={k} exceeds the {X.shape[0]} training rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return {"k": k, "mean": mean, "std": std,
            "X": (X - mean) / std, "y": y.astype(np.int64)}


def train(spec: ClassifierSpec, matrix: EncodedMatrix) -> TrainedModel:
    """Fit a model; deterministic for identical (spec, data)."""
    X, y = matrix.X, matrix.labels
    if X.shape[0] == 0:
        raise InputError("cannot train on an empty matrix")
    counts = (int(np.count_nonzero(y == 0)), int(np.count_nonzero(y == 1)))
    metadata = {"n_train": X.shape[0], "n_features": X.shape[1],
                "class_counts": counts}

    if spec.kind == DUMMY:
        majority = 0 if counts[0] >= counts[1] else 1
        threshold = SENTINEL_THRESHOLD if majority == 0 else 0.0
        return TrainedModel(spec=spec, state={"majority": majority},
                            decision_threshold=threshold, metadata=metadata)

    if min(counts) == 0:
        raise InputError(f"{spec.kind} training needs both classes, got counts {counts}")
    if spec.kind == KNN:
        state = _train_knn(spec, X, y)
    elif spec.kind in (RANDOM_FOREST, BALANCED_RANDOM_FOREST):
        state = _train_forest(spec, X, y)
    else:
        raise InputError(f"unknown classifier kind {spec.kind!r}")
    return TrainedModel(spec=spec, state=state, metadata=metadata)


# ---------------------------------------------------------------------------
# Scoring


def _as_features(model: TrainedModel, rows: Union[EncodedMatrix, np.ndarray]) -> np.ndarray:
    X = rows.X if isinstance(rows, EncodedMatrix) else np.asarray(rows, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.metadata["n_features"]:
        raise InputError(
            f"expected {model.metadata['n_features']} feature columns, "
            f"got shape {X.shape}")
    return X


def score(model: TrainedModel, rows: Union[EncodedMatrix, np.ndarray]) -> np.ndarray:
    """Scores in [0, 1]; a pure function of fitted state and input."""
    X = _as_features(model, rows)
    kind = model.spec.kind
    if kind == DUMMY:
        return np.full(X.shape[0], float(model.state["majority"]))
    if kind == KNN:
        return _score_knn(model.state, X)
    if kind in (RANDOM_FOREST, BALANCED_RANDOM_FOREST):
        votes = np.zeros(X.shape[0])
        trees = model.state["trees"]
        for tree in trees:
            votes += _apply_tree(tree, X)
        return votes / len(trees)
    raise InputError(f"unknown classifier kind {kind!r}")


def _score_knn(state: dict, X: np.ndarray, chunk: int = 256) -> np.ndarray:
    Xq = (X - state["mean"]) / state["std"]
    Xt, y, k = state["X"], state["y"], state["k"]
    out = np.empty(Xq.shape[0])
    for start in range(0, Xq.shape[0], chunk):
        block = Xq[start:start + chunk]
        d2 = ((block[:, None, :] - Xt[None, :, :]) ** 2).sum(axis=2)
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        mask = d2 <= kth[:, None]
        out[start:start + chunk] = (mask @ y) / mask.sum(axis=1)
    return out


def classify(model: TrainedModel, rows: Union[EncodedMatrix, np.ndarray]) -> np.ndarray:
    """Apply the decision rule score >= threshold; requires a set threshold."""
    if model.decision_threshold is None:
        raise StateError("decision threshold is not set")
    return (score(model, rows) >= model.decision_threshold).astype(np.int64)


# ---------------------------------------------------------------------------
# Persistence


def _encode_threshold(value: Optional[float]):
    if value is None:
        return None
    if math.isinf(value):
        return "inf"
    return float(value)


def _decode_threshold(value):
    if value is None:
        return None
    if value == "inf":
        return SENTINEL_THRESHOLD
    return float(value)


def save_model(model: TrainedModel, path) -> None:
    """Persist as a self-describing, versioned JSON document."""
    state = model.state
    if model.spec.kind in (RANDOM_FOREST, BALANCED_RANDOM_FOREST):
        state = dict(state)
        state["trees"] = [{key: tree[key].tolist() for key in
                           ("feature", "threshold", "left", "right", "vote")}
                          for tree in state["trees"]]
    elif model.spec.kind == KNN:
        state = {"k": state["k"], "mean": state["mean"].tolist(),
                 "std": state["std"].tolist(), "X": state["X"].tolist(),
                 "y": state["y"].tolist()}
    document = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.spec.kind,
        "hyperparameters": model.spec.hyperparameters,
        "seed": model.spec.seed,
        "decision_threshold": _encode_threshold(model.decision_threshold),
        "metadata": model.metadata,
        "state": state,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, sort_keys=True)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as handle:
        document = json.load(handle)
    if document.get("format") != MODEL_FORMAT:
        raise InputError(f"{path}: not a {MODEL_FORMAT} file")
    if document.get("version") != MODEL_VERSION:
        raise InputError(f"{path}: unsupported version {document.get('version')}")
    spec = ClassifierSpec(kind=document["kind"],
                          hyperparameters=document["hyperparameters"],
                          seed=document["seed"])
    state = document["state"]
    if spec.kind in (RANDOM_FOREST, BALANCED_RANDOM_FOREST):
        state = dict(state)
        state["trees"] = [{"feature": np.array(t["feature"], dtype=np.int64),
                           "threshold": np.array(t["threshold"], dtype=float),
                           "left": np.array(t["left"], dtype=np.int64),
                           "right": np.array(t["right"], dtype=np.int64),
                           "vote": np.array(t["vote"], dtype=np.int64)}
                          for t in state["trees"]]
    elif spec.kind == KNN:
        state = {"k": int(state["k"]), "mean": np.array(state["mean"]),
                 "std": np.array(state["std"]), "X": np.array(state["X"]),
                 "y": np.array(state["y"], dtype=np.int64)}
    return TrainedModel(spec=spec, state=state,
                        decision_threshold=_decode_threshold(
                            document["decision_threshold"]),
                        metadata=document["metadata"])
