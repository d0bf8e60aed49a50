"""Duplicate detection over flaw records.

Pairs of records are turned into seven similarity features in [0, 1] and
scored by an L2-regularized logistic regression. Labels come from a human
through uncertainty sampling: the pairs the current model is least sure
about are asked first.
"""

from __future__ import annotations

import itertools
import json
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
import yaml

from .kernels import edit_similarity

FEATURE_NAMES = (
    "title_similarity",
    "description_similarity",
    "vendor_equality",
    "system_similarity",
    "cwe_equality",
    "cve_equality",
    "keyword_jaccard",
)
N_FEATURES = len(FEATURE_NAMES)

DUPLICATE = "duplicate"
DISTINCT = "distinct"

_TOKEN = re.compile(r"[^\W_]+")


class DegenerateDataError(ValueError):
    pass


# --- features ---------------------------------------------------------------

def tokens(text: str | None) -> list[str]:
    return _TOKEN.findall((text or "").casefold())


def jaccard(a: set, b: set) -> float:
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def text_similarity(a: str | None, b: str | None) -> float:
    """max(token-set Jaccard, edit similarity) on case-folded token streams.

    Two empty texts score 0: absence of text is not evidence of sameness.
    """
    ta, tb = tokens(a), tokens(b)
    if not ta or not tb:
        return 0.0
    j = jaccard(set(ta), set(tb))
    if j == 1.0:
        return 1.0
    return max(j, edit_similarity(" ".join(ta), " ".join(tb)))


def _keyword_set(kw) -> set[str]:
    items = kw if isinstance(kw, list) else str(kw or "").split(",")
    return {" ".join(tokens(str(x))) for x in items} - {""}


def _vendor_key(vendor) -> str:
    return " ".join(tokens(vendor)) if vendor else ""


def featurize_pair(a: Mapping, b: Mapping) -> tuple[float, ...]:
    va, vb = _vendor_key(a.get("vendor")), _vendor_key(b.get("vendor"))
    cve_a, cve_b = a.get("cve", "None"), b.get("cve", "None")
    return (
        text_similarity(a.get("title"), b.get("title")),
        text_similarity(a.get("description"), b.get("description")),
        float(bool(va) and va == vb),
        text_similarity(a.get("system"), b.get("system")),
        float(a.get("cwe", "None") == b.get("cwe", "None")),
        float(cve_a != "None" and cve_a == cve_b),
        jaccard(_keyword_set(a.get("keywords")), _keyword_set(b.get("keywords"))),
    )


# --- pairs ------------------------------------------------------------------

@dataclass(frozen=True)
class CandidatePair:
    id_a: int
    id_b: int
    features: tuple[float, ...] = ()

    @property
    def key(self) -> tuple[int, int]:
        return (self.id_a, self.id_b)


@dataclass(frozen=True)
class LabeledPair:
    id_a: int
    id_b: int
    features: tuple[float, ...]
    label: str
    labeler: str = ""

    def __post_init__(self):
        if not self.id_a < self.id_b:
            raise ValueError(f"pair ({self.id_a}, {self.id_b}) is not in canonical order")
        if self.label not in (DUPLICATE, DISTINCT):
            raise ValueError(f"unknown label '{self.label}'")

    @property
    def key(self) -> tuple[int, int]:
        return (self.id_a, self.id_b)

    def to_json(self) -> str:
        return json.dumps({"a": self.id_a, "b": self.id_b, "label": self.label,
                           "labeler": self.labeler, "features": list(self.features)})

    @classmethod
    def from_json(cls, line: str) -> "LabeledPair":
        d = json.loads(line)
        return cls(int(d["a"]), int(d["b"]), tuple(float(x) for x in d["features"]),
                   d["label"], d.get("labeler", ""))


def _as_records(corpus) -> dict[int, Mapping]:
    if isinstance(corpus, Mapping):
        return {int(k): v for k, v in corpus.items()}
    return {int(r["id"]): r for r in corpus}


def _blocking_keys(rec: Mapping) -> set[tuple[str, str]]:
    keys = {("title", t) for t in tokens(rec.get("title")) if len(t) >= 4}
    vendor = _vendor_key(rec.get("vendor"))
    if vendor:
        keys.add(("vendor", vendor))
    if rec.get("cve", "None") != "None":
        keys.add(("cve", rec["cve"]))
    return keys


def candidate_pairs(corpus, all_pairs: bool = False) -> list[CandidatePair]:
    """Featurized pairs sharing a blocking key, in canonical (id_a, id_b) order.

    Blocking keys: normalized vendor, non-"None" cve, title tokens of length
    >= 4. ``all_pairs`` skips blocking.
    """
    records = _as_records(corpus)
    ids = sorted(records)
    if all_pairs:
        keys: Iterable[tuple[int, int]] = itertools.combinations(ids, 2)
    else:
        blocks: dict[tuple[str, str], list[int]] = defaultdict(list)
        for i in ids:
            for k in _blocking_keys(records[i]):
                blocks[k].append(i)
        found = set()
        for members in blocks.values():
            found.update(itertools.combinations(members, 2))
        keys = sorted(found)
    return [CandidatePair(a, b, featurize_pair(records[a], records[b])) for a, b in keys]


# --- model ------------------------------------------------------------------

@dataclass(frozen=True)
class Hyperparameters:
    lam: float = 0.01
    learning_rate: float = 0.1
    epochs: int = 500
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and non-negative")
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning rate must be finite and positive")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")


@dataclass(frozen=True)
class DedupModel:
    weights: tuple[float, ...]
    bias: float = 0.0
    lam: float = 0.01
    seed: int = 0
    epochs: int = 500
    learning_rate: float = 0.1
    feature_names: tuple[str, ...] = FEATURE_NAMES
    loss_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if len(self.weights) != len(self.feature_names):
            raise ValueError("weight vector and feature list lengths differ")

    @classmethod
    def zero(cls, n: int = N_FEATURES) -> "DedupModel":
        return cls((0.0,) * n, feature_names=_names(n))

    @classmethod
    def prior(cls) -> "DedupModel":
        """Untrained heuristic: p = 0.5 when the features sum to half their maximum."""
        return cls((1.0,) * N_FEATURES, bias=-N_FEATURES / 2)

    def save(self, path: str | Path) -> None:
        doc = {
            "feature_names": list(self.feature_names),
            "weights": [float(w) for w in self.weights],
            "bias": float(self.bias),
            "lambda": float(self.lam),
            "learning_rate": float(self.learning_rate),
            "epochs": int(self.epochs),
            "seed": int(self.seed),
        }
        Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DedupModel":
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        return cls(
            weights=tuple(float(w) for w in doc["weights"]),
            bias=float(doc["bias"]),
            lam=float(doc["lambda"]),
            seed=int(doc["seed"]),
            epochs=int(doc["epochs"]),
            learning_rate=float(doc["learning_rate"]),
            feature_names=tuple(doc["feature_names"]),
        )


def _names(n: int) -> tuple[str, ...]:
    return FEATURE_NAMES if n == N_FEATURES else tuple(f"f{i}" for i in range(n))


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def regularized_loss(w, b, X, y, lam) -> float:
    """Mean logistic loss plus (lam/2)*||w||^2; the bias is not penalized."""
    z = X @ w + b
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * (w @ w))


def loss_gradient(w, b, X, y, lam) -> tuple[np.ndarray, float]:
    r = sigmoid(X @ w + b) - y
    n = len(y)
    return X.T @ r / n + lam * w, float(r.sum() / n)


def _design(pairs: Sequence[LabeledPair]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([p.features for p in pairs], dtype=float)
    y = np.array([p.label == DUPLICATE for p in pairs], dtype=float)
    return X, y


def train(pairs: Sequence[LabeledPair], hyper: Hyperparameters = Hyperparameters()) -> DedupModel:
    """Fit from zero weights with ``epochs`` full-batch steps.

    The data term takes an explicit gradient step and the L2 term an implicit
    one, ``w <- (w - lr*g) / (1 + lr*lam)``, which has the same fixed point as
    plain gradient descent but stays stable for large ``lam``.
    """
    if not pairs:
        raise DegenerateDataError("no labeled pairs")
    X, y = _design(pairs)
    if y.min() == y.max():
        only = DUPLICATE if y[0] else DISTINCT
        raise DegenerateDataError(
            f"all {len(y)} labels are '{only}'; need at least one of each class"
        )
    lr, lam = hyper.learning_rate, hyper.lam
    w = np.zeros(X.shape[1])
    b = 0.0
    losses = [regularized_loss(w, b, X, y, lam)]
    n = len(y)
    for _ in range(hyper.epochs):
        r = sigmoid(X @ w + b) - y
        w = (w - lr * (X.T @ r) / n) / (1.0 + lr * lam)
        b -= lr * r.sum() / n
        losses.append(regularized_loss(w, b, X, y, lam))
    return DedupModel(tuple(float(v) for v in w), float(b), lam, hyper.seed, hyper.epochs,
                      lr, _names(X.shape[1]), tuple(losses))


def predict(model: DedupModel, features: Sequence[float]) -> float:
    if len(features) != len(model.weights):
        raise ValueError(
            f"model expects {len(model.weights)} features, got {len(features)}"
        )
    z = float(np.dot(model.weights, features)) + model.bias
    return float(sigmoid(z))


def predict_many(model: DedupModel, pairs: Sequence[CandidatePair]) -> np.ndarray:
    if not pairs:
        return np.empty(0)
    X = np.array([p.features for p in pairs], dtype=float)
    if X.shape[1] != len(model.weights):
        raise ValueError(f"model expects {len(model.weights)} features, got {X.shape[1]}")
    return sigmoid(X @ np.asarray(model.weights) + model.bias)


# --- active learning ----------------------------------------------------------

def rank_by_uncertainty(probs: Sequence[float], pairs: Sequence[CandidatePair],
                        k: int) -> list[CandidatePair]:
    if k <= 0:
        raise ValueError("k must be positive")
    order = sorted(range(len(pairs)),
                   key=lambda i: (round(abs(float(probs[i]) - 0.5), 12), pairs[i].key))
    return [pairs[i] for i in order[:k]]


def select_queries(model: DedupModel, unlabeled: Sequence[CandidatePair],
                   k: int) -> list[CandidatePair]:
    """The k pairs with probability closest to 0.5; ties go to the smaller (id_a, id_b)."""
    if k <= 0:
        raise ValueError("k must be positive")
    return rank_by_uncertainty(predict_many(model, unlabeled), unlabeled, k)


def next_queries(model: DedupModel | None, unlabeled: Sequence[CandidatePair],
                 labels: Sequence[LabeledPair], k: int) -> list[CandidatePair]:
    """Queries for the next labeling round.

    Until both classes have been seen, the prior model's most confident pairs
    for the missing class are asked (so a first model can be trained at
    all); afterwards plain uncertainty sampling with ``model``.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if not unlabeled:
        return []
    seen = {p.label for p in labels}
    if model is not None and seen == {DUPLICATE, DISTINCT}:
        return select_queries(model, unlabeled, k)
    probs = predict_many(model or DedupModel.prior(), unlabeled)
    want_dup = DUPLICATE not in seen
    want_distinct = DISTINCT not in seen
    if want_dup and want_distinct:
        half = (k + 1) // 2
        hi = _most_confident(probs, unlabeled, half, duplicate=True)
        rest = [p for p in unlabeled if p not in set(hi)]
        lo = _most_confident(predict_many(model or DedupModel.prior(), rest), rest,
                             k - half, duplicate=False) if k > half else []
        return hi + lo
    return _most_confident(probs, unlabeled, k, duplicate=want_dup)


def _most_confident(probs, pairs, k, duplicate: bool) -> list[CandidatePair]:
    sign = -1.0 if duplicate else 1.0
    order = sorted(range(len(pairs)), key=lambda i: (sign * float(probs[i]), pairs[i].key))
    return [pairs[i] for i in order[:k]]


Oracle = Callable[[CandidatePair], "str | None"]


def active_learning(pairs: Sequence[CandidatePair], oracle: Oracle, budget: int = 30,
                    batch: int = 5, hyper: Hyperparameters = Hyperparameters(),
                    labeler: str = "oracle",
                    labels: Sequence[LabeledPair] = ()) -> tuple[DedupModel | None, list[LabeledPair]]:
    """Ask ``oracle`` about at most ``budget`` pairs, retraining after each batch.

    ``oracle`` returns DUPLICATE, DISTINCT, or None to skip. Returns the last
    trained model (None if a model could never be fit) and all labels.
    """
    labels = list(labels)
    asked = {p.key for p in labels}
    model = _try_train(labels, hyper)
    spent = 0
    while spent < budget:
        pool = [p for p in pairs if p.key not in asked]
        queries = next_queries(model, pool, labels, min(batch, budget - spent))
        if not queries:
            break
        for q in queries:
            asked.add(q.key)
            spent += 1
            answer = oracle(q)
            if answer is not None:
                labels.append(LabeledPair(q.id_a, q.id_b, q.features, answer, labeler))
        model = _try_train(labels, hyper) or model
    return model, labels


def _try_train(labels, hyper) -> DedupModel | None:
    try:
        return train(labels, hyper)
    except DegenerateDataError:
        return None


# --- clustering -------------------------------------------------------------

@dataclass(frozen=True)
class Cluster:
    canonical: int
    members: tuple[int, ...]


def cluster_edges(ids: Iterable[int], edges: Iterable[tuple[int, int]]) -> list[Cluster]:
    parent = {i: i for i in ids}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = defaultdict(list)
    for i in parent:
        groups[find(i)].append(i)
    return sorted((Cluster(min(m), tuple(sorted(m))) for m in groups.values()),
                  key=lambda c: c.canonical)


def find_duplicates(corpus, model: DedupModel, threshold: float = 0.5,
                    all_pairs: bool = False,
                    pairs: Sequence[CandidatePair] | None = None) -> list[Cluster]:
    """Connected components of candidate pairs scored at or above ``threshold``."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    records = _as_records(corpus)
    if pairs is None:
        pairs = candidate_pairs(records, all_pairs=all_pairs)
    probs = predict_many(model, pairs)
    edges = [p.key for p, pr in zip(pairs, probs) if pr >= threshold]
    return cluster_edges(records, edges)


def duplicate_pairs(clusters: Iterable[Cluster]) -> set[tuple[int, int]]:
    """Every canonical pair implied by the clusters."""
    return {pair for c in clusters for pair in itertools.combinations(c.members, 2)}


def read_label_log(path: str | Path) -> list[LabeledPair]:
    path = Path(path)
    if not path.exists():
        return []
    with path.open(encoding="utf-8") as fh:
        return [LabeledPair.from_json(line) for line in fh if line.strip()]


def append_label_log(path: str | Path, labels: Iterable[LabeledPair]) -> None:
    with Path(path).open("a", encoding="utf-8") as fh:
        for p in labels:
            fh.write(p.to_json() + "\n")

