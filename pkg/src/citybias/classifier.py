"""Hashed bag-of-n-grams shallow neural classifier.

Architecture: word n-grams (orders 1-3) hashed into 2^21 buckets, a learned
embedding row per bucket, mean pooling, one linear+sigmoid readout.  Training
is plain per-example SGD on binary cross-entropy with a linearly decayed
learning rate, single-threaded so a fixed seed gives bit-identical models.

The embedding table is materialized lazily: row r is deterministically
generated from (seed, r) on first touch, and only rows updated by training
are stored.  Prediction never mutates the model, so batch scoring can run in
parallel.
"""

from __future__ import annotations

import struct
from bisect import bisect_left
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .tokenize import ngrams, tokenize

_MAGIC = b"CBNG"
_VERSION = 1

# second word of the Philox key for the epoch-shuffle stream; embedding row
# keys occupy [0, B) so this cannot collide with them
_STREAM_SHUFFLE = 1 << 62


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: int
    confidence: float = 1.0
    provenance: str = "seed"


@dataclass(frozen=True)
class TrainConfig:
    orders: tuple[int, ...] = (1, 2, 3)
    buckets: int = 1 << 21
    dim: int = 10
    epochs: int = 5
    learning_rate: float = 0.1
    seed: int = 0
    threshold: float = 0.5

    def validate(self) -> None:
        if not set(self.orders) <= {1, 2, 3}:
            raise ConfigError(f"n-gram orders must be within {{1,2,3}}, got {self.orders}")
        if self.buckets < 2 or self.buckets & (self.buckets - 1):
            raise ConfigError(f"buckets must be a power of two, got {self.buckets}")
        if self.dim < 1:
            raise ConfigError("embedding dim must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError("threshold must lie in (0,1)")


def hash_ngram(gram: str, buckets: int) -> int:
    digest = blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & (buckets - 1)


def featurize(text: str, orders: tuple[int, ...] = (1, 2, 3), buckets: int = 1 << 21) -> np.ndarray:
    """Hashed ids (one per n-gram occurrence) as an int64 array; empty for empty text."""
    if not set(orders) <= {1, 2, 3}:
        raise ConfigError(f"n-gram orders must be within {{1,2,3}}, got {orders}")
    if buckets < 2 or buckets & (buckets - 1):
        raise ConfigError(f"buckets must be a power of two, got {buckets}")
    toks = tokenize(text)
    return np.array([hash_ngram(g, buckets) for g in ngrams(toks, tuple(sorted(orders)))], dtype=np.int64)


def _init_row(seed: int, row: int, dim: int) -> np.ndarray:
    """Deterministic initial value of embedding row `row`: hash bytes mapped
    into the centered uniform [-0.5/dim, 0.5/dim)."""
    chunks = []
    for c in range((dim + 7) // 8):
        digest = blake2b(struct.pack("<QQQ", seed, row, c), digest_size=64).digest()
        chunks.append(np.frombuffer(digest, dtype="<u8"))
    u = np.concatenate(chunks)[:dim].astype(np.float64)
    return (u / 2.0**64 - 0.5) / dim


# reserved id outside the bucket range; seeds the output weights so the
# embedding gradient (scaled by w) is nonzero from the first update
_ROW_OUTPUT = 2**64 - 1


def _init_output(seed: int, dim: int) -> np.ndarray:
    return _init_row(seed, _ROW_OUTPUT, dim) * dim * 10.0


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return float(1.0 / (1.0 + np.exp(-z)))
    e = np.exp(z)
    return float(e / (1.0 + e))


@dataclass
class ClassifierModel:
    config: TrainConfig
    rows: dict[int, np.ndarray] = field(default_factory=dict)
    w: np.ndarray = field(default_factory=lambda: np.zeros(10))
    b: float = 0.0
    threshold: float = 0.5

    def row(self, idx: int) -> np.ndarray:
        """Current value of embedding row idx without materializing it."""
        r = self.rows.get(idx)
        if r is None:
            return _init_row(self.config.seed, idx, self.config.dim)
        return r

    def pooled(self, ids: np.ndarray) -> np.ndarray:
        if len(ids) == 0:
            return np.zeros(self.config.dim)
        acc = np.zeros(self.config.dim)
        for idx in ids:
            acc += self.row(int(idx))
        return acc / len(ids)

    def score_ids(self, ids: np.ndarray) -> float:
        return _sigmoid(float(self.w @ self.pooled(ids) + self.b))

    def predict(self, text: str) -> float:
        return self.score_ids(featurize(text, self.config.orders, self.config.buckets))

    def classify(self, text: str) -> bool:
        return self.predict(text) >= self.threshold

    def save(self, path: str | Path) -> None:
        cfg = self.config
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQIIdQIdd", _VERSION, cfg.buckets, cfg.dim, len(cfg.orders),
                                 self.threshold, cfg.seed, cfg.epochs, cfg.learning_rate, self.b))
            fh.write(struct.pack(f"<{len(cfg.orders)}I", *cfg.orders))
            fh.write(np.asarray(self.w, dtype="<f8").tobytes())
            fh.write(struct.pack("<Q", len(self.rows)))
            for idx in sorted(self.rows):
                fh.write(struct.pack("<Q", idx))
                fh.write(np.asarray(self.rows[idx], dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "ClassifierModel":
        with open(path, "rb") as fh:
            if fh.read(4) != _MAGIC:
                raise ConfigError(f"{path}: not a classifier model file")
            version, buckets, dim, n_orders, threshold, seed, epochs, lr, bias = struct.unpack(
                "<IQIIdQIdd", fh.read(struct.calcsize("<IQIIdQIdd")))
            if version != _VERSION:
                raise ConfigError(f"{path}: unsupported model version {version}")
            orders = struct.unpack(f"<{n_orders}I", fh.read(4 * n_orders))
            cfg = TrainConfig(orders=orders, buckets=buckets, dim=dim, epochs=epochs,
                              learning_rate=lr, seed=seed, threshold=threshold)
            w = np.frombuffer(fh.read(8 * dim), dtype="<f8").copy()
            (n_rows,) = struct.unpack("<Q", fh.read(8))
            rows: dict[int, np.ndarray] = {}
            for _ in range(n_rows):
                (idx,) = struct.unpack("<Q", fh.read(8))
                rows[idx] = np.frombuffer(fh.read(8 * dim), dtype="<f8").copy()
        model = cls(config=cfg, rows=rows, w=w, b=bias, threshold=threshold)
        return model


def loss_and_grads(model: ClassifierModel, ids: np.ndarray, y: int) -> tuple[float, np.ndarray, float, dict[int, np.ndarray]]:
    """Cross-entropy loss and analytic gradients for one example.

    Returns (loss, d/dw, d/db, {row: d/drow}); exposed so tests can check the
    gradients against central finite differences.
    """
    h = model.pooled(ids)
    p = _sigmoid(float(model.w @ h + model.b))
    eps = 1e-12
    loss = -(y * np.log(p + eps) + (1 - y) * np.log(1.0 - p + eps))
    g = p - y
    grad_w = g * h
    grad_b = g
    grad_rows: dict[int, np.ndarray] = {}
    if len(ids) > 0:
        unique, counts = np.unique(ids, return_counts=True)
        scale = model.w * (g / len(ids))
        for idx, cnt in zip(unique, counts):
            grad_rows[int(idx)] = scale * cnt
    return float(loss), grad_w, float(grad_b), grad_rows


def train(examples: list[LabeledExample], config: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Deterministic SGD fit; raises on empty or single-class input.

    Training works on a compact matrix holding only the embedding rows the
    training set touches; the finished model stores exactly those rows.
    """
    config.validate()
    if not examples:
        raise ValueError("degenerate labels: no examples")
    labels = {e.label for e in examples}
    if labels != {0, 1}:
        raise ValueError("degenerate labels: need both classes present")

    ys = [e.label for e in examples]
    vocab: dict[int, int] = {}
    per_example: list[tuple[np.ndarray, np.ndarray, int]] = []
    for e in examples:
        ids = featurize(e.text, config.orders, config.buckets)
        uniq, counts = np.unique(ids, return_counts=True)
        comp = np.array([vocab.setdefault(int(bkt), len(vocab)) for bkt in uniq], dtype=np.int64)
        per_example.append((comp, counts.astype(np.float64), len(ids)))

    E = np.empty((len(vocab), config.dim))
    for bucket, comp_idx in vocab.items():
        E[comp_idx] = _init_row(config.seed, bucket, config.dim)
    w = _init_output(config.seed, config.dim)
    b = 0.0

    order_rng = np.random.Generator(
        np.random.Philox(key=np.array([config.seed, _STREAM_SHUFFLE], dtype=np.uint64))
    )
    n = len(examples)
    total = config.epochs * n
    step = 0
    for _ in range(config.epochs):
        for i in order_rng.permutation(n):
            lr = config.learning_rate * (1.0 - step / total)
            step += 1
            comp, counts, m = per_example[i]
            if m:
                R = E[comp]  # fancy indexing copies, so R stays the pre-update value
                h = (counts @ R) / m
            else:
                h = np.zeros(config.dim)
            p = _sigmoid(float(w @ h + b))
            g = p - ys[i]
            if m:
                E[comp] = R - np.outer(counts, w) * (lr * g / m)
            w = w - lr * g * h
            b -= lr * g

    rows = {bucket: E[comp_idx].copy() for bucket, comp_idx in vocab.items()}
    return ClassifierModel(config=config, rows=rows, w=w, b=b, threshold=config.threshold)


def confusion_at(scores: list[float], labels: list[int], threshold: float) -> tuple[int, int, int, int]:
    tp = fp = tn = fn = 0
    for s, y in zip(scores, labels):
        pred = s >= threshold
        if pred and y == 1:
            tp += 1
        elif pred and y == 0:
            fp += 1
        elif not pred and y == 0:
            tn += 1
        else:
            fn += 1
    return tp, fp, tn, fn


def precision_recall_f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def auc_score(scores: list[float], labels: list[int]) -> float:
    """Rank-based AUC: P(random positive outscores random negative), ties count half.

    Computed as Mann-Whitney U over mid-ranks; exact (sums of halves) so it can
    be compared bitwise against a pairwise-counting oracle.
    """
    n_pos = sum(labels)
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes")
    order = sorted(range(len(scores)), key=lambda i: scores[i])
    ranks = [0.0] * len(scores)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1  # 1-based mid-rank, a multiple of 1/2
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    rank_sum = sum(r for r, y in zip(ranks, labels) if y == 1)
    u = rank_sum - n_pos * (n_pos + 1) / 2
    return u / (n_pos * n_neg)


@dataclass
class EvalReport:
    k: int
    threshold: float
    fold_precision: list[float]
    fold_recall: list[float]
    fold_f1: list[float]
    fold_auc: list[float]
    confusion: tuple[int, int, int, int]  # tp, fp, tn, fn summed over folds
    oof_scores: list[tuple[float, int]]   # out-of-fold (score, label) pairs

    @property
    def mean_precision(self) -> float:
        return float(np.mean(self.fold_precision))

    @property
    def mean_recall(self) -> float:
        return float(np.mean(self.fold_recall))

    @property
    def mean_f1(self) -> float:
        return float(np.mean(self.fold_f1))

    @property
    def mean_auc(self) -> float:
        return float(np.mean(self.fold_auc))

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "threshold": self.threshold,
            "per_fold": {
                "precision": self.fold_precision,
                "recall": self.fold_recall,
                "f1": self.fold_f1,
                "auc": self.fold_auc,
            },
            "mean": {
                "precision": self.mean_precision,
                "recall": self.mean_recall,
                "f1": self.mean_f1,
                "auc": self.mean_auc,
            },
            "confusion": {
                "tp": self.confusion[0],
                "fp": self.confusion[1],
                "tn": self.confusion[2],
                "fn": self.confusion[3],
            },
        }


def stratified_folds(labels: list[int], k: int, seed: int) -> list[list[int]]:
    """Index partition into k folds; per-class fold sizes differ by at most 1."""
    pos = [i for i, y in enumerate(labels) if y == 1]
    neg = [i for i, y in enumerate(labels) if y == 0]
    if k < 2:
        raise ConfigError("k must be at least 2")
    if k > min(len(pos), len(neg)):
        raise ConfigError(f"k={k} exceeds the smaller class count {min(len(pos), len(neg))}")
    rng = np.random.default_rng([seed, 0xF01D])
    folds: list[list[int]] = [[] for _ in range(k)]
    for group in (pos, neg):
        shuffled = list(rng.permutation(group))
        for slot, idx in enumerate(shuffled):
            folds[slot % k].append(int(idx))
    return folds


def kfold_evaluate(examples: list[LabeledExample], k: int, config: TrainConfig = TrainConfig()) -> EvalReport:
    """Stratified k-fold cross validation; metrics at config.threshold."""
    if len(examples) < k:
        raise ConfigError("fewer examples than folds")
    labels = [e.label for e in examples]
    folds = stratified_folds(labels, k, config.seed)
    fold_p: list[float] = []
    fold_r: list[float] = []
    fold_f1: list[float] = []
    fold_auc: list[float] = []
    tp = fp = tn = fn = 0
    oof: list[tuple[float, int]] = []
    for held in folds:
        held_set = set(held)
        train_part = [e for i, e in enumerate(examples) if i not in held_set]
        model = train(train_part, config)
        scores = [model.predict(examples[i].text) for i in held]
        ys = [labels[i] for i in held]
        ctp, cfp, ctn, cfn = confusion_at(scores, ys, config.threshold)
        tp, fp, tn, fn = tp + ctp, fp + cfp, tn + ctn, fn + cfn
        p, r, f1 = precision_recall_f1(ctp, cfp, cfn)
        fold_p.append(p)
        fold_r.append(r)
        fold_f1.append(f1)
        fold_auc.append(auc_score(scores, ys))
        oof.extend(zip(scores, ys))
    return EvalReport(
        k=k,
        threshold=config.threshold,
        fold_precision=fold_p,
        fold_recall=fold_r,
        fold_f1=fold_f1,
        fold_auc=fold_auc,
        confusion=(tp, fp, tn, fn),
        oof_scores=oof,
    )


def select_threshold(scored: list[tuple[float, int]]) -> float:
    """Grid point in {0.001, ..., 0.999} maximizing F1 of score >= t; ties -> smallest t."""
    if not scored:
        raise ValueError("no scores")
    labels = [y for _, y in scored]
    if len(set(labels)) < 2:
        raise ValueError("both labels required")
    pairs = sorted(scored)
    values = [s for s, _ in pairs]
    n = len(pairs)
    pos_suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        pos_suffix[i] = pos_suffix[i + 1] + pairs[i][1]
    total_pos = pos_suffix[0]
    best_t, best_f1 = 0.001, -1.0
    for i in range(1, 1000):
        t = i / 1000
        lo = bisect_left(values, t)
        pred_pos = n - lo
        tp = pos_suffix[lo]
        denom = pred_pos + total_pos
        f1 = 2 * tp / denom if denom else 0.0
        if f1 > best_f1:
            best_f1, best_t = f1, t
    return best_t
