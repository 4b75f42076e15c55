"""Conversation-level CODYM features and repeated-holdout random forests."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np
from sklearn.ensemble import RandomForestClassifier

from . import stats
from .core import DEFAULT_RULE, BinarizationRule, check_order, populate_model, slot_names
from .corpus import Conversation, Corpus, Role
from .errors import InsufficientDataError, ValidationError
from .nulls import run_replicates

Labeler = Union[Mapping[str, bool], Callable[[Conversation], bool], None]


def has_patient_tags(conversation: Conversation, tags=("anger", "fear")) -> bool:
    tags = frozenset(tags)
    return any(t.role is Role.PATIENT and t.tags & tags for t in conversation.turns)


@dataclass(frozen=True, eq=False)
class FeatureTable:
    ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    names: tuple[str, ...]
    excluded: tuple[str, ...] = ()
    order: int = 3
    stratified: bool = False

    def __len__(self):
        return len(self.ids)

    def take(self, idx) -> "FeatureTable":
        idx = np.asarray(idx)
        return FeatureTable(tuple(self.ids[i] for i in idx), self.X[idx], self.y[idx], self.names,
                            (), self.order, self.stratified)

    def with_labels(self, y) -> "FeatureTable":
        return FeatureTable(self.ids, self.X, np.asarray(y, dtype=bool), self.names, self.excluded,
                            self.order, self.stratified)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["conversation", "label"] + list(self.names))
        for cid, row, lab in zip(self.ids, self.X, self.y):
            w.writerow([cid, int(lab)] + [f"{v:.6f}" for v in row])
        return buf.getvalue()


def conversation_features(corpus: Corpus, order: int = 3, rule: BinarizationRule = DEFAULT_RULE,
                          stratified: bool = False, labels: Labeler = None) -> FeatureTable:
    """Per-conversation transition-frequency features.

    Unstratified rows have ``2**(order+1)`` entries; stratified rows
    concatenate patient-event and clinician-event models (``P:`` then ``C:``).
    ``labels`` maps conversation id (or conversation) to the class; by default
    a conversation is positive when a patient turn is tagged anger or fear.
    """
    order = check_order(order)
    if len(corpus) == 0:
        raise ValidationError("corpus is empty")
    if labels is None:
        labeler = has_patient_tags
    elif isinstance(labels, Mapping):
        labeler = lambda c: bool(labels[c.id])
    else:
        labeler = labels

    strata = [(Role.PATIENT, "P:"), (Role.CLINICIAN, "C:")] if stratified else [(None, "")]
    blocks = []
    for role, _ in strata:
        models = populate_model(corpus, order, rule, event_filter=role, pooling="per_conversation")
        blocks.append({m.metadata: m.vector() for m in models})
    names = tuple(prefix + s for _, prefix in strata for s in slot_names(order))

    ids, rows, ys, excluded = [], [], [], []
    for conv in corpus:
        if all(conv.id in b for b in blocks):
            ids.append(conv.id)
            rows.append(np.concatenate([b[conv.id] for b in blocks]))
            ys.append(bool(labeler(conv)))
        else:
            excluded.append(conv.id)
    if not ids:
        raise InsufficientDataError("every conversation was excluded for lack of events")
    return FeatureTable(tuple(ids), np.array(rows), np.array(ys, dtype=bool), names,
                        tuple(excluded), order, stratified)


@dataclass(frozen=True)
class ForestConfig:
    trees: int = 100
    features_per_split: Optional[int] = None  # default ceil(sqrt(d))
    bootstrap: bool = True
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    criterion: str = "gini"

    def __post_init__(self):
        if self.trees < 1:
            raise ValidationError("trees must be >= 1")

    def max_features(self, d: int) -> int:
        if self.features_per_split is not None:
            return min(d, self.features_per_split)
        return max(1, math.ceil(math.sqrt(d)))


def rf_train_predict(train: FeatureTable, test: FeatureTable, config: ForestConfig,
                     rng: np.random.Generator) -> np.ndarray:
    """Fit a forest on ``train`` and return majority-vote predictions for ``test``.

    Vote ties go to the negative class (class id 0).
    """
    y = np.asarray(train.y, dtype=bool)
    if y.all() or not y.any():
        raise InsufficientDataError("training set must contain both classes")
    forest = RandomForestClassifier(
        n_estimators=config.trees,
        criterion=config.criterion,
        max_features=config.max_features(train.X.shape[1]),
        bootstrap=config.bootstrap,
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
        random_state=int(rng.integers(0, 2 ** 31 - 1)),
        n_jobs=1,
    )
    forest.fit(train.X, y.astype(int))
    X = np.asarray(test.X, dtype=np.float32)
    votes = np.zeros(X.shape[0])
    for tree in forest.estimators_:
        votes += tree.predict(X, check_input=False)  # class index: 0 or 1
    return votes * 2 > len(forest.estimators_)


@dataclass(frozen=True, eq=False)
class ClassificationReport:
    order: int
    stratified: bool
    repeats: int
    accuracies: np.ndarray
    mu: float
    sigma: float
    p_value: float
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"order": self.order, "stratified": self.stratified, "repeats": self.repeats,
                "mu": self.mu, "sigma": self.sigma, "p": self.p_value, "seed": self.seed,
                "accuracies": [float(a) for a in self.accuracies], **self.extra}


def stratified_split(y: np.ndarray, train_fraction: float, rng: np.random.Generator):
    """Per-class random split; ``floor(train_fraction * n_class)`` of each class trains."""
    train, test = [], []
    for cls in (False, True):
        members = np.flatnonzero(y == cls)
        perm = rng.permutation(members)
        k = int(math.floor(train_fraction * members.size))
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def repeated_holdout_eval(features: FeatureTable, config: ForestConfig = ForestConfig(),
                          repeats: int = 1000, train_fraction: float = 0.8, seed: int = 0,
                          workers: int = 1, permute_labels: bool = False) -> ClassificationReport:
    """Test accuracy (%) over repeated stratified holdouts, with a one-sided z p-value vs 50%.

    ``permute_labels`` draws a fresh label permutation inside each repeat,
    giving a no-signal reference whose mu is not hostage to one lucky shuffle.
    """
    y = np.asarray(features.y, dtype=bool)
    for cls in (False, True):
        if int((y == cls).sum()) < 5:
            raise InsufficientDataError(f"class {cls} has fewer than 5 conversations")
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must be in (0, 1)")

    def one(rng):
        table, yy = features, y
        if permute_labels:
            yy = rng.permutation(y)
            table = features.with_labels(yy)
        tr, te = stratified_split(yy, train_fraction, rng)
        pred = rf_train_predict(table.take(tr), table.take(te), config, rng)
        return 100.0 * float(np.mean(pred == yy[te]))

    acc = np.array(run_replicates(one, repeats, seed, workers))
    mu = float(acc.mean())
    sigma = float(acc.std(ddof=1)) if repeats > 1 else 0.0
    if sigma > 0:
        p = stats.one_sided_z_p(mu, sigma, 50.0)
    else:
        p = 0.0 if mu > 50.0 else 1.0
    return ClassificationReport(features.order, features.stratified, repeats, acc, mu, sigma, p, seed,
                                {"permute_labels": True} if permute_labels else {})
