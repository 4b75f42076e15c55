"""Word- and term-list-level contextualization of CODYMs.

Word models weight each event by how often the word occurs in the event
turn, so the all-words model (weight = word count) is exactly the sum of the
per-word tallies.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import nulls
from .core import (
    DEFAULT_RULE,
    BinarizationRule,
    CodymModel,
    DeltaModel,
    TurnArrays,
    check_order,
    delta_model,
    mean_model,
    populate_model,
    slot_names,
)
from .corpus import Corpus, Role, TermList, TermPattern, match_terms
from .errors import EmptyModelError, InsufficientDataError, UnsupportedInputError, ValidationError


def _require_words(corpus: Corpus):
    if not corpus.has_words:
        raise UnsupportedInputError("word-level analysis needs turn text; corpus has word counts only")


@dataclass(frozen=True, eq=False)
class WordProfile:
    word: str
    total_count: int
    long_turn_fraction: float
    freq_vector: np.ndarray
    counts: np.ndarray = field(repr=False)
    order: int = 2

    @property
    def empty(self) -> bool:
        """True when the word never occurs on an event turn."""
        return float(self.counts.sum()) == 0.0

    def model(self) -> CodymModel:
        return CodymModel.from_counts(self.counts, self.order, metadata=f"word {self.word}")


def all_words_model(corpus: Corpus, order: int = 2, rule: BinarizationRule = DEFAULT_RULE,
                    role: Optional[Role] = None) -> CodymModel:
    """Occurrence-weighted model of all words (event weight = word count)."""
    return populate_model(corpus, order, rule, event_filter=role,
                          weight_fn=lambda t: t.word_count)


def word_profiles(corpus: Corpus, order: int = 2, rule: BinarizationRule = DEFAULT_RULE,
                  words: Optional[Iterable[str]] = None) -> dict[str, WordProfile]:
    """Profiles for every word (or only ``words``) in one pass over the corpus."""
    _require_words(corpus)
    order = check_order(order)
    arrays = TurnArrays.from_corpus(corpus)
    labels = arrays.labels(rule)
    slots = arrays.slots(labels, order)
    wanted = set(words) if words is not None else None
    n_slots = 2 ** (order + 1)
    slot_counts: dict[str, np.ndarray] = defaultdict(lambda: np.zeros(n_slots))
    totals: dict[str, int] = defaultdict(int)
    turns_with: dict[str, int] = defaultdict(int)
    long_with: dict[str, int] = defaultdict(int)
    for i, turn in enumerate(corpus.turns()):
        seen = set()
        s = slots[i]
        for w in turn.words:
            if wanted is not None and w not in wanted:
                continue
            totals[w] += 1
            if s >= 0:
                slot_counts[w][s] += 1
            seen.add(w)
        for w in seen:
            turns_with[w] += 1
            long_with[w] += int(labels[i])
    if wanted is not None:
        for w in wanted:
            totals.setdefault(w, 0)
    out = {}
    for w in sorted(totals):
        counts = slot_counts[w] if w in slot_counts else np.zeros(n_slots)
        tot = counts.sum()
        freq = 100.0 * counts / tot if tot > 0 else np.zeros(n_slots)
        frac = long_with[w] / turns_with[w] if turns_with.get(w) else 0.0
        out[w] = WordProfile(w, totals[w], frac, freq, counts.reshape(-1, 2), order)
    return out


def word_transition_profile(corpus: Corpus, word: str, order: int = 2,
                            rule: BinarizationRule = DEFAULT_RULE) -> WordProfile:
    return word_profiles(corpus, order, rule, words=[word])[word]


def _deviation(freq: np.ndarray, base: np.ndarray, aggregate: str) -> float:
    d = np.abs(np.asarray(freq).reshape(-1) - np.asarray(base).reshape(-1))
    if aggregate == "max":
        return float(d.max())
    if aggregate == "l1":
        return float(d.sum())
    if aggregate == "l2":
        return float(np.sqrt((d * d).sum()))
    raise ValidationError(f"unknown aggregate {aggregate!r}")


def candidate_words(corpus: Corpus, baseline: CodymModel, min_count: int = 100,
                    min_delta: float = 10.0, rule: BinarizationRule = DEFAULT_RULE,
                    aggregate: str = "max") -> list[WordProfile]:
    """Frequent words whose profile deviates from ``baseline`` by more than ``min_delta`` points.

    ``aggregate`` combines per-slot absolute deviations: ``"max"`` (any slot
    beyond the cut), ``"l1"`` or ``"l2"``.  Sorted by descending count.
    """
    profiles = word_profiles(corpus, baseline.order, rule)
    keep = [
        p for p in profiles.values()
        if p.total_count >= min_count and not p.empty
        and _deviation(p.freq_vector, baseline.transition_freq, aggregate) > min_delta
    ]
    return sorted(keep, key=lambda p: (-p.total_count, p.word))


# -- k-means ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClusterResult:
    k: int
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    seed: int
    restarts: int
    n_iter: int
    inertia_history: tuple[float, ...]
    names: Optional[tuple[str, ...]] = None

    @property
    def assignments(self) -> dict:
        keys = self.names if self.names is not None else range(len(self.labels))
        return {k: int(c) for k, c in zip(keys, self.labels)}


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        tot = d2.sum()
        idx = rng.choice(n, p=d2 / tot) if tot > 0 else rng.integers(n)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _assign(X, C):
    d2 = ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return labels, d2[np.arange(X.shape[0]), labels]


def _lloyd(X, C, max_iter):
    """Iterate until the assignment stops changing; returns (labels, C, inertia, iters, history)."""
    labels, dist = _assign(X, C)
    history = [float(dist.sum())]
    it = 0
    for it in range(1, max_iter + 1):
        C = C.copy()
        for j in range(C.shape[0]):
            members = labels == j
            if members.any():
                C[j] = X[members].mean(axis=0)
            else:
                far = int(np.argmax(dist))
                C[j] = X[far]
                dist[far] = 0.0
        new_labels, dist = _assign(X, C)
        history.append(float(dist.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, C, history[-1], it, history


def kmeans_cluster(vectors, k: int = 6, seed: int = 0, restarts: int = 10,
                   max_iter: int = 300,
                   names: Optional[Sequence[str]] = None) -> ClusterResult:
    """Lloyd's algorithm with k-means++ seeding; best of ``restarts`` runs by inertia."""
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError("vectors must be a nonempty 2-D array")
    if not 1 <= k <= X.shape[0]:
        raise ValidationError(f"k={k} must be between 1 and the number of vectors ({X.shape[0]})")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        C0 = _kmeans_pp(X, k, rng)
        run = _lloyd(X, C0, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    labels, C, inertia, n_iter, hist = best
    return ClusterResult(k, labels, C, inertia, seed, restarts, n_iter, tuple(hist),
                         tuple(names) if names is not None else None)


def cluster_words(profiles: Sequence[WordProfile], k: int = 6, seed: int = 0,
                  restarts: int = 10) -> ClusterResult:
    X = np.stack([p.freq_vector for p in profiles])
    return kmeans_cluster(X, k, seed, restarts, names=[p.word for p in profiles])


def cluster_deltas(result: ClusterResult, profiles: Sequence[WordProfile],
                   baseline: CodymModel) -> list[tuple[int, CodymModel, DeltaModel]]:
    """Per cluster: mean word model and its difference from ``baseline``."""
    out = []
    for j in range(result.k):
        members = [p.model() for p, c in zip(profiles, result.labels) if c == j]
        if not members:
            continue
        m = mean_model(members, stratum=f"cluster {j}")
        out.append((j, m, delta_model(m, baseline)))
    return out


def clusters_csv(profiles: Sequence[WordProfile], result: ClusterResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    order = profiles[0].order if profiles else 2
    w.writerow(["word", "count", "pct_long", "cluster"] + slot_names(order))
    for p, c in zip(profiles, result.labels):
        w.writerow([p.word, p.total_count, f"{100 * p.long_turn_fraction:.1f}", int(c)]
                   + [f"{v:.4f}" for v in p.freq_vector])
    return buf.getvalue()


# -- term lists ------------------------------------------------------------


def term_list_model(corpus: Corpus, terms: TermList, order: int = 2,
                    rule: BinarizationRule = DEFAULT_RULE,
                    role: Optional[Role] = None) -> CodymModel:
    """Pooled model weighted by term-list occurrences per event turn."""
    _require_words(corpus)
    try:
        return populate_model(corpus, order, rule, event_filter=role,
                              weight_fn=lambda t: match_terms(t, terms),
                              stratum=role.value if role else None)
    except EmptyModelError:
        who = role.value if role else "any role"
        raise EmptyModelError(f"term list {terms.name!r} has no matches on {who} events") from None


@dataclass(frozen=True, eq=False)
class TermListStudy:
    terms: TermList
    role: Optional[str]
    observed: CodymModel
    base: CodymModel
    ensemble: nulls.NullEnsemble
    report: nulls.SignificanceReport
    delta: DeltaModel
    occurrences: int

    def to_dict(self) -> dict:
        return {
            "term_list": self.terms.name, "role": self.role, "occurrences": self.occurrences,
            "observed": self.observed.to_dict(), "base": self.base.to_dict(),
            "ensemble": self.ensemble.to_dict(), "significance": self.report.to_dict(),
            "delta": self.delta.to_dict(),
        }


def term_list_study(corpus: Corpus, terms: TermList, order: int = 2,
                    rule: BinarizationRule = DEFAULT_RULE, role: Optional[Role] = None,
                    replicates: int = 1000, seed: int = 0, alpha: float = 0.05,
                    workers: int = 1) -> TermListStudy:
    """Term-list model against size-matched multinomial draws from the all-words model."""
    observed = term_list_model(corpus, terms, order, rule, role)
    base = all_words_model(corpus, order, rule, role)
    n = int(round(observed.total_weight))
    ensemble = nulls.build_ensemble(lambda rng: nulls.sample_transition_counts(base, n, rng),
                                    replicates, seed, alpha, workers)
    report = nulls.significance_report(observed, ensemble)
    return TermListStudy(terms, role.value if role else None, observed, base, ensemble, report,
                         delta_model(observed, ensemble.mean), n)


@dataclass(frozen=True, eq=False)
class RobustnessTrial:
    removed: tuple[str, ...]
    model: CodymModel

    def to_dict(self) -> dict:
        return {"removed": list(self.removed), "model": self.model.to_dict()}


def eligible_terms(corpus: Corpus, terms: TermList) -> list[TermPattern]:
    _require_words(corpus)
    counts = {p: 0 for p in terms.entries}
    single = {p: TermList(terms.name, (p,)) for p in terms.entries}
    for turn in corpus.turns():
        for p in terms.entries:
            counts[p] += single[p].count(turn.words)
    return [p for p in terms.entries if counts[p] > 0]


def robustness_trials(corpus: Corpus, terms: TermList, fraction: float = 0.10, seed: int = 0,
                      order: int = 2, rule: BinarizationRule = DEFAULT_RULE,
                      role: Optional[Role] = None, min_removals: int = 2) -> list[RobustnessTrial]:
    """Recompute the term-list model with random ``fraction`` subsets of terms removed.

    Only terms occurring in the corpus are eligible.  Trials are generated in
    passes; each pass shuffles the eligible terms and removes consecutive
    blocks of ``ceil(fraction * m)`` (the last block topped up with random
    other terms), so after ``min_removals`` passes every term has been
    removed at least that many times.
    """
    if not 0 < fraction < 1:
        raise ValidationError("fraction must be in (0, 1)")
    elig = eligible_terms(corpus, terms)
    if len(elig) < 2:
        raise InsufficientDataError(
            f"term list {terms.name!r} has {len(elig)} terms occurring in the corpus; need >= 2"
        )
    m = len(elig)
    k = max(1, math.ceil(fraction * m))
    if k >= m:
        raise InsufficientDataError("removal block would remove every term")
    base = TermList(terms.name, tuple(elig))
    rng = np.random.default_rng(seed)
    removed_count = {p: 0 for p in elig}
    trials = []
    while min(removed_count.values()) < min_removals:
        perm = list(rng.permutation(m))
        for start in range(0, m, k):
            block = perm[start:start + k]
            if len(block) < k:
                rest = [i for i in range(m) if i not in block]
                block += list(rng.choice(rest, size=k - len(block), replace=False))
            removed = [elig[i] for i in sorted(block)]
            for p in removed:
                removed_count[p] += 1
            model = term_list_model(corpus, base.without(removed), order, rule, role)
            trials.append(RobustnessTrial(tuple(str(p) for p in removed), model))
    return trials


def trials_json(trials: Sequence[RobustnessTrial]) -> str:
    return json.dumps([t.to_dict() for t in trials], indent=2, sort_keys=True)
