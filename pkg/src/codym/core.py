"""Binarized turn-length Markov models (CODYMs).

States are the S/L labels of the ``order`` most recent turns, oldest first.
Internally a state is an integer whose most significant bit is the oldest
turn (S=0, L=1), so the string order "SSS" < "SSL" < ... < "LLL" matches the
numeric order and the successor of state ``s`` under label ``x`` is
``((s << 1) | x) & (2**order - 1)``.

Frequencies are percentages over all events in the model: every transition
slot and every state sums to 100.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from . import stats
from .corpus import Conversation, Corpus, Role, Turn
from .errors import EmptyModelError, OrderMismatchError, ValidationError

logger = logging.getLogger(__name__)

MAX_ORDER = 8
ROLE_CODES = {Role.PATIENT: 0, Role.CLINICIAN: 1, Role.UNKNOWN: 2}


class Label(enum.IntEnum):
    S = 0
    L = 1

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class BinarizationRule:
    """Turns with ``word_count >= threshold`` are long."""

    threshold: int = 8

    def __post_init__(self):
        if self.threshold < 2:
            raise ValidationError("threshold must be >= 2")


DEFAULT_RULE = BinarizationRule(8)


def binarize_turn(word_count: int, rule: BinarizationRule = DEFAULT_RULE) -> Label:
    return Label.L if word_count >= rule.threshold else Label.S


def check_order(order: int) -> int:
    if not 1 <= int(order) <= MAX_ORDER:
        raise ValidationError(f"order must be in 1..{MAX_ORDER}, got {order}")
    return int(order)


def state_name(code: int, order: int) -> str:
    return format(int(code), f"0{order}b").replace("0", "S").replace("1", "L")


def state_code(name: str) -> int:
    if not name or set(name) - {"S", "L"}:
        raise ValidationError(f"bad state {name!r}")
    return int(name.replace("S", "0").replace("L", "1"), 2)


def state_names(order: int) -> list[str]:
    return [state_name(c, order) for c in range(2 ** order)]


def shift(code: int, label: int, order: int) -> int:
    return ((int(code) << 1) | int(label)) & ((1 << order) - 1)


def slot_names(order: int) -> list[str]:
    """Transition slot names in the fixed slot order, e.g. ``"SLS-L"``."""
    return [f"{s}-{x}" for s in state_names(order) for x in "SL"]


def transition_name(state: str, label: str) -> str:
    """Full transition name including the target, e.g. ``"SLS-L->LSL"``."""
    order = len(state)
    target = state_name(shift(state_code(state), Label[label], order), order)
    return f"{state}-{label}->{target}"


def state_sequence(labels: Sequence, order: int) -> list[tuple[str, Label]]:
    """Events ``(state, label)`` for a label sequence; the first ``order`` turns only seed state."""
    labels = [Label(int(x)) if not isinstance(x, str) else Label[x] for x in labels]
    events = []
    for i in range(order, len(labels)):
        state = "".join(str(x) for x in labels[i - order:i])
        events.append((state, labels[i]))
    return events


# -- models ----------------------------------------------------------------


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CodymModel:
    """Percentage frequencies of an order-N model.

    ``transition_freq`` and ``transition_count`` have shape ``(2**order, 2)``,
    indexed by ``[state_code, label]``.  State frequencies are the source
    marginals of the transition frequencies.
    """

    order: int
    transition_freq: np.ndarray
    transition_count: np.ndarray
    event_count: int
    stratum: Optional[str] = None
    metadata: str = ""
    median_freq: Optional[np.ndarray] = None

    def __post_init__(self):
        shape = (2 ** self.order, 2)
        object.__setattr__(self, "transition_freq", _frozen(self.transition_freq))
        object.__setattr__(self, "transition_count", _frozen(self.transition_count))
        if self.median_freq is not None:
            object.__setattr__(self, "median_freq", _frozen(self.median_freq))
        if self.transition_freq.shape != shape or self.transition_count.shape != shape:
            raise ValidationError(f"order-{self.order} model needs arrays of shape {shape}")

    @classmethod
    def from_counts(cls, counts, order: int, event_count: Optional[int] = None, **kw) -> "CodymModel":
        counts = np.asarray(counts, dtype=float).reshape(2 ** order, 2)
        total = counts.sum()
        freq = 100.0 * counts / total if total > 0 else np.zeros_like(counts)
        if event_count is None:
            event_count = int(round(total))
        return cls(order, freq, counts, int(event_count), **kw)

    @classmethod
    def empty(cls, order: int, **kw) -> "CodymModel":
        z = np.zeros((2 ** order, 2))
        return cls(order, z, z, 0, **kw)

    @property
    def state_freq(self) -> np.ndarray:
        return self.transition_freq.sum(axis=1)

    @property
    def n_states(self) -> int:
        return 2 ** self.order

    @property
    def total_weight(self) -> float:
        return float(self.transition_count.sum())

    def freq(self, state: str, label: str) -> float:
        return float(self.transition_freq[state_code(state), Label[label]])

    def count(self, state: str, label: str) -> float:
        return float(self.transition_count[state_code(state), Label[label]])

    def state(self, state: str) -> float:
        return float(self.state_freq[state_code(state)])

    def vector(self) -> np.ndarray:
        """Transition frequencies flattened in slot order (see :func:`slot_names`)."""
        return self.transition_freq.reshape(-1).copy()

    def edges(self) -> list[tuple[str, str, str, float]]:
        """``(source, label, target, pct)`` for every transition slot."""
        out = []
        for code in range(self.n_states):
            src = state_name(code, self.order)
            for lab in (Label.S, Label.L):
                dst = state_name(shift(code, lab, self.order), self.order)
                out.append((src, str(lab), dst, float(self.transition_freq[code, lab])))
        return out

    def to_dict(self) -> dict:
        transitions = []
        for code in range(self.n_states):
            for lab in (Label.S, Label.L):
                c = float(self.transition_count[code, lab])
                transitions.append({
                    "state": state_name(code, self.order),
                    "label": str(lab),
                    "count": int(c) if c.is_integer() else c,
                    "pct": float(self.transition_freq[code, lab]),
                })
        return {
            "order": self.order,
            "event_count": self.event_count,
            "stratum": self.stratum,
            "metadata": self.metadata,
            "transitions": transitions,
            "states": [
                {"state": state_name(c, self.order), "pct": float(p)}
                for c, p in enumerate(self.state_freq)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodymModel":
        order = int(d["order"])
        freq = np.zeros((2 ** order, 2))
        counts = np.zeros((2 ** order, 2))
        for t in d["transitions"]:
            idx = state_code(t["state"]), Label[t["label"]]
            freq[idx] = t["pct"]
            counts[idx] = t.get("count", 0)
        return cls(order, freq, counts, int(d.get("event_count", 0)),
                   stratum=d.get("stratum"), metadata=d.get("metadata", ""))

    def __repr__(self):
        return (f"CodymModel(order={self.order}, event_count={self.event_count}, "
                f"stratum={self.stratum!r})")


class ModelList(list):
    """Per-conversation models; ``excluded`` lists conversations with no contributing events."""

    def __init__(self, models=(), excluded=()):
        super().__init__(models)
        self.excluded = list(excluded)


@dataclass(frozen=True, eq=False)
class DeltaModel:
    order: int
    delta: np.ndarray
    state_obs: np.ndarray
    state_delta: np.ndarray

    def __post_init__(self):
        for name in ("delta", "state_obs", "state_delta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def value(self, state: str, label: str) -> float:
        return float(self.delta[state_code(state), Label[label]])

    def edges(self) -> list[tuple[str, str, str, float]]:
        out = []
        for code in range(2 ** self.order):
            src = state_name(code, self.order)
            for lab in (Label.S, Label.L):
                dst = state_name(shift(code, lab, self.order), self.order)
                out.append((src, str(lab), dst, float(self.delta[code, lab])))
        return out

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "transitions": [
                {"state": s, "label": x, "delta": d} for s, x, _, d in self.edges()
            ],
            "states": [
                {"state": state_name(c, self.order), "pct_observed": float(o), "delta": float(d)}
                for c, (o, d) in enumerate(zip(self.state_obs, self.state_delta))
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DeltaModel":
        order = int(d["order"])
        delta = np.zeros((2 ** order, 2))
        for t in d["transitions"]:
            delta[state_code(t["state"]), Label[t["label"]]] = t["delta"]
        obs, sd = np.zeros(2 ** order), np.zeros(2 ** order)
        for row in d["states"]:
            c = state_code(row["state"])
            obs[c], sd[c] = row["pct_observed"], row["delta"]
        return cls(order, delta, obs, sd)


def delta_model(observed: CodymModel, expected: CodymModel) -> DeltaModel:
    if observed.order != expected.order:
        raise OrderMismatchError(f"orders differ: {observed.order} vs {expected.order}")
    return DeltaModel(
        observed.order,
        observed.transition_freq - expected.transition_freq,
        observed.state_freq,
        observed.state_freq - expected.state_freq,
    )


def mean_model(models: Sequence[CodymModel], stratum: Optional[str] = None) -> CodymModel:
    """Slot-wise mean of percentage frequencies; medians kept in ``median_freq``."""
    models = list(models)
    if not models:
        raise ValidationError("mean_model needs at least one model")
    order = models[0].order
    if any(m.order != order for m in models):
        raise OrderMismatchError("all models must share one order")
    freqs = np.stack([m.transition_freq for m in models])
    counts = np.sum([m.transition_count for m in models], axis=0)
    return CodymModel(
        order,
        freqs.mean(axis=0),
        counts,
        sum(m.event_count for m in models),
        stratum=stratum if stratum is not None else models[0].stratum,
        metadata=f"mean of {len(models)} models",
        median_freq=np.median(freqs, axis=0),
    )


# -- array encoding --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TurnArrays:
    """Flat per-turn arrays for a corpus, in corpus order."""

    word_count: np.ndarray
    role: np.ndarray
    conv: np.ndarray
    position: np.ndarray
    offsets: np.ndarray
    ids: tuple[str, ...]

    @classmethod
    def from_corpus(cls, corpus: Corpus) -> "TurnArrays":
        wc, role, conv, pos = [], [], [], []
        offsets = [0]
        for ci, c in enumerate(corpus.conversations):
            for t in c.turns:
                wc.append(t.word_count)
                role.append(ROLE_CODES[t.role])
                conv.append(ci)
                pos.append(t.index)
            offsets.append(len(wc))
        return cls(
            np.asarray(wc, dtype=np.int64),
            np.asarray(role, dtype=np.int8),
            np.asarray(conv, dtype=np.int64),
            np.asarray(pos, dtype=np.int64),
            np.asarray(offsets, dtype=np.int64),
            tuple(c.id for c in corpus.conversations),
        )

    @property
    def n_conversations(self) -> int:
        return len(self.ids)

    def labels(self, rule: BinarizationRule = DEFAULT_RULE) -> np.ndarray:
        return (self.word_count >= rule.threshold).astype(np.int64)

    def slots(self, labels: np.ndarray, order: int) -> np.ndarray:
        return turn_slots(labels, self.position, order)


def turn_slots(labels: np.ndarray, position: np.ndarray, order: int) -> np.ndarray:
    """Transition slot (``2*state + label``) of each turn, or -1 for seeding turns."""
    labels = np.asarray(labels, dtype=np.int64)
    n = labels.size
    state = np.zeros(n, dtype=np.int64)
    for j in range(1, order + 1):
        prev = np.zeros(n, dtype=np.int64)
        if j < n:
            prev[j:] = labels[:-j]
        state |= prev << (j - 1)
    slots = 2 * state + labels
    slots[position < order] = -1
    return slots


def _turn_mask(corpus: Corpus, arrays: TurnArrays, event_filter) -> np.ndarray:
    if event_filter is None:
        return np.ones(arrays.word_count.size, dtype=bool)
    if isinstance(event_filter, Role):
        return arrays.role == ROLE_CODES[event_filter]
    return np.fromiter((bool(event_filter(t)) for t in corpus.turns()), dtype=bool,
                       count=arrays.word_count.size)


def _turn_weights(corpus: Corpus, arrays: TurnArrays, weight_fn) -> np.ndarray:
    if weight_fn is None:
        return np.ones(arrays.word_count.size)
    w = np.fromiter((float(weight_fn(t)) for t in corpus.turns()), dtype=float,
                    count=arrays.word_count.size)
    if np.any(w < 0):
        raise ValidationError("weight_fn must be nonnegative")
    return w


def tally(slots: np.ndarray, weights: np.ndarray, conv: Optional[np.ndarray], n_slots: int,
          n_conv: int = 1):
    """Weighted slot tallies and contributing-event counts, optionally per conversation."""
    ok = (slots >= 0) & (weights > 0)
    s = slots[ok]
    w = weights[ok]
    if conv is None:
        return (np.bincount(s, weights=w, minlength=n_slots),
                np.bincount(s, minlength=n_slots))
    idx = conv[ok] * n_slots + s
    size = n_conv * n_slots
    return (np.bincount(idx, weights=w, minlength=size).reshape(n_conv, n_slots),
            np.bincount(idx, minlength=size).reshape(n_conv, n_slots))


RoleOrFilter = Union[None, Role, Callable[[Turn], bool]]


def populate_model(
    corpus: Corpus,
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    event_filter: RoleOrFilter = None,
    weight_fn: Optional[Callable[[Turn], float]] = None,
    pooling: str = "pooled",
    stratum: Optional[str] = None,
):
    """Populate a CODYM from a corpus.

    Every turn after the first ``order`` of its conversation is an event.
    State context always comes from all turns; ``event_filter`` (a predicate
    or a :class:`Role`) only decides which events contribute, and
    ``weight_fn`` how much.  ``pooling="pooled"`` gives one model;
    ``"per_conversation"`` gives a :class:`ModelList` of per-conversation
    models, skipping conversations with no contributing events.
    """
    order = check_order(order)
    if len(corpus) == 0:
        raise ValidationError("corpus is empty")
    if pooling not in ("pooled", "per_conversation"):
        raise ValidationError(f"unknown pooling {pooling!r}")
    if stratum is None and isinstance(event_filter, Role):
        stratum = event_filter.value
    arrays = TurnArrays.from_corpus(corpus)
    slots = arrays.slots(arrays.labels(rule), order)
    weights = _turn_weights(corpus, arrays, weight_fn) * _turn_mask(corpus, arrays, event_filter)
    n_slots = 2 ** (order + 1)

    if pooling == "pooled":
        w, n = tally(slots, weights, None, n_slots)
        if w.sum() <= 0:
            raise EmptyModelError("no events contributed weight to the pooled model")
        return CodymModel.from_counts(w, order, int(n.sum()), stratum=stratum,
                                      metadata=corpus.provenance)

    w, n = tally(slots, weights, arrays.conv, n_slots, arrays.n_conversations)
    return models_from_tallies(w, n, order, arrays.ids, stratum)


def models_from_tallies(w, n, order, ids, stratum=None) -> ModelList:
    models, excluded = [], []
    for cid, row, cnt in zip(ids, w, n):
        if row.sum() > 0:
            models.append(CodymModel.from_counts(row, order, int(cnt.sum()), stratum=stratum,
                                                 metadata=cid))
        else:
            excluded.append(cid)
    if excluded:
        logger.info("%d conversations had no contributing events", len(excluded))
    return ModelList(models, excluded)


def mean_frequencies(w: np.ndarray) -> tuple[np.ndarray, int]:
    """Mean percentage rows over conversations with nonzero weight (vectorized ``mean_model``)."""
    tot = w.sum(axis=1)
    keep = tot > 0
    if not keep.any():
        raise EmptyModelError("no conversation contributed events")
    pct = 100.0 * w[keep] / tot[keep, None]
    return pct.mean(axis=0), int(keep.sum())


# -- threshold selection ---------------------------------------------------


@dataclass(frozen=True)
class ThresholdScan:
    threshold: int
    candidates: tuple[int, ...]
    entropy: tuple[float, ...]
    long_rate: tuple[float, ...]

    def rows(self):
        return list(zip(self.candidates, self.entropy, self.long_rate))


def select_threshold(
    corpus: Corpus,
    order: int = 3,
    candidates: Iterable[int] = range(2, 15),
    over: str = "states",
) -> ThresholdScan:
    """Scan thresholds and pick the one maximizing Shannon entropy (bits).

    ``over="states"`` measures the state distribution of the pooled model,
    ``"transitions"`` the transition distribution.  Ties go to the smallest
    threshold.  ``long_rate`` is the percentage of turns labelled L.
    """
    order = check_order(order)
    if len(corpus) == 0 or not any(len(c) for c in corpus):
        raise ValidationError("corpus is empty")
    if over not in ("states", "transitions"):
        raise ValidationError(f"unknown entropy target {over!r}")
    candidates = tuple(sorted({int(t) for t in candidates}))
    if not candidates:
        raise ValidationError("no candidate thresholds")
    arrays = TurnArrays.from_corpus(corpus)
    lo, hi = int(arrays.word_count.min()), int(arrays.word_count.max())
    if any(t < lo or t > hi + 1 for t in candidates):
        logger.warning("candidate thresholds outside observed word counts %d..%d", lo, hi)

    ones = np.ones(arrays.word_count.size)
    entropies, rates = [], []
    for t in candidates:
        labels = arrays.labels(BinarizationRule(t))
        w, _ = tally(arrays.slots(labels, order), ones, None, 2 ** (order + 1))
        total = w.sum()
        if total == 0:
            entropies.append(0.0)
        else:
            p = w.reshape(-1, 2) / total
            dist = p.sum(axis=1) if over == "states" else p.reshape(-1)
            entropies.append(stats.shannon_entropy(dist))
        rates.append(100.0 * labels.mean())
    best = candidates[int(np.argmax(np.round(entropies, 12)))]
    return ThresholdScan(best, candidates, tuple(entropies), tuple(rates))


def conversation_labels(conversation: Conversation, rule: BinarizationRule = DEFAULT_RULE) -> list[Label]:
    return [binarize_turn(t.word_count, rule) for t in conversation.turns]
