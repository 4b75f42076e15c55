"""Narrative-time deciles and per-decile transition histograms."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import stats
from .core import (
    DEFAULT_RULE,
    BinarizationRule,
    Label,
    RoleOrFilter,
    TurnArrays,
    _turn_mask,
    check_order,
    state_code,
    state_name,
    transition_name,
)
from .corpus import Conversation, Corpus, Role

N_BINS = 10


def _deciles_from_counts(word_counts: np.ndarray) -> np.ndarray:
    wc = np.asarray(word_counts, dtype=np.int64)
    total = wc.sum()
    if total <= 0:
        return np.zeros(wc.size, dtype=np.int64)
    start = np.cumsum(wc) - wc
    return np.minimum(N_BINS - 1, (N_BINS * start) // total)


def assign_deciles(conversation: Conversation) -> list[int]:
    """Decile (0..9) of each turn: the decile holding the turn's first word."""
    return [int(d) for d in _deciles_from_counts([t.word_count for t in conversation.turns])]


def _corpus_deciles(arrays: TurnArrays, per_role: bool) -> np.ndarray:
    out = np.zeros(arrays.word_count.size, dtype=np.int64)
    for a, b in zip(arrays.offsets[:-1], arrays.offsets[1:]):
        wc = arrays.word_count[a:b]
        if not per_role:
            out[a:b] = _deciles_from_counts(wc)
            continue
        roles = arrays.role[a:b]
        seg = np.zeros(b - a, dtype=np.int64)
        for code in np.unique(roles):
            idx = np.flatnonzero(roles == code)
            seg[idx] = _deciles_from_counts(wc[idx])
        out[a:b] = seg
    return out


@dataclass(frozen=True, eq=False)
class DecileSeries:
    order: int
    role: Optional[str]
    histogram: np.ndarray   # (2**order, 2, 10), each populated slot sums to 1
    raw_counts: np.ndarray  # same shape, event counts

    @property
    def empty(self) -> np.ndarray:
        """Slots with no events in any decile."""
        return self.raw_counts.sum(axis=2) == 0

    def series(self, state: str, label: str) -> np.ndarray:
        return self.histogram[state_code(state), Label[label]].copy()

    def trend(self, state: str, label: str, deciles: Sequence[int] = range(4, 10),
              method: str = "auto") -> stats.CorrResult:
        """Spearman correlation of a slot's bins against decile index (0-based deciles)."""
        deciles = list(deciles)
        return stats.spearman(deciles, self.series(state, label)[deciles], method=method)

    def to_csv(self, raw: bool = False) -> str:
        data = self.raw_counts if raw else self.histogram
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["transition"] + [f"decile_{i + 1}" for i in range(N_BINS)])
        for code in range(2 ** self.order):
            s = state_name(code, self.order)
            for lab in (Label.S, Label.L):
                vals = data[code, lab]
                cells = [str(int(v)) for v in vals] if raw else [f"{v:.6f}" for v in vals]
                w.writerow([transition_name(s, str(lab))] + cells)
        return buf.getvalue()


def decile_transition_histograms(
    corpus: Corpus,
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    role: RoleOrFilter = None,
    per_role_boundaries: bool = False,
) -> DecileSeries:
    """Pool events over conversations into 10 narrative-time bins per transition.

    Decile boundaries come from each conversation's full word stream unless
    ``per_role_boundaries`` is set, in which case each role's own words are
    cut into deciles.  ``role`` filters which events are counted (a Role or
    an arbitrary turn predicate, e.g. a tag test).
    """
    order = check_order(order)
    arrays = TurnArrays.from_corpus(corpus)
    slots = arrays.slots(arrays.labels(rule), order)
    deciles = _corpus_deciles(arrays, per_role_boundaries)
    keep = (slots >= 0) & _turn_mask(corpus, arrays, role)
    n_slots = 2 ** (order + 1)
    raw = np.bincount(slots[keep] * N_BINS + deciles[keep], minlength=n_slots * N_BINS)
    raw = raw.reshape(2 ** order, 2, N_BINS).astype(float)
    tot = raw.sum(axis=2, keepdims=True)
    hist = np.divide(raw, tot, out=np.zeros_like(raw), where=tot > 0)
    name = role.value if isinstance(role, Role) else (None if role is None else "filtered")
    return DecileSeries(order, name, hist, raw)
