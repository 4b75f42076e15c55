"""Turn-level and conversation-level analyses of tagged (e.g. emotional) patient turns."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from . import nulls, stats
from .core import (
    DEFAULT_RULE,
    BinarizationRule,
    CodymModel,
    DeltaModel,
    Label,
    ROLE_CODES,
    TurnArrays,
    check_order,
    delta_model,
    mean_model,
    populate_model,
    state_name,
)
from .corpus import Corpus, Role
from .errors import InsufficientDataError

DISTRESS_TAGS = ("anger", "fear", "sadness")


@dataclass(frozen=True, eq=False)
class EmotionTurnStudy:
    emotion: str
    observed: CodymModel
    ensemble: nulls.NullEnsemble
    report: nulls.SignificanceReport
    long_rate: float
    baseline_long_rate: float
    n_tagged_turns: int
    context_contamination: float
    null_pool: str

    def to_dict(self) -> dict:
        return {
            "emotion": self.emotion,
            "null_pool": self.null_pool,
            "long_rate": self.long_rate,
            "baseline_long_rate": self.baseline_long_rate,
            "n_tagged_turns": self.n_tagged_turns,
            "context_contamination": self.context_contamination,
            "observed": self.observed.to_dict(),
            "ensemble": self.ensemble.to_dict(),
            "significance": self.report.to_dict(),
        }


def _tag_mask(corpus: Corpus, tags: Iterable[str]) -> np.ndarray:
    tags = frozenset(tags)
    return np.fromiter((bool(t.tags & tags) for t in corpus.turns()), dtype=bool)


def emotion_turn_study(
    corpus: Corpus,
    tag: str,
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    replicates: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    distress_tags: Iterable[str] = DISTRESS_TAGS,
    null_pool: str = "untagged",
    workers: int = 1,
) -> EmotionTurnStudy:
    """Compare patient events carrying ``tag`` with matched random patient events.

    Null replicates draw the same number of events, with the same number of
    L events, from the pool: ``"untagged"`` patient events carrying none of
    ``distress_tags`` (the default), or ``"all"`` patient events.  The
    untagged pool is anti-correlated with the tagged set, which inflates the
    flag rate by roughly ``1 / (1 - 2f)`` in variance when a fraction ``f``
    of patient events is tagged; ``"all"`` is exchangeable with the tagged
    set under the null.
    """
    order = check_order(order)
    if null_pool not in ("untagged", "all"):
        raise ValueError(f"unknown null_pool {null_pool!r}")
    arrays = TurnArrays.from_corpus(corpus)
    labels = arrays.labels(rule)
    slots = arrays.slots(labels, order)
    patient = arrays.role == ROLE_CODES[Role.PATIENT]
    tagged = _tag_mask(corpus, [tag])
    distressed = _tag_mask(corpus, set(distress_tags) | {tag})
    events = slots >= 0

    obs_slots = slots[patient & events & tagged]
    if obs_slots.size == 0:
        raise InsufficientDataError(f"no patient events tagged {tag!r}")
    n = int(obs_slots.size)
    n_long = int((obs_slots & 1).sum())
    pool_mask = patient & events & (~distressed if null_pool == "untagged" else True)
    pool = slots[pool_mask]
    n_slots = 2 ** (order + 1)
    observed = nulls_model(obs_slots, order, stratum="patient", metadata=f"patient turns tagged {tag}")
    # fail early, with the deficient label named, rather than inside replicate 0
    nulls.sample_matched_turn_set(pool, n, n_long, nulls.replicate_rng(seed, 0))

    def generate(rng):
        picked = nulls.sample_matched_turn_set(pool, n, n_long, rng)
        return CodymModel.from_counts(np.bincount(picked, minlength=n_slots), order, n,
                                      stratum="patient")

    ensemble = nulls.build_ensemble(generate, replicates, seed, alpha, workers)
    report = nulls.significance_report(observed, ensemble)

    tagged_patient = patient & tagged
    contaminated = 0
    ev_idx = np.flatnonzero(patient & events & tagged)
    for i in ev_idx:
        if distressed[i - order:i].any():
            contaminated += 1
    return EmotionTurnStudy(
        emotion=tag,
        observed=observed,
        ensemble=ensemble,
        report=report,
        long_rate=float(labels[tagged_patient].mean()),
        baseline_long_rate=float(labels[patient].mean()) if patient.any() else float("nan"),
        n_tagged_turns=int(tagged_patient.sum()),
        context_contamination=contaminated / len(ev_idx),
        null_pool=null_pool,
    )


def nulls_model(event_slots: np.ndarray, order: int, **kw) -> CodymModel:
    counts = np.bincount(np.asarray(event_slots, dtype=np.int64), minlength=2 ** (order + 1))
    return CodymModel.from_counts(counts, order, int(len(event_slots)), **kw)


# -- conversation level ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class StratumComparison:
    stratum: Optional[str]
    mean_a: CodymModel
    mean_b: CodymModel
    delta: DeltaModel
    ks_d: np.ndarray
    ks_p: np.ndarray
    state_ks_d: np.ndarray
    state_ks_p: np.ndarray
    alpha: float

    @property
    def significant(self) -> np.ndarray:
        return self.ks_p < self.alpha

    @property
    def state_significant(self) -> np.ndarray:
        return self.state_ks_p < self.alpha

    def as_report(self) -> nulls.SignificanceReport:
        """Adapter for rendering: expected = group B, no CI bounds."""
        nan = np.full_like(self.mean_a.transition_freq, np.nan)
        snan = np.full_like(self.mean_a.state_freq, np.nan)
        return nulls.SignificanceReport(
            self.mean_a.order, self.alpha,
            self.mean_a.transition_freq, self.mean_b.transition_freq, nan, nan, self.significant,
            self.mean_a.state_freq, self.mean_b.state_freq, snan, snan, self.state_significant,
        )

    def ks_table(self) -> list[dict]:
        order = self.mean_a.order
        rows = []
        for code in range(2 ** order):
            for lab in (Label.S, Label.L):
                rows.append({
                    "stratum": self.stratum,
                    "state": state_name(code, order),
                    "label": str(lab),
                    "D": float(self.ks_d[code, lab]),
                    "p": float(self.ks_p[code, lab]),
                    "delta": float(self.delta.delta[code, lab]),
                    "significant": bool(self.significant[code, lab]),
                })
        return rows


@dataclass(frozen=True, eq=False)
class EmotionConversationStudy:
    tags: frozenset
    group_a: tuple[str, ...]
    group_b: tuple[str, ...]
    strata: tuple[StratumComparison, ...]

    def to_dict(self) -> dict:
        return {
            "tags": sorted(self.tags),
            "group_a": list(self.group_a),
            "group_b": list(self.group_b),
            "ks": [row for s in self.strata for row in s.ks_table()],
            "strata": [
                {"stratum": s.stratum, "mean_with": s.mean_a.to_dict(),
                 "mean_without": s.mean_b.to_dict(), "delta": s.delta.to_dict()}
                for s in self.strata
            ],
        }


def split_by_patient_tags(corpus: Corpus, tags: Iterable[str]) -> tuple[list[str], list[str]]:
    tags = frozenset(tags)
    a, b = [], []
    for conv in corpus:
        hit = any(t.role is Role.PATIENT and t.tags & tags for t in conv.turns)
        (a if hit else b).append(conv.id)
    return a, b


def emotion_conversation_study(
    corpus: Corpus,
    tags: Iterable[str] = ("anger", "fear"),
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    stratified: bool = False,
    alpha: float = 0.05,
) -> EmotionConversationStudy:
    """KS-compare per-conversation models of conversations with vs without tagged patient turns."""
    order = check_order(order)
    tags = frozenset(tags)
    ids_a, ids_b = split_by_patient_tags(corpus, tags)
    if not ids_a or not ids_b:
        raise InsufficientDataError(
            f"need conversations with and without {sorted(tags)}: got {len(ids_a)} and {len(ids_b)}"
        )
    in_a = set(ids_a)
    roles = (Role.PATIENT, Role.CLINICIAN) if stratified else (None,)
    comparisons = []
    for role in roles:
        models = populate_model(corpus, order, rule, event_filter=role, pooling="per_conversation")
        ma = [m for m in models if m.metadata in in_a]
        mb = [m for m in models if m.metadata not in in_a]
        if not ma or not mb:
            raise InsufficientDataError(f"stratum {role}: a group has no qualifying conversations")
        fa = np.stack([m.transition_freq for m in ma])
        fb = np.stack([m.transition_freq for m in mb])
        d = np.zeros(fa.shape[1:])
        p = np.zeros(fa.shape[1:])
        for idx in np.ndindex(*d.shape):
            r = stats.ks_two_sample(fa[(slice(None),) + idx], fb[(slice(None),) + idx])
            d[idx], p[idx] = r.d_statistic, r.p_value
        sa, sb = fa.sum(axis=2), fb.sum(axis=2)
        sd = np.zeros(sa.shape[1])
        sp = np.zeros(sa.shape[1])
        for j in range(sa.shape[1]):
            r = stats.ks_two_sample(sa[:, j], sb[:, j])
            sd[j], sp[j] = r.d_statistic, r.p_value
        stratum = role.value if role else None
        mean_a = mean_model(ma, stratum=stratum)
        mean_b = mean_model(mb, stratum=stratum)
        comparisons.append(StratumComparison(stratum, mean_a, mean_b, delta_model(mean_a, mean_b),
                                             d, p, sd, sp, alpha))
    return EmotionConversationStudy(tags, tuple(ids_a), tuple(ids_b), tuple(comparisons))
