"""Null models, Monte Carlo ensembles and empirical-CI significance.

Three null families:

* role-preserving shuffles of turn lengths (normative patterns),
* size-matched multinomial draws from a base model (term lists),
* count- and L-rate-matched samples of observed events (emotion turns).

Each replicate of an ensemble gets its own PCG64 stream derived from
``(seed, replicate_index)``, so results do not depend on scheduling.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_RULE,
    BinarizationRule,
    CodymModel,
    Label,
    ROLE_CODES,
    TurnArrays,
    check_order,
    mean_frequencies,
    mean_model,
    populate_model,
    slot_names,
    state_code,
    state_name,
    tally,
)
from .corpus import Conversation, Corpus, Role
from .errors import (
    EnsembleError,
    InsufficientDataError,
    OrderMismatchError,
    ValidationError,
)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


# -- shuffles --------------------------------------------------------------


def shuffle_lengths_within_role(conversation: Conversation, rng: np.random.Generator) -> Conversation:
    """Permute whole turns among the positions held by the same role.

    The role sequence is unchanged; each role's turns (word count, words and
    tags travel together) land on a uniformly random arrangement of that
    role's positions.
    """
    turns = list(conversation.turns)
    out = list(turns)
    for role in Role:
        pos = [i for i, t in enumerate(turns) if t.role is role]
        if len(pos) < 2:
            continue
        for dst, src in zip(pos, rng.permutation(pos)):
            out[dst] = replace(turns[src], index=dst)
    return Conversation(conversation.id, tuple(out))


class RoleShuffler:
    """Vectorized role-preserving shuffle of a whole corpus's labels.

    Equivalent in distribution to applying
    :func:`shuffle_lengths_within_role` to every conversation.
    """

    def __init__(self, arrays: TurnArrays):
        self.group = arrays.conv * len(ROLE_CODES) + arrays.role
        self.positions = np.argsort(self.group, kind="stable")
        self._base = self.group.astype(np.float64)

    def __call__(self, values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        # keys in [0, 1) keep groups contiguous and order turns randomly within each
        perm = np.argsort(self._base + rng.random(values.size))
        out = np.empty_like(values)
        out[self.positions] = values[perm]
        return out


def normative_null_generator(
    corpus: Corpus,
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    role: Optional[Role] = None,
) -> Callable[[np.random.Generator], CodymModel]:
    """Replicate generator for the normative null.

    Each call shuffles every conversation within roles, populates
    per-conversation models for events of ``role`` (all events when None), and
    returns their mean model.
    """
    order = check_order(order)
    arrays = TurnArrays.from_corpus(corpus)
    labels = arrays.labels(rule)
    shuffler = RoleShuffler(arrays)
    mask = np.ones(labels.size) if role is None else (arrays.role == ROLE_CODES[role]).astype(float)
    n_slots = 2 ** (order + 1)
    stratum = role.value if role is not None else None

    def generate(rng: np.random.Generator) -> CodymModel:
        shuffled = shuffler(labels, rng)
        slots = arrays.slots(shuffled, order)
        w, n = tally(slots, mask, arrays.conv, n_slots, arrays.n_conversations)
        pct, n_conv = mean_frequencies(w)
        return CodymModel(order, pct.reshape(-1, 2), w.sum(axis=0).reshape(-1, 2), int(n.sum()),
                          stratum=stratum, metadata=f"shuffle null over {n_conv} conversations")

    return generate


def normative_null_pair(corpus: Corpus, order: int = 3, rule: BinarizationRule = DEFAULT_RULE):
    """Patient and clinician generators sharing one shuffle per replicate.

    Returns a function ``rng -> (patient_model, clinician_model)``.
    """
    arrays = TurnArrays.from_corpus(corpus)
    labels = arrays.labels(rule)
    shuffler = RoleShuffler(arrays)
    n_slots = 2 ** (order + 1)
    masks = [(arrays.role == ROLE_CODES[r]).astype(float) for r in (Role.PATIENT, Role.CLINICIAN)]

    def generate(rng):
        slots = arrays.slots(shuffler(labels, rng), order)
        out = []
        for r, mask in zip((Role.PATIENT, Role.CLINICIAN), masks):
            w, n = tally(slots, mask, arrays.conv, n_slots, arrays.n_conversations)
            pct, _ = mean_frequencies(w)
            out.append(CodymModel(order, pct.reshape(-1, 2), w.sum(axis=0).reshape(-1, 2),
                                  int(n.sum()), stratum=r.value))
        return tuple(out)

    return generate


# -- sampling nulls --------------------------------------------------------


def sample_transition_counts(base: CodymModel, n: int, rng: np.random.Generator) -> CodymModel:
    """Draw ``n`` events multinomially with the base model's transition frequencies."""
    if n <= 0:
        raise ValidationError("n must be positive")
    if base.event_count <= 0 and base.total_weight <= 0:
        raise ValidationError("base model has no events")
    p = base.transition_freq.reshape(-1) / 100.0
    p = p / p.sum()
    counts = rng.multinomial(int(n), p)
    return CodymModel.from_counts(counts, base.order, int(n), stratum=base.stratum,
                                  metadata="multinomial null")


def sample_matched_turn_set(pool: np.ndarray, n: int, n_long: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``n_long`` L-events and ``n - n_long`` S-events without replacement.

    ``pool`` holds event slot codes (``2*state + label``); the result is an
    array of slot codes drawn from it.
    """
    pool = np.asarray(pool, dtype=np.int64)
    n_short = n - n_long
    if n <= 0 or n_long < 0 or n_short < 0:
        raise ValidationError(f"bad sample sizes n={n}, n_long={n_long}")
    long_pool = pool[(pool & 1) == Label.L]
    short_pool = pool[(pool & 1) == Label.S]
    if long_pool.size < n_long:
        raise InsufficientDataError(f"pool has {long_pool.size} L events, need {n_long}")
    if short_pool.size < n_short:
        raise InsufficientDataError(f"pool has {short_pool.size} S events, need {n_short}")
    picked_long = rng.choice(long_pool, size=n_long, replace=False)
    picked_short = rng.choice(short_pool, size=n_short, replace=False)
    return np.concatenate([picked_long, picked_short])


# -- ensembles -------------------------------------------------------------


def percentile_interval(samples: np.ndarray, alpha: float, axis: int = 0):
    """Empirical ``(alpha/2, 1 - alpha/2)`` percentiles, linear interpolation."""
    lo = np.percentile(samples, 100 * alpha / 2, axis=axis, method="linear")
    hi = np.percentile(samples, 100 * (1 - alpha / 2), axis=axis, method="linear")
    return lo, hi


@dataclass(frozen=True, eq=False)
class NullEnsemble:
    order: int
    replicates: int
    seed: int
    alpha: float
    samples: np.ndarray        # (replicates, 2**order, 2) transition percentages
    state_samples: np.ndarray  # (replicates, 2**order)
    mean: CodymModel
    ci_low: np.ndarray
    ci_high: np.ndarray
    state_ci_low: np.ndarray
    state_ci_high: np.ndarray

    def to_dict(self) -> dict:
        ci, state_ci = [], []
        for code in range(2 ** self.order):
            s = state_name(code, self.order)
            for lab in (Label.S, Label.L):
                ci.append({"state": s, "label": str(lab),
                           "low": float(self.ci_low[code, lab]), "high": float(self.ci_high[code, lab])})
            state_ci.append({"state": s, "low": float(self.state_ci_low[code]),
                             "high": float(self.state_ci_high[code])})
        return {"seed": self.seed, "replicates": self.replicates, "alpha": self.alpha,
                "mean": self.mean.to_dict(), "ci": ci, "state_ci": state_ci}

    def samples_csv(self) -> str:
        """One row per replicate: transition percentages then state percentages."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        states = [state_name(c, self.order) for c in range(2 ** self.order)]
        w.writerow(["replicate"] + slot_names(self.order) + [f"state:{s}" for s in states])
        for i in range(self.replicates):
            row = [i] + [repr(float(v)) for v in self.samples[i].reshape(-1)]
            row += [repr(float(v)) for v in self.state_samples[i]]
            w.writerow(row)
        return buf.getvalue()


def ensemble_from_models(models: Sequence[CodymModel], seed: int, alpha: float = 0.05) -> NullEnsemble:
    order = models[0].order
    if any(m.order != order for m in models):
        raise OrderMismatchError("replicate models disagree on order")
    samples = np.stack([m.transition_freq for m in models])
    state_samples = samples.sum(axis=2)
    lo, hi = percentile_interval(samples, alpha)
    slo, shi = percentile_interval(state_samples, alpha)
    counts = np.sum([m.transition_count for m in models], axis=0)
    mean = CodymModel(order, samples.mean(axis=0), counts, sum(m.event_count for m in models),
                      stratum=models[0].stratum, metadata=f"mean of {len(models)} null replicates",
                      median_freq=np.median(samples, axis=0))
    return NullEnsemble(order, len(models), int(seed), float(alpha), samples, state_samples,
                        mean, lo, hi, slo, shi)


def run_replicates(generator: Callable, replicates: int, seed: int, workers: int = 1) -> list:
    """Call ``generator(rng)`` once per replicate index; results in index order."""
    def one(i):
        try:
            return generator(replicate_rng(seed, i))
        except Exception as exc:  # carries the replicate index upward
            raise EnsembleError(i, exc) from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(replicates)))
    return [one(i) for i in range(replicates)]


def build_ensemble(
    generator: Callable[[np.random.Generator], CodymModel],
    replicates: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    workers: int = 1,
) -> NullEnsemble:
    if replicates < 2:
        raise ValidationError("an ensemble needs at least 2 replicates")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must be in (0, 1)")
    models = run_replicates(generator, replicates, seed, workers)
    return ensemble_from_models(models, seed, alpha)


@dataclass(frozen=True, eq=False)
class SignificanceReport:
    order: int
    alpha: float
    observed: np.ndarray
    expected: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    significant: np.ndarray
    state_observed: np.ndarray
    state_expected: np.ndarray
    state_ci_low: np.ndarray
    state_ci_high: np.ndarray
    state_significant: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.observed - self.expected

    @property
    def state_delta(self) -> np.ndarray:
        return self.state_observed - self.state_expected

    @property
    def n_significant(self) -> int:
        return int(self.significant.sum())

    def is_significant(self, state: str, label: Optional[str] = None) -> bool:
        code = state_code(state)
        if label is None:
            return bool(self.state_significant[code])
        return bool(self.significant[code, Label[label]])

    def to_dict(self) -> dict:
        transitions, states = [], []
        for code in range(2 ** self.order):
            s = state_name(code, self.order)
            for lab in (Label.S, Label.L):
                ix = code, lab
                transitions.append({
                    "state": s, "label": str(lab),
                    "observed": float(self.observed[ix]), "expected": float(self.expected[ix]),
                    "delta": float(self.delta[ix]),
                    "ci_low": float(self.ci_low[ix]), "ci_high": float(self.ci_high[ix]),
                    "significant": bool(self.significant[ix]),
                })
            states.append({
                "state": s,
                "observed": float(self.state_observed[code]),
                "expected": float(self.state_expected[code]),
                "delta": float(self.state_delta[code]),
                "ci_low": float(self.state_ci_low[code]), "ci_high": float(self.state_ci_high[code]),
                "significant": bool(self.state_significant[code]),
            })
        return {"order": self.order, "alpha": self.alpha, "transitions": transitions, "states": states}

    @classmethod
    def from_dict(cls, d: dict) -> "SignificanceReport":
        order = int(d["order"])
        t = {k: np.zeros((2 ** order, 2)) for k in ("observed", "expected", "ci_low", "ci_high")}
        sig = np.zeros((2 ** order, 2), dtype=bool)
        for row in d["transitions"]:
            ix = state_code(row["state"]), Label[row["label"]]
            for k in t:
                t[k][ix] = row[k]
            sig[ix] = row["significant"]
        st = {k: np.zeros(2 ** order) for k in ("observed", "expected", "ci_low", "ci_high")}
        ssig = np.zeros(2 ** order, dtype=bool)
        for row in d["states"]:
            c = state_code(row["state"])
            for k in st:
                st[k][c] = row[k]
            ssig[c] = row["significant"]
        return cls(order, float(d["alpha"]), t["observed"], t["expected"], t["ci_low"], t["ci_high"],
                   sig, st["observed"], st["expected"], st["ci_low"], st["ci_high"], ssig)


def significance_report(observed: CodymModel, ensemble: NullEnsemble) -> SignificanceReport:
    """Flag slots and states whose observed value lies outside the ensemble CI."""
    if observed.order != ensemble.order:
        raise OrderMismatchError(f"orders differ: {observed.order} vs {ensemble.order}")
    obs = observed.transition_freq
    sobs = observed.state_freq
    return SignificanceReport(
        order=observed.order,
        alpha=ensemble.alpha,
        observed=obs,
        expected=ensemble.mean.transition_freq,
        ci_low=ensemble.ci_low,
        ci_high=ensemble.ci_high,
        significant=(obs < ensemble.ci_low) | (obs > ensemble.ci_high),
        state_observed=sobs,
        state_expected=ensemble.mean.state_freq,
        state_ci_low=ensemble.state_ci_low,
        state_ci_high=ensemble.state_ci_high,
        state_significant=(sobs < ensemble.state_ci_low) | (sobs > ensemble.state_ci_high),
    )


@dataclass(frozen=True, eq=False)
class NormativeStratum:
    stratum: Optional[str]
    observed: CodymModel
    ensemble: NullEnsemble
    report: SignificanceReport

    def to_dict(self) -> dict:
        return {"stratum": self.stratum, "observed": self.observed.to_dict(),
                "ensemble": self.ensemble.to_dict(), "significance": self.report.to_dict()}


def normative_study(
    corpus: Corpus,
    order: int = 3,
    rule: BinarizationRule = DEFAULT_RULE,
    stratified: bool = True,
    replicates: int = 1000,
    seed: int = 0,
    alpha: float = 0.05,
    workers: int = 1,
) -> list[NormativeStratum]:
    """Observed mean models vs the role-preserving shuffle null.

    Stratified runs share one shuffle per replicate between the patient and
    clinician strata; the observed model is the mean of per-conversation
    models, matching how each replicate is summarized.
    """
    order = check_order(order)
    if replicates < 2:
        raise ValidationError("an ensemble needs at least 2 replicates")
    if stratified:
        pairs = run_replicates(normative_null_pair(corpus, order, rule), replicates, seed, workers)
        out = []
        for i, role in enumerate((Role.PATIENT, Role.CLINICIAN)):
            ens = ensemble_from_models([p[i] for p in pairs], seed, alpha)
            per_conv = populate_model(corpus, order, rule, event_filter=role, pooling="per_conversation")
            obs = mean_model(per_conv, stratum=role.value)
            out.append(NormativeStratum(role.value, obs, ens, significance_report(obs, ens)))
        return out
    ens = build_ensemble(normative_null_generator(corpus, order, rule), replicates, seed, alpha, workers)
    obs = mean_model(populate_model(corpus, order, rule, pooling="per_conversation"))
    return [NormativeStratum(None, obs, ens, significance_report(obs, ens))]
