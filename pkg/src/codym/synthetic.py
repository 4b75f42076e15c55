"""Seeded synthetic corpora from known order-N chains over S/L turn labels.

Used to check that populated models recover what generated them and that
null models are calibrated.
"""

from __future__ import annotations

from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .core import DEFAULT_RULE, BinarizationRule, Label, shift
from .corpus import Conversation, Corpus, Role, Turn

ProbSpec = Union[Sequence[float], np.ndarray, Mapping[Role, Sequence[float]], Callable]


def _probs_for(p_long, role: Role, frac: float) -> np.ndarray:
    if callable(p_long):
        p_long = p_long(frac)
    if isinstance(p_long, Mapping):
        p_long = p_long.get(role, p_long.get(Role.PATIENT))
    return np.asarray(p_long, dtype=float)


def draw_word_count(label: int, rng: np.random.Generator, rule: BinarizationRule = DEFAULT_RULE,
                    mean_long_extra: float = 12.0) -> int:
    """S turns are uniform on 1..t-1; L turns are t plus a geometric excess."""
    if label == Label.S:
        return int(rng.integers(1, rule.threshold))
    return rule.threshold + int(rng.geometric(1.0 / (1.0 + mean_long_extra))) - 1


def stationary_transition_freq(p_long: Sequence[float], order: int) -> np.ndarray:
    """Stationary percentage frequency of each ``(state, label)`` slot of a chain.

    ``p_long[s]`` is ``P(next turn is L | state s)``.
    """
    p = np.asarray(p_long, dtype=float)
    k = 2 ** order
    T = np.zeros((k, k))
    for s in range(k):
        T[s, shift(s, Label.S, order)] += 1 - p[s]
        T[s, shift(s, Label.L, order)] += p[s]
    vals, vecs = np.linalg.eig(T.T)
    pi = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    pi = pi / pi.sum()
    return 100.0 * np.stack([pi * (1 - p), pi * p], axis=1)


def generate_labels(n_turns: int, p_long, order: int, rng: np.random.Generator,
                    roles: Optional[Sequence[Role]] = None) -> list[int]:
    labels = list(rng.integers(0, 2, size=min(order, n_turns)))
    state = 0
    for x in labels:
        state = shift(state, x, order)
    for i in range(len(labels), n_turns):
        role = roles[i] if roles is not None else Role.PATIENT
        p = _probs_for(p_long, role, i / max(n_turns, 1))
        x = int(rng.random() < p[state])
        labels.append(x)
        state = shift(state, x, order)
    return [int(x) for x in labels]


def generate_roles(n_turns: int, rng: np.random.Generator, alternation: float = 0.86,
                   unknown_rate: float = 0.0) -> list[Role]:
    roles = []
    cur = Role.PATIENT if rng.random() < 0.5 else Role.CLINICIAN
    for _ in range(n_turns):
        if unknown_rate and rng.random() < unknown_rate:
            roles.append(Role.UNKNOWN)
            continue
        roles.append(cur)
        if rng.random() < alternation:
            cur = Role.CLINICIAN if cur is Role.PATIENT else Role.PATIENT
    return roles


def generate_conversation(
    conv_id: str,
    n_turns: int,
    p_long: ProbSpec,
    order: int,
    rng: np.random.Generator,
    rule: BinarizationRule = DEFAULT_RULE,
    alternation: float = 0.86,
    unknown_rate: float = 0.0,
    tag_rates: Optional[Mapping[str, float]] = None,
    vocabulary: Optional[Sequence[str]] = None,
) -> Conversation:
    """One conversation.  ``tag_rates`` tags patient turns independently at random."""
    roles = generate_roles(n_turns, rng, alternation, unknown_rate)
    labels = generate_labels(n_turns, p_long, order, rng, roles)
    turns = []
    for i, (role, lab) in enumerate(zip(roles, labels)):
        wc = draw_word_count(lab, rng, rule)
        words = None
        if vocabulary is not None:
            words = tuple(vocabulary[j] for j in rng.integers(0, len(vocabulary), size=wc))
        tags = frozenset()
        if tag_rates and role is Role.PATIENT:
            tags = frozenset(t for t, r in sorted(tag_rates.items()) if rng.random() < r)
        turns.append(Turn(conv_id, i, role, wc, words, tags))
    return Conversation(conv_id, tuple(turns))


def generate_corpus(
    n_conversations: int,
    n_turns: Union[int, tuple[int, int]],
    p_long: ProbSpec,
    order: int = 3,
    seed: int = 0,
    rule: BinarizationRule = DEFAULT_RULE,
    alternation: float = 0.86,
    unknown_rate: float = 0.0,
    tag_rates: Optional[Mapping[str, float]] = None,
    vocabulary: Optional[Sequence[str]] = None,
    prefix: str = "syn",
) -> Corpus:
    """A corpus of conversations from one chain.

    ``n_turns`` is a fixed length or an inclusive ``(lo, hi)`` range.
    ``p_long`` gives ``P(L | state)`` per state code: a vector, a mapping from
    role to vector, or a callable of the narrative-time fraction returning
    either.
    """
    rng = np.random.default_rng(seed)
    convs = []
    for c in range(n_conversations):
        n = n_turns if isinstance(n_turns, int) else int(rng.integers(n_turns[0], n_turns[1] + 1))
        convs.append(generate_conversation(
            f"{prefix}{c:04d}", n, p_long, order, rng, rule, alternation,
            unknown_rate, tag_rates, vocabulary,
        ))
    return Corpus(tuple(convs), provenance=f"synthetic seed={seed}")


def uniform_length_corpus(n_conversations: int, n_turns: int, max_words: int = 14,
                          seed: int = 0) -> Corpus:
    """Word counts iid uniform on ``1..max_words``; roles alternate."""
    rng = np.random.default_rng(seed)
    convs = []
    for c in range(n_conversations):
        cid = f"u{c:04d}"
        wcs = rng.integers(1, max_words + 1, size=n_turns)
        turns = tuple(
            Turn(cid, i, Role.PATIENT if i % 2 == 0 else Role.CLINICIAN, int(w))
            for i, w in enumerate(wcs)
        )
        convs.append(Conversation(cid, turns))
    return Corpus(tuple(convs), provenance=f"uniform lengths seed={seed}")
