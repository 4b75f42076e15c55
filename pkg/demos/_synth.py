"""Shared synthetic corpus for the demos.

The generator is the package's seeded {S, L} chain; this module then layers
words and emotion tags onto the turns so that context effects exist to be
found.  Everything is deterministic given the seed.
"""

import numpy as np

from codym.core import Label, binarize_turn
from codym.corpus import Conversation, Corpus, Role, Turn
from codym.synthetic import generate_corpus

# P(L | state) per order-3 state code (SSS=0 ... LLL=7), mild clustering plus an LS->L bump
P_LONG = np.array([0.38, 0.47, 0.44, 0.50, 0.46, 0.58, 0.45, 0.52])

FILLER = ["the", "and", "so", "it", "that", "was", "you", "we", "have", "just", "well", "then"]
BACKCHANNEL = ["yeah", "okay", "right", "mhm", "sure"]      # favoured in S turns after an L
NARRATIVE = ["because", "remember", "when", "story", "family"]  # favoured in L after L
HEDGES = ["think", "guess", "maybe", "hope", "worried"]
MEDICAL = ["chemo", "hospice", "pain", "medicine", "scan"]


def _words(rng, n, label, prev_label):
    pool = list(FILLER)
    if label is Label.S and prev_label is Label.L:
        pool += BACKCHANNEL * 6
    if label is Label.L and prev_label is Label.L:
        pool += NARRATIVE * 3
    if label is Label.L:
        pool += HEDGES + MEDICAL
    return tuple(pool[j] for j in rng.integers(0, len(pool), size=n))


def clinic_corpus(n_conversations=120, seed=7, anger_boost=0.35, angry_share=0.4):
    """Conversations with words; in ``angry_share`` of them, ``anger`` favours long patient turns that follow a long turn."""
    base = generate_corpus(n_conversations, (120, 260), P_LONG, seed=seed)
    rng = np.random.default_rng(seed + 1)
    convs = []
    for conv in base:
        prev = Label.S
        turns = []
        angry = rng.random() < angry_share
        for t in conv.turns:
            lab = binarize_turn(t.word_count)
            tags = frozenset()
            rate = 0.03 if lab is Label.S else (anger_boost if prev is Label.L else 0.08)
            if angry and t.role is Role.PATIENT and rng.random() < rate:
                tags = frozenset({"anger"})
            turns.append(Turn(t.conversation_id, t.index, t.role, t.word_count,
                              _words(rng, t.word_count, lab, prev), tags))
            prev = lab
        convs.append(Conversation(conv.id, tuple(turns)))
    return Corpus(tuple(convs), provenance=f"demo clinic corpus seed={seed}")
