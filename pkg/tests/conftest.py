import numpy as np
import pytest

from codym.corpus import Conversation, Corpus, Role, Turn

SHORT, LONG = 3, 12


def conv_from_labels(cid, labels, roles=None, words=None, tags=None):
    """Conversation whose turn lengths encode ``labels`` ("SLSL" or list)."""
    turns = []
    for i, lab in enumerate(labels):
        role = roles[i] if roles is not None else (Role.PATIENT if i % 2 == 0 else Role.CLINICIAN)
        w = words[i] if words is not None else None
        wc = len(w) if w is not None else (LONG if lab == "L" else SHORT)
        turns.append(Turn(cid, i, role, wc, tuple(w) if w is not None else None,
                          frozenset(tags[i]) if tags is not None else frozenset()))
    return Conversation(cid, tuple(turns))


def corpus_of(*convs):
    return Corpus(tuple(convs))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
