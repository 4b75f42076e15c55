import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codym.core import (
    BinarizationRule,
    CodymModel,
    DeltaModel,
    Label,
    binarize_turn,
    delta_model,
    mean_model,
    populate_model,
    select_threshold,
    shift,
    slot_names,
    state_code,
    state_name,
    state_names,
    state_sequence,
    transition_name,
)
from codym.corpus import Role
from codym.errors import EmptyModelError, OrderMismatchError, ValidationError
from codym.synthetic import uniform_length_corpus

from conftest import conv_from_labels, corpus_of


@pytest.mark.parametrize("wc,label", [(7, Label.S), (8, Label.L), (1, Label.S), (200, Label.L)])
def test_binarize(wc, label):
    assert binarize_turn(wc, BinarizationRule(8)) is label


def test_rule_validation():
    with pytest.raises(ValidationError):
        BinarizationRule(1)


def test_state_encoding_oldest_first():
    assert state_code("LSS") == 4
    assert state_name(4, 3) == "LSS"
    assert state_names(2) == ["SS", "SL", "LS", "LL"]
    assert shift(state_code("SLS"), Label.L, 3) == state_code("LSL")
    assert slot_names(1) == ["S-S", "S-L", "L-S", "L-L"]
    assert transition_name("SLS", "L") == "SLS-L->LSL"


def _seq(s):
    return [Label[c] for c in s]


def test_state_sequence_examples():
    assert state_sequence(_seq("SLSL"), 2) == [("SL", Label.S), ("LS", Label.L)]
    assert state_sequence(_seq("SL"), 3) == []
    assert state_sequence(_seq("LLLL"), 3) == [("LLL", Label.L)]


def test_pooled_alternating():
    corpus = corpus_of(conv_from_labels("c", "SLSLSL"))
    m = populate_model(corpus, 2)
    assert m.event_count == 4
    assert m.freq("SL", "S") == pytest.approx(50)
    assert m.freq("LS", "L") == pytest.approx(50)
    assert m.transition_freq.sum() == pytest.approx(100)


def test_event_filter_restricts_events_not_context():
    # patients hold turns 1, 3, 5 (1-based), i.e. the S turns
    roles = [Role.PATIENT, Role.CLINICIAN] * 3
    corpus = corpus_of(conv_from_labels("c", "SLSLSL", roles))
    m = populate_model(corpus, 2, event_filter=Role.PATIENT, stratum="patient")
    assert m.event_count == 2
    assert m.freq("SL", "S") == pytest.approx(100)
    assert m.stratum == "patient"


def test_zero_weight_pooled_and_per_conversation():
    convs = [conv_from_labels(f"c{i}", "SLSLS", words=[["a"] * 3, ["b"] * 12, ["c"] * 3,
                                                        ["d"] * 12, ["e"] * 3]) for i in range(2)]
    corpus = corpus_of(*convs)
    think = lambda t: t.words.count("think")  # noqa: E731
    with pytest.raises(EmptyModelError):
        populate_model(corpus, 2, weight_fn=think)
    models = populate_model(corpus, 2, weight_fn=think, pooling="per_conversation")
    assert len(models) == 0
    assert models.excluded == ["c0", "c1"]


def test_per_conversation_excludes_short():
    corpus = corpus_of(conv_from_labels("long", "SLSLSL"), conv_from_labels("tiny", "SL"))
    models = populate_model(corpus, 3, pooling="per_conversation")
    assert [m.metadata for m in models] == ["long"]
    assert models.excluded == ["tiny"]


def test_weights_scale_counts():
    words = [["x"], ["y"] * 12, ["think", "think", "a"], ["y"] * 12]
    corpus = corpus_of(conv_from_labels("c", "SLSL", words=words))
    m = populate_model(corpus, 2, weight_fn=lambda t: t.words.count("think"))
    assert m.count("SL", "S") == 2
    assert m.event_count == 1  # events with nonzero weight


def test_mean_model_identity_and_symmetry():
    a = CodymModel.from_counts([1, 3, 0, 0], 1)
    assert np.allclose(mean_model([a, a]).transition_freq, a.transition_freq)
    x = CodymModel.from_counts([1, 0, 0, 0], 1)
    y = CodymModel.from_counts([0, 1, 0, 0], 1)
    m = mean_model([x, y])
    assert m.freq("S", "S") == pytest.approx(50)
    assert m.freq("S", "L") == pytest.approx(50)
    assert m.median_freq is not None


def test_mean_model_order_mismatch():
    with pytest.raises(OrderMismatchError):
        mean_model([CodymModel.empty(1), CodymModel.empty(2)])


def test_delta_model():
    obs = CodymModel.from_counts([60, 40, 0, 0], 1)
    exp = CodymModel.from_counts([50, 50, 0, 0], 1)
    d = delta_model(obs, exp)
    assert d.value("S", "S") == pytest.approx(10)
    assert d.value("S", "L") == pytest.approx(-10)
    assert d.delta.sum() == pytest.approx(0, abs=1e-9)
    assert np.all(delta_model(obs, obs).delta == 0)
    with pytest.raises(OrderMismatchError):
        delta_model(obs, CodymModel.empty(2))


def test_delta_continuer_arithmetic():
    obs = np.zeros((4, 2))
    exp = np.zeros((4, 2))
    obs[state_code("SL"), Label.S] = 50.9
    exp[state_code("SL"), Label.S] = 3.3
    d = DeltaModel(2, obs - exp, obs.sum(axis=1), (obs - exp).sum(axis=1))
    assert d.value("SL", "S") == pytest.approx(47.6)


def test_model_arrays_read_only():
    m = CodymModel.from_counts([1, 2, 3, 4], 1)
    with pytest.raises(ValueError):
        m.transition_freq[0, 0] = 5


def test_model_dict_round_trip():
    m = CodymModel.from_counts(np.arange(16), 3, stratum="patient", metadata="x")
    back = CodymModel.from_dict(m.to_dict())
    assert np.allclose(back.transition_freq, m.transition_freq)
    assert np.array_equal(back.transition_count, m.transition_count)
    assert back.stratum == "patient"
    d = delta_model(m, CodymModel.from_counts(np.ones(16), 3))
    d2 = DeltaModel.from_dict(d.to_dict())
    assert np.allclose(d2.delta, d.delta) and np.allclose(d2.state_delta, d.state_delta)


def _brute_counts(labels, order):
    counts = np.zeros(2 ** (order + 1))
    for j in range(order, len(labels)):
        s = 0
        for lab in labels[j - order:j]:
            s = 2 * s + lab
        counts[2 * s + labels[j]] += 1
    return counts


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from("SL"), min_size=0, max_size=60), st.integers(1, 5))
def test_tallies_match_brute_force(labels, order):
    labels = "".join(labels)
    corpus = corpus_of(conv_from_labels("c", labels or "S"))
    bits = [1 if c == "L" else 0 for c in (labels or "S")]
    expected = _brute_counts(bits, order)
    if expected.sum() == 0:
        with pytest.raises(EmptyModelError):
            populate_model(corpus, order)
        return
    m = populate_model(corpus, order)
    assert np.array_equal(m.transition_count.reshape(-1), expected)
    assert m.transition_freq.sum() == pytest.approx(100, abs=1e-9)
    assert np.allclose(m.state_freq, m.transition_freq.sum(axis=1))


def test_select_threshold_uniform_lengths():
    scan = select_threshold(uniform_length_corpus(30, 200, 14, seed=1), 3)
    assert scan.threshold == 8
    assert scan.candidates == tuple(range(2, 15))


def test_select_threshold_degenerate():
    corpus = corpus_of(*[conv_from_labels(f"c{i}", "S" * 30) for i in range(3)])  # all length 3
    scan = select_threshold(corpus, 3, candidates=range(5, 9))
    assert scan.threshold == 5
    assert all(h == 0 for h in scan.entropy)


def test_select_threshold_transitions_option():
    corpus = uniform_length_corpus(10, 100, 14, seed=2)
    scan = select_threshold(corpus, 2, over="transitions")
    assert scan.threshold == 8
    with pytest.raises(ValidationError):
        select_threshold(corpus, 2, over="pairs")


def test_structure_and_de_bruijn_edges():
    for order in range(1, 6):
        m = CodymModel.from_counts(np.ones(2 ** (order + 1)), order)
        edges = m.edges()
        assert len(edges) == 2 ** (order + 1)
        for src, lab, dst, _ in edges:
            assert dst == (src + lab)[1:]
        assert len({e[:2] for e in edges}) == len(edges)


def test_all_states_listed():
    for order in range(1, 5):
        names = state_names(order)
        assert names == ["".join(p) for p in itertools.product("SL", repeat=order)]
