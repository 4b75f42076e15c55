import itertools

import numpy as np
import pytest

from codym.context import (
    all_words_model,
    candidate_words,
    cluster_deltas,
    cluster_words,
    clusters_csv,
    kmeans_cluster,
    robustness_trials,
    term_list_model,
    term_list_study,
    trials_json,
    word_profiles,
    word_transition_profile,
)
from codym.core import Label, state_code
from codym.corpus import Role, TermList
from codym.errors import EmptyModelError, InsufficientDataError, UnsupportedInputError, ValidationError
from codym.synthetic import generate_corpus

from conftest import conv_from_labels, corpus_of


def _words(labels, special=None):
    """Filler words per turn; ``special`` maps turn index -> extra words."""
    out = []
    for i, lab in enumerate(labels):
        n = 12 if lab == "L" else 3
        extra = list((special or {}).get(i, ()))
        out.append(extra + ["w%d" % i] * (n - len(extra)))
    return out


def test_single_occurrence_profile():
    labels = "SSLSL"
    corpus = corpus_of(conv_from_labels("c", labels, words=_words(labels, {4: ["zebra"]})))
    p = word_transition_profile(corpus, "zebra", order=2)
    assert p.total_count == 1
    assert p.freq_vector[2 * state_code("LS") + Label.L] == pytest.approx(100)
    assert p.long_turn_fraction == 1.0


def test_double_occurrence_weighted_twice():
    labels = "SSLSL"
    corpus = corpus_of(conv_from_labels("c", labels, words=_words(labels, {4: ["zebra", "zebra"],
                                                                           2: ["zebra"]})))
    p = word_transition_profile(corpus, "zebra", order=2)
    assert p.counts[state_code("LS"), Label.L] == 2
    assert p.counts[state_code("SS"), Label.L] == 1


def test_word_in_seed_turns_only():
    labels = "SSLSL"
    corpus = corpus_of(conv_from_labels("c", labels, words=_words(labels, {0: ["zebra"]})))
    p = word_transition_profile(corpus, "zebra", order=2)
    assert p.total_count == 1
    assert p.empty
    assert np.all(p.freq_vector == 0)


def test_words_required():
    corpus = corpus_of(conv_from_labels("c", "SLSL"))
    with pytest.raises(UnsupportedInputError):
        word_profiles(corpus)


def test_all_words_model_is_length_weighted():
    labels = "SLSLSL"
    corpus = corpus_of(conv_from_labels("c", labels, words=_words(labels)))
    m = all_words_model(corpus, 2)
    # 2 SL->S events with 3 words, 2 LS->L events with 12 words
    assert m.freq("SL", "S") == pytest.approx(100 * 6 / 30)
    assert m.freq("LS", "L") == pytest.approx(100 * 24 / 30)


def _candidate_corpus(n_conv=30):
    convs = []
    rng = np.random.default_rng(0)
    for c in range(n_conv):
        labels = "".join(rng.choice(list("SL"), size=80))
        special = {}
        for i in range(2, 80):
            if labels[i - 2:i + 1] == "SLS":
                special[i] = ["continuer"]
        convs.append(conv_from_labels(f"c{c}", labels, words=_words(labels, special)))
    return corpus_of(*convs)


def test_candidate_word_planted_on_one_slot():
    corpus = _candidate_corpus()
    base = all_words_model(corpus, 2)
    got = candidate_words(corpus, base, min_count=100, min_delta=10)
    names = [p.word for p in got]
    assert "continuer" in names
    p = got[names.index("continuer")]
    assert p.freq_vector[2 * state_code("SL") + Label.S] == pytest.approx(100)


def test_candidate_words_count_boundary():
    corpus = _candidate_corpus()
    profiles = word_profiles(corpus, 2)
    n = profiles["continuer"].total_count
    base = all_words_model(corpus, 2)
    assert any(p.word == "continuer" for p in candidate_words(corpus, base, min_count=n))
    assert not any(p.word == "continuer" for p in candidate_words(corpus, base, min_count=n + 1))


def test_candidate_word_matching_baseline_excluded():
    labels = "SLSLSL"
    corpus = corpus_of(conv_from_labels("c", labels, words=[["same"] * (12 if x == "L" else 3)
                                                           for x in labels]))
    base = all_words_model(corpus, 2)
    assert candidate_words(corpus, base, min_count=1, min_delta=1e-9) == []


def test_kmeans_k1_is_mean():
    X = np.array([[0, 0], [2, 0], [4, 6.0]])
    r = kmeans_cluster(X, k=1)
    assert np.allclose(r.centroids[0], X.mean(axis=0))
    assert r.labels.tolist() == [0, 0, 0]


def test_kmeans_two_blobs_against_exhaustive():
    X = np.array([[0, 0], [0, 1], [10, 10], [10, 11.0]])
    r = kmeans_cluster(X, k=2, seed=3)
    best = None
    for mask in itertools.product([0, 1], repeat=4):
        mask = np.array(mask)
        if mask.all() or not mask.any():
            continue
        cost = sum(((X[mask == j] - X[mask == j].mean(axis=0)) ** 2).sum() for j in (0, 1))
        if best is None or cost < best[0]:
            best = (cost, mask)
    assert r.inertia == pytest.approx(best[0])
    assert r.labels[0] == r.labels[1] != r.labels[2] == r.labels[3]
    cents = sorted(map(tuple, r.centroids))
    assert np.allclose(cents, [(0, 0.5), (10, 10.5)])


def test_kmeans_duplicates_share_cluster():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 3))
    X = np.vstack([X, X[:5]])
    r = kmeans_cluster(X, k=4, seed=2)
    assert np.array_equal(r.labels[:5], r.labels[20:])


def test_kmeans_seeded_and_validated():
    X = np.random.default_rng(1).normal(size=(30, 4))
    a = kmeans_cluster(X, 3, seed=5)
    b = kmeans_cluster(X, 3, seed=5)
    assert np.array_equal(a.labels, b.labels)
    assert all(h1 >= h2 - 1e-9 for h1, h2 in zip(a.inertia_history, a.inertia_history[1:]))
    with pytest.raises(ValidationError):
        kmeans_cluster(X, 31)


def test_kmeans_fixed_point():
    X = np.random.default_rng(4).normal(size=(60, 8))
    r = kmeans_cluster(X, 5, seed=0)
    for j in range(5):
        assert np.allclose(r.centroids[j], X[r.labels == j].mean(axis=0))
    d = ((X[:, None] - r.centroids[None]) ** 2).sum(axis=2)
    assert np.array_equal(d.argmin(axis=1), r.labels)


def _vocab_corpus(seed=0):
    vocab = ["maybe", "perhaps", "chemo", "pain", "the", "a", "you", "i", "think", "kind", "of"] \
        + [f"f{i}" for i in range(20)]
    return generate_corpus(15, 80, np.full(8, 0.45), seed=seed, vocabulary=vocab)


def test_term_list_single_literal_equals_word_profile():
    corpus = _vocab_corpus()
    m = term_list_model(corpus, TermList.from_strings("one", ["maybe"]), 2)
    p = word_transition_profile(corpus, "maybe", 2)
    assert np.allclose(m.transition_count.reshape(-1), p.counts.reshape(-1))
    assert np.allclose(m.transition_freq.reshape(-1), p.freq_vector)


def test_term_list_additivity():
    corpus = _vocab_corpus()
    a = TermList.from_strings("a", ["maybe", "kind of"])
    b = TermList.from_strings("b", ["chemo", "pa*"])
    ab = TermList.from_strings("ab", ["maybe", "kind of", "chemo", "pa*"])
    ma, mb, mab = (term_list_model(corpus, t, 2) for t in (a, b, ab))
    assert np.allclose(mab.transition_count, ma.transition_count + mb.transition_count)


def test_term_list_no_matches():
    with pytest.raises(EmptyModelError, match="zzz"):
        term_list_model(_vocab_corpus(), TermList.from_strings("zzz", ["zzz"]), 2, role=Role.PATIENT)


def test_term_list_study_shapes():
    corpus = _vocab_corpus()
    study = term_list_study(corpus, TermList.from_strings("h", ["maybe", "perhaps"]), 2,
                            role=Role.CLINICIAN, replicates=50, seed=1)
    assert study.occurrences == int(study.observed.transition_count.sum())
    assert study.ensemble.replicates == 50
    assert study.to_dict()["role"] == "clinician"


def test_robustness_ten_terms():
    corpus = _vocab_corpus()
    terms = TermList.from_strings("ten", ["maybe", "perhaps", "chemo", "pain", "the", "a", "you",
                                          "i", "think", "kind"])
    trials = robustness_trials(corpus, terms, 0.10, seed=3)
    assert all(len(t.removed) == 1 for t in trials)
    assert len(trials) == 20  # two full passes cover every term twice
    removed = [t.removed[0] for t in trials]
    assert all(removed.count(str(p)) >= 2 for p in terms.entries)
    assert '"removed"' in trials_json(trials)


def test_robustness_uneven_blocks():
    corpus = _vocab_corpus()
    terms = TermList.from_strings("seven", ["maybe", "perhaps", "chemo", "pain", "the", "a", "you"])
    trials = robustness_trials(corpus, terms, 0.3, seed=1)
    assert all(len(t.removed) == 3 for t in trials)
    assert all(len(set(t.removed)) == 3 for t in trials)


def test_robustness_single_term_error():
    with pytest.raises(InsufficientDataError):
        robustness_trials(_vocab_corpus(), TermList.from_strings("one", ["maybe", "zzz"]), 0.1)


def test_robustness_identical_profiles():
    labels = "SLSLSLSL"
    words = [["x", "y", "z"] if c == "S" else ["x", "y", "z"] * 4 for c in labels]
    corpus = corpus_of(conv_from_labels("c", labels, words=words))
    trials = robustness_trials(corpus, TermList.from_strings("t", ["x", "y", "z"]), 0.3, seed=0)
    first = trials[0].model.transition_freq
    assert all(np.allclose(t.model.transition_freq, first) for t in trials)


def test_cluster_words_and_deltas():
    corpus = _vocab_corpus(2)
    profiles = list(word_profiles(corpus, 2).values())
    base = all_words_model(corpus, 2)
    r = cluster_words(profiles, 3, seed=0)
    out = cluster_deltas(r, profiles, base)
    assert sum(1 for _ in out) == len(set(r.labels.tolist()))
    text = clusters_csv(profiles, r)
    assert text.splitlines()[0].startswith("word,count,pct_long,cluster,SS-S")
    assert len(text.splitlines()) == len(profiles) + 1
