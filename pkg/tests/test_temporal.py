import numpy as np

from codym.core import Label, state_code
from codym.corpus import Conversation, Role, Turn
from codym.synthetic import generate_corpus
from codym.temporal import assign_deciles, decile_transition_histograms

from conftest import corpus_of


def _conv(lengths, cid="c", tags=None, roles=None):
    turns = []
    for i, w in enumerate(lengths):
        role = roles[i] if roles else (Role.PATIENT if i % 2 == 0 else Role.CLINICIAN)
        turns.append(Turn(cid, i, role, w, None, frozenset(tags[i]) if tags else frozenset()))
    return Conversation(cid, tuple(turns))


def test_exact_tiling():
    assert assign_deciles(_conv([10] * 10)) == list(range(10))


def test_first_word_rule():
    assert assign_deciles(_conv([50, 50])) == [0, 5]


def test_last_turn_clamped():
    # last turn starts at word W-1
    d = assign_deciles(_conv([99, 1]))
    assert d == [0, 9]
    assert max(assign_deciles(_conv([1] * 7))) <= 9


def test_histograms_normalized():
    corpus = generate_corpus(20, (80, 120), np.full(8, 0.45), seed=3)
    series = decile_transition_histograms(corpus, 3)
    totals = series.histogram.sum(axis=2)
    populated = ~series.empty
    assert np.allclose(totals[populated], 1.0, atol=1e-9)
    assert np.all(totals[~populated] == 0)


def test_tagged_transition_only_in_first_decile():
    n = 40
    lengths = [3, 12, 3, 12] + [5] * (n - 4)
    tags = [set() for _ in range(n)]
    tags[3] = {"anger"}
    corpus = corpus_of(_conv(lengths, tags=tags))
    series = decile_transition_histograms(corpus, 3, role=lambda t: "anger" in t.tags)
    row = series.histogram[state_code("SLS"), Label.L]
    assert row.tolist() == [1.0] + [0.0] * 9
    assert series.raw_counts.sum() == 1


def test_uniform_corpus_flat_bins():
    corpus = generate_corpus(200, 200, np.full(8, 0.5), seed=8)
    series = decile_transition_histograms(corpus, 2)
    raw = series.raw_counts
    for code in range(4):
        for lab in (0, 1):
            n = raw[code, lab].sum()
            sd = np.sqrt(n * 0.1 * 0.9)
            assert np.all(np.abs(raw[code, lab] - 0.1 * n) < 4 * sd + 1)


def test_role_filter_and_per_role_boundaries():
    corpus = generate_corpus(10, 100, np.full(8, 0.5), seed=1)
    pat = decile_transition_histograms(corpus, 2, role=Role.PATIENT)
    cli = decile_transition_histograms(corpus, 2, role=Role.CLINICIAN)
    both = decile_transition_histograms(corpus, 2)
    assert np.array_equal(pat.raw_counts + cli.raw_counts, both.raw_counts)
    alt = decile_transition_histograms(corpus, 2, role=Role.PATIENT, per_role_boundaries=True)
    assert alt.raw_counts.sum() == pat.raw_counts.sum()
    assert pat.role == "patient"


def test_trend_and_csv():
    def p_long(frac):
        p = np.full(8, 0.5)
        p[state_code("SLS")] = 0.9 - 0.8 * max(0.0, frac - 0.4) / 0.6
        return p
    corpus = generate_corpus(150, 250, p_long, seed=4)
    series = decile_transition_histograms(corpus, 3)
    r = series.trend("SLS", "L")
    assert r.rho <= -0.9
    assert r.n == 6
    csv_text = series.to_csv()
    lines = csv_text.splitlines()
    assert lines[0].split(",")[:2] == ["transition", "decile_1"]
    assert len(lines) == 17
    assert lines[1].startswith("SSS-S->SSS,")
