from collections import Counter

import numpy as np
import pytest

from codym import nulls
from codym.core import CodymModel, TurnArrays
from codym.corpus import Role
from codym.errors import EnsembleError, InsufficientDataError, ValidationError
from codym.synthetic import generate_corpus

from conftest import conv_from_labels, corpus_of

P, C = Role.PATIENT, Role.CLINICIAN


def _lengths_conv(lengths, roles):
    from codym.corpus import Conversation, Turn
    return Conversation("c", tuple(Turn("c", i, r, w) for i, (w, r) in enumerate(zip(lengths, roles))))


def test_singleton_roles_unchanged(rng):
    conv = _lengths_conv([3, 9], [P, C])
    assert nulls.shuffle_lengths_within_role(conv, rng) == conv


def test_shuffle_keeps_roles_and_multisets(rng):
    conv = _lengths_conv([3, 9, 12, 2], [P, C, P, C])
    seen = set()
    for _ in range(200):
        out = nulls.shuffle_lengths_within_role(conv, rng)
        assert [t.role for t in out.turns] == [P, C, P, C]
        assert {out.turns[0].word_count, out.turns[2].word_count} == {3, 12}
        assert {out.turns[1].word_count, out.turns[3].word_count} == {9, 2}
        assert [t.index for t in out.turns] == [0, 1, 2, 3]
        seen.add(tuple(t.word_count for t in out.turns))
    assert len(seen) == 4


def test_shuffle_moves_tags_with_turns(rng):
    conv = conv_from_labels("c", "SLSLSL", tags=[{"a"}, set(), set(), set(), {"b"}, set()])
    for _ in range(20):
        out = nulls.shuffle_lengths_within_role(conv, rng)
        for t in out.turns:
            if "a" in t.tags or "b" in t.tags:
                assert t.role is P


def test_role_shuffler_preserves_groups():
    corpus = generate_corpus(5, (30, 60), np.full(8, 0.4), seed=1, unknown_rate=0.05)
    arrays = TurnArrays.from_corpus(corpus)
    labels = arrays.labels()
    shuf = nulls.RoleShuffler(arrays)
    for i in range(50):
        out = shuf(labels, nulls.replicate_rng(0, i))
        for g in np.unique(shuf.group):
            idx = shuf.group == g
            assert Counter(out[idx].tolist()) == Counter(labels[idx].tolist())


def test_role_shuffler_uniform_over_arrangements():
    corpus = corpus_of(_lengths_conv([20, 1, 2, 1, 3, 1], [P, C, P, C, P, C]))
    arrays = TurnArrays.from_corpus(corpus)
    shuf = nulls.RoleShuffler(arrays)
    values = arrays.word_count
    firsts = Counter(int(shuf(values, nulls.replicate_rng(5, i))[0]) for i in range(3000))
    assert set(firsts) == {20, 2, 3}
    for v in firsts.values():
        assert abs(v - 1000) < 4 * np.sqrt(3000 * (1 / 3) * (2 / 3))


def test_multinomial_degenerate(rng):
    base = CodymModel.from_counts([0, 5, 0, 0], 1)
    draw = nulls.sample_transition_counts(base, 50, rng)
    assert draw.count("S", "L") == 50
    assert draw.transition_count.sum() == 50


def test_multinomial_uniform_bounds(rng):
    base = CodymModel.from_counts(np.ones(8), 2)
    inside = 0
    for _ in range(300):
        c = nulls.sample_transition_counts(base, 8000, rng).transition_count.reshape(-1)
        assert c.sum() == 8000
        inside += bool(np.all(np.abs(c - 1000) <= 110))
    assert inside >= 0.99 * 300 - 3


def test_matched_sample(rng):
    pool = np.array([1] * 10 + [0] * 10)  # slot 1 = S-L (label L), slot 0 = S-S
    got = nulls.sample_matched_turn_set(pool, 4, 2, rng)
    assert got.size == 4 and int((got & 1).sum()) == 2
    assert np.all(nulls.sample_matched_turn_set(pool, 3, 3, rng) & 1)


def test_matched_sample_insufficient(rng):
    pool = np.array([1, 0, 0, 0])
    with pytest.raises(InsufficientDataError, match="L events"):
        nulls.sample_matched_turn_set(pool, 3, 2, rng)


def _model_with_slot(value, order=1):
    f = np.zeros((2 ** order, 2))
    f[0, 0] = value
    return CodymModel(order, f, np.zeros_like(f), 1)


def test_percentile_interval_hand_values():
    lo, hi = nulls.percentile_interval(np.arange(1, 101, dtype=float), 0.05)
    assert lo == pytest.approx(3.475)
    assert hi == pytest.approx(97.525)
    ens = nulls.ensemble_from_models([_model_with_slot(v) for v in range(1, 101)], seed=0)
    assert ens.ci_low[0, 0] == pytest.approx(3.475)
    assert ens.ci_high[0, 0] == pytest.approx(97.525)


def test_identical_replicates_collapse_ci():
    m = CodymModel.from_counts([1, 2, 3, 4], 1)
    ens = nulls.build_ensemble(lambda rng: m, replicates=20)
    assert ens.replicates == 20
    assert np.allclose(ens.ci_low, ens.mean.transition_freq)
    assert np.allclose(ens.ci_high, ens.mean.transition_freq)
    assert nulls.significance_report(m, ens).n_significant == 0


def test_significance_outside_range():
    ens = nulls.ensemble_from_models([_model_with_slot(v) for v in np.linspace(10, 20, 50)], seed=0)
    rep = nulls.significance_report(_model_with_slot(25.0), ens)
    assert rep.significant[0, 0]
    assert rep.is_significant("S", "S")
    assert rep.n_significant == 1
    back = nulls.SignificanceReport.from_dict(rep.to_dict())
    assert np.array_equal(back.significant, rep.significant)
    assert np.allclose(back.ci_low, rep.ci_low)


def test_ensemble_deterministic_across_workers():
    corpus = generate_corpus(8, (40, 60), np.full(8, 0.45), seed=4)
    gen = nulls.normative_null_generator(corpus, 3, role=Role.PATIENT)
    a = nulls.build_ensemble(gen, replicates=30, seed=11, workers=1)
    b = nulls.build_ensemble(gen, replicates=30, seed=11, workers=3)
    assert np.array_equal(a.samples, b.samples)
    assert a.samples_csv() == b.samples_csv()
    c = nulls.build_ensemble(gen, replicates=30, seed=12)
    assert not np.array_equal(a.samples, c.samples)


def test_ci_brackets_mean():
    corpus = generate_corpus(10, (40, 60), np.full(8, 0.45), seed=4)
    ens = nulls.build_ensemble(nulls.normative_null_generator(corpus, 2), replicates=100, seed=1)
    m = ens.mean.transition_freq
    assert np.all(ens.ci_low <= m + 1e-9) and np.all(m <= ens.ci_high + 1e-9)


def test_replicate_failure_carries_index():
    def gen(rng):
        raise RuntimeError("boom")
    with pytest.raises(EnsembleError) as exc:
        nulls.build_ensemble(gen, replicates=5)
    assert exc.value.index == 0


def test_build_ensemble_validation():
    with pytest.raises(ValidationError):
        nulls.build_ensemble(lambda rng: None, replicates=1)
    with pytest.raises(ValidationError):
        nulls.build_ensemble(lambda rng: None, replicates=5, alpha=1.5)


def test_normative_study_strata():
    corpus = generate_corpus(6, (40, 60), np.full(8, 0.45), seed=2)
    strata = nulls.normative_study(corpus, 2, replicates=20, seed=3)
    assert [s.stratum for s in strata] == ["patient", "clinician"]
    for s in strata:
        assert s.observed.transition_freq.sum() == pytest.approx(100)
        assert s.ensemble.samples.shape == (20, 4, 2)
    (single,) = nulls.normative_study(corpus, 2, stratified=False, replicates=20, seed=3)
    assert single.stratum is None


def test_shuffle_null_of_scalar_chain_is_centered():
    # iid lengths: the observed model should rarely leave the shuffle CI
    corpus = generate_corpus(30, 120, np.full(8, 0.4), seed=9)
    (s,) = nulls.normative_study(corpus, 3, stratified=False, replicates=100, seed=1)
    assert s.report.n_significant <= 4
