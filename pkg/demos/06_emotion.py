"""Where do angry patient turns sit?

Turn level: the model of anger-tagged patient events against matched draws
of patient events with the same count and the same number of long turns.
Conversation level: per-conversation models of conversations with and
without anger, compared slot by slot with two-sample KS tests.
"""

from codym.emotion import emotion_conversation_study, emotion_turn_study

from _synth import clinic_corpus

corpus = clinic_corpus(100)
turns = emotion_turn_study(corpus, "anger", replicates=300, seed=6)
print(f"{turns.n_tagged_turns} anger turns, {100 * turns.long_rate:.0f}% long "
      f"(patients overall {100 * turns.baseline_long_rate:.0f}%)")
for (src, lab, dst, obs), exp, sig in zip(turns.observed.edges(), turns.report.expected.ravel(),
                                           turns.report.significant.ravel()):
    if sig:
        print(f"  {src} -{lab}-> {dst}: {obs:5.2f}% vs matched {exp:5.2f}%")

convs = emotion_conversation_study(corpus, ("anger",), stratified=True)
print(f"\n{len(convs.group_a)} conversations with anger, {len(convs.group_b)} without")
for s in convs.strata:
    hits = [row for row in s.ks_table() if row["significant"]]
    print(f"{s.stratum}: {len(hits)} of {s.ks_d.size} slots differ by KS at alpha={s.alpha}")
