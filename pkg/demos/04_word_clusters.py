"""Words that live in particular conversational contexts.

Every word occurrence inherits the transition of the turn it sits in.
Frequent words whose order-2 profile strays far from the all-words profile
are clustered with k-means; backchannels ("yeah", "okay") should land
together in S-after-L slots and narrative words in L-after-L slots.
"""

from codym.context import all_words_model, candidate_words, cluster_deltas, cluster_words

from _synth import clinic_corpus

corpus = clinic_corpus(80)
baseline = all_words_model(corpus, order=2)
words = candidate_words(corpus, baseline, min_count=100, min_delta=4.0)
print(f"{len(words)} candidate words: {', '.join(p.word for p in words)}")

result = cluster_words(words, k=3, seed=0)
for j, model, delta in cluster_deltas(result, words, baseline):
    members = sorted(w for w, c in result.assignments.items() if c == j)
    top = max(delta.edges(), key=lambda e: e[3])
    print(f"\ncluster {j}: {', '.join(members)}")
    print(f"  most over-represented slot: {top[0]} -{top[1]}-> {top[2]} (+{top[3]:.1f} points)")
