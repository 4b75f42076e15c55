"""Can turn-length dynamics alone tell two kinds of conversation apart?

Per-conversation transition frequencies, stratified by speaker, feed a
random forest evaluated on repeated 80/20 holdouts.  One group was
generated with an extra 15-point chance of a long turn after *LS.
"""

import numpy as np

from codym.classify import ForestConfig, conversation_features, repeated_holdout_eval
from codym.core import state_code
from codym.corpus import Corpus
from codym.synthetic import generate_corpus

plain = np.full(8, 0.45)
bumped = plain.copy()
bumped[[state_code("SLS"), state_code("LLS")]] += 0.15

a = generate_corpus(50, (120, 180), plain, seed=71, prefix="plain")
b = generate_corpus(50, (120, 180), bumped, seed=72, prefix="bumped")
corpus = Corpus(a.conversations + b.conversations)
labels = {c.id: c.id.startswith("bumped") for c in corpus}

for order in (1, 2, 3):
    feats = conversation_features(corpus, order, stratified=True, labels=labels)
    r = repeated_holdout_eval(feats, ForestConfig(trees=100), repeats=50, seed=order)
    print(f"order {order}: {feats.X.shape[1]:3d} features, accuracy {r.mu:.1f} +/- {r.sigma:.1f}%, p={r.p_value:.3g}")

feats = conversation_features(corpus, 3, stratified=True, labels=labels)
null = repeated_holdout_eval(feats, ForestConfig(trees=100), repeats=50, seed=9, permute_labels=True)
print(f"permuted labels: accuracy {null.mu:.1f}%, p={null.p_value:.2f}")
