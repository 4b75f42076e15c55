"""Does a transition get rarer as a conversation unfolds?

Each conversation is cut into ten bins holding equal numbers of words; the
events of every transition are histogrammed over those bins.  Here a long
patient reply after SLS becomes steadily less likely in the second half,
and the Spearman trend over deciles 5-10 picks it up.
"""

import numpy as np

from codym.core import state_code
from codym.synthetic import generate_corpus
from codym.temporal import decile_transition_histograms

SLS = state_code("SLS")


def p_long(frac):
    p = np.full(8, 0.5)
    p[SLS] = 0.85 - 0.6 * max(0.0, frac - 0.4) / 0.6
    return p


corpus = generate_corpus(120, (200, 300), p_long, seed=3)
series = decile_transition_histograms(corpus, 3)
print("decile   SLS-L   SLS-S")
for d, (a, b) in enumerate(zip(series.series("SLS", "L"), series.series("SLS", "S")), start=1):
    print(f"{d:6d}  {a:6.3f}  {b:6.3f}")
r = series.trend("SLS", "L")
print(f"\nSLS-L over deciles 5-10: rho={r.rho:.2f}, p={r.p_value:.3g} ({r.method})")
flat = series.trend("SSS", "S")
print(f"SSS-S over deciles 5-10: rho={flat.rho:.2f} (more short turns late, as long replies thin out)")
