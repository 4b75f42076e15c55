"""Picking the S/L word-count cut.

The cut is chosen where the order-3 state distribution carries the most
entropy, i.e. where short/long labels are most informative.  On a corpus
whose word counts are uniform on 1..14, the best cut sits in the middle.
"""

from codym.core import select_threshold
from codym.synthetic import uniform_length_corpus

from _synth import clinic_corpus

scan = select_threshold(uniform_length_corpus(30, 300, 14, seed=2), 3, range(2, 15))
print(" t  entropy  P(L)")
for t, h, p in scan.rows():
    mark = "  <- selected" if t == scan.threshold else ""
    print(f"{t:2d}  {h:7.4f}  {p:4.2f}{mark}")

clinic = select_threshold(clinic_corpus(60), 3, range(2, 15))
print(f"\nclinic demo corpus: selected t={clinic.threshold}")
