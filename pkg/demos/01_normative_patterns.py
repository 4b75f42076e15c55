"""Which transitions happen more or less often than turn lengths alone predict?

Build pooled order-3 models for patients and clinicians, then compare each
with a null in which every speaker's turn lengths are shuffled within the
conversation (role sequence untouched).  Slots outside the 95% ensemble
interval are the conversational habits worth talking about.
"""

from pathlib import Path

from codym.core import delta_model
from codym.nulls import normative_study
from codym.viz import VizSpec, render_svg

from _synth import clinic_corpus

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

corpus = clinic_corpus()
print(f"{len(corpus)} conversations, {sum(len(c) for c in corpus)} turns")

for s in normative_study(corpus, order=3, stratified=True, replicates=300, seed=1):
    rep = s.report
    print(f"\n{s.stratum}: {int(rep.significant.sum())} of {rep.significant.size} slots differ from the shuffle null")
    for (src, lab, dst, obs), exp, sig in zip(s.observed.edges(), rep.expected.ravel(), rep.significant.ravel()):
        if sig:
            print(f"  {src} -{lab}-> {dst}: observed {obs:5.2f}%, shuffled {exp:5.2f}%")
    (OUT / f"normative_{s.stratum}.svg").write_text(render_svg(s.observed, rep))
    delta = delta_model(s.observed, s.ensemble.mean)
    (OUT / f"normative_{s.stratum}_delta.svg").write_text(
        render_svg(delta, rep, VizSpec(mode="delta", title=f"{s.stratum}: observed minus null")))

print(f"\ndiagrams written to {OUT}")
