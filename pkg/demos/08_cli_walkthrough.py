"""The same pipeline from the command line, with a replayable manifest.

Writes the demo corpus as transcript JSONL, then runs ingest, threshold,
fit and render through the ``codym`` entry point.  Every command drops a
manifest.json recording its argv, seed and input hashes; ``replay`` reruns
one and the outputs match byte for byte.
"""

import filecmp
import subprocess
import sys
from pathlib import Path

from codym.corpus import serialize_jsonl

from _synth import clinic_corpus

OUT = Path(__file__).parent / "out" / "cli"
OUT.mkdir(parents=True, exist_ok=True)
data = OUT / "clinic.jsonl"
data.write_text(serialize_jsonl(clinic_corpus(40)))


def codym(*args):
    cmd = [sys.executable, "-m", "codym", *args]
    print("$ codym " + " ".join(args), flush=True)
    subprocess.run(cmd, check=True)


codym("ingest", "--in", str(data), "--out", str(OUT / "ingest"))
codym("threshold", "--in", str(data), "--out", str(OUT / "threshold"))
codym("fit", "--in", str(data), "--out", str(OUT / "fit"), "--replicates", "200", "--seed", "11")
codym("replay", str(OUT / "fit" / "manifest.json"), "--out", str(OUT / "fit_replay"))

a, b = OUT / "fit", OUT / "fit_replay"
same = [p.name for p in sorted(a.iterdir()) if p.name != "manifest.json" and filecmp.cmp(p, b / p.name, shallow=False)]
print(f"\nreplay reproduced {len(same)} files identically: {', '.join(same)}")
