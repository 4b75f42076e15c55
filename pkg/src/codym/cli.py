"""``codym`` command-line interface.

Every command reads a JSONL corpus, writes its artifacts into ``--out``
(default ``$CODYM_OUTPUT_DIR`` or ``./codym_out``) and finishes with
``manifest.json`` recording the resolved configuration, the seed and sha256
hashes of every input and output.  ``codym replay manifest.json`` reruns a
recorded command.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .classify import ForestConfig, conversation_features, repeated_holdout_eval
from .context import (
    all_words_model,
    candidate_words,
    cluster_deltas,
    cluster_words,
    clusters_csv,
    robustness_trials,
    term_list_study,
    trials_json,
)
from .core import BinarizationRule, CodymModel, DeltaModel, delta_model, populate_model, select_threshold
from .corpus import Corpus, Role, bundled_term_list, filter_short_conversations, load_term_list, read_corpus, serialize_jsonl
from .emotion import emotion_conversation_study, emotion_turn_study
from .errors import CodymError
from .nulls import SignificanceReport, normative_study
from .temporal import decile_transition_histograms
from .viz import VizSpec, render_dot, render_svg

log = logging.getLogger("codym")

ENV_OUTPUT_DIR = "CODYM_OUTPUT_DIR"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Run:
    """Collects inputs/outputs for the manifest."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.out = Path(args.out or os.environ.get(ENV_OUTPUT_DIR) or "codym_out")
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []

    def input(self, path) -> Path:
        p = Path(path)
        if not p.is_file():
            raise CodymError(f"input file not found: {p}")
        self.inputs.append(p)
        return p

    def corpus(self) -> Corpus:
        corpus = read_corpus(self.input(self.args.input))
        if getattr(self.args, "min_turns", 0):
            corpus = filter_short_conversations(corpus, self.args.min_turns)
        return corpus

    def write(self, name: str, text: str) -> Path:
        p = self.out / name
        p.write_text(text, encoding="utf-8")
        self.outputs.append(p)
        return p

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")

    def manifest(self) -> dict:
        config = {k: v for k, v in sorted(vars(self.args).items())
                  if k not in ("func", "out") and not k.startswith("_")}
        return {
            "command": self.args.command + (f" {self.args.sub}" if getattr(self.args, "sub", None) else ""),
            "config": {**config, "argv": self.argv},
            "seed": getattr(self.args, "seed", None),
            "inputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.inputs],
            "outputs": [{"path": str(p), "sha256": _sha256(p)} for p in self.outputs],
            "tool_version": __version__,
        }


# -- helpers ---------------------------------------------------------------


def _role(name: str) -> Optional[Role]:
    return None if name in ("all", "any") else Role.parse(name)


def _rule(run: Run, corpus: Corpus, order: int) -> BinarizationRule:
    t = run.args.threshold
    if t == "auto":
        scan = select_threshold(corpus, order)
        log.info("auto threshold: %d", scan.threshold)
        run.args.threshold = str(scan.threshold)
        return BinarizationRule(scan.threshold)
    return BinarizationRule(int(t))


def _render(run: Run, stem: str, model, report=None, title: str = ""):
    spec = VizSpec(mode="delta" if isinstance(model, DeltaModel) else "frequency", title=title)
    run.write(stem + ".dot", render_dot(model, report, spec))
    run.write(stem + ".svg", render_svg(model, report, spec))


def _terms(spec: str):
    if spec in ("hedging", "treatment"):
        return bundled_term_list(spec)
    return load_term_list(spec)


def _range(text: str) -> list[int]:
    """'5-10' or '5,6,7' (1-based, inclusive) -> 0-based indices."""
    if "-" in text:
        a, b = text.split("-", 1)
        return list(range(int(a) - 1, int(b)))
    return [int(x) - 1 for x in text.split(",")]


# -- commands --------------------------------------------------------------


def cmd_ingest(run: Run):
    corpus = run.corpus()
    run.write("corpus.jsonl", serialize_jsonl(corpus))
    run.write_json("ingest.json", {
        "conversations": len(corpus),
        "turns": sum(len(c) for c in corpus),
        "dropped": list(corpus.dropped),
        "has_words": corpus.has_words,
        "roles": {r.value: sum(1 for t in corpus.turns() if t.role is r) for r in Role},
    })


def cmd_threshold(run: Run):
    a = run.args
    corpus = run.corpus()
    scan = select_threshold(corpus, a.order, range(a.min_threshold, a.max_threshold + 1), over=a.over)
    lines = ["threshold,entropy_bits,pct_long"]
    lines += [f"{t},{h:.6f},{r:.4f}" for t, h, r in scan.rows()]
    run.write("threshold.csv", "\n".join(lines) + "\n")
    run.write_json("threshold.json", {"threshold": scan.threshold, "order": a.order, "over": a.over})
    print(scan.threshold)


def cmd_fit(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    stratified = a.stratify == "role"
    if a.null == "none":
        roles = (Role.PATIENT, Role.CLINICIAN) if stratified else (None,)
        for role in roles:
            m = populate_model(corpus, a.order, rule, event_filter=role, stratum=role.value if role else None)
            stem = f"model_{role.value if role else 'all'}"
            run.write_json(stem + ".json", m.to_dict())
            _render(run, stem, m)
        return
    strata = normative_study(corpus, a.order, rule, stratified, a.replicates, a.seed, a.alpha, a.workers)
    for s in strata:
        name = s.stratum or "all"
        run.write_json(f"observed_{name}.json", s.observed.to_dict())
        run.write_json(f"ensemble_{name}.json", s.ensemble.to_dict())
        run.write(f"ensemble_{name}_samples.csv", s.ensemble.samples_csv())
        run.write_json(f"significance_{name}.json", s.report.to_dict())
        _render(run, f"observed_{name}", s.observed, s.report, f"{name}: observed")
        _render(run, f"delta_{name}", delta_model(s.observed, s.ensemble.mean), s.report,
                f"{name}: observed - null")


def cmd_deciles(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    role = _role(a.role)
    event_filter = role
    if a.tag:
        tags = frozenset(a.tag)
        event_filter = (lambda t: t.role is role and bool(t.tags & tags)) if role else (
            lambda t: bool(t.tags & tags))
    series = decile_transition_histograms(corpus, a.order, rule, event_filter, a.per_role_boundaries)
    run.write("deciles.csv", series.to_csv())
    run.write("deciles_counts.csv", series.to_csv(raw=True))
    trends = []
    for slot in a.trend or ():
        state, label = slot.split("-")
        r = series.trend(state, label, _range(a.trend_deciles))
        trends.append({"slot": slot, "rho": r.rho, "p": r.p_value, "n": r.n, "method": r.method})
    if trends:
        run.write_json("trends.json", trends)


def cmd_words(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    base = all_words_model(corpus, a.order, rule)
    profiles = candidate_words(corpus, base, a.min_count, a.min_delta, rule)
    if a.sub == "profile":
        run.write_json("baseline.json", base.to_dict())
        run.write_json("words.json", [
            {"word": p.word, "count": p.total_count, "pct_long": p.long_turn_fraction,
             "model": p.model().to_dict()} for p in profiles])
        return
    if len(profiles) < a.k:
        raise CodymError(f"{len(profiles)} candidate words is fewer than k={a.k}")
    result = cluster_words(profiles, a.k, a.seed, a.restarts)
    run.write("clusters.csv", clusters_csv(profiles, result))
    run.write_json("clusters.json", {
        "k": result.k, "seed": result.seed, "inertia": result.inertia,
        "assignments": result.assignments,
    })
    for j, _, d in cluster_deltas(result, profiles, base):
        _render(run, f"cluster_{j + 1}", d, title=f"cluster {j + 1} - all words")


def cmd_terms(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    terms = _terms(a.terms)
    if a.terms not in ("hedging", "treatment"):
        run.inputs.append(Path(a.terms))
    role = _role(a.role)
    if a.sub == "fit":
        study = term_list_study(corpus, terms, a.order, rule, role, a.replicates, a.seed, a.alpha, a.workers)
        stem = f"terms_{terms.name}_{a.role}"
        run.write_json(stem + ".json", study.to_dict())
        _render(run, stem, study.delta, study.report, f"{terms.name} ({a.role}) - null")
        return
    trials = robustness_trials(corpus, terms, a.fraction, a.seed, a.order, rule, role)
    run.write(f"robustness_{terms.name}_{a.role}.json", trials_json(trials) + "\n")


def cmd_emotion(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    if a.sub == "turns":
        for tag in a.tag:
            study = emotion_turn_study(corpus, tag, a.order, rule, a.replicates, a.seed, a.alpha,
                                       null_pool=a.null_pool, workers=a.workers)
            run.write_json(f"emotion_{tag}.json", study.to_dict())
            _render(run, f"emotion_{tag}", delta_model(study.observed, study.ensemble.mean),
                    study.report, f"{tag} - matched null")
        return
    study = emotion_conversation_study(corpus, a.tag, a.order, rule, a.stratify == "role", a.alpha)
    run.write_json("emotion_conversations.json", study.to_dict())
    for s in study.strata:
        name = s.stratum or "all"
        _render(run, f"emotion_conversations_{name}", s.delta, s.as_report(), f"{name}: with - without")


def cmd_classify(run: Run):
    a = run.args
    corpus = run.corpus()
    rule = _rule(run, corpus, a.order)
    labels = None
    if a.labels:
        rows = json.loads(run.input(a.labels).read_text())
        labels = {str(k): bool(v) for k, v in rows.items()}
    else:
        tags = frozenset(a.tag)
        labels = lambda c: any(t.role is Role.PATIENT and t.tags & tags for t in c.turns)  # noqa: E731
    feats = conversation_features(corpus, a.order, rule, a.stratify == "role", labels)
    config = ForestConfig(trees=a.trees)
    report = repeated_holdout_eval(feats, config, a.repeats, a.train_fraction, a.seed, a.workers,
                                   permute_labels=a.permute_labels)
    run.write("features.csv", feats.to_csv())
    run.write_json("classification.json", {**report.to_dict(), "excluded": list(feats.excluded)})
    print(f"mu={report.mu:.1f} sigma={report.sigma:.1f} p={report.p_value:.3g}")


def cmd_render(run: Run):
    a = run.args
    data = json.loads(run.input(a.model).read_text())
    report = None
    if a.report:
        report = SignificanceReport.from_dict(json.loads(run.input(a.report).read_text()))
    if a.mode == "delta" or (a.mode == "auto" and "delta" in data["transitions"][0]):
        model = DeltaModel.from_dict(data)
    else:
        model = CodymModel.from_dict(data)
    stem = a.name or Path(a.model).stem
    _render(run, stem, model, report, a.title)


# -- parser ----------------------------------------------------------------


def _common(p: argparse.ArgumentParser, order: int = 3, seeded: bool = False, ensemble: bool = False):
    p.add_argument("--in", dest="input", required=True, help="JSONL corpus")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT_DIR} or ./codym_out)")
    p.add_argument("--order", type=int, default=order)
    p.add_argument("--threshold", default="8", help="integer word count or 'auto'")
    p.add_argument("--min-turns", type=int, default=0, help="drop conversations shorter than this")
    if seeded or ensemble:
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
    if ensemble:
        p.add_argument("--replicates", type=int, default=1000)
        p.add_argument("--alpha", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="codym", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"codym {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--min-turns", type=int, default=20)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("threshold", help="entropy scan over binarization thresholds")
    _common(p)
    p.add_argument("--min-threshold", type=int, default=2)
    p.add_argument("--max-threshold", type=int, default=14)
    p.add_argument("--over", choices=("states", "transitions"), default="states")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("fit", help="observed models vs the role-preserving shuffle null")
    _common(p, ensemble=True)
    p.add_argument("--stratify", choices=("none", "role"), default="role")
    p.add_argument("--null", choices=("shuffle", "none"), default="shuffle")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("deciles", help="per-decile transition histograms")
    _common(p)
    p.add_argument("--role", default="all", choices=("all", "patient", "clinician"))
    p.add_argument("--tag", action="append", help="count only events carrying this tag")
    p.add_argument("--per-role-boundaries", action="store_true")
    p.add_argument("--trend", action="append", help="slot such as SLS-L; Spearman vs decile")
    p.add_argument("--trend-deciles", default="5-10")
    p.set_defaults(func=cmd_deciles)

    p = sub.add_parser("words", help="word transition profiles and clusters")
    wsub = p.add_subparsers(dest="sub", required=True)
    for name in ("profile", "cluster"):
        q = wsub.add_parser(name)
        _common(q, order=2, seeded=True)
        q.add_argument("--min-count", type=int, default=100)
        q.add_argument("--min-delta", type=float, default=10.0)
        if name == "cluster":
            q.add_argument("--k", type=int, default=6)
            q.add_argument("--restarts", type=int, default=10)
        q.set_defaults(func=cmd_words)

    p = sub.add_parser("terms", help="term-list models")
    tsub = p.add_subparsers(dest="sub", required=True)
    for name in ("fit", "robustness"):
        q = tsub.add_parser(name)
        _common(q, order=2, ensemble=(name == "fit"), seeded=True)
        q.add_argument("--terms", required=True, help="'hedging', 'treatment' or a term-list file")
        q.add_argument("--role", default="patient", choices=("all", "patient", "clinician"))
        if name == "robustness":
            q.add_argument("--fraction", type=float, default=0.1)
        q.set_defaults(func=cmd_terms)

    p = sub.add_parser("emotion", help="emotion-tagged turns and conversations")
    esub = p.add_subparsers(dest="sub", required=True)
    q = esub.add_parser("turns")
    _common(q, ensemble=True)
    q.add_argument("--tag", action="append", required=True)
    q.add_argument("--null-pool", choices=("untagged", "all"), default="untagged")
    q.set_defaults(func=cmd_emotion)
    q = esub.add_parser("conversations")
    _common(q)
    q.add_argument("--tag", action="append", default=None)
    q.add_argument("--stratify", choices=("none", "role"), default="none")
    q.add_argument("--alpha", type=float, default=0.05)
    q.set_defaults(func=cmd_emotion)

    p = sub.add_parser("classify", help="random-forest classification of conversations")
    _common(p, seeded=True)
    p.add_argument("--stratify", choices=("none", "role"), default="none")
    p.add_argument("--tag", action="append", default=None, help="positive class: patient turn with tag")
    p.add_argument("--labels", help="JSON object mapping conversation id to true/false")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--permute-labels", action="store_true",
                   help="fresh label permutation per repeat (no-signal reference)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("render", help="DOT/SVG from a saved model or delta JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--report", help="significance JSON")
    p.add_argument("--mode", choices=("auto", "frequency", "delta"), default="auto")
    p.add_argument("--name")
    p.add_argument("--title", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out")
    return ap


def _finalize(args: argparse.Namespace):
    if getattr(args, "tag", "absent") is None and args.command in ("emotion", "classify"):
        args.tag = ["anger", "fear"]
    if hasattr(args, "seed") and args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2 ** 32))
    if hasattr(args, "workers") and args.workers < 1:
        raise CodymError("--workers must be >= 1")


def _canonical_argv(args: argparse.Namespace, argv: list[str]) -> list[str]:
    """argv with the resolved seed made explicit."""
    out = list(argv)
    if hasattr(args, "seed") and "--seed" not in out:
        out += ["--seed", str(args.seed)]
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="codym: %(message)s")
    try:
        if args.command == "replay":
            recorded = json.loads(Path(args.manifest).read_text())["config"]["argv"]
            if args.out:
                recorded = recorded + ["--out", args.out]
            return main(recorded)
        _finalize(args)
        run = Run(args, _canonical_argv(args, argv))
        args.func(run)
        manifest = run.manifest()
        path = run.out / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except (CodymError, OSError, ValueError, KeyError) as exc:
        print(f"codym: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
