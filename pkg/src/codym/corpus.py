"""Transcript data model: turns, conversations, corpora and term lists.

Transcripts arrive as JSONL, one turn per line::

    {"conv": "c1", "role": "patient", "text": "I feel fine", "tags": ["fear"]}
    {"conv": "c1", "role": "clinician", "n_words": 12}

A record carries either the turn text or only its word count (privacy mode).
"""

from __future__ import annotations

import enum
import io
import json
import logging
import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Sequence, Union

from .errors import ParseError, SchemaError, UnsupportedInputError, ValidationError

logger = logging.getLogger(__name__)

_EDGE_PUNCT = re.compile(r"^\W+|\W+$")


class Role(enum.Enum):
    PATIENT = "patient"
    CLINICIAN = "clinician"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, value) -> "Role":
        if isinstance(value, Role):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(f"unknown role {value!r}") from None


def tokenize(text: str) -> list[str]:
    """Lowercase whitespace tokens with leading/trailing punctuation removed.

    Inner apostrophes and hyphens survive ("don't", "well-being"); tokens that
    are pure punctuation vanish.
    """
    tokens = []
    for raw in text.split():
        tok = _EDGE_PUNCT.sub("", raw).lower()
        if tok:
            tokens.append(tok)
    return tokens


def count_words(text: str) -> int:
    n = len(tokenize(text))
    if n == 0:
        raise ValidationError(f"no words in {text!r}")
    return n


@dataclass(frozen=True)
class Turn:
    conversation_id: str
    index: int
    role: Role
    word_count: int
    words: tuple[str, ...] | None = None
    tags: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.word_count < 1:
            raise ValidationError(
                f"{self.conversation_id}[{self.index}]: word_count must be >= 1, got {self.word_count}"
            )
        if self.words is not None and len(self.words) != self.word_count:
            raise ValidationError(
                f"{self.conversation_id}[{self.index}]: word_count {self.word_count} "
                f"!= {len(self.words)} tokens"
            )
        for tag in self.tags:
            if not tag or tag != tag.lower():
                raise ValidationError(f"tags must be lowercase and nonempty, got {tag!r}")

    @property
    def has_words(self) -> bool:
        return self.words is not None


@dataclass(frozen=True)
class Conversation:
    id: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("conversation id must be nonempty")
        for i, turn in enumerate(self.turns):
            if turn.index != i or turn.conversation_id != self.id:
                raise ValidationError(f"conversation {self.id}: turn {i} is misnumbered")

    def __len__(self):
        return len(self.turns)

    @property
    def total_words(self) -> int:
        return sum(t.word_count for t in self.turns)


@dataclass(frozen=True)
class Corpus:
    conversations: tuple[Conversation, ...]
    provenance: str = ""
    dropped: tuple[str, ...] = ()

    def __post_init__(self):
        ids = [c.id for c in self.conversations]
        if len(set(ids)) != len(ids):
            raise ValidationError("conversation ids must be unique")

    def __len__(self):
        return len(self.conversations)

    def __iter__(self):
        return iter(self.conversations)

    def turns(self) -> Iterable[Turn]:
        for conv in self.conversations:
            yield from conv.turns

    @property
    def has_words(self) -> bool:
        return all(t.has_words for t in self.turns())

    def subset(self, ids: Iterable[str]) -> "Corpus":
        keep = set(ids)
        return replace(self, conversations=tuple(c for c in self.conversations if c.id in keep))


def make_conversation(conv_id: str, turns: Sequence[dict]) -> Conversation:
    """Build a conversation from plain dicts with role/word_count/words/tags keys."""
    built = []
    for i, t in enumerate(turns):
        words = t.get("words")
        words = tuple(words) if words is not None else None
        wc = t.get("word_count", len(words) if words is not None else None)
        built.append(
            Turn(
                conversation_id=conv_id,
                index=i,
                role=Role.parse(t.get("role", "unknown")),
                word_count=wc,
                words=words,
                tags=frozenset(t.get("tags", ())),
            )
        )
    return Conversation(conv_id, tuple(built))


def _record_to_turn(rec, lineno) -> tuple[str, dict]:
    if not isinstance(rec, dict):
        raise SchemaError("record must be a JSON object", lineno)
    conv = rec.get("conv")
    if not isinstance(conv, str) or not conv:
        raise SchemaError("'conv' must be a nonempty string", lineno)
    text = rec.get("text")
    n_words = rec.get("n_words")
    if text is None and n_words is None:
        raise SchemaError("record has neither 'text' nor 'n_words'", lineno)
    try:
        role = Role.parse(rec.get("role", "unknown"))
    except ValidationError as exc:
        raise SchemaError(str(exc), lineno) from None
    tags = rec.get("tags") or []
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise SchemaError("'tags' must be a list of strings", lineno)
    tags = frozenset(t.strip().lower() for t in tags)
    if "" in tags:
        raise ValidationError(f"line {lineno}: empty tag")

    if text is not None:
        if not isinstance(text, str):
            raise SchemaError("'text' must be a string", lineno)
        words = tuple(tokenize(text))
        if not words:
            raise ValidationError(f"line {lineno}: text has no words")
        return conv, {"role": role, "word_count": len(words), "words": words, "tags": tags}

    if isinstance(n_words, bool) or not isinstance(n_words, int):
        raise SchemaError("'n_words' must be an integer", lineno)
    if n_words < 1:
        raise ValidationError(f"line {lineno}: n_words must be >= 1, got {n_words}")
    return conv, {"role": role, "word_count": n_words, "words": None, "tags": tags}


def parse_transcript_jsonl(stream: Union[IO[bytes], IO[str], bytes, str], provenance: str = "") -> Corpus:
    """Parse a JSONL transcript into a :class:`Corpus`.

    Turns are grouped by ``conv`` in first-appearance order; within a
    conversation, turn order follows the file.
    """
    if isinstance(stream, bytes):
        stream = io.BytesIO(stream)
    elif isinstance(stream, str):
        stream = io.StringIO(stream)

    grouped: dict[str, list[dict]] = {}
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise ParseError(f"invalid UTF-8: {exc}", lineno) from None
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc.msg}", lineno) from None
        conv, turn = _record_to_turn(rec, lineno)
        grouped.setdefault(conv, []).append(turn)

    convs = tuple(make_conversation(cid, turns) for cid, turns in grouped.items())
    return Corpus(convs, provenance=provenance)


def read_corpus(path: Union[str, Path]) -> Corpus:
    path = Path(path)
    with path.open("rb") as fh:
        return parse_transcript_jsonl(fh, provenance=str(path))


def serialize_jsonl(corpus: Corpus) -> str:
    lines = []
    for turn in corpus.turns():
        rec = {"conv": turn.conversation_id, "role": turn.role.value}
        if turn.words is not None:
            rec["text"] = " ".join(turn.words)
        else:
            rec["n_words"] = turn.word_count
        if turn.tags:
            rec["tags"] = sorted(turn.tags)
        lines.append(json.dumps(rec, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def filter_short_conversations(corpus: Corpus, min_turns: int = 20) -> Corpus:
    """Drop conversations with fewer than ``min_turns`` turns.

    Dropped ids are recorded on the returned corpus (``dropped``) and logged.
    """
    if min_turns < 1:
        raise ValidationError("min_turns must be >= 1")
    kept, dropped = [], []
    for conv in corpus.conversations:
        (kept if len(conv) >= min_turns else dropped).append(conv)
    if dropped:
        logger.info("dropped %d conversations shorter than %d turns", len(dropped), min_turns)
    return replace(
        corpus,
        conversations=tuple(kept),
        dropped=corpus.dropped + tuple(c.id for c in dropped),
    )


# -- term lists ------------------------------------------------------------


@dataclass(frozen=True)
class Literal:
    word: str

    def __str__(self):
        return self.word


@dataclass(frozen=True)
class Prefix:
    stem: str

    def __str__(self):
        return self.stem + "*"


@dataclass(frozen=True)
class Phrase:
    words: tuple[str, ...]

    def __str__(self):
        return " ".join(self.words)


TermPattern = Union[Literal, Prefix, Phrase]


def parse_pattern(text: str) -> TermPattern:
    text = text.strip().lower()
    if not text:
        raise ValidationError("empty term pattern")
    parts = text.split()
    if len(parts) > 1:
        if any(p.endswith("*") for p in parts):
            raise ValidationError(f"wildcards are not supported inside phrases: {text!r}")
        return Phrase(tuple(parts))
    if text.endswith("*"):
        stem = text[:-1]
        if not stem or "*" in stem:
            raise ValidationError(f"bad prefix pattern {text!r}")
        return Prefix(stem)
    if "*" in text:
        raise ValidationError(f"'*' is only allowed at the end of a pattern: {text!r}")
    return Literal(text)


def _count_pattern(words: Sequence[str], pattern: TermPattern) -> int:
    if isinstance(pattern, Literal):
        return sum(1 for w in words if w == pattern.word)
    if isinstance(pattern, Prefix):
        return sum(1 for w in words if w.startswith(pattern.stem))
    k = len(pattern.words)
    target = pattern.words
    return sum(1 for i in range(len(words) - k + 1) if tuple(words[i:i + k]) == target)


@dataclass(frozen=True)
class TermList:
    name: str
    entries: tuple[TermPattern, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValidationError(f"term list {self.name!r} is empty")

    @classmethod
    def from_strings(cls, name: str, patterns: Iterable[str]) -> "TermList":
        return cls(name, tuple(parse_pattern(p) for p in patterns))

    def without(self, removed: Iterable[TermPattern]) -> "TermList":
        drop = set(removed)
        return TermList(self.name, tuple(e for e in self.entries if e not in drop))

    def __len__(self):
        return len(self.entries)

    def count(self, words: Sequence[str]) -> int:
        return sum(_count_pattern(words, p) for p in self.entries)


def match_terms(turn: Turn, terms: TermList) -> int:
    """Total occurrences of any pattern of ``terms`` in ``turn``."""
    if turn.words is None:
        raise UnsupportedInputError(
            f"turn {turn.conversation_id}[{turn.index}] has no text; term matching needs words"
        )
    return terms.count(turn.words)


def parse_term_list(text: str, name: str) -> TermList:
    patterns = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            patterns.append(line)
    return TermList.from_strings(name, patterns)


def load_term_list(path: Union[str, Path], name: str | None = None) -> TermList:
    path = Path(path)
    return parse_term_list(path.read_text(encoding="utf-8"), name or path.stem)


def bundled_term_list(name: str) -> TermList:
    """Load a bundled list: ``"hedging"`` or ``"treatment"``."""
    try:
        text = resources.files("codym.data").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"no bundled term list named {name!r}") from None
    return parse_term_list(text, name)
