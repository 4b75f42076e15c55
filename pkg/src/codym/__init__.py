"""Conversational dynamics models (CODYMs).

Nth-order Markov models over speaker turns binarized into short (S) and
long (L) by word count, with Monte Carlo null models, narrative-time,
word-context and emotion analyses, random-forest classification and
DOT/SVG rendering.
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DEFAULT_RULE,
    BinarizationRule,
    CodymModel,
    DeltaModel,
    Label,
    delta_model,
    mean_model,
    populate_model,
    select_threshold,
)
from .corpus import Conversation, Corpus, Role, Turn, read_corpus  # noqa: E402

__all__ = [
    "DEFAULT_RULE", "BinarizationRule", "CodymModel", "DeltaModel", "Label",
    "delta_model", "mean_model", "populate_model", "select_threshold",
    "Conversation", "Corpus", "Role", "Turn", "read_corpus", "__version__",
]
