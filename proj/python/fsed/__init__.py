"""Few-shot event detection with two-step cloze prompts."""

from ._core import (
    Corpus,
    DataError,
    EventMention,
    RuntimeFailure,
    UsageError,
    classify,
    event_prompt,
    fewshot_split,
    load_corpus,
    parse_corpus,
    train_and_evaluate,
    trigger_prompt,
    weighted_metrics,
)

__all__ = [
    "Corpus",
    "DataError",
    "EventMention",
    "RuntimeFailure",
    "UsageError",
    "classify",
    "event_prompt",
    "fewshot_split",
    "load_corpus",
    "parse_corpus",
    "train_and_evaluate",
    "trigger_prompt",
    "weighted_metrics",
]
__version__ = "0.1.0"
