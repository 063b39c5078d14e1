"""Synthetic fine-grained quality-estimation data: CBS generation, TER labels, annotator rejudging, phrase spans."""

from .core import ErrorSpan, InvalidInput, MqmRecord, Severity, mqm_score, spans_from_severities, word_labels_from_spans

__version__ = "0.1.0"

__all__ = [
    "ErrorSpan",
    "InvalidInput",
    "MqmRecord",
    "Severity",
    "mqm_score",
    "spans_from_severities",
    "word_labels_from_spans",
]
