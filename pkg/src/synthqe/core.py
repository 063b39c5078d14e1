"""MQM label algebra and the record type shared by every pipeline stage."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, Optional, Sequence

OK_LABEL = "OK"
BAD_LABEL = "BAD"


class InvalidInput(ValueError):
    """Raised when an operation receives arguments outside its contract."""


class Severity(IntEnum):
    OK = 0
    MINOR = 1
    MAJOR = 2
    CRITICAL = 3

    @property
    def weight(self) -> int:
        return SEVERITY_WEIGHTS[self]

    @classmethod
    def parse(cls, name: str) -> "Severity":
        try:
            return cls[name.upper()]
        except KeyError:
            raise InvalidInput(f"unknown severity {name!r}") from None


SEVERITY_WEIGHTS = {
    Severity.OK: 0,
    Severity.MINOR: 1,
    Severity.MAJOR: 5,
    Severity.CRITICAL: 10,
}

ERROR_SEVERITIES = (Severity.MINOR, Severity.MAJOR, Severity.CRITICAL)


@dataclass(frozen=True, order=True)
class ErrorSpan:
    start: int
    end: int
    severity: Severity

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise InvalidInput(f"bad span bounds ({self.start}, {self.end})")
        if self.severity == Severity.OK:
            raise InvalidInput("error span cannot have severity OK")

    def __len__(self):
        return self.end - self.start + 1

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "severity": self.severity.name}

    @classmethod
    def from_dict(cls, d: dict) -> "ErrorSpan":
        return cls(int(d["start"]), int(d["end"]), Severity.parse(d["severity"]))


def _check_spans(spans: Sequence[ErrorSpan], n: int) -> list[ErrorSpan]:
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    prev_end = -1
    for s in ordered:
        if s.end >= n:
            raise InvalidInput(f"span ({s.start}, {s.end}) exceeds length {n}")
        if s.start <= prev_end:
            raise InvalidInput(f"overlapping spans at token {s.start}")
        prev_end = s.end
    return ordered


def mqm_score(spans: Sequence[ErrorSpan], n: int) -> float:
    """Sentence score ``1 - (n_minor + 5 n_major + 10 n_critical) / n``.

    Severity counts are counts of spans, not of tokens inside them.
    """
    if n < 1:
        raise InvalidInput("translation length must be >= 1")
    _check_spans(spans, n)
    penalty = sum(s.severity.weight for s in spans)
    return 1.0 - penalty / n


def word_labels_from_spans(spans: Sequence[ErrorSpan], n: int) -> list[str]:
    _check_spans(spans, n)
    labels = [OK_LABEL] * n
    for s in spans:
        for i in range(s.start, s.end + 1):
            labels[i] = BAD_LABEL
    return labels


def spans_from_severities(severities: Sequence[Severity]) -> list[ErrorSpan]:
    """Maximal runs of non-OK tokens, each labelled with its worst severity."""
    spans = []
    start = None
    worst = Severity.OK
    for i, sev in enumerate(list(severities) + [Severity.OK]):
        if sev != Severity.OK:
            if start is None:
                start, worst = i, sev
            else:
                worst = max(worst, sev)
        elif start is not None:
            spans.append(ErrorSpan(start, i - 1, Severity(worst)))
            start = None
    return spans


def token_severities(spans: Sequence[ErrorSpan], n: int) -> list[Severity]:
    """Expand spans to a per-token severity sequence (OK outside spans)."""
    out = [Severity.OK] * n
    for s in _check_spans(spans, n):
        for i in range(s.start, s.end + 1):
            out[i] = s.severity
    return out


@dataclass
class MqmRecord:
    """One synthetic or gold sample.

    ``extra`` carries the optional per-stage fields (``probs``,
    ``coarse_labels``, ``provenance``, ...) so intermediate files share the
    record schema.
    """

    src: list[str]
    mt: list[str]
    ref: Optional[list[str]] = None
    spans: list[ErrorSpan] = field(default_factory=list)
    labels: Optional[list[str]] = None
    score: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_spans(cls, src, mt, spans, ref=None, **extra) -> "MqmRecord":
        n = len(mt)
        spans = _check_spans(spans, n)
        return cls(
            src=list(src),
            mt=list(mt),
            ref=None if ref is None else list(ref),
            spans=spans,
            labels=word_labels_from_spans(spans, n),
            score=mqm_score(spans, n),
            extra=dict(extra),
        )

    def validate(self) -> None:
        n = len(self.mt)
        if n == 0:
            raise InvalidInput("empty translation")
        ordered = _check_spans(self.spans, n)
        if ordered != list(self.spans):
            raise InvalidInput("spans are not sorted by start")
        if self.labels is not None:
            if len(self.labels) != n:
                raise InvalidInput(f"{len(self.labels)} labels for {n} tokens")
            if list(self.labels) != word_labels_from_spans(self.spans, n):
                raise InvalidInput("labels disagree with spans")
        if self.score is not None and self.spans:
            if abs(self.score - mqm_score(self.spans, n)) > 1e-6:
                raise InvalidInput("score disagrees with spans")

    def to_dict(self) -> dict:
        d = {"src": " ".join(self.src), "mt": " ".join(self.mt)}
        if self.ref is not None:
            d["ref"] = " ".join(self.ref)
        d["spans"] = [s.to_dict() for s in self.spans]
        if self.labels is not None:
            d["labels"] = list(self.labels)
        if self.score is not None:
            d["score"] = round(self.score, 6)
        for k in sorted(self.extra):
            d[k] = self.extra[k]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MqmRecord":
        known = {"src", "mt", "ref", "spans", "labels", "score"}
        ref = d.get("ref")
        return cls(
            src=d["src"].split(),
            mt=d["mt"].split(),
            ref=None if ref is None else ref.split(),
            spans=[ErrorSpan.from_dict(s) for s in d.get("spans", [])],
            labels=d.get("labels"),
            score=d.get("score"),
            extra={k: v for k, v in d.items() if k not in known},
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)


def write_jsonl(path, records: Iterable[MqmRecord], validate: bool = True) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for rec in records:
            if validate:
                rec.validate()
            f.write(rec.to_json())
            f.write("\n")
            n += 1
    return n


def iter_jsonl(path) -> Iterator[MqmRecord]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield MqmRecord.from_dict(json.loads(line))
            except (KeyError, json.JSONDecodeError) as e:
                raise InvalidInput(f"{path}:{lineno}: malformed record ({e})") from e


def read_jsonl(path) -> list[MqmRecord]:
    return list(iter_jsonl(path))
