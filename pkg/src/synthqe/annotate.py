"""Refine coarse OK/BAD labels into severities from annotator probabilities.

A BAD token with probability p gets

    CRITICAL  if p < t_critical
    MAJOR     if t_critical <= p < t_major
    MINOR     if t_major <= p < t_minor
    OK        if p >= t_minor          (alignment false negative, corrected)

while tokens the alignment matched stay OK.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .core import BAD_LABEL, OK_LABEL, ErrorSpan, InvalidInput, Severity, spans_from_severities
from .metrics import span_weighted_f1
from .spce import DepTree, aggregate_spans

MATCHED_OK = "MATCHED_OK"
REJUDGED = "REJUDGED"
DEFAULT_GRID_STEP = 0.05


@dataclass(frozen=True)
class Thresholds:
    t_critical: float
    t_major: float
    t_minor: float

    def __post_init__(self):
        vals = (self.t_critical, self.t_major, self.t_minor)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise InvalidInput(f"thresholds must lie in [0, 1]: {vals}")
        if not self.t_critical < self.t_major < self.t_minor:
            raise InvalidInput(f"need t_critical < t_major < t_minor, got {vals}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.t_critical, self.t_major, self.t_minor)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for v in self.as_tuple():
                f.write(f"{v!r}\n")

    @classmethod
    def load(cls, path) -> "Thresholds":
        with open(path, encoding="utf-8") as f:
            vals = [line.strip() for line in f if line.strip()]
        if len(vals) != 3:
            raise InvalidInput(f"{path}: expected 3 threshold lines, got {len(vals)}")
        try:
            return cls(*(float(v) for v in vals))
        except ValueError as e:
            raise InvalidInput(f"{path}: {e}") from None


def assign_severity(p: float, th: Thresholds) -> Severity:
    if not 0.0 <= p <= 1.0:
        raise InvalidInput(f"probability {p} outside [0, 1]")
    if p < th.t_critical:
        return Severity.CRITICAL
    if p < th.t_major:
        return Severity.MAJOR
    if p < th.t_minor:
        return Severity.MINOR
    return Severity.OK


@dataclass
class AnnotationResult:
    severities: list[Severity]
    probs: list[float]
    source_of_label: list[str]

    @property
    def spans(self) -> list[ErrorSpan]:
        return spans_from_severities(self.severities)


def rejudge(coarse: Sequence[str], probs: Sequence[float], th: Thresholds) -> AnnotationResult:
    if len(coarse) != len(probs):
        raise InvalidInput(f"{len(coarse)} labels vs {len(probs)} probabilities")
    sev, src = [], []
    for lab, p in zip(coarse, probs):
        if lab == OK_LABEL:
            sev.append(Severity.OK)
            src.append(MATCHED_OK)
        elif lab == BAD_LABEL:
            sev.append(assign_severity(p, th))
            src.append(REJUDGED)
        else:
            raise InvalidInput(f"unknown coarse label {lab!r}")
    return AnnotationResult(sev, [float(p) for p in probs], src)


def phrase_spans(severities: Sequence[Severity], tree: Optional[DepTree] = None) -> list[ErrorSpan]:
    """Token severities to spans: dependency phrases when a tree is given, plain runs otherwise."""
    if tree is None:
        return spans_from_severities(severities)
    return aggregate_spans(tree, severities)


@dataclass
class ValidationItem:
    probs: Sequence[float]
    coarse: Sequence[str]
    gold_spans: Sequence[ErrorSpan]
    tree: Optional[DepTree] = None


def calibration_objective(validation: Sequence[ValidationItem], th: Thresholds) -> float:
    pred = [phrase_spans(rejudge(v.coarse, v.probs, th).severities, v.tree) for v in validation]
    gold = [list(v.gold_spans) for v in validation]
    lengths = [len(v.probs) for v in validation]
    return span_weighted_f1(pred, gold, lengths).f1


def threshold_grid(grid_step: float) -> list[float]:
    """{step, 2*step, ...} strictly below 1."""
    if not 0.0 < grid_step < 1.0:
        raise InvalidInput("grid_step must lie in (0, 1)")
    vals = []
    k = 1
    while True:
        v = round(k * grid_step, 10)
        if v >= 1.0:
            return vals
        vals.append(v)
        k += 1


def calibrate_thresholds(validation: Sequence[ValidationItem], grid_step: float = DEFAULT_GRID_STEP,
                         max_rounds: int = 100) -> Thresholds:
    """Coordinate-wise greedy search for the best ordered triple on the grid.

    Coordinates are swept in the order critical, major, minor until a full
    sweep changes nothing. Each sweep picks the best admissible value for
    one coordinate with the others fixed, the smallest value on ties.
    """
    if not validation:
        raise InvalidInput("empty validation set")
    grid = threshold_grid(grid_step)
    g = len(grid)
    if g < 3:
        raise InvalidInput("grid too coarse for three ordered thresholds")
    cache: dict[tuple[int, int, int], float] = {}

    def score(idx):
        if idx not in cache:
            cache[idx] = calibration_objective(validation, Thresholds(*(grid[i] for i in idx)))
        return cache[idx]

    # spread start; strictly increasing for any g >= 3
    cur = [g // 4, g // 2, (3 * g) // 4]
    for _ in range(max_rounds):
        before = tuple(cur)
        for c in range(3):
            lo = cur[c - 1] + 1 if c > 0 else 0
            hi = cur[c + 1] - 1 if c < 2 else g - 1
            best_i, best_s = cur[c], None
            for i in range(lo, hi + 1):
                trial = list(cur)
                trial[c] = i
                s = score(tuple(trial))
                if best_s is None or s > best_s:
                    best_i, best_s = i, s
            cur[c] = best_i
        if tuple(cur) == before:
            break
    return Thresholds(*(grid[i] for i in cur))
