"""Evaluation metrics for word-, span- and sentence-level quality estimation."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy import special, stats

from .core import ERROR_SEVERITIES, BAD_LABEL, ErrorSpan, InvalidInput, MqmRecord, Severity, token_severities

BLEU_ORDER = 4


def _pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise InvalidInput("inputs must be 1-d sequences of equal length")
    if len(x) < 2:
        raise InvalidInput("need at least two observations")
    return x, y


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; NaN when either input has zero variance."""
    x, y = _pair(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0.0:
        return float("nan")
    return max(-1.0, min(1.0, float(dx @ dy) / denom))


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = _pair(x, y)
    return pearson(stats.rankdata(x), stats.rankdata(y))


def _binary(pred, gold, positive) -> tuple[np.ndarray, np.ndarray]:
    if len(pred) != len(gold):
        raise InvalidInput(f"length mismatch: {len(pred)} vs {len(gold)}")
    p = np.fromiter((v == positive for v in pred), dtype=bool, count=len(pred))
    g = np.fromiter((v == positive for v in gold), dtype=bool, count=len(gold))
    return p, g


def confusion(pred, gold, positive: Hashable = BAD_LABEL) -> tuple[int, int, int, int]:
    """(TP, TN, FP, FN) with ``positive`` as the positive class."""
    p, g = _binary(pred, gold, positive)
    return int((p & g).sum()), int((~p & ~g).sum()), int((p & ~g).sum()), int((~p & g).sum())


def mcc(pred, gold, positive: Hashable = BAD_LABEL) -> float:
    if len(pred) < 1:
        raise InvalidInput("empty label sequences")
    tp, tn, fp, fn = confusion(pred, gold, positive)
    denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if denom == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(denom)


def _f1(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return prec, rec, f


def f1_binary(pred, gold, positive_class: Hashable = BAD_LABEL) -> float:
    tp, _, fp, fn = confusion(pred, gold, positive_class)
    return _f1(tp, fp, fn)[2]


@dataclass
class SpanScores:
    f1: float
    precision: float
    recall: float
    per_severity: dict = field(default_factory=dict)  # name -> (precision, recall, f1)


def span_weighted_f1(
    pred_spans: Sequence[Sequence[ErrorSpan]],
    gold_spans: Sequence[Sequence[ErrorSpan]],
    lengths: Sequence[int] | None = None,
) -> SpanScores:
    """Token-level severity agreement, F1 per severity averaged with MQM weights.

    Severities absent from both prediction and gold carry no weight. When
    neither side has any error token the score is 1.0. ``precision`` and
    ``recall`` are micro averages over all non-OK tokens, ignoring severity.
    """
    if len(pred_spans) != len(gold_spans):
        raise InvalidInput(f"{len(pred_spans)} predicted vs {len(gold_spans)} gold sentences")
    if lengths is not None and len(lengths) != len(gold_spans):
        raise InvalidInput("lengths must match the sentence count")
    tp = Counter()
    fp = Counter()
    fn = Counter()
    any_tp = any_fp = any_fn = 0
    for k, (ps, gs) in enumerate(zip(pred_spans, gold_spans)):
        n = lengths[k] if lengths is not None else max([s.end + 1 for s in list(ps) + list(gs)] or [0])
        p = token_severities(ps, n)
        g = token_severities(gs, n)
        for a, b in zip(p, g):
            if a != Severity.OK and a == b:
                tp[a] += 1
            else:
                if a != Severity.OK:
                    fp[a] += 1
                if b != Severity.OK:
                    fn[b] += 1
            any_tp += a != Severity.OK and b != Severity.OK
            any_fp += a != Severity.OK and b == Severity.OK
            any_fn += a == Severity.OK and b != Severity.OK
    per = {}
    num = den = 0.0
    for sev in ERROR_SEVERITIES:
        if tp[sev] + fp[sev] + fn[sev] == 0:
            continue
        prf = _f1(tp[sev], fp[sev], fn[sev])
        per[sev.name] = prf
        num += sev.weight * prf[2]
        den += sev.weight
    micro_p, micro_r, _ = _f1(any_tp, any_fp, any_fn)
    if den == 0:
        return SpanScores(1.0, 1.0, 1.0, per)
    return SpanScores(num / den, micro_p, micro_r, per)


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(hyps: Sequence[Sequence[str]], refs: Sequence[Sequence[str]], max_order: int = BLEU_ORDER) -> float:
    """Corpus BLEU in [0, 100] with clipped counts and brevity penalty, unsmoothed.

    An n-gram order with no hypothesis n-grams anywhere in the corpus (all
    hypotheses shorter than n) is left out of the geometric mean rather than
    zeroing it, so that a corpus of short sentences still scores 100 against
    itself. Any order with candidates but no matches gives 0.
    """
    if len(hyps) != len(refs):
        raise InvalidInput(f"{len(hyps)} hypotheses vs {len(refs)} references")
    if not hyps:
        raise InvalidInput("empty corpus")
    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for h, r in zip(hyps, refs):
        h, r = list(h), list(r)
        hyp_len += len(h)
        ref_len += len(r)
        for n in range(1, max_order + 1):
            hc, rc = _ngrams(h, n), _ngrams(r, n)
            matches[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            totals[n - 1] += max(len(h) - n + 1, 0)
    if hyp_len == 0:
        return 0.0
    log_p = []
    for m, t in zip(matches, totals):
        if t == 0:
            continue
        if m == 0:
            return 0.0
        log_p.append(math.log(m / t))
    bp = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(sum(log_p) / len(log_p))


def error_rate(records: Sequence[MqmRecord]) -> float:
    """Percentage of BAD tokens over all translation tokens."""
    bad = total = 0
    for rec in records:
        labels = rec.labels
        if labels is None:
            raise InvalidInput("record without word labels")
        bad += sum(1 for lab in labels if lab == BAD_LABEL)
        total += len(labels)
    if total == 0:
        raise InvalidInput("no tokens to rate")
    return 100.0 * bad / total


def t_two_tailed_p(t: float, df: float) -> float:
    """Two-tailed p of Student's t via the regularised incomplete beta function."""
    if df <= 0:
        raise InvalidInput("degrees of freedom must be positive")
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def williams_test(r12: float, r13: float, r23: float, n: int) -> tuple[float, float]:
    """Williams t for corr(1,2) vs corr(1,3) when 2 and 3 are themselves correlated."""
    for r in (r12, r13, r23):
        if not -1.0 <= r <= 1.0:
            raise InvalidInput(f"correlation {r} outside [-1, 1]")
    if n < 4:
        raise InvalidInput("n must be >= 4")
    det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23
    if det <= 1e-12:
        raise InvalidInput("correlation matrix is singular or not positive definite")
    rbar = (r12 + r13) / 2.0
    denom = 2.0 * det * (n - 1) / (n - 3) + rbar * rbar * (1.0 - r23) ** 3
    t = (r12 - r13) * math.sqrt((n - 1) * (1.0 + r23) / denom)
    return t, t_two_tailed_p(t, n - 3)


def downsample_match(pool_rates: Sequence[float], target: Sequence[float], k: int,
                     rng: np.random.Generator) -> list[int]:
    """Indices of k pool records matched to draws from the target distribution.

    Each draw takes the nearest unused pool record (lowest index on ties), so
    the pool is sampled without replacement.
    """
    pool = np.asarray(pool_rates, dtype=np.float64)
    if len(target) == 0:
        raise InvalidInput("empty target distribution")
    if k > len(pool):
        raise InvalidInput(f"pool of {len(pool)} cannot supply {k} records")
    draws = rng.choice(np.asarray(target, dtype=np.float64), size=k, replace=True)
    return match_draws(pool, draws)


def match_draws(pool_rates: Sequence[float], draws: Sequence[float]) -> list[int]:
    pool = np.asarray(pool_rates, dtype=np.float64)
    if len(draws) > len(pool):
        raise InvalidInput("pool exhausted")
    free = np.ones(len(pool), dtype=bool)
    picked = []
    for d in draws:
        diff = np.where(free, np.abs(pool - d), np.inf)
        i = int(np.argmin(diff))
        free[i] = False
        picked.append(i)
    return picked


def ks_distance(a: Sequence[float], b: Sequence[float]) -> float:
    return float(stats.ks_2samp(a, b).statistic)
