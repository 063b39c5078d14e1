"""Beam search, constrained beam search and forced decoding over a scoring model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Optional, Protocol, Sequence

EOS = "</s>"
PROB_FLOOR = 1e-9

FORCED = "FORCED"
FREE = "FREE"


class ScoringModel(Protocol):
    def next_distribution(self, src: Sequence[str], prefix: Sequence[str]) -> Mapping[str, float]:
        """Probabilities over ``vocabulary() | {EOS}`` for the next token."""
        ...

    def vocabulary(self) -> frozenset:
        ...


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple
    log_prob: float
    ref_cursor: int = 0
    provenance: tuple = ()


@dataclass
class DecodeResult:
    tokens: list[str]
    log_prob: float
    truncated: bool = False
    provenance: Optional[list[str]] = None


class ForcedDecode(NamedTuple):
    probs: list[float]
    oov: list[int]


def _log(p: float) -> float:
    return math.log(p) if p > 0.0 else math.log(PROB_FLOOR)


def _rank(h: Hypothesis, length_norm: bool):
    score = h.log_prob / max(len(h.tokens), 1) if length_norm else h.log_prob
    return (-score, h.tokens)


def top_k(dist: Mapping[str, float], k: int) -> list[tuple[str, float]]:
    """The k most probable tokens with p > 0, ties broken by token string."""
    items = [(tok, p) for tok, p in dist.items() if p > 0.0]
    items.sort(key=lambda tp: (-tp[1], tp[0]))
    return items[:k]


def _finish(finished, beam, length_norm) -> DecodeResult:
    """Best finished hypothesis, else the best live one flagged as truncated."""
    if finished:
        best = min(finished, key=lambda h: _rank(h, length_norm))
        truncated = False
    elif beam:
        best = min(beam, key=lambda h: _rank(h, length_norm))
        truncated = True
    else:
        return DecodeResult([], float("-inf"), truncated=True, provenance=[])
    prov = list(best.provenance) if best.provenance else None
    return DecodeResult(list(best.tokens), best.log_prob, truncated, prov)


def _can_stop(finished, beam, length_norm) -> bool:
    # Without length normalisation scores only fall, so a finished
    # hypothesis at least as good as every live one cannot be overtaken.
    if length_norm or not finished or not beam:
        return not beam
    best_done = max(h.log_prob for h in finished)
    return best_done >= max(h.log_prob for h in beam)


def beam_search(
    model: ScoringModel,
    src: Sequence[str],
    beam_size: int,
    max_len: int,
    length_norm: bool = False,
) -> DecodeResult:
    """Standard beam search.

    Hypotheses hold at most ``max_len`` tokens before EOS. Finished
    hypotheses leave the beam and compete on total log probability.
    """
    if beam_size < 1 or max_len < 1:
        raise ValueError("beam_size and max_len must be >= 1")
    src = tuple(src)
    beam = [Hypothesis((), 0.0)]
    finished: list[Hypothesis] = []
    for step in range(max_len + 1):
        candidates = []
        for hyp in beam:
            dist = model.next_distribution(src, hyp.tokens)
            for tok, p in top_k(dist, beam_size):
                lp = hyp.log_prob + math.log(p)
                if tok == EOS:
                    finished.append(Hypothesis(hyp.tokens, lp))
                elif step < max_len:
                    candidates.append(Hypothesis(hyp.tokens + (tok,), lp))
        candidates.sort(key=lambda h: _rank(h, length_norm))
        if not candidates:
            # keep the last live hypotheses as truncation fallback
            break
        beam = candidates[:beam_size]
        if _can_stop(finished, beam, length_norm):
            break
    return _finish(finished, beam, length_norm)


def constrained_beam_search(
    model: ScoringModel,
    src: Sequence[str],
    ref: Sequence[str],
    tau: float,
    beam_size: int,
    max_len: int,
    length_norm: bool = False,
) -> DecodeResult:
    """Beam search that copies reference tokens the model finds likely enough.

    Each hypothesis tracks a cursor into ``ref + [EOS]``. When the model
    gives the next reference token probability strictly above ``tau``, that
    token is the hypothesis' only expansion (FORCED) and the cursor
    advances. Otherwise the hypothesis expands to its top ``beam_size``
    tokens (FREE), advancing the cursor only if it happens to emit the
    reference token.
    """
    if beam_size < 1 or max_len < 1:
        raise ValueError("beam_size and max_len must be >= 1")
    if not ref:
        raise ValueError("reference must be non-empty")
    src = tuple(src)
    target = list(ref) + [EOS]
    beam = [Hypothesis((), 0.0, 0, ())]
    finished: list[Hypothesis] = []
    for step in range(max_len + 1):
        candidates = []
        for hyp in beam:
            dist = model.next_distribution(src, hyp.tokens)
            want = target[hyp.ref_cursor]
            p_want = dist.get(want, 0.0)
            if p_want > tau:
                expansions = [(want, p_want, FORCED)]
            else:
                expansions = [(tok, p, FREE) for tok, p in top_k(dist, beam_size)]
            for tok, p, how in expansions:
                lp = hyp.log_prob + _log(p)
                cursor = hyp.ref_cursor + (tok == want)
                if tok == EOS:
                    finished.append(Hypothesis(hyp.tokens, lp, cursor, hyp.provenance))
                elif step < max_len:
                    candidates.append(
                        Hypothesis(hyp.tokens + (tok,), lp, cursor, hyp.provenance + (how,))
                    )
        candidates.sort(key=lambda h: _rank(h, length_norm))
        if not candidates:
            # keep the last live hypotheses as truncation fallback
            break
        beam = candidates[:beam_size]
        if _can_stop(finished, beam, length_norm):
            break
    result = _finish(finished, beam, length_norm)
    if result.provenance is None:
        result.provenance = []
    return result


def forced_decode_probs(model: ScoringModel, src: Sequence[str], target: Sequence[str]) -> ForcedDecode:
    """Per-token probabilities of ``target`` under teacher forcing.

    Tokens outside the model vocabulary get ``PROB_FLOOR`` and are listed in
    ``oov``.
    """
    src = tuple(src)
    vocab = model.vocabulary()
    probs, oov = [], []
    for i, tok in enumerate(target):
        if tok not in vocab:
            probs.append(PROB_FLOOR)
            oov.append(i)
            continue
        dist = model.next_distribution(src, tuple(target[:i]))
        probs.append(float(dist.get(tok, 0.0)))
    return ForcedDecode(probs, oov)


def sequence_log_prob(model: ScoringModel, src: Sequence[str], target: Sequence[str], with_eos: bool = True) -> float:
    src = tuple(src)
    total = 0.0
    seq = list(target) + ([EOS] if with_eos else [])
    for i, tok in enumerate(seq):
        total += _log(model.next_distribution(src, tuple(seq[:i])).get(tok, 0.0))
    return total
