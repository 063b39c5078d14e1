"""A small statistical translation model usable as Generator or Annotator.

next-token distribution ~ (lexical**lam * bigram_lm**(1 - lam)) ** (1 / lam),
renormalised, where

* lexical: IBM Model 1 table t(e|f) averaged over the source words not yet
  covered by the prefix, under a diagonal position prior; once the prefix
  reaches the expected target length all lexical mass moves to EOS.
* bigram LM: add-one smoothed over target vocabulary plus EOS.
"""

from __future__ import annotations

import json
import math
from typing import Iterable, Sequence

import numpy as np

from .core import InvalidInput
from .corpus import pair_fingerprint
from .decode import EOS

BOS = "<s>"
FORMAT_NAME = "synthqe-toy-model"
FORMAT_VERSION = 1

DEFAULT_LAMBDA = 0.7
DEFAULT_EM_ITERATIONS = 5
DEFAULT_KAPPA = 1.0
_WEIGHT_FLOOR = 1e-3
LEXICAL_SMOOTHING = 1e-3


class ToyModel:
    def __init__(self, src_vocab, tgt_vocab, lexical, bigram_counts, length_ratio,
                 lam=DEFAULT_LAMBDA, kappa=DEFAULT_KAPPA, train_fingerprints=()):
        if not 0.0 <= lam <= 1.0:
            raise InvalidInput("lambda must lie in [0, 1]")
        self.src_vocab = list(src_vocab)
        self.tgt_vocab = list(tgt_vocab)
        self.lam = float(lam)
        self.kappa = float(kappa)
        self.length_ratio = float(length_ratio)
        # digests of the training pairs, see corpus.pair_fingerprint
        self.train_fingerprints = frozenset(train_fingerprints)
        self._src_index = {w: i for i, w in enumerate(self.src_vocab)}
        self._tgt_index = {w: i for i, w in enumerate(self.tgt_vocab)}
        self._vocab = frozenset(self.tgt_vocab)
        self._keys = self.tgt_vocab + [EOS]
        n_tgt = len(self.tgt_vocab)
        self.lexical = np.asarray(lexical, dtype=np.float64).reshape(len(self.src_vocab), n_tgt)
        # rows: BOS + target words, columns: target words + EOS
        self.bigram_counts = np.asarray(bigram_counts, dtype=np.int64).reshape(n_tgt + 1, n_tgt + 1)
        self._bigram_totals = self.bigram_counts.sum(axis=1)

    def vocabulary(self) -> frozenset:
        return self._vocab

    def expected_length(self, src_len: int) -> int:
        return max(1, int(round(self.length_ratio * src_len)))

    def _centre(self, position: int, m: int, length: int) -> float:
        return (position + 0.5) * m / length - 0.5

    def lexical_distribution(self, src: Sequence[str], prefix: Sequence[str]) -> np.ndarray:
        """Lexical component over target words + EOS for the next position.

        Source words already explained by the prefix (soft IBM-1 alignment
        posteriors summed into a coverage vector) lose their weight, so
        each source word tends to be translated once. Source words never
        seen in training contribute no lexical evidence at all.
        """
        n_tgt = len(self.tgt_vocab)
        out = np.zeros(n_tgt + 1)
        m = len(src)
        length = self.expected_length(m)
        position = len(prefix)
        if m == 0 or position >= length:
            out[n_tgt] = 1.0
            return out
        known = [j for j, w in enumerate(src) if w in self._src_index]
        if not known:
            out[:n_tgt] = 1.0 / n_tgt
            return out
        rows = self.lexical[[self._src_index[src[j]] for j in known]]
        js = np.asarray(known, dtype=float)
        coverage = np.zeros(len(known))
        for k, tok in enumerate(prefix):
            col = self._tgt_index.get(tok)
            if col is None:
                continue
            a = np.exp(-self.kappa * np.abs(js - self._centre(k, m, length))) * rows[:, col]
            total = a.sum()
            if total > 0:
                coverage += a / total
        weights = np.clip(1.0 - coverage, 0.0, None) * np.exp(
            -self.kappa * np.abs(js - self._centre(position, m, length))) + _WEIGHT_FLOOR
        weights /= weights.sum()
        out[:n_tgt] = weights @ rows
        return out

    def lm_distribution(self, prev: str) -> np.ndarray:
        row = 0 if prev == BOS else self._tgt_index.get(prev, -1) + 1
        v = len(self.tgt_vocab) + 1
        if row <= 0 and prev != BOS:
            return np.full(v, 1.0 / v)
        return (self.bigram_counts[row] + 1.0) / (self._bigram_totals[row] + v)

    def next_distribution(self, src, prefix) -> dict:
        prev = prefix[-1] if prefix else BOS
        if self.lam == 0.0:
            return dict(zip(self._keys, self.lm_distribution(prev).tolist()))
        lex = (1.0 - LEXICAL_SMOOTHING) * self.lexical_distribution(src, prefix)
        lex += LEXICAL_SMOOTHING / len(self._keys)
        logp = self.lam * np.log(lex) + (1.0 - self.lam) * np.log(self.lm_distribution(prev))
        # weights rescaled so the lexical exponent is 1: powers below one
        # would fatten the lexical tail
        logp /= self.lam
        probs = np.exp(logp - logp.max())
        probs /= probs.sum()
        return dict(zip(self._keys, probs.tolist()))

    def perplexity(self, corpus: Iterable[tuple[Sequence[str], Sequence[str]]]) -> float:
        """Per-token perplexity of target sides (EOS included) under teacher forcing."""
        total, count = 0.0, 0
        for src, tgt in corpus:
            seq = list(tgt) + [EOS]
            for i, tok in enumerate(seq):
                p = self.next_distribution(src, seq[:i]).get(tok, 0.0)
                total += math.log(max(p, 1e-12))
                count += 1
        return math.exp(-total / max(count, 1))

    def to_dict(self) -> dict:
        lexical = {}
        for i, f in enumerate(self.src_vocab):
            nz = np.nonzero(self.lexical[i])[0]
            lexical[f] = {self.tgt_vocab[j]: float(self.lexical[i, j]) for j in nz}
        contexts = [BOS] + self.tgt_vocab
        outcomes = self.tgt_vocab + [EOS]
        bigrams = {}
        for r, ctx in enumerate(contexts):
            nz = np.nonzero(self.bigram_counts[r])[0]
            if len(nz):
                bigrams[ctx] = {outcomes[c]: int(self.bigram_counts[r, c]) for c in nz}
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "lambda": self.lam,
            "kappa": self.kappa,
            "length_ratio": self.length_ratio,
            "src_vocab": self.src_vocab,
            "tgt_vocab": self.tgt_vocab,
            "lexical": lexical,
            "bigrams": bigrams,
            "train_fingerprints": sorted(self.train_fingerprints),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ToyModel":
        if d.get("format") != FORMAT_NAME or d.get("version") != FORMAT_VERSION:
            raise InvalidInput("not a toy model file (format/version mismatch)")
        src_vocab, tgt_vocab = d["src_vocab"], d["tgt_vocab"]
        t_index = {w: i for i, w in enumerate(tgt_vocab)}
        lexical = np.zeros((len(src_vocab), len(tgt_vocab)))
        for i, f in enumerate(src_vocab):
            for e, p in d["lexical"].get(f, {}).items():
                lexical[i, t_index[e]] = p
        ctx_index = {BOS: 0, **{w: i + 1 for i, w in enumerate(tgt_vocab)}}
        out_index = {**t_index, EOS: len(tgt_vocab)}
        counts = np.zeros((len(tgt_vocab) + 1, len(tgt_vocab) + 1), dtype=np.int64)
        for ctx, row in d["bigrams"].items():
            for nxt, c in row.items():
                counts[ctx_index[ctx], out_index[nxt]] = c
        return cls(src_vocab, tgt_vocab, lexical, counts, d["length_ratio"],
                   lam=d["lambda"], kappa=d["kappa"],
                   train_fingerprints=d.get("train_fingerprints", ()))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path) -> "ToyModel":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def ibm1_em(pairs: Sequence[tuple[Sequence[int], Sequence[int]]], n_src: int, n_tgt: int,
            iterations: int) -> np.ndarray:
    """IBM Model 1 EM (no NULL word); returns t[f, e] = P(e | f)."""
    t = np.full((n_src, n_tgt), 1.0 / n_tgt)
    arrays = [(np.asarray(f, dtype=np.int64), np.asarray(e, dtype=np.int64)) for f, e in pairs]
    for _ in range(iterations):
        counts = np.zeros((n_src, n_tgt))
        for f, e in arrays:
            sub = t[np.ix_(f, e)]
            post = sub / sub.sum(axis=0, keepdims=True)
            np.add.at(counts, (f[:, None], e[None, :]), post)
        totals = counts.sum(axis=1, keepdims=True)
        t = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    return t


def train_toy_model(corpus: Sequence[tuple[Sequence[str], Sequence[str]]],
                    em_iterations: int = DEFAULT_EM_ITERATIONS,
                    lam: float = DEFAULT_LAMBDA,
                    kappa: float = DEFAULT_KAPPA) -> ToyModel:
    corpus = [(list(s), list(t)) for s, t in corpus if s and t]
    if not corpus:
        raise InvalidInput("cannot train on an empty corpus")
    if em_iterations < 1:
        raise InvalidInput("em_iterations must be >= 1")
    # first-occurrence order keeps training a function of corpus order only
    src_vocab = list(dict.fromkeys(w for s, _ in corpus for w in s))
    tgt_vocab = list(dict.fromkeys(w for _, t in corpus for w in t))
    s_index = {w: i for i, w in enumerate(src_vocab)}
    t_index = {w: i for i, w in enumerate(tgt_vocab)}
    pairs = [([s_index[w] for w in s], [t_index[w] for w in t]) for s, t in corpus]
    lexical = ibm1_em(pairs, len(src_vocab), len(tgt_vocab), em_iterations)

    n_tgt = len(tgt_vocab)
    counts = np.zeros((n_tgt + 1, n_tgt + 1), dtype=np.int64)
    for _, e in pairs:
        ctx = [0] + [i + 1 for i in e]
        nxt = list(e) + [n_tgt]
        np.add.at(counts, (ctx, nxt), 1)

    ratio = sum(len(t) for _, t in corpus) / sum(len(s) for s, _ in corpus)
    prints = [pair_fingerprint(s, t) for s, t in corpus]
    return ToyModel(src_vocab, tgt_vocab, lexical, counts, ratio, lam=lam, kappa=kappa,
                    train_fingerprints=prints)
