"""Parallel corpus I/O and a seeded synthetic language pair for desk-scale runs."""

from __future__ import annotations

import hashlib
import zlib
from typing import Sequence

import numpy as np

from .core import InvalidInput

Pair = tuple[list[str], list[str]]


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for a named stage; other names never perturb it."""
    return np.random.default_rng(np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())]))


def pair_fingerprint(src: Sequence[str], tgt: Sequence[str]) -> str:
    """Short stable digest of a tokenised pair, used to check split membership."""
    text = " ".join(src) + "\t" + " ".join(tgt)
    return hashlib.sha1(text.encode("utf-8")).hexdigest()[:16]


def read_parallel_tsv(path) -> list[Pair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise InvalidInput(f"{path}:{lineno}: expected source<TAB>target")
            pairs.append((cols[0].split(), cols[1].split()))
    return pairs


def write_parallel_tsv(path, pairs: Sequence[Pair]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in pairs:
            f.write(" ".join(src) + "\t" + " ".join(tgt) + "\n")


_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "kr", "pl"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]


class SyntheticLanguage:
    """Toy language pair with agreement, adjective reordering, synonyms and Zipfian nouns.

    Source: DET [ADJ] NOUN VERB DET [ADJ] NOUN [PREP DET NOUN]
    Target: DET_g NOUN [ADJ] VERB DET_g NOUN [ADJ] [PREP DET_g NOUN]
    where DET_g agrees with the gender of the following noun.
    """

    def __init__(self, seed: int = 0, n_nouns: int = 120, n_adjs: int = 40, n_verbs: int = 60,
                 n_preps: int = 8, n_dets: int = 3, synonym_rate: float = 0.3,
                 agreement: bool = True):
        rng = rng_stream(seed, "language")
        used: set[str] = set()

        def word(prefix):
            while True:
                syll = int(rng.integers(1, 4))
                w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                            for _ in range(syll))
                w = prefix + w
                if w not in used:
                    used.add(w)
                    return w

        def lexicon(n, with_synonyms=True):
            entries = []
            for _ in range(n):
                src = word("")
                tgts = [word("T")]
                if with_synonyms and rng.random() < synonym_rate:
                    tgts.append(word("T"))
                entries.append((src, tgts))
            return entries

        self.nouns = lexicon(n_nouns)
        self.noun_gender = [int(rng.integers(2)) if agreement else 0 for _ in range(n_nouns)]
        self.adjs = lexicon(n_adjs)
        self.verbs = lexicon(n_verbs)
        self.preps = lexicon(n_preps, with_synonyms=False)
        self.dets = [(word(""), [word("T"), word("T")]) for _ in range(n_dets)]
        ranks = np.arange(1, n_nouns + 1, dtype=float)
        self.noun_p = (1.0 / ranks) / (1.0 / ranks).sum()
        vr = np.arange(1, n_verbs + 1, dtype=float)
        self.verb_p = (1.0 / vr ** 0.8) / (1.0 / vr ** 0.8).sum()

    @staticmethod
    def _tr(entry, rng, synonym_p=0.25):
        src, tgts = entry
        if len(tgts) > 1 and rng.random() < synonym_p:
            return tgts[1]
        return tgts[0]

    def _np(self, rng, adj_p):
        d = self.dets[int(rng.integers(len(self.dets)))]
        k = int(rng.choice(len(self.nouns), p=self.noun_p))
        noun = self.nouns[k]
        src = [d[0]]
        tgt = [d[1][self.noun_gender[k]]]
        adj = None
        if rng.random() < adj_p:
            adj = self.adjs[int(rng.integers(len(self.adjs)))]
            src.append(adj[0])
        src.append(noun[0])
        tgt.append(self._tr(noun, rng))
        if adj is not None:
            tgt.append(self._tr(adj, rng))
        return src, tgt

    def sentence(self, rng: np.random.Generator) -> Pair:
        s1, t1 = self._np(rng, 0.4)
        verb = self.verbs[int(rng.choice(len(self.verbs), p=self.verb_p))]
        s2, t2 = self._np(rng, 0.4)
        src = s1 + [verb[0]] + s2
        tgt = t1 + [self._tr(verb, rng)] + t2
        if rng.random() < 0.35:
            prep = self.preps[int(rng.integers(len(self.preps)))]
            s3, t3 = self._np(rng, 0.0)
            src += [prep[0]] + s3
            tgt += [prep[1][0]] + t3
        return src, tgt


def synthetic_corpus(n_pairs: int, seed: int = 0, language_seed: int = 0, **language_options) -> list[Pair]:
    if n_pairs < 1:
        raise InvalidInput("n_pairs must be >= 1")
    lang = SyntheticLanguage(seed=language_seed, **language_options)
    rng = rng_stream(seed, "corpus")
    return [lang.sentence(rng) for _ in range(n_pairs)]
