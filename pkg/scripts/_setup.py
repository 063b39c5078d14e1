"""Shared setup for the experiment scripts: synthetic corpus, toy models, thresholds."""

from __future__ import annotations

import os

from synthqe.corpus import synthetic_corpus, write_parallel_tsv
from synthqe.toymodel import train_toy_model


def prepare(workdir: str, n_pairs: int, seed: int, splits: dict, gen_range: tuple[int, int],
            thresholds=(0.05, 0.15, 0.3)) -> dict:
    """Write corpus, one model per named split and a thresholds file; return their paths."""
    os.makedirs(workdir, exist_ok=True)
    corpus = synthetic_corpus(n_pairs, seed=seed)
    paths = {"corpus": os.path.join(workdir, "corpus.tsv"), "pairs": os.path.join(workdir, "pairs.tsv"),
             "thresholds": os.path.join(workdir, "thresholds.txt")}
    write_parallel_tsv(paths["corpus"], corpus)
    write_parallel_tsv(paths["pairs"], corpus[gen_range[0]:gen_range[1]])
    for name, (lo, hi) in splits.items():
        paths[name] = os.path.join(workdir, f"{name}.json")
        train_toy_model(corpus[lo:hi]).save(paths[name])
    with open(paths["thresholds"], "w") as f:
        f.write("".join(f"{t}\n" for t in thresholds))
    return paths
