import os
import sys

# make the helper modules next to the tests importable
sys.path.insert(0, os.path.dirname(__file__))

import pytest  # noqa: E402

from synthqe.corpus import synthetic_corpus, write_parallel_tsv  # noqa: E402
from synthqe.toymodel import train_toy_model  # noqa: E402


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    """Small corpus with a weak model M (first 40 pairs) and a strong model L (all 300)."""
    d = tmp_path_factory.mktemp("ws")
    corpus = synthetic_corpus(300, seed=2)
    write_parallel_tsv(d / "corpus.tsv", corpus)
    gen_pairs = corpus[200:230]
    write_parallel_tsv(d / "gen.tsv", gen_pairs)
    train_toy_model(corpus[:40]).save(d / "M.json")
    train_toy_model(corpus).save(d / "L.json")
    train_toy_model(corpus[:120]).save(d / "K.json")
    (d / "th.txt").write_text("0.05\n0.15\n0.3\n")
    return {"dir": d, "corpus": corpus, "gen_pairs": gen_pairs, "tsv": str(d / "gen.tsv"),
            "M": str(d / "M.json"), "L": str(d / "L.json"), "K": str(d / "K.json"), "th": str(d / "th.txt")}


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
