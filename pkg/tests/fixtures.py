"""Small hand-built scoring models, trees and corpora shared across tests."""

from __future__ import annotations

from synthqe.decode import EOS


class TableModel:
    """Scoring model given by a prefix -> distribution table.

    Prefixes missing from the table fall back to ``default``.
    """

    def __init__(self, vocab, table, default=None):
        self._vocab = frozenset(vocab)
        self.table = {tuple(k): dict(v) for k, v in table.items()}
        self.default = default

    def vocabulary(self):
        return self._vocab

    def next_distribution(self, src, prefix):
        dist = self.table.get(tuple(prefix))
        if dist is None:
            dist = self.default(tuple(prefix)) if callable(self.default) else self.default
        return dict(dist)


class UniformModel:
    def __init__(self, vocab):
        self._vocab = frozenset(vocab)

    def vocabulary(self):
        return self._vocab

    def next_distribution(self, src, prefix):
        keys = sorted(self._vocab) + [EOS]
        return {k: 1.0 / len(keys) for k in keys}


class MarkovModel:
    """Distribution depends only on the last token (or BOS)."""

    def __init__(self, vocab, rows):
        self._vocab = frozenset(vocab)
        self.rows = rows

    def vocabulary(self):
        return self._vocab

    def next_distribution(self, src, prefix):
        return dict(self.rows[prefix[-1] if prefix else "<s>"])


def fixture_markov():
    """Three-token Markov chain where the greedy path is not optimal."""
    v = ["a", "b", "c"]
    rows = {
        "<s>": {"a": 0.5, "b": 0.4, "c": 0.1, EOS: 0.0},
        "a": {"a": 0.1, "b": 0.3, "c": 0.3, EOS: 0.3},
        "b": {"a": 0.05, "b": 0.05, "c": 0.1, EOS: 0.8},
        "c": {"a": 0.2, "b": 0.2, "c": 0.2, EOS: 0.4},
    }
    return MarkovModel(v, rows)


def fixture_cbs():
    """Model used for the hand-stepped CBS trace with tau = 0.5."""
    v = ["x", "y", "z"]
    table = {
        (): {"x": 0.6, "y": 0.3, "z": 0.1, EOS: 0.0},
        ("x",): {"x": 0.1, "y": 0.2, "z": 0.6, EOS: 0.1},
        ("x", "z"): {"x": 0.1, "y": 0.7, "z": 0.1, EOS: 0.1},
        ("x", "z", "y"): {"x": 0.1, "y": 0.1, "z": 0.1, EOS: 0.7},
        ("x", "y"): {"x": 0.2, "y": 0.2, "z": 0.2, EOS: 0.4},
        ("x", "z", "z"): {"x": 0.1, "y": 0.1, "z": 0.1, EOS: 0.7},
    }
    default = {"x": 0.1, "y": 0.1, "z": 0.1, EOS: 0.7}
    return TableModel(v, table, default)


# "take some action with his consent", heads as 0-based indices, -1 = root
FIG_TOKENS = ["take", "some", "action", "with", "his", "consent"]
FIG_HEADS = (-1, 2, 0, 5, 5, 0)


def chain_heads(n: int) -> tuple:
    """Right-headed chain: token i depends on i + 1, the last token is the root."""
    return tuple(i + 1 for i in range(n - 1)) + (-1,)


def heuristic_heads(tokens) -> tuple:
    """Cheap deterministic stand-in for a parser.

    The first token is the root, every other token attaches to the
    previous token whose length parity matches its own, or to the root.
    """
    heads = [-1] * len(tokens)
    for i in range(1, len(tokens)):
        heads[i] = 0
        for j in range(i - 1, 0, -1):
            if len(tokens[j]) % 2 == len(tokens[i]) % 2:
                heads[i] = j
                break
    return tuple(heads)


def to_conllu(sentences) -> str:
    """sentences: iterable of (tokens, heads 0-based with -1 root)."""
    out = []
    for tokens, heads in sentences:
        for i, (tok, h) in enumerate(zip(tokens, heads), 1):
            out.append("\t".join([str(i), tok, "_", "_", "_", "_", str(h + 1), "dep", "_", "_"]))
        out.append("")
    return "\n".join(out) + "\n"
