"""Dependency trees from CoNLL-U and the shortest-phrase-covering-errors closure.

A run of erroneous tokens is grown to a phrase by repeating three steps
until nothing changes: take the lowest common ancestor of the current set,
add every node on the path from each member up to it, then fill the gaps so
the set is a contiguous interval.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

from .core import ErrorSpan, InvalidInput, Severity, spans_from_severities

ROOT = -1


class ConlluError(InvalidInput):
    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


class Interval(NamedTuple):
    l: int
    r: int


def _check_heads(heads: Sequence[int]) -> None:
    n = len(heads)
    roots = [i for i, h in enumerate(heads) if h == ROOT]
    if len(roots) != 1:
        raise InvalidInput(f"expected exactly one root, found {len(roots)}")
    for i, h in enumerate(heads):
        if h != ROOT and not 0 <= h < n:
            raise InvalidInput(f"head {h} of node {i} out of range")
        if h == i:
            raise InvalidInput(f"node {i} is its own head")
    # every node must reach the root in fewer than n steps
    state = [0] * n  # 0 unseen, 1 on stack, 2 known good
    for start in range(n):
        path = []
        v = start
        while v != ROOT and state[v] == 0:
            state[v] = 1
            path.append(v)
            v = heads[v]
        if v != ROOT and state[v] == 1:
            raise InvalidInput(f"cycle through node {v}")
        for u in path:
            state[u] = 2


@dataclass(frozen=True)
class DepTree:
    """Rooted tree over token positions; ``heads[i]`` is the parent or ROOT (-1)."""

    heads: tuple
    tokens: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "heads", tuple(int(h) for h in self.heads))
        if self.tokens is not None:
            object.__setattr__(self, "tokens", tuple(self.tokens))
            if len(self.tokens) != len(self.heads):
                raise InvalidInput("tokens and heads differ in length")
        if not self.heads:
            raise InvalidInput("empty tree")
        _check_heads(self.heads)
        heads = self.heads
        depth = [-1] * len(heads)
        anc = [0] * len(heads)  # ancestor-or-self sets as bitmasks
        for v in range(len(heads)):
            chain = []
            while v != ROOT and depth[v] < 0:
                chain.append(v)
                v = heads[v]
            d, mask = (-1, 0) if v == ROOT else (depth[v], anc[v])
            for u in reversed(chain):
                d += 1
                mask |= 1 << u
                depth[u], anc[u] = d, mask
        object.__setattr__(self, "depth", tuple(depth))
        object.__setattr__(self, "ancestors", tuple(anc))
        object.__setattr__(self, "_node_of_mask", {m: v for v, m in enumerate(anc)})

    def __len__(self):
        return len(self.heads)

    @property
    def root(self) -> int:
        return self.heads.index(ROOT)

    @classmethod
    def from_conllu_heads(cls, heads: Sequence[int], tokens=None) -> "DepTree":
        """Build from 1-based CoNLL-U HEAD values (0 = ROOT)."""
        return cls(tuple(h - 1 if h > 0 else ROOT for h in heads), tokens)


def parse_conllu(text: str) -> list[DepTree]:
    trees = []
    heads: list[int] = []
    forms: list[str] = []
    head_lines: list[int] = []
    first_line = None

    def flush():
        nonlocal heads, forms, head_lines, first_line
        if heads:
            n = len(heads)
            for h, ln in zip(heads, head_lines):
                if not 0 <= h <= n:
                    raise ConlluError(f"head {h} out of range for {n} tokens", ln)
            if 0 not in heads:
                raise ConlluError("sentence has no ROOT token", first_line)
            try:
                trees.append(DepTree.from_conllu_heads(heads, forms))
            except InvalidInput as e:
                raise ConlluError(str(e), first_line) from None
        heads, forms, head_lines, first_line = [], [], [], None

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluError(f"expected 10 columns, got {len(cols)}", lineno)
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue  # multiword token range or empty node
        try:
            idx = int(tid)
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"non-integer ID or HEAD in {tid!r}/{cols[6]!r}", lineno) from None
        if idx != len(heads) + 1:
            raise ConlluError(f"token ID {idx} out of sequence", lineno)
        if first_line is None:
            first_line = lineno
        heads.append(head)
        forms.append(cols[1])
        head_lines.append(lineno)
    flush()
    return trees


def read_conllu(path) -> list[DepTree]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f.read())


def _lca2(heads, depth, a: int, b: int) -> int:
    while depth[a] > depth[b]:
        a = heads[a]
    while depth[b] > depth[a]:
        b = heads[b]
    while a != b:
        a, b = heads[a], heads[b]
    return a


def lca(tree: DepTree, nodes: Iterable[int]) -> int:
    nodes = list(nodes)
    if not nodes:
        raise InvalidInput("LCA of an empty set")
    n = len(tree)
    for v in nodes:
        if not 0 <= v < n:
            raise InvalidInput(f"node {v} not in tree")
    a = nodes[0]
    for v in nodes[1:]:
        a = _lca2(tree.heads, tree.depth, a, v)
    return a


def _closure_step(tree: DepTree, l: int, r: int) -> tuple[int, int]:
    # Ancestors shared by the whole interval form a chain whose deepest member
    # is the LCA; the union of the members' ancestor sets minus the LCA's
    # proper ancestors is exactly the union of the paths up to the LCA.
    anc = tree.ancestors
    common, union = -1, 0
    for v in range(l, r + 1):
        common &= anc[v]
        union |= anc[v]
    a = tree._node_of_mask[common]
    covered = union & ~(common ^ (1 << a))
    return (covered & -covered).bit_length() - 1, covered.bit_length() - 1


def _check_interval(tree: DepTree, l: int, r: int) -> None:
    if not 0 <= l <= r < len(tree):
        raise InvalidInput(f"interval ({l}, {r}) invalid for {len(tree)} tokens")


def spce(tree: DepTree, l: int, r: int) -> Interval:
    """Shortest contiguous phrase containing [l, r] closed under paths to its LCA."""
    _check_interval(tree, l, r)
    anc, node_of = tree.ancestors, tree._node_of_mask
    while True:
        # same computation as _closure_step, inlined for the hot loop
        common, union = -1, 0
        for v in range(l, r + 1):
            common &= anc[v]
            union |= anc[v]
        covered = union & ~(common ^ (1 << node_of[common]))
        lo, hi = (covered & -covered).bit_length() - 1, covered.bit_length() - 1
        if lo == l and hi == r:
            return Interval(l, r)
        l, r = lo, hi


def spce_trace(tree: DepTree, l: int, r: int) -> list[list[int]]:
    """P_cur after each pass of the loop, ending with the fixpoint set."""
    _check_interval(tree, l, r)
    trace = []
    while True:
        lo, hi = _closure_step(tree, l, r)
        trace.append(list(range(lo, hi + 1)))
        if (lo, hi) == (l, r):
            return trace
        l, r = lo, hi


def aggregate_spans(tree: DepTree, severities: Sequence[Severity]) -> list[ErrorSpan]:
    """Expand each error run to its phrase, merge colliding phrases, keep the worst severity."""
    if len(severities) != len(tree):
        raise InvalidInput(f"{len(severities)} severities for a {len(tree)}-node tree")
    intervals = sorted(spce(tree, s.start, s.end) for s in spans_from_severities(severities))
    merged: list[list[int]] = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1] + 1:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [ErrorSpan(lo, hi, Severity(max(severities[lo : hi + 1]))) for lo, hi in merged]
