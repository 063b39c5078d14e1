"""Translation Edit Rate alignment: Levenshtein edits plus greedy block shifts.

Shift search follows the usual TERCOM loop. Every block move (block length up
to ``max_shift_len``, any destination) is scored by the Levenshtein distance
of the shifted hypothesis to the reference. The move with the largest strict
decrease is kept, each accepted move costs one edit, and the loop stops when
no move helps. Ties go to the shorter block, then the leftmost origin, then
the leftmost destination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core import BAD_LABEL, OK_LABEL, InvalidInput

MAX_SHIFT_LEN = 10
# candidate rows evaluated per numpy batch
_CHUNK = 20000


class OpKind(str, Enum):
    MATCH = "MATCH"
    SUB = "SUB"
    INS = "INS"
    DEL = "DEL"
    SHIFT = "SHIFT"


class EditOp(NamedTuple):
    kind: OpKind
    hyp_index: Optional[int] = None
    ref_index: Optional[int] = None
    shift_len: Optional[int] = None


@dataclass
class Alignment:
    ops: list[EditOp]
    edit_count: int
    ref_len: int
    hyp_len: int
    num_shifts: int = 0
    # hypothesis order after all accepted shifts, as original indices
    shifted_order: list[int] = field(default_factory=list)


def _encode(hyp: Sequence[str], ref: Sequence[str]):
    vocab: dict[str, int] = {}
    h = np.array([vocab.setdefault(t, len(vocab)) for t in hyp], dtype=np.int32)
    r = np.array([vocab.setdefault(t, len(vocab)) for t in ref], dtype=np.int32)
    return h, r


def batch_levenshtein(hyps: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Levenshtein distance of every row of ``hyps`` (C x n) to ``ref``.

    Row recurrence is vectorised over candidates; the left-to-right
    dependency inside a row is a running min of ``x[k] - k``.
    """
    c, n = hyps.shape
    m = len(ref)
    cols = np.arange(m + 1, dtype=np.int32)
    prev = np.broadcast_to(cols, (c, m + 1))
    for i in range(1, n + 1):
        cost = (hyps[:, i - 1 : i] != ref[None, :]).astype(np.int32)
        x = np.empty((c, m + 1), dtype=np.int32)
        x[:, 0] = i
        x[:, 1:] = np.minimum(prev[:, 1:] + 1, prev[:, :-1] + cost)
        prev = np.minimum.accumulate(x - cols, axis=1) + cols
    return prev[:, m].copy()


def levenshtein(hyp: Sequence[str], ref: Sequence[str]) -> int:
    h, r = _encode(hyp, ref)
    if len(h) == 0:
        return len(r)
    return int(batch_levenshtein(h[None, :], r)[0])


@lru_cache(maxsize=64)
def _shift_permutations(n: int, max_len: int) -> tuple[np.ndarray, np.ndarray]:
    """All block moves on a length-n sequence, in tie-break order.

    Returns (perms, meta): perms[k] is the index permutation realised by the
    k-th move; meta[k] = (block_len, origin, destination).
    """
    perms, meta = [], []
    base = list(range(n))
    for blen in range(1, min(max_len, n) + 1):
        for i in range(n - blen + 1):
            block = base[i : i + blen]
            rest = base[:i] + base[i + blen :]
            for j in range(len(rest) + 1):
                if j == i:
                    continue
                perms.append(rest[:j] + block + rest[j:])
                meta.append((blen, i, j))
    if not perms:
        return np.zeros((0, n), dtype=np.int32), np.zeros((0, 3), dtype=np.int32)
    return np.array(perms, dtype=np.int32), np.array(meta, dtype=np.int32)


def _best_shift(cur: np.ndarray, ref: np.ndarray, max_len: int):
    perms, meta = _shift_permutations(len(cur), max_len)
    best_d, best_k = None, None
    for lo in range(0, len(perms), _CHUNK):
        d = batch_levenshtein(cur[perms[lo : lo + _CHUNK]], ref)
        k = int(np.argmin(d))
        if best_d is None or d[k] < best_d:
            best_d, best_k = int(d[k]), lo + k
    if best_k is None:
        return None
    return best_d, perms[best_k], tuple(int(v) for v in meta[best_k])


def _backtrace(h: Sequence[int], r: Sequence[int]) -> list[tuple[OpKind, Optional[int], Optional[int]]]:
    n, m = len(h), len(r)
    dp = [list(range(m + 1))]
    for i in range(1, n + 1):
        up = dp[-1]
        row = [i] * (m + 1)
        hi = h[i - 1]
        left = i
        for j in range(1, m + 1):
            best = up[j - 1] + (hi != r[j - 1])
            if up[j] + 1 < best:
                best = up[j] + 1
            if left + 1 < best:
                best = left + 1
            row[j] = left = best
        dp.append(row)
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = h[i - 1] == r[j - 1]
            if dp[i][j] == dp[i - 1][j - 1] + (0 if same else 1):
                ops.append((OpKind.MATCH if same else OpKind.SUB, i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if j > 0 and dp[i][j] == dp[i][j - 1] + 1:
            ops.append((OpKind.DEL, None, j - 1))
            j -= 1
        else:
            ops.append((OpKind.INS, i - 1, None))
            i -= 1
    ops.reverse()
    return ops


def ter_align(
    hyp: Sequence[str],
    ref: Sequence[str],
    shifts: bool = True,
    max_shift_len: int = MAX_SHIFT_LEN,
) -> Alignment:
    vocab: dict[str, int] = {}
    h = [vocab.setdefault(t, len(vocab)) for t in hyp]
    r = [vocab.setdefault(t, len(vocab)) for t in ref]
    order = list(range(len(h)))
    ops: list[EditOp] = []
    num_shifts = 0
    if shifts and len(h) > 1 and len(r) > 0:
        ha, ra = np.array(h, dtype=np.int32), np.array(r, dtype=np.int32)
        perm_order = np.arange(len(h), dtype=np.int32)
        dist = int(batch_levenshtein(ha[None, :], ra)[0])
        while dist > 0:
            found = _best_shift(ha[perm_order], ra, max_shift_len)
            if found is None or found[0] >= dist:
                break
            dist, perm, (blen, origin, _) = found
            ops.append(EditOp(OpKind.SHIFT, hyp_index=int(perm_order[origin]), shift_len=blen))
            perm_order = perm_order[perm]
            num_shifts += 1
        order = perm_order.tolist()

    edits = 0
    for kind, hi, ri in _backtrace([h[k] for k in order], r):
        if kind is not OpKind.MATCH:
            edits += 1
        ops.append(EditOp(kind, None if hi is None else order[hi], ri))
    return Alignment(
        ops=ops,
        edit_count=edits + num_shifts,
        ref_len=len(r),
        hyp_len=len(h),
        num_shifts=num_shifts,
        shifted_order=order,
    )


def coarse_labels(a: Alignment, hyp_len: int) -> list[str]:
    """OK for hypothesis tokens aligned by MATCH (shifted or not), BAD otherwise."""
    labels: list[Optional[str]] = [None] * hyp_len
    for op in a.ops:
        if op.kind == OpKind.MATCH:
            labels[op.hyp_index] = OK_LABEL
        elif op.kind in (OpKind.SUB, OpKind.INS):
            labels[op.hyp_index] = BAD_LABEL
    if any(lab is None for lab in labels):
        raise InvalidInput("alignment does not cover every hypothesis token")
    return labels  # type: ignore[return-value]


def ter_score(a: Alignment) -> float:
    if a.ref_len == 0:
        raise InvalidInput("TER undefined for an empty reference")
    return a.edit_count / a.ref_len


def format_trace(a: Alignment) -> str:
    def cell(v):
        return "-" if v is None else str(v)

    lines = []
    for op in a.ops:
        name = op.kind.value
        if op.kind == OpKind.SHIFT:
            name = f"SHIFT:{op.shift_len}"
        lines.append(f"{name}\t{cell(op.hyp_index)}\t{cell(op.ref_index)}")
    return "\n".join(lines)
