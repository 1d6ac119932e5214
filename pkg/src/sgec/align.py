"""Optimal token-level alignment between two sequences, and WER on top of it."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import EmptyReference
from .textnorm import NormalizationOptions, Words, normalize_words, word_tuple


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    DELETE = "delete"
    INSERT = "insert"


@dataclass(frozen=True)
class AlignOp:
    """One alignment step. Match/Substitute carry both indices, Delete only
    the reference index, Insert only the hypothesis index."""

    kind: OpKind
    ref_index: Optional[int] = None
    hyp_index: Optional[int] = None


@dataclass(frozen=True)
class AlignmentPath:
    ops: tuple[AlignOp, ...]
    total_cost: int

    @property
    def ref_len(self) -> int:
        return sum(1 for op in self.ops if op.ref_index is not None)

    @property
    def hyp_len(self) -> int:
        return sum(1 for op in self.ops if op.hyp_index is not None)

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)


@dataclass(frozen=True)
class WerStats:
    """Per-segment (or pooled) error counts; wer = errors / ref_len."""

    hits: int
    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.ref_len

    def __add__(self, other: "WerStats") -> "WerStats":
        return WerStats(
            self.hits + other.hits,
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.ref_len + other.ref_len,
        )

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "ref_len": self.ref_len,
            "wer": self.wer,
        }


def _suffix_distances(ref: tuple[str, ...], hyp: tuple[str, ...]) -> list[list[int]]:
    """e[i][j] = unit-cost edit distance between ref[i:] and hyp[j:]."""
    m, n = len(ref), len(hyp)
    e = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        e[i][n] = m - i
    for j in range(n + 1):
        e[m][j] = n - j
    for i in range(m - 1, -1, -1):
        row, below = e[i], e[i + 1]
        for j in range(n - 1, -1, -1):
            sub = below[j + 1] + (0 if ref[i] == hyp[j] else 1)
            dele = below[j] + 1
            ins = row[j + 1] + 1
            row[j] = min(sub, dele, ins)
    return e


def levenshtein_align(ref: Words, hyp: Words) -> AlignmentPath:
    """Minimal-cost alignment under unit costs with total tie-breaking.

    The path is read off front-to-back, preferring Match, then Substitute.
    When Delete and Insert are both on a minimal path the longer remaining
    side is consumed first (token order decides exact ties), which keeps the
    result deterministic and mirror-symmetric under argument swap.
    """
    ref_w, hyp_w = word_tuple(ref), word_tuple(hyp)
    e = _suffix_distances(ref_w, hyp_w)
    m, n = len(ref_w), len(hyp_w)
    ops: list[AlignOp] = []
    i = j = 0
    while i < m or j < n:
        here = e[i][j]
        if i < m and j < n and ref_w[i] == hyp_w[j] and e[i + 1][j + 1] == here:
            ops.append(AlignOp(OpKind.MATCH, i, j))
            i += 1
            j += 1
            continue
        if i < m and j < n and e[i + 1][j + 1] + 1 == here:
            ops.append(AlignOp(OpKind.SUBSTITUTE, i, j))
            i += 1
            j += 1
            continue
        can_delete = i < m and e[i + 1][j] + 1 == here
        can_insert = j < n and e[i][j + 1] + 1 == here
        if can_delete and can_insert:
            if (m - i) != (n - j):
                can_delete = (m - i) > (n - j)
            else:
                can_delete = ref_w[i] < hyp_w[j]
        if can_delete:
            ops.append(AlignOp(OpKind.DELETE, i, None))
            i += 1
        else:
            ops.append(AlignOp(OpKind.INSERT, None, j))
            j += 1
    return AlignmentPath(tuple(ops), e[0][0])


def wer(
    ref: Words,
    hyp: Words,
    opts: NormalizationOptions = NormalizationOptions(),
) -> WerStats:
    """Word error rate of hyp against ref after normalization.

    Raises EmptyReference when the reference normalizes to zero tokens; the
    rate may exceed 1.0 when the hypothesis is much longer than the
    reference.
    """
    ref_w = normalize_words(ref, opts)
    hyp_w = normalize_words(hyp, opts)
    if not ref_w:
        raise EmptyReference("reference is empty after normalization")
    path = levenshtein_align(ref_w, hyp_w)
    return WerStats(
        hits=path.count(OpKind.MATCH),
        substitutions=path.count(OpKind.SUBSTITUTE),
        deletions=path.count(OpKind.DELETE),
        insertions=path.count(OpKind.INSERT),
        ref_len=len(ref_w),
    )
