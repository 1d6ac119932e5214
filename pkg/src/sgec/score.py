"""Edit matching, precision/recall/F-beta, and the feedback evaluation protocol.

Feedback scoring compares edits extracted from the machine transcript pair
(fluent -> GEC) against edits extracted from the manual pair. Because the
two fluent transcripts rarely agree token for token, hypothesis edits are
first projected onto the manual fluent source through a bridge alignment.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .align import AlignmentPath, OpKind, levenshtein_align
from .edits import Edit, EditSet, extract_edits
from .errors import BridgeMismatch, SourceMismatch, SpanOutOfBounds
from .textnorm import Words, word_tuple

DEFAULT_BETA = 0.5


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass(frozen=True)
class PrfScore:
    precision: float
    recall: float
    f_beta: float
    beta: float = DEFAULT_BETA

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            f"f{self.beta:g}".replace(".", ""): self.f_beta,
        }


def fbeta(precision: float, recall: float, beta: float = DEFAULT_BETA) -> float:
    """F-beta from precision and recall; 0 when both are 0."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    denom = beta * beta * precision + recall
    if denom == 0:
        return 0.0
    return (1 + beta * beta) * precision * recall / denom


def prf(counts: MatchCounts, beta: float = DEFAULT_BETA) -> PrfScore:
    """Precision/recall/F-beta with the empty-set convention.

    A zero denominator yields 1.0 for that component, so perfect no-edit
    agreement (tp = fp = fn = 0) scores P = R = F = 1.0.
    """
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 1.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 1.0
    return PrfScore(precision, recall, fbeta(precision, recall, beta), beta)


def match_edits(reference: EditSet, hypothesis: EditSet) -> MatchCounts:
    """Exact-match counting: an edit matches iff span and correction agree.

    The edit class is derivable from span and correction, so it plays no
    part in matching. Raises SourceMismatch when the sets are over
    different source sentences.
    """
    if reference.source != hypothesis.source:
        raise SourceMismatch(
            f"reference source {' '.join(reference.source)!r} != "
            f"hypothesis source {' '.join(hypothesis.source)!r}"
        )
    ref_keys = Counter(edit.key for edit in reference.edits)
    hyp_keys = Counter(edit.key for edit in hypothesis.edits)
    tp = sum((ref_keys & hyp_keys).values())
    return MatchCounts(
        tp=tp,
        fp=len(hypothesis.edits) - tp,
        fn=len(reference.edits) - tp,
    )


def project_edits(
    hyp: EditSet,
    bridge: AlignmentPath,
    target_source: Words,
) -> EditSet:
    """Remap hypothesis edit spans through a bridge alignment.

    ``bridge`` must align exactly the hypothesis source tokens (as its
    reference side) to ``target_source``. Span starts map to the aligned or
    next target index, span ends to the aligned or previous one; an edit
    whose span has no target counterpart at all collapses to an insertion
    point at the nearest target index so it still counts as a false
    positive unless matched. Correction tokens are unchanged.
    """
    target = word_tuple(target_source)
    n_source = len(hyp.source)
    if bridge.ref_len != n_source:
        raise BridgeMismatch(
            f"bridge covers {bridge.ref_len} source tokens, "
            f"edit set has {n_source}"
        )
    if bridge.hyp_len != len(target):
        raise BridgeMismatch(
            f"bridge covers {bridge.hyp_len} target tokens, "
            f"target source has {len(target)}"
        )
    for edit in hyp.edits:
        if edit.end > n_source:
            raise SpanOutOfBounds(
                f"edit span ({edit.start}, {edit.end}) exceeds source "
                f"length {n_source}"
            )
    aligned: dict[int, int] = {
        op.ref_index: op.hyp_index
        for op in bridge.ops
        if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTE)
    }
    # aligned_or_next[i]: target index of the first aligned source position >= i
    aligned_or_next = [len(target)] * (n_source + 1)
    for i in range(n_source - 1, -1, -1):
        aligned_or_next[i] = aligned.get(i, aligned_or_next[i + 1])

    projected = []
    for edit in hyp.edits:
        covered = [aligned[k] for k in range(edit.start, edit.end) if k in aligned]
        if covered:
            new_start, new_end = covered[0], covered[-1] + 1
        else:
            new_start = new_end = aligned_or_next[edit.start]
        projected.append(Edit(new_start, new_end, edit.correction, edit.annotator))
    return EditSet(target, tuple(projected))


@dataclass(frozen=True)
class FeedbackResult:
    counts: MatchCounts
    score: PrfScore

    def to_dict(self) -> dict:
        return {**self.counts.to_dict(), **self.score.to_dict()}


def evaluate_feedback(
    manual_fluent: Words,
    manual_gec: Words,
    auto_fluent: Words,
    auto_gec: Words,
    beta: float = DEFAULT_BETA,
) -> FeedbackResult:
    """Score machine GEC edits against manual ones for a single utterance."""
    reference = extract_edits(manual_fluent, manual_gec)
    hypothesis = extract_edits(auto_fluent, auto_gec)
    bridge = levenshtein_align(auto_fluent, manual_fluent)
    projected = project_edits(hypothesis, bridge, manual_fluent)
    counts = match_edits(reference, projected)
    return FeedbackResult(counts, prf(counts, beta))


def evaluate_feedback_corpus(
    items: Iterable[tuple[Words, Words, Words, Words]],
    beta: float = DEFAULT_BETA,
) -> FeedbackResult:
    """Pool tp/fp/fn over utterances before computing P/R/F (micro-average)."""
    total = MatchCounts()
    for manual_fluent, manual_gec, auto_fluent, auto_gec in items:
        total = total + evaluate_feedback(
            manual_fluent, manual_gec, auto_fluent, auto_gec, beta
        ).counts
    return FeedbackResult(total, prf(total, beta))
