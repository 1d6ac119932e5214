"""Aggregation with per-grade breakdowns and paired-bootstrap significance."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .align import WerStats, wer
from .errors import IdMismatch
from .manifest import GRADES, UNGRADED, Utterance
from .score import DEFAULT_BETA, MatchCounts, PrfScore, prf
from .textnorm import NormalizationOptions

GRADE_ORDER = GRADES + (UNGRADED,)

_RESAMPLE_CHUNK = 1000


@dataclass(frozen=True)
class GroupStats:
    n_utterances: int
    wer: Optional[WerStats] = None
    counts: Optional[MatchCounts] = None
    prf: Optional[PrfScore] = None

    def to_dict(self) -> dict:
        obj: dict = {"n_utterances": self.n_utterances}
        if self.wer is not None:
            obj.update(self.wer.to_dict())
        if self.counts is not None:
            obj.update(self.counts.to_dict())
        if self.prf is not None:
            obj.update(self.prf.to_dict())
        return obj


@dataclass(frozen=True)
class BootstrapResult:
    """Two-sided paired-bootstrap p-value for a corpus WER comparison."""

    p_value: float
    one_sided: float
    better: str  # "A" or "B": the nominally better system on the full corpus
    wer_a: float
    wer_b: float
    n_resamples: int
    seed: int
    baseline: str = "B"

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "p_value": self.p_value,
            "one_sided": self.one_sided,
            "better": self.better,
            "wer_a": self.wer_a,
            "wer_b": self.wer_b,
            "n_resamples": self.n_resamples,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class EvalReport:
    overall: GroupStats
    by_grade: dict[str, GroupStats]
    significance: Optional[BootstrapResult] = None

    def to_dict(self) -> dict:
        obj: dict = {"overall": self.overall.to_dict()}
        if self.by_grade:
            obj["by_grade"] = {
                grade: stats.to_dict() for grade, stats in self.by_grade.items()
            }
        if self.significance is not None:
            obj["significance"] = self.significance.to_dict()
        return obj


Metric = Union[WerStats, MatchCounts]


def _pool(
    ids: set, wers: list[WerStats], counts: list[MatchCounts], beta: float
) -> GroupStats:
    pooled_wer = None
    if wers:
        pooled_wer = WerStats(0, 0, 0, 0, 0)
        for stats in wers:
            pooled_wer = pooled_wer + stats
    pooled_counts = None
    pooled_prf = None
    if counts:
        pooled_counts = MatchCounts()
        for c in counts:
            pooled_counts = pooled_counts + c
        pooled_prf = prf(pooled_counts, beta)
    return GroupStats(len(ids), pooled_wer, pooled_counts, pooled_prf)


def aggregate(
    per_utt: Iterable[tuple[Utterance, Metric]],
    beta: float = DEFAULT_BETA,
) -> EvalReport:
    """Micro-average within each grade bucket and overall.

    Utterances without a grade land in the "ungraded" bucket. An utterance
    may appear once with WerStats and once with MatchCounts; it is counted
    once per bucket.
    """
    ids: dict[str, set] = {}
    wers: dict[str, list[WerStats]] = {}
    counts: dict[str, list[MatchCounts]] = {}
    all_ids: set = set()
    all_wers: list[WerStats] = []
    all_counts: list[MatchCounts] = []
    for utt, metric in per_utt:
        bucket = utt.grade_bucket
        ids.setdefault(bucket, set()).add(utt.id)
        all_ids.add(utt.id)
        if isinstance(metric, WerStats):
            wers.setdefault(bucket, []).append(metric)
            all_wers.append(metric)
        elif isinstance(metric, MatchCounts):
            counts.setdefault(bucket, []).append(metric)
            all_counts.append(metric)
        else:
            raise TypeError(f"unsupported metric {metric!r}")
    by_grade = {
        bucket: _pool(ids[bucket], wers.get(bucket, []), counts.get(bucket, []), beta)
        for bucket in sorted(ids, key=_grade_sort_key)
    }
    return EvalReport(_pool(all_ids, all_wers, all_counts, beta), by_grade)


def _grade_sort_key(bucket: str):
    try:
        return (GRADE_ORDER.index(bucket), bucket)
    except ValueError:
        return (len(GRADE_ORDER), bucket)


def paired_bootstrap(
    ref: Mapping[str, Sequence[str]],
    hyp_a: Mapping[str, Sequence[str]],
    hyp_b: Mapping[str, Sequence[str]],
    n_resamples: int = 10000,
    seed: int = 0,
    opts: NormalizationOptions = NormalizationOptions(),
) -> BootstrapResult:
    """Paired bootstrap over utterances for the corpus WER of two systems.

    Utterance ids are resampled with replacement n_resamples times
    (deterministic given the seed). The one-sided proportion counts
    resamples where the nominally better system fails to stay strictly
    better; the reported p-value is the two-sided min(1, 2p).
    """
    if n_resamples < 1000:
        raise ValueError("n_resamples must be at least 1000")
    if not ref:
        raise IdMismatch("cannot bootstrap an empty corpus")
    ids = sorted(ref)
    if set(hyp_a) != set(ref) or set(hyp_b) != set(ref):
        missing = (set(ref) ^ set(hyp_a)) | (set(ref) ^ set(hyp_b))
        raise IdMismatch(
            f"hypotheses must cover exactly the reference ids; "
            f"mismatched: {sorted(missing)[:5]}"
        )
    errors_a = np.empty(len(ids), dtype=np.int64)
    errors_b = np.empty(len(ids), dtype=np.int64)
    ref_len = np.empty(len(ids), dtype=np.int64)
    for k, utt_id in enumerate(ids):
        stats_a = wer(ref[utt_id], hyp_a[utt_id], opts)
        stats_b = wer(ref[utt_id], hyp_b[utt_id], opts)
        errors_a[k] = stats_a.errors
        errors_b[k] = stats_b.errors
        ref_len[k] = stats_a.ref_len

    wer_a = errors_a.sum() / ref_len.sum()
    wer_b = errors_b.sum() / ref_len.sum()
    better = "A" if wer_a <= wer_b else "B"

    rng = np.random.default_rng(seed)
    not_better = 0
    remaining = n_resamples
    while remaining > 0:
        chunk = min(remaining, _RESAMPLE_CHUNK)
        idx = rng.integers(0, len(ids), size=(chunk, len(ids)))
        sampled_len = ref_len[idx].sum(axis=1)
        sampled_a = errors_a[idx].sum(axis=1) / sampled_len
        sampled_b = errors_b[idx].sum(axis=1) / sampled_len
        if better == "A":
            not_better += int(np.count_nonzero(sampled_a >= sampled_b))
        else:
            not_better += int(np.count_nonzero(sampled_b >= sampled_a))
        remaining -= chunk
    one_sided = not_better / n_resamples
    return BootstrapResult(
        p_value=min(1.0, 2 * one_sided),
        one_sided=one_sided,
        better=better,
        wer_a=float(wer_a),
        wer_b=float(wer_b),
        n_resamples=n_resamples,
        seed=seed,
    )
