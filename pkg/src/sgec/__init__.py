"""Toolkit for spoken grammatical error correction evaluation and labelling."""

__version__ = "0.1.0"

from .align import AlignmentPath, AlignOp, OpKind, WerStats, levenshtein_align, wer
from .edits import Edit, EditClass, EditSet, apply_edits, extract_edits, parse_m2, write_m2
from .manifest import Manifest, Utterance, read_manifest, write_manifest
from .pipeline import build_prompt, cascade, pseudo_label, run_stage, segment
from .report import BootstrapResult, EvalReport, aggregate, paired_bootstrap
from .score import (
    FeedbackResult,
    MatchCounts,
    PrfScore,
    evaluate_feedback,
    evaluate_feedback_corpus,
    fbeta,
    match_edits,
    prf,
    project_edits,
)
from .textnorm import (
    NormalizationOptions,
    Token,
    TokenSequence,
    normalize,
    tokenize,
    truecase,
)

__all__ = [
    "AlignOp",
    "AlignmentPath",
    "BootstrapResult",
    "Edit",
    "EditClass",
    "EditSet",
    "EvalReport",
    "FeedbackResult",
    "Manifest",
    "MatchCounts",
    "NormalizationOptions",
    "OpKind",
    "PrfScore",
    "Token",
    "TokenSequence",
    "Utterance",
    "WerStats",
    "aggregate",
    "apply_edits",
    "build_prompt",
    "cascade",
    "evaluate_feedback",
    "evaluate_feedback_corpus",
    "extract_edits",
    "fbeta",
    "levenshtein_align",
    "match_edits",
    "normalize",
    "paired_bootstrap",
    "parse_m2",
    "prf",
    "project_edits",
    "pseudo_label",
    "read_manifest",
    "run_stage",
    "segment",
    "tokenize",
    "truecase",
    "wer",
    "write_m2",
    "write_manifest",
]
