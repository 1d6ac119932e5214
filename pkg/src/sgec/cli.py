"""Single command-line entry point for the toolkit.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
Diagnostics go to stderr; data goes to files or stdout. Output files are
written atomically and JSON keys are sorted so identical invocations give
byte-identical results.
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .align import wer as compute_wer
from .backends import open_backend
from .edits import extract_edits, parse_m2, write_m2
from .errors import BackendFailure, DataError, IdMismatch, MissingLayer
from .manifest import (
    Manifest,
    read_manifest,
    write_manifest,
    write_text_atomic,
)
from .pipeline import DEFAULT_PROMPT_BUDGET, cascade, pseudo_label, segment_manifest
from .report import EvalReport, aggregate, paired_bootstrap
from .score import evaluate_feedback, match_edits as match_edit_sets, prf
from .textnorm import NormalizationOptions, tokenize


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the toolkit contract is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _norm_opts(args) -> NormalizationOptions:
    return NormalizationOptions(
        ignore_case=getattr(args, "ignore_case", False),
        strip_punctuation=getattr(args, "strip_punct", False),
    )


def _split_layer_spec(spec: str) -> tuple[Path, Optional[str]]:
    """Parse "path" or "path:layer" input specs."""
    path, sep, layer = spec.rpartition(":")
    if sep and path and not layer.startswith(("/", "\\")) and "/" not in layer:
        candidate = Path(path)
        if candidate.suffix == ".jsonl":
            return candidate, layer
    return Path(spec), None


def _load_side(spec: str, default_layer: Optional[str]) -> list[tuple[str, object, tuple[str, ...]]]:
    """Load one input side as (id, utterance-or-None, words) triples.

    Manifests (*.jsonl, optionally with a ":layer" suffix) contribute their
    chosen transcript layer; plain text files contribute one utterance per
    line with ids equal to the line index.
    """
    path, layer = _split_layer_spec(spec)
    if path.suffix == ".jsonl":
        layer = layer or default_layer
        if layer is None:
            raise DataError(f"{spec}: manifest inputs need a ':<layer>' suffix")
        manifest = read_manifest(path)
        out = []
        for utt in manifest.entries:
            text = utt.layer(layer)
            if text is None:
                raise MissingLayer(f"{path}: utterance {utt.id} has no {layer!r} layer")
            out.append((utt.id, utt, tokenize(text).words))
        return out
    lines = path.read_text(encoding="utf-8").splitlines()
    return [(str(i), None, tokenize(line).words) for i, line in enumerate(lines)]


def _pair_sides(ref_side, hyp_side, what="inputs"):
    ref_ids = [item[0] for item in ref_side]
    hyp_ids = {item[0] for item in hyp_side}
    if set(ref_ids) != hyp_ids or len(ref_side) != len(hyp_side):
        raise IdMismatch(f"{what} do not cover identical utterance ids")
    hyp_by_id = {item[0]: item for item in hyp_side}
    return [(ref_item, hyp_by_id[ref_item[0]]) for ref_item in ref_side]


def _emit(args, text: str) -> None:
    out = getattr(args, "output", None)
    if out:
        write_text_atomic(out, text)
    else:
        sys.stdout.write(text)


def _info(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


def _dump_json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


# ---------------------------------------------------------------- wer


def _cmd_wer(args) -> int:
    opts = _norm_opts(args)
    ref_side = _load_side(args.ref, None)
    hyp_side = _load_side(args.hyp, None)
    pairs = _pair_sides(ref_side, hyp_side, "--ref/--hyp")
    lines = []
    totals = None
    for (utt_id, _utt, ref_words), (_, _, hyp_words) in pairs:
        try:
            stats = compute_wer(ref_words, hyp_words, opts)
        except DataError as exc:
            raise DataError(f"utterance {utt_id}: {exc}") from None
        totals = stats if totals is None else totals + stats
        if args.per_utt:
            lines.append(json.dumps({"id": utt_id, **stats.to_dict()}, sort_keys=True))
    if totals is None:
        raise DataError("no utterances to score")
    lines.append(json.dumps({"corpus": totals.to_dict()}, sort_keys=True))
    _emit(args, "".join(line + "\n" for line in lines))
    _info(
        args,
        f"wer {totals.wer:.4f}  (S={totals.substitutions} D={totals.deletions} "
        f"I={totals.insertions} N={totals.ref_len}, {len(pairs)} utts)",
    )
    return 0


# ---------------------------------------------------------------- m2


def _cmd_m2_extract(args) -> int:
    orig_lines = Path(args.orig).read_text(encoding="utf-8").splitlines()
    cor_lines = Path(args.cor).read_text(encoding="utf-8").splitlines()
    if len(orig_lines) != len(cor_lines):
        raise DataError(
            f"--orig has {len(orig_lines)} lines, --cor has {len(cor_lines)}"
        )
    sets = [
        extract_edits(tokenize(orig).words, tokenize(cor).words)
        for orig, cor in zip(orig_lines, cor_lines)
    ]
    _emit(args, write_m2(sets))
    _info(args, f"extracted {sum(len(s.edits) for s in sets)} edits "
                f"from {len(sets)} sentence pairs")
    return 0


def _cmd_m2_score(args) -> int:
    ref_sets = parse_m2(Path(args.ref).read_text(encoding="utf-8"))
    hyp_sets = parse_m2(Path(args.hyp).read_text(encoding="utf-8"))
    if len(ref_sets) != len(hyp_sets):
        raise DataError(
            f"--ref has {len(ref_sets)} sentences, --hyp has {len(hyp_sets)}"
        )
    totals = None
    for ref_set, hyp_set in zip(ref_sets, hyp_sets):
        counts = match_edit_sets(ref_set, hyp_set)
        totals = counts if totals is None else totals + counts
    if totals is None:
        raise DataError("no sentences to score")
    score = prf(totals, args.beta)
    _emit(args, _dump_json({**totals.to_dict(), **score.to_dict()}))
    _info(
        args,
        f"P {score.precision:.4f}  R {score.recall:.4f}  "
        f"F{args.beta:g} {score.f_beta:.4f}",
    )
    return 0


# ---------------------------------------------------------------- feedback


def _feedback_items(args):
    sides = {
        "manual_fluent": _load_side(args.manual_fluent, "fluent"),
        "manual_gec": _load_side(args.manual_gec, "gec"),
        "auto_fluent": _load_side(args.auto_fluent, "fluent"),
        "auto_gec": _load_side(args.auto_gec, "gec"),
    }
    by_id = {}
    id_sets = []
    for name, side in sides.items():
        id_sets.append({item[0] for item in side})
        for utt_id, utt, words in side:
            by_id.setdefault(utt_id, {})[name] = (utt, words)
    if any(ids != id_sets[0] for ids in id_sets[1:]):
        raise IdMismatch("feedback inputs do not cover identical utterance ids")
    order = [item[0] for item in sides["manual_fluent"]]
    return [(utt_id, by_id[utt_id]) for utt_id in order]


def _cmd_feedback_eval(args) -> int:
    per_utt = []
    for utt_id, parts in _feedback_items(args):
        result = evaluate_feedback(
            parts["manual_fluent"][1],
            parts["manual_gec"][1],
            parts["auto_fluent"][1],
            parts["auto_gec"][1],
        )
        utt = parts["manual_fluent"][0]
        grade = utt.grade if utt is not None else None
        per_utt.append((utt_id, grade, result.counts))
    report = _build_feedback_report(per_utt, args.per_grade)
    _emit(args, _dump_json(report.to_dict()))
    overall = report.overall
    _info(
        args,
        f"feedback P {overall.prf.precision:.4f}  R {overall.prf.recall:.4f}  "
        f"F0.5 {overall.prf.f_beta:.4f}  "
        f"(tp={overall.counts.tp} fp={overall.counts.fp} fn={overall.counts.fn})",
    )
    return 0


def _build_feedback_report(per_utt, per_grade: bool) -> EvalReport:
    from .manifest import Utterance

    items = [
        (Utterance(id=utt_id, grade=grade), counts)
        for utt_id, grade, counts in per_utt
    ]
    report = aggregate(items)
    if not per_grade:
        report = EvalReport(report.overall, {}, report.significance)
    return report


# ---------------------------------------------------------------- segment


def _cmd_segment(args) -> int:
    manifest = read_manifest(args.manifest)
    out = segment_manifest(manifest)
    write_manifest(out, args.output)
    _info(args, f"segmented {len(manifest)} utterances into {len(out)} segments")
    return 0


# ---------------------------------------------------------------- pipeline


def _cmd_pipeline_pseudo_label(args) -> int:
    manifest = read_manifest(args.manifest)
    with contextlib.ExitStack() as stack:
        backends = {
            "disfluent_asr": stack.enter_context(open_backend(args.disfluent_backend)),
            "fluent_asr": stack.enter_context(open_backend(args.fluent_backend)),
            "gec": stack.enter_context(open_backend(args.gec_backend)),
        }
        out = pseudo_label(manifest, backends, workers=args.workers)
    _finish_pipeline(args, out)
    return 0


def _cmd_pipeline_cascade(args) -> int:
    manifest = read_manifest(args.manifest)
    with contextlib.ExitStack() as stack:
        backends = {
            "asr_fluent": stack.enter_context(open_backend(args.fluent_backend)),
            "gec": stack.enter_context(open_backend(args.gec_backend)),
        }
        out = cascade(
            manifest,
            backends,
            workers=args.workers,
            gec_prompt_source=args.gec_prompt_source,
        )
    _finish_pipeline(args, out)
    return 0


def _finish_pipeline(args, out: Manifest) -> None:
    write_manifest(out, args.output)
    if args.failures:
        write_text_atomic(
            args.failures,
            _dump_json([failure.to_obj() for failure in out.failures]),
        )
    for failure in out.failures:
        _info(args, f"failed {failure.utterance_id} in {failure.stage}: {failure.error}")
    _info(
        args,
        f"wrote {len(out)} utterances, {len(out.provenance)} stage records, "
        f"{len(out.failures)} failures",
    )


# ---------------------------------------------------------------- report


def _cmd_report(args) -> int:
    if args.mode == "wer":
        report = _report_wer(args)
    else:
        if args.significance:
            raise DataError("--significance requires --mode wer")
        per_utt = []
        for utt_id, parts in _feedback_items(args):
            result = evaluate_feedback(
                parts["manual_fluent"][1],
                parts["manual_gec"][1],
                parts["auto_fluent"][1],
                parts["auto_gec"][1],
            )
            utt = parts["manual_fluent"][0]
            grade = utt.grade if utt is not None else None
            per_utt.append((utt_id, grade, result.counts))
        report = _build_feedback_report(per_utt, args.per_grade)
    _emit(args, _dump_json(report.to_dict()))
    _info(args, _format_table(report))
    if args.csv:
        write_text_atomic(args.csv, _format_csv(report))
    return 0


def _report_wer(args) -> EvalReport:
    from .manifest import Utterance

    opts = _norm_opts(args)
    ref_side = _load_side(args.ref, None)
    hyp_side = _load_side(args.hyp, None)
    pairs = _pair_sides(ref_side, hyp_side, "--ref/--hyp")
    items = []
    for (utt_id, utt, ref_words), (_, _, hyp_words) in pairs:
        grade = utt.grade if utt is not None else None
        stats = compute_wer(ref_words, hyp_words, opts)
        items.append((Utterance(id=utt_id, grade=grade), stats))
    report = aggregate(items)
    if not args.per_grade:
        report = EvalReport(report.overall, {}, report.significance)
    if args.significance:
        baseline_side = _load_side(args.significance, None)
        ref_map = {utt_id: words for utt_id, _, words in ref_side}
        hyp_map = {utt_id: words for utt_id, _, words in hyp_side}
        base_map = {utt_id: words for utt_id, _, words in baseline_side}
        result = paired_bootstrap(
            ref_map,
            hyp_map,
            base_map,
            n_resamples=args.resamples,
            seed=args.seed,
            opts=opts,
        )
        report = EvalReport(
            report.overall,
            report.by_grade,
            significance=_with_baseline_name(result, args.significance),
        )
    return report


def _with_baseline_name(result, name: str):
    from dataclasses import replace

    return replace(result, baseline=name)


def _format_table(report: EvalReport) -> str:
    rows = [("group", "n", "wer", "precision", "recall", "f0.5")]

    def fmt(stats) -> tuple:
        return (
            f"{stats.wer.wer:.4f}" if stats.wer is not None else "-",
            f"{stats.prf.precision:.4f}" if stats.prf is not None else "-",
            f"{stats.prf.recall:.4f}" if stats.prf is not None else "-",
            f"{stats.prf.f_beta:.4f}" if stats.prf is not None else "-",
        )

    rows.append(("overall", str(report.overall.n_utterances)) + fmt(report.overall))
    for grade, stats in report.by_grade.items():
        rows.append((grade, str(stats.n_utterances)) + fmt(stats))
    widths = [max(len(row[col]) for row in rows) for col in range(len(rows[0]))]
    lines = [
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        for row in rows
    ]
    if report.significance is not None:
        sig = report.significance
        lines.append(
            f"paired bootstrap vs {sig.baseline}: p={sig.p_value:.6g} "
            f"(one-sided {sig.one_sided:.6g}, better {sig.better}, "
            f"seed {sig.seed}, {sig.n_resamples} resamples)"
        )
    return "\n".join(lines)


def _format_csv(report: EvalReport) -> str:
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["group", "n_utterances", "wer", "precision", "recall", "f_beta"])

    def row(name, stats):
        writer.writerow(
            [
                name,
                stats.n_utterances,
                f"{stats.wer.wer:.6f}" if stats.wer is not None else "",
                f"{stats.prf.precision:.6f}" if stats.prf is not None else "",
                f"{stats.prf.recall:.6f}" if stats.prf is not None else "",
                f"{stats.prf.f_beta:.6f}" if stats.prf is not None else "",
            ]
        )

    row("overall", report.overall)
    for grade, stats in report.by_grade.items():
        row(grade, stats)
    return buf.getvalue()


# ---------------------------------------------------------------- parser


def _add_norm_flags(parser) -> None:
    parser.add_argument("--ignore-case", action="store_true",
                        help="lowercase tokens before scoring")
    parser.add_argument("--strip-punct", action="store_true",
                        help="drop standalone punctuation tokens before scoring")


def _add_output_flag(parser, help="output file (default: stdout)") -> None:
    parser.add_argument("-o", "--output", help=help)


def _add_feedback_inputs(parser) -> None:
    parser.add_argument("--manual-fluent", required=True,
                        help="manifest[:layer] with manual fluent transcripts")
    parser.add_argument("--manual-gec", required=True,
                        help="manifest[:layer] with manual GEC transcripts")
    parser.add_argument("--auto-fluent", required=True,
                        help="manifest[:layer] with machine fluent transcripts")
    parser.add_argument("--auto-gec", required=True,
                        help="manifest[:layer] with machine GEC transcripts")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sgec", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sgec {__version__}")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker pool size for backend stages")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized procedures")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress stderr summaries")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wer", help="word error rate between two inputs")
    p.add_argument("--ref", required=True, help="reference text file or manifest:layer")
    p.add_argument("--hyp", required=True, help="hypothesis text file or manifest:layer")
    _add_norm_flags(p)
    p.add_argument("--per-utt", action="store_true", help="emit one JSON line per utterance")
    _add_output_flag(p)
    p.set_defaults(func=_cmd_wer)

    m2 = sub.add_parser("m2", help="edit extraction and scoring in M2 format")
    m2_sub = m2.add_subparsers(dest="m2_command", required=True)
    p = m2_sub.add_parser("extract", help="extract edits from parallel text")
    p.add_argument("--orig", required=True, help="original sentences, one per line")
    p.add_argument("--cor", required=True, help="corrected sentences, one per line")
    _add_output_flag(p, help="output .m2 file (default: stdout)")
    p.set_defaults(func=_cmd_m2_extract)
    p = m2_sub.add_parser("score", help="score a hypothesis M2 file against a reference")
    p.add_argument("--ref", required=True, help="reference .m2 file")
    p.add_argument("--hyp", required=True, help="hypothesis .m2 file")
    p.add_argument("--beta", type=float, default=0.5)
    _add_output_flag(p)
    p.set_defaults(func=_cmd_m2_score)

    p = sub.add_parser("feedback-eval", help="cross-source feedback evaluation")
    _add_feedback_inputs(p)
    p.add_argument("--per-grade", action="store_true", help="break scores down by CEFR grade")
    _add_output_flag(p)
    p.set_defaults(func=_cmd_feedback_eval)

    p = sub.add_parser("segment", help="split utterances on terminal punctuation")
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_segment)

    pipe = sub.add_parser("pipeline", help="pseudo-labelling and cascaded runs")
    pipe_sub = pipe.add_subparsers(dest="pipeline_command", required=True)
    p = pipe_sub.add_parser("pseudo-label", help="four-step pseudo-GEC labelling")
    p.add_argument("--manifest", required=True)
    p.add_argument("--disfluent-backend", required=True, help="backend spec for step 1")
    p.add_argument("--fluent-backend", required=True, help="backend spec for step 3")
    p.add_argument("--gec-backend", required=True, help="backend spec for step 4")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--failures", help="write per-utterance failure report JSON here")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_pipeline_pseudo_label)
    p = pipe_sub.add_parser("cascade", help="fluent ASR followed by text GEC")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fluent-backend", required=True)
    p.add_argument("--gec-backend", required=True)
    p.add_argument("--gec-prompt-source", help="layer to pass as decoding prompt")
    p.add_argument("--prompt-budget", type=int, default=DEFAULT_PROMPT_BUDGET)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--failures", help="write per-utterance failure report JSON here")
    p.add_argument("--workers", type=int, default=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_pipeline_cascade)

    p = sub.add_parser("report", help="aggregate scores with grade breakdowns")
    p.add_argument("--mode", choices=("wer", "feedback"), required=True)
    p.add_argument("--ref", help="reference input (mode wer)")
    p.add_argument("--hyp", help="hypothesis input (mode wer)")
    _add_feedback_inputs_optional(p)
    _add_norm_flags(p)
    p.add_argument("--per-grade", action="store_true")
    p.add_argument("--significance", help="baseline hypothesis input for the bootstrap test")
    p.add_argument("--resamples", type=int, default=10000)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--csv", help="also write a CSV breakdown here")
    _add_output_flag(p)
    p.set_defaults(func=_cmd_report)

    return parser


def _add_feedback_inputs_optional(parser) -> None:
    for flag in ("--manual-fluent", "--manual-gec", "--auto-fluent", "--auto-gec"):
        parser.add_argument(flag, help="manifest[:layer] (mode feedback)")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "report":
        needed = (
            ("ref", "hyp") if args.mode == "wer"
            else ("manual_fluent", "manual_gec", "auto_fluent", "auto_gec")
        )
        missing = [name for name in needed if getattr(args, name) is None]
        if missing:
            parser.error(
                f"--mode {args.mode} requires "
                + ", ".join("--" + name.replace("_", "-") for name in missing)
            )
    try:
        return args.func(args)
    except DataError as exc:
        print(f"sgec: data error: {exc}", file=sys.stderr)
        return 2
    except BackendFailure as exc:
        print(f"sgec: backend error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"sgec: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
