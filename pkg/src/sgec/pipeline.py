"""Pseudo-labelling pipeline: segmentation, prompt assembly, stage execution.

The four-step labelling process turns a manifest of raw audio references
into segmented utterances carrying disfluent, fluent, and pseudo-GEC
transcript layers, each step served by a pluggable backend.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .backends import Backend, BackendRequest, BackendResponse
from .errors import BackendError, MissingLayer
from .manifest import (
    LAYER_DISFLUENT,
    LAYER_FLUENT,
    LAYER_GEC,
    LAYER_PSEUDO_GEC,
    Manifest,
    ProvenanceRecord,
    StageFailure,
    Utterance,
)
from .textnorm import SENTENCE_TERMINALS, truecase

DEFAULT_PROMPT_BUDGET = 448


@dataclass(frozen=True)
class StageSpec:
    name: str
    output_layer: str
    needs_audio: bool = False
    input_layer: Optional[str] = None  # layer that must exist and is sent as text
    text_layer: Optional[str] = None  # layer sent as text when present (optional)
    captures_timestamps: bool = False


STAGES: dict[str, StageSpec] = {
    "asr_disfluent": StageSpec(
        "asr_disfluent",
        output_layer=LAYER_DISFLUENT,
        needs_audio=True,
        captures_timestamps=True,
    ),
    "asr_fluent": StageSpec(
        "asr_fluent",
        output_layer=LAYER_FLUENT,
        needs_audio=True,
        text_layer=LAYER_DISFLUENT,
    ),
    "gec": StageSpec(
        "gec",
        output_layer=LAYER_GEC,
        input_layer=LAYER_FLUENT,
    ),
}


def build_prompt(fluent_text: str, max_tokens: int = DEFAULT_PROMPT_BUDGET) -> Optional[str]:
    """Keep the last max_tokens whitespace tokens of the fluent transcript.

    Truncation keeps the suffix so the most recent context survives; empty
    text yields no prompt at all.
    """
    if max_tokens <= 0:
        raise ValueError("max_tokens must be positive")
    words = fluent_text.split()
    if not words:
        return None
    if len(words) <= max_tokens:
        return fluent_text
    return " ".join(words[-max_tokens:])


def segment(utt: Utterance) -> list[Utterance]:
    """Split one utterance into per-sentence children on ``. ? !``.

    Child k gets id ``<parent>-<k>``, the k-th text slice, and the k-th
    timestamp span when the parent carries one. Trailing text without a
    terminal mark forms a final segment.
    """
    text = utt.layer(LAYER_DISFLUENT)
    if text is None:
        raise MissingLayer(f"{utt.id}: no {LAYER_DISFLUENT!r} layer to segment")
    pieces: list[str] = []
    buf: list[str] = []
    for ch in text:
        buf.append(ch)
        if ch in SENTENCE_TERMINALS:
            pieces.append("".join(buf).strip())
            buf = []
    tail = "".join(buf).strip()
    if tail:
        pieces.append(tail)
    children = []
    for k, piece in enumerate(pieces):
        span = None
        if utt.timestamps is not None and k < len(utt.timestamps):
            span = (utt.timestamps[k],)
        children.append(
            Utterance(
                id=f"{utt.id}-{k}",
                audio=utt.audio,
                grade=utt.grade,
                layers={LAYER_DISFLUENT: piece},
                timestamps=span,
                extra=dict(utt.extra),
            )
        )
    return children


def segment_manifest(manifest: Manifest) -> Manifest:
    entries: list[Utterance] = []
    start = time.perf_counter()
    for utt in manifest.entries:
        entries.extend(segment(utt))
    record = ProvenanceRecord("segment", "toolkit", time.perf_counter() - start)
    return manifest.with_entries(entries).with_provenance(record)


def _stage_request(
    spec: StageSpec,
    utt: Utterance,
    prompt_source: Optional[str],
    prompt_budget: int,
) -> BackendRequest:
    text = None
    if spec.input_layer is not None:
        text = utt.layer(spec.input_layer)
    elif spec.text_layer is not None:
        text = utt.layer(spec.text_layer)
    prompt = None
    if prompt_source is not None:
        prompt = build_prompt(utt.layer(prompt_source) or "", prompt_budget)
    return BackendRequest(
        id=utt.id,
        audio=utt.audio if spec.needs_audio else None,
        text=text,
        prompt=prompt,
    )


def run_stage(
    stage: str,
    manifest: Manifest,
    backend: Backend,
    prompt_source: Optional[str] = None,
    *,
    output_layer: Optional[str] = None,
    workers: int = 1,
    prompt_budget: int = DEFAULT_PROMPT_BUDGET,
) -> Manifest:
    """Invoke the backend once per utterance and fill the stage output layer.

    Per-utterance backend errors are recorded as failures and skipped (the
    entry keeps its existing layers); only BackendUnavailable aborts the
    stage. Responses merge in manifest order, so output is deterministic
    regardless of worker completion order.
    """
    spec = STAGES[stage]
    out_layer = output_layer or spec.output_layer
    for utt in manifest.entries:
        if spec.needs_audio and utt.audio is None:
            raise MissingLayer(f"{utt.id}: stage {stage} needs an audio reference")
        if spec.input_layer is not None and utt.layer(spec.input_layer) is None:
            raise MissingLayer(
                f"{utt.id}: stage {stage} needs the {spec.input_layer!r} layer"
            )
        if prompt_source is not None and utt.layer(prompt_source) is None:
            raise MissingLayer(
                f"{utt.id}: prompt source layer {prompt_source!r} missing"
            )

    def call(utt: Utterance) -> BackendResponse | BackendError:
        request = _stage_request(spec, utt, prompt_source, prompt_budget)
        try:
            return backend.run(request)
        except BackendError as exc:
            return exc

    start = time.perf_counter()
    pool_size = workers if backend.concurrency <= 0 else min(workers, backend.concurrency)
    if pool_size > 1 and len(manifest.entries) > 1:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            results = list(pool.map(call, manifest.entries))
    else:
        results = [call(utt) for utt in manifest.entries]
    elapsed = time.perf_counter() - start

    entries: list[Utterance] = []
    failures: list[StageFailure] = []
    for utt, result in zip(manifest.entries, results):
        if isinstance(result, BackendError):
            failures.append(StageFailure(utt.id, stage, result.message))
            entries.append(utt)
            continue
        updated = utt.with_layer(out_layer, result.text)
        if spec.captures_timestamps and result.sentences is not None:
            updated = replace(
                updated,
                timestamps=tuple((s.start, s.end) for s in result.sentences),
            )
        entries.append(updated)
    record = ProvenanceRecord(stage, backend.descriptor, elapsed)
    return (
        manifest.with_entries(entries)
        .with_provenance(record)
        .with_failures(failures)
    )


def pseudo_label(
    manifest: Manifest,
    backends: Mapping[str, Backend],
    *,
    workers: int = 1,
) -> Manifest:
    """Four-step automatic labelling of unlabelled audio.

    Step 1 transcribes with disfluencies (truecased, with sentence
    timestamps), step 2 segments on terminal punctuation, step 3 produces
    fluent transcriptions for the segments, and step 4 applies GEC to the
    fluent text, writing the pseudo_gec layer.
    """
    out = run_stage("asr_disfluent", manifest, backends["disfluent_asr"], workers=workers)
    out = out.with_entries(
        utt.with_layer(LAYER_DISFLUENT, truecase(utt.layer(LAYER_DISFLUENT)))
        if utt.layer(LAYER_DISFLUENT) is not None
        else utt
        for utt in out.entries
    )
    out = segment_manifest(out)
    out = run_stage("asr_fluent", out, backends["fluent_asr"], workers=workers)
    out = run_stage(
        "gec",
        out,
        backends["gec"],
        output_layer=LAYER_PSEUDO_GEC,
        workers=workers,
    )
    return out


def cascade(
    manifest: Manifest,
    backends: Mapping[str, Backend],
    *,
    workers: int = 1,
    gec_prompt_source: Optional[str] = None,
) -> Manifest:
    """Cascaded baseline: fluent ASR followed by text GEC."""
    out = run_stage("asr_fluent", manifest, backends["asr_fluent"], workers=workers)
    out = run_stage(
        "gec",
        out,
        backends["gec"],
        prompt_source=gec_prompt_source,
        workers=workers,
    )
    return out
