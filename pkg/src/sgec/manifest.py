"""Utterance and manifest data model plus JSONL persistence.

A manifest file is UTF-8 JSONL with one utterance object per line (fields:
id, audio, grade, layers, timestamps; unknown fields are preserved). When a
manifest carries pipeline provenance, it is serialized as a single leading
meta line ``{"provenance": [...]}`` so the file stays self-contained while
utterance lines keep exactly the documented schema.
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Optional

from .errors import MalformedManifest

GRADES = ("A2", "B1", "B2", "C")
UNGRADED = "ungraded"

LAYER_DISFLUENT = "disfluent"
LAYER_FLUENT = "fluent"
LAYER_GEC = "gec"
LAYER_PSEUDO_GEC = "pseudo_gec"

_KNOWN_FIELDS = ("id", "audio", "grade", "layers", "timestamps")


@dataclass(frozen=True)
class Utterance:
    """One audio response segment with layered transcripts and metadata."""

    id: str
    audio: Optional[str] = None
    grade: Optional[str] = None
    layers: dict[str, str] = field(default_factory=dict)
    timestamps: Optional[tuple[tuple[float, float], ...]] = None
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise MalformedManifest("utterance id must be non-empty")
        if self.grade is not None and self.grade not in GRADES:
            raise MalformedManifest(
                f"{self.id}: grade {self.grade!r} not one of {GRADES}"
            )
        if self.timestamps is not None:
            coerced = tuple(
                (float(start), float(end)) for start, end in self.timestamps
            )
            prev_start = 0.0
            for start, end in coerced:
                if start < 0 or end < start or start < prev_start:
                    raise MalformedManifest(
                        f"{self.id}: timestamps must be non-negative and "
                        f"non-decreasing"
                    )
                prev_start = start
            object.__setattr__(self, "timestamps", coerced)

    @property
    def grade_bucket(self) -> str:
        return self.grade if self.grade is not None else UNGRADED

    def layer(self, name: str) -> Optional[str]:
        return self.layers.get(name)

    def with_layer(self, name: str, text: str) -> "Utterance":
        return replace(self, layers={**self.layers, name: text})

    def to_obj(self) -> dict:
        obj: dict[str, Any] = dict(self.extra)
        obj["id"] = self.id
        obj["layers"] = dict(self.layers)
        if self.audio is not None:
            obj["audio"] = self.audio
        if self.grade is not None:
            obj["grade"] = self.grade
        if self.timestamps is not None:
            obj["timestamps"] = [[start, end] for start, end in self.timestamps]
        return obj

    @classmethod
    def from_obj(cls, obj: dict, where: str = "utterance") -> "Utterance":
        if not isinstance(obj, dict) or "id" not in obj:
            raise MalformedManifest(f"{where}: object with an 'id' field expected")
        layers = obj.get("layers") or {}
        if not isinstance(layers, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in layers.items()
        ):
            raise MalformedManifest(f"{where}: 'layers' must map names to text")
        raw_ts = obj.get("timestamps")
        timestamps = None
        if raw_ts is not None:
            try:
                timestamps = tuple((float(s), float(e)) for s, e in raw_ts)
            except (TypeError, ValueError):
                raise MalformedManifest(
                    f"{where}: 'timestamps' must be [start, end] pairs"
                ) from None
        extra = {k: v for k, v in obj.items() if k not in _KNOWN_FIELDS}
        return cls(
            id=str(obj["id"]),
            audio=obj.get("audio"),
            grade=obj.get("grade"),
            layers=dict(layers),
            timestamps=timestamps,
            extra=extra,
        )


@dataclass(frozen=True)
class ProvenanceRecord:
    stage: str
    backend: str
    elapsed_s: float = 0.0

    def to_obj(self) -> dict:
        # elapsed wall time stays in memory only: serialized manifests must
        # be byte-identical across reruns of the same inputs
        return {"stage": self.stage, "backend": self.backend}


@dataclass(frozen=True)
class StageFailure:
    utterance_id: str
    stage: str
    error: str

    def to_obj(self) -> dict:
        return {"id": self.utterance_id, "stage": self.stage, "error": self.error}


@dataclass(frozen=True)
class Manifest:
    entries: tuple[Utterance, ...] = ()
    provenance: tuple[ProvenanceRecord, ...] = ()
    failures: tuple[StageFailure, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "failures", tuple(self.failures))
        seen = set()
        for utt in self.entries:
            if utt.id in seen:
                raise MalformedManifest(f"duplicate utterance id {utt.id!r}")
            seen.add(utt.id)

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> tuple[str, ...]:
        return tuple(utt.id for utt in self.entries)

    def with_entries(self, entries: Iterable[Utterance]) -> "Manifest":
        return replace(self, entries=tuple(entries))

    def with_provenance(self, record: ProvenanceRecord) -> "Manifest":
        return replace(self, provenance=self.provenance + (record,))

    def with_failures(self, failures: Iterable[StageFailure]) -> "Manifest":
        return replace(self, failures=self.failures + tuple(failures))


def _dump_line(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def dumps_manifest(manifest: Manifest) -> str:
    lines = []
    if manifest.provenance:
        lines.append(
            _dump_line({"provenance": [rec.to_obj() for rec in manifest.provenance]})
        )
    lines.extend(_dump_line(utt.to_obj()) for utt in manifest.entries)
    return "".join(line + "\n" for line in lines)


def loads_manifest(text: str, where: str = "manifest") -> Manifest:
    entries: list[Utterance] = []
    provenance: list[ProvenanceRecord] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedManifest(f"{where} line {line_no}: {exc.msg}") from None
        if isinstance(obj, dict) and "provenance" in obj and "id" not in obj:
            for rec in obj["provenance"]:
                provenance.append(
                    ProvenanceRecord(str(rec.get("stage")), str(rec.get("backend")))
                )
            continue
        entries.append(Utterance.from_obj(obj, where=f"{where} line {line_no}"))
    return Manifest(tuple(entries), tuple(provenance))


def read_manifest(path: str | Path) -> Manifest:
    return loads_manifest(Path(path).read_text(encoding="utf-8"), where=str(path))


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write atomically: temp file in the target directory, then rename."""
    write_text_atomic(path, dumps_manifest(manifest))


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(
        prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or "."
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise
