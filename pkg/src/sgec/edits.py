"""Phrase-level edit extraction, edit application, and the M2 file format."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .align import OpKind, levenshtein_align
from .errors import MalformedM2, OverlappingEdits, SpanOutOfBounds
from .textnorm import Words, word_tuple

NONE_MARKER = "-NONE-"
NOOP_LINE = "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0"


class EditClass(Enum):
    MISSING = "M"
    UNNECESSARY = "U"
    REPLACEMENT = "R"


@dataclass(frozen=True)
class Edit:
    """A span correction over a source token sequence.

    ``start == end`` is a pure insertion (class Missing) and requires a
    non-empty correction; an empty correction is a pure deletion (class
    Unnecessary) and requires a non-empty span.
    """

    start: int
    end: int
    correction: tuple[str, ...] = ()
    annotator: int = 0

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"invalid edit span ({self.start}, {self.end})")

    @property
    def is_degenerate(self) -> bool:
        """True for a collapsed no-op span: nothing removed, nothing added.

        Such edits never appear in extracted or parsed sets; span projection
        produces them when a hypothesis edit has no counterpart tokens in
        the target source, so that it still counts as a false positive.
        """
        return self.start == self.end and not self.correction

    @property
    def op_class(self) -> EditClass:
        if self.start == self.end:
            return EditClass.MISSING
        if not self.correction:
            return EditClass.UNNECESSARY
        return EditClass.REPLACEMENT

    @property
    def key(self) -> tuple[int, int, tuple[str, ...]]:
        """Identity used for M2 matching: span plus correction tokens."""
        return (self.start, self.end, self.correction)


@dataclass(frozen=True)
class EditSet:
    """Edits over one source sentence, kept sorted by (start, end)."""

    source: tuple[str, ...]
    edits: tuple[Edit, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.edits, key=lambda e: (e.start, e.end)))
        object.__setattr__(self, "source", word_tuple(self.source))
        object.__setattr__(self, "edits", ordered)

    def validate(self) -> "EditSet":
        """Check span bounds and overlap; returns self so calls can chain."""
        prev: Edit | None = None
        for edit in self.edits:
            if edit.is_degenerate:
                raise OverlappingEdits(
                    f"edit at index {edit.start} neither removes nor adds tokens"
                )
            if edit.end > len(self.source):
                raise SpanOutOfBounds(
                    f"edit span ({edit.start}, {edit.end}) exceeds source "
                    f"length {len(self.source)}"
                )
            if prev is not None:
                if edit.start < prev.end:
                    raise OverlappingEdits(
                        f"edits ({prev.start}, {prev.end}) and "
                        f"({edit.start}, {edit.end}) overlap"
                    )
                if prev.start == prev.end == edit.start == edit.end:
                    raise OverlappingEdits(
                        f"two insertions at index {edit.start}"
                    )
            prev = edit
        return self


def extract_edits(source: Words, target: Words) -> EditSet:
    """Merge every maximal run of non-match alignment ops into one edit.

    Match ops delimit edits, so the extraction is the "all-merge" phrase
    variant: contiguous substitutions, deletions and insertions collapse
    into a single span correction.
    """
    src, tgt = word_tuple(source), word_tuple(target)
    path = levenshtein_align(src, tgt)
    edits: list[Edit] = []
    run_start: int | None = None
    correction: list[str] = []
    ref_cursor = 0
    for op in path.ops:
        if op.kind is OpKind.MATCH:
            if run_start is not None:
                edits.append(Edit(run_start, ref_cursor, tuple(correction)))
                run_start, correction = None, []
            ref_cursor += 1
            continue
        if run_start is None:
            run_start = ref_cursor
        if op.kind is not OpKind.INSERT:
            ref_cursor += 1
        if op.hyp_index is not None:
            correction.append(tgt[op.hyp_index])
    if run_start is not None:
        edits.append(Edit(run_start, ref_cursor, tuple(correction)))
    return EditSet(src, tuple(edits))


def apply_edits(edit_set: EditSet) -> tuple[str, ...]:
    """Replace each span with its correction, right to left."""
    edit_set.validate()
    out = list(edit_set.source)
    for edit in sorted(edit_set.edits, key=lambda e: (e.start, e.end), reverse=True):
        out[edit.start : edit.end] = edit.correction
    return tuple(out)


def write_m2(sets: list[EditSet]) -> str:
    """Serialize edit sets in the M2 interchange format (LF, UTF-8).

    A set with no edits gets the conventional noop annotation line so that
    scorers can tell "no corrections" from a truncated file.
    """
    lines: list[str] = []
    for edit_set in sets:
        source = " ".join(edit_set.source)
        lines.append(f"S {source}" if source else "S")
        if not edit_set.edits:
            lines.append(NOOP_LINE)
        for edit in edit_set.edits:
            correction = " ".join(edit.correction) or NONE_MARKER
            lines.append(
                f"A {edit.start} {edit.end}|||{edit.op_class.value}"
                f"|||{correction}|||REQUIRED|||{NONE_MARKER}|||{edit.annotator}"
            )
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def _parse_edit_line(line: str, line_no: int) -> Edit | None:
    body = line[2:]
    fields = body.split("|||")
    if len(fields) < 3:
        raise MalformedM2("annotation line needs at least 3 |||-fields", line_no)
    span = fields[0].split()
    if len(span) != 2:
        raise MalformedM2(f"bad span field {fields[0]!r}", line_no)
    try:
        start, end = int(span[0]), int(span[1])
    except ValueError:
        raise MalformedM2(f"non-integer span {fields[0]!r}", line_no) from None
    if fields[1] == "noop" or (start, end) == (-1, -1):
        return None
    correction_field = fields[2]
    correction = () if correction_field == NONE_MARKER else tuple(correction_field.split())
    annotator = 0
    if len(fields) >= 6:
        try:
            annotator = int(fields[5])
        except ValueError:
            raise MalformedM2(f"non-integer annotator id {fields[5]!r}", line_no) from None
    try:
        return Edit(start, end, correction, annotator)
    except ValueError as exc:
        raise MalformedM2(str(exc), line_no) from None


def parse_m2(text: str) -> list[EditSet]:
    """Inverse of write_m2; raises MalformedM2 with the offending line number."""
    sets: list[EditSet] = []
    source: tuple[str, ...] | None = None
    edits: list[Edit] = []
    start_line = 0

    def close(line_no: int):
        nonlocal source, edits
        if source is None:
            return
        try:
            sets.append(EditSet(source, tuple(edits)).validate())
        except (SpanOutOfBounds, OverlappingEdits) as exc:
            raise MalformedM2(str(exc), start_line) from None
        source, edits = None, []

    for line_no, line in enumerate(text.split("\n"), start=1):
        stripped = line.rstrip("\r")
        if not stripped.strip():
            close(line_no)
            continue
        if stripped == "S" or stripped.startswith("S "):
            close(line_no)
            source = tuple(stripped[2:].split())
            start_line = line_no
        elif stripped.startswith("A "):
            if source is None:
                raise MalformedM2("annotation line before any source line", line_no)
            edit = _parse_edit_line(stripped, line_no)
            if edit is not None:
                edits.append(edit)
        else:
            raise MalformedM2(f"unrecognized line {stripped!r}", line_no)
    close(len(text.split("\n")) + 1)
    return sets
