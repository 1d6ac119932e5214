"""Tokenization, truecasing, and scoring-time normalization of transcripts."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

# Punctuation detached from word boundaries during tokenization.
DETACHED_PUNCTUATION = frozenset('.,?!;:"()')

# Marks that terminate a sentence, for truecasing and segmentation alike.
SENTENCE_TERMINALS = frozenset(".?!")

_CHUNK_RE = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    """One token together with its character span in the source text."""

    text: str
    offset: int
    length: int


@dataclass(frozen=True)
class TokenSequence:
    """An ordered run of tokens with strictly increasing source spans."""

    tokens: tuple[Token, ...] = ()

    def __post_init__(self):
        prev_end = -1
        for tok in self.tokens:
            if not tok.text or any(ch.isspace() for ch in tok.text):
                raise ValueError(f"invalid token text: {tok.text!r}")
            if tok.offset < 0 or tok.length <= 0:
                raise ValueError(f"invalid token span: {tok!r}")
            if tok.offset < prev_end:
                raise ValueError(f"token spans overlap at offset {tok.offset}")
            prev_end = tok.offset + tok.length

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "TokenSequence":
        """Build a sequence from bare words, synthesizing space-joined spans."""
        tokens = []
        offset = 0
        for word in words:
            tokens.append(Token(word, offset, len(word)))
            offset += len(word) + 1
        return cls(tuple(tokens))

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(tok.text for tok in self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)


# Most scoring operations only care about the word strings; they accept
# either a TokenSequence or any plain sequence of strings.
Words = Union[TokenSequence, Sequence[str]]


def word_tuple(seq: Words) -> tuple[str, ...]:
    if isinstance(seq, TokenSequence):
        return seq.words
    return tuple(seq)


@dataclass(frozen=True)
class NormalizationOptions:
    """Scoring-time normalization flags; both default off (case-sensitive,
    punctuation tokens count)."""

    ignore_case: bool = False
    strip_punctuation: bool = False


def tokenize(text: str) -> TokenSequence:
    """Split on whitespace, then detach leading/trailing punctuation.

    Word-internal apostrophes and hyphens stay attached, so "don't" is one
    token. Detached marks become tokens of their own, keeping token indices
    stable for edit annotation.
    """
    tokens: list[Token] = []
    for match in _CHUNK_RE.finditer(text):
        chunk = match.group()
        start = match.start()
        lo, hi = 0, len(chunk)
        leading: list[Token] = []
        while lo < hi and chunk[lo] in DETACHED_PUNCTUATION:
            leading.append(Token(chunk[lo], start + lo, 1))
            lo += 1
        trailing: list[Token] = []
        while hi > lo and chunk[hi - 1] in DETACHED_PUNCTUATION:
            trailing.append(Token(chunk[hi - 1], start + hi - 1, 1))
            hi -= 1
        tokens.extend(leading)
        if hi > lo:
            tokens.append(Token(chunk[lo:hi], start + lo, hi - lo))
        tokens.extend(reversed(trailing))
    return TokenSequence(tuple(tokens))


def truecase(text: str) -> str:
    """Capitalize the first alphabetic character of each sentence.

    Sentence boundaries are the terminal marks ``. ? !``; everything else is
    left untouched, which makes the operation idempotent.
    """
    out = list(text)
    at_sentence_start = True
    for i, ch in enumerate(out):
        if at_sentence_start and ch.isalpha():
            out[i] = ch.upper()
            at_sentence_start = False
        elif ch in SENTENCE_TERMINALS:
            at_sentence_start = True
    return "".join(out)


def is_punctuation_token(text: str) -> bool:
    """A token counts as punctuation when it carries no letter or digit."""
    return not any(ch.isalnum() for ch in text)


def normalize(seq: TokenSequence, opts: NormalizationOptions) -> TokenSequence:
    """Apply lowercasing and/or punctuation-token removal, preserving spans."""
    if not opts.ignore_case and not opts.strip_punctuation:
        return seq
    tokens = []
    for tok in seq.tokens:
        if opts.strip_punctuation and is_punctuation_token(tok.text):
            continue
        text = tok.text.lower() if opts.ignore_case else tok.text
        tokens.append(Token(text, tok.offset, tok.length))
    return TokenSequence(tuple(tokens))


def normalize_words(seq: Words, opts: NormalizationOptions) -> tuple[str, ...]:
    """Same normalization on bare word strings."""
    words = word_tuple(seq)
    if opts.strip_punctuation:
        words = tuple(w for w in words if not is_punctuation_token(w))
    if opts.ignore_case:
        words = tuple(w.lower() for w in words)
    return words
