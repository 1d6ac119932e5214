import itertools
import random

import pytest
from hypothesis import given
import hypothesis.strategies as st

from sgec.edits import (
    Edit,
    EditClass,
    EditSet,
    NOOP_LINE,
    apply_edits,
    extract_edits,
    parse_m2,
    write_m2,
)
from sgec.errors import MalformedM2, OverlappingEdits, SpanOutOfBounds


def test_edit_class_derivation():
    assert Edit(1, 1, ("the",)).op_class is EditClass.MISSING
    assert Edit(1, 2, ()).op_class is EditClass.UNNECESSARY
    assert Edit(1, 2, ("have",)).op_class is EditClass.REPLACEMENT


def test_edit_rejects_reversed_span():
    with pytest.raises(ValueError):
        Edit(3, 2, ("x",))


def test_degenerate_edit_cannot_be_applied_or_parsed():
    degenerate = EditSet(("a", "b"), (Edit(1, 1, ()),))
    with pytest.raises(OverlappingEdits):
        apply_edits(degenerate)
    with pytest.raises(MalformedM2):
        parse_m2("S a b\nA 1 1|||M|||-NONE-|||REQUIRED|||-NONE-|||0\n\n")


def test_extract_spec_examples():
    got = extract_edits("I has a cat".split(), "I have a cat".split())
    assert [(e.start, e.end, e.correction) for e in got.edits] == [(1, 2, ("have",))]

    assert extract_edits("a b".split(), "a b".split()).edits == ()

    got = extract_edits("he go to school".split(), "he goes to the school".split())
    assert [(e.start, e.end, e.correction, e.op_class) for e in got.edits] == [
        (1, 2, ("goes",), EditClass.REPLACEMENT),
        (3, 3, ("the",), EditClass.MISSING),
    ]


def test_extract_merges_adjacent_ops_into_phrases():
    got = extract_edits("she said that it ok".split(), "she said it was ok".split())
    for first, second in zip(got.edits, got.edits[1:]):
        assert second.start > first.end  # a match separates any two edits


def test_apply_edits_examples():
    source = tuple("he go to school".split())
    target = tuple("he goes to the school".split())
    assert apply_edits(extract_edits(source, target)) == target

    assert apply_edits(EditSet(source, ())) == source

    got = apply_edits(EditSet(("ok",), (Edit(0, 0, ("Well",)),)))
    assert got == ("Well", "ok")


def test_apply_edits_validates():
    source = tuple("a b c".split())
    with pytest.raises(SpanOutOfBounds):
        apply_edits(EditSet(source, (Edit(2, 4, ("x",)),)))
    with pytest.raises(OverlappingEdits):
        apply_edits(EditSet(source, (Edit(0, 2, ("x",)), Edit(1, 3, ("y",)))))
    with pytest.raises(OverlappingEdits):
        apply_edits(EditSet(source, (Edit(1, 1, ("x",)), Edit(1, 1, ("y",)))))


def test_insertion_before_replaced_span_is_well_defined():
    source = tuple("a b".split())
    got = apply_edits(EditSet(source, (Edit(0, 0, ("X",)), Edit(0, 1, ("Y",)))))
    assert got == ("X", "Y", "b")


def test_round_trip_exhaustive_tiny():
    vocab = ["a", "b", "c"]
    seqs = [list(t) for n in range(4) for t in itertools.product(vocab, repeat=n)]
    for source in seqs:
        for target in seqs:
            assert apply_edits(extract_edits(source, target)) == tuple(target)


@given(
    st.lists(st.sampled_from("abcde"), max_size=12),
    st.lists(st.sampled_from("abcde"), max_size=12),
)
def test_round_trip_random(source, target):
    assert apply_edits(extract_edits(source, target)) == tuple(target)


@given(
    st.lists(st.sampled_from("abc"), max_size=8),
    st.lists(st.sampled_from("abc"), max_size=8),
)
def test_edit_minimality(source, target):
    # each phrase edit accounts for exactly its own share of the minimal cost
    from sgec.align import levenshtein_align

    edit_set = extract_edits(source, target)
    total = levenshtein_align(source, target).total_cost
    per_edit = sum(
        levenshtein_align(edit_set.source[e.start : e.end], e.correction).total_cost
        for e in edit_set.edits
    )
    assert per_edit == total
    for edit in edit_set.edits:
        assert edit_set.source[edit.start : edit.end] != edit.correction


def test_write_m2_spec_example():
    edit_set = extract_edits("I has a cat".split(), "I have a cat".split())
    assert write_m2([edit_set]) == (
        "S I has a cat\nA 1 2|||R|||have|||REQUIRED|||-NONE-|||0\n\n"
    )


def test_write_m2_noop():
    assert write_m2([EditSet(("I", "agree"), ())]) == (
        "S I agree\n" + NOOP_LINE + "\n\n"
    )


def test_write_m2_deletion_uses_none_marker():
    edit_set = EditSet(("a", "b"), (Edit(1, 2, ()),))
    assert "A 1 2|||U|||-NONE-|||REQUIRED|||-NONE-|||0" in write_m2([edit_set])


def test_parse_m2_empty():
    assert parse_m2("") == []


def test_parse_m2_round_trip():
    sets = [
        extract_edits("I has a cat".split(), "I have a cat".split()),
        EditSet(("I", "agree"), ()),
        extract_edits("he go to school".split(), "he goes to the school".split()),
    ]
    text = write_m2(sets)
    assert parse_m2(text) == sets
    assert write_m2(parse_m2(text)) == text


def test_parse_m2_keeps_annotator_id():
    text = "S a b\nA 0 1|||R|||x|||REQUIRED|||-NONE-|||3\n\n"
    parsed = parse_m2(text)
    assert parsed[0].edits[0].annotator == 3
    assert write_m2(parsed) == text


def test_parse_m2_rejects_reversed_span():
    with pytest.raises(MalformedM2) as err:
        parse_m2("S a b c\nA 2 1|||R|||x|||REQUIRED|||-NONE-|||0\n\n")
    assert err.value.line == 2


def test_parse_m2_rejects_garbage():
    with pytest.raises(MalformedM2):
        parse_m2("not a valid line\n")
    with pytest.raises(MalformedM2):
        parse_m2("A 0 1|||R|||x|||REQUIRED|||-NONE-|||0\n")  # A before S
    with pytest.raises(MalformedM2):
        parse_m2("S a\nA 0 5|||R|||x|||REQUIRED|||-NONE-|||0\n\n")  # out of bounds
    with pytest.raises(MalformedM2):
        parse_m2("S a b\nA zero 1|||R|||x|||REQUIRED|||-NONE-|||0\n\n")


def test_parse_m2_rejects_colliding_insertions():
    text = (
        "S a b\n"
        "A 1 1|||M|||x|||REQUIRED|||-NONE-|||0\n"
        "A 1 1|||M|||y|||REQUIRED|||-NONE-|||0\n\n"
    )
    with pytest.raises(MalformedM2):
        parse_m2(text)


def random_edit_set(rng: random.Random) -> EditSet:
    vocab = ["the", "a", "cat", "sat", "dog", "ran", "it's", "so"]
    source = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
    edits = []
    cursor = 0
    last_insert_at = -1
    while cursor <= len(source):
        leave = rng.random()
        if leave < 0.55:
            cursor += 1
            continue
        start = cursor
        end = rng.randint(start, len(source))
        correction = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 2)))
        if start == end:
            if not correction or start == last_insert_at:
                cursor += 1
                continue
            last_insert_at = start
        edits.append(Edit(start, end, correction, annotator=rng.choice((0, 0, 1))))
        cursor = end + 1
    return EditSet(source, tuple(edits))


def test_format_round_trip_random_sets():
    rng = random.Random(99)
    sets = [random_edit_set(rng) for _ in range(200)]
    text = write_m2(sets)
    assert parse_m2(text) == sets
    assert write_m2(parse_m2(text)) == text
