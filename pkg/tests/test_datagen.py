"""Stream generators and the stream file format."""

from __future__ import annotations

import collections

import pytest

from joinsample.config import packaged_query
from joinsample.datagen import (er_events, fk_events, powerlaw_events,
                                read_stream, uniform_events, write_stream)
from joinsample.errors import ParseError
from joinsample.fuse import FkPipeline


def test_uniform_shape_and_determinism():
    q = packaged_query("line3")
    ev = uniform_events(q, 90, dom=6, seed=11)
    assert len(ev) == 90
    per = collections.Counter(rel for rel, _ in ev)
    assert per == {"R1": 30, "R2": 30, "R3": 30}
    for rel, values in ev:
        assert len(values) == len(q.schemas[rel])
        assert all(0 <= v < 6 for v in values)
    assert ev == uniform_events(q, 90, dom=6, seed=11)
    assert ev != uniform_events(q, 90, dom=6, seed=12)


def test_uneven_split_favors_earlier_relations():
    q = packaged_query("line3")
    per = collections.Counter(rel for rel, _ in uniform_events(q, 91, 5, 0))
    assert per == {"R1": 31, "R2": 30, "R3": 30}


def test_er_rejects_non_binary_relations():
    q = packaged_query("wide_middle")  # R2 has three attributes
    with pytest.raises(ValueError):
        er_events(q, 10, vertices=5, seed=0)


def test_powerlaw_is_skewed_and_deterministic():
    q = packaged_query("line3")
    ev = powerlaw_events(q, 3000, vertices=400, seed=7)
    assert ev == powerlaw_events(q, 3000, vertices=400, seed=7)
    counts = collections.Counter(v for _, vals in ev for v in vals)
    top = counts[0]
    mid = sum(counts[v] for v in range(100, 110)) / 10
    assert top > 10 * max(mid, 1)  # heavy head
    assert all(0 <= v < 400 for _, vals in ev for v in vals)


def test_fk_events_respect_parent_keys():
    q = packaged_query("fk_chain")
    ev = fk_events(q, 240, dom=9, seed=3)
    assert len(ev) == 240
    parents = {d.parent: d for d in q.foreign_keys}
    for rel, decl in parents.items():
        attrs = q.schemas[rel]
        keys = [tuple(v for a, v in zip(attrs, vals) if a in decl.key)
                for r, vals in ev if r == rel]
        assert len(keys) == len(set(keys))  # serial keys never repeat
    # every child's foreign key points at some parent in the stream
    pipe = FkPipeline(q)
    for rel, vals in ev:
        pipe.feed(rel, vals)
    assert pipe.buffered_count() == 0


def test_stream_round_trip(tmp_path):
    q = packaged_query("two_table")
    ev = uniform_events(q, 40, dom=12, seed=5)
    path = tmp_path / "s.txt"
    write_stream(path, ev)
    assert read_stream(path, q) == ev


def test_stream_line_format(tmp_path):
    q = packaged_query("two_table")
    path = tmp_path / "s.txt"
    write_stream(path, [("R1", (1, 2))])
    assert path.read_text() == "R1,1,2\n"


def test_parse_errors_carry_line_numbers(tmp_path):
    q = packaged_query("two_table")
    path = tmp_path / "bad.txt"
    path.write_text("R1,1,2\nR9,1,2\n")
    with pytest.raises(ParseError) as exc:
        read_stream(path, q)
    assert exc.value.line == 2

    path.write_text("R1,1\n")
    with pytest.raises(ParseError) as exc:
        read_stream(path, q)
    assert exc.value.line == 1

    path.write_text("\nR1,1,x\n")
    with pytest.raises(ParseError) as exc:
        read_stream(path, q)
    assert exc.value.line == 2


def test_blank_lines_and_empty_file_are_fine(tmp_path):
    q = packaged_query("two_table")
    path = tmp_path / "s.txt"
    path.write_text("")
    assert read_stream(path, q) == []
    path.write_text("\n\nR1,3,4\n\n")
    assert read_stream(path, q) == [("R1", (3, 4))]
