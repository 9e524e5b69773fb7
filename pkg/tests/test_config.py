"""Query config parsing and the packaged query set."""

from __future__ import annotations

import pytest

from joinsample.config import (load_query, packaged_query,
                               packaged_query_names)
from joinsample.errors import InvalidJoinTree, ParseError, UnknownRelation

LINE3_YAML = """
name: line3
relations:
  R1: [X, Y]
  R2: [Y, Z]
  R3: [Z, W]
tree:
  - [R1, R2]
  - [R2, R3]
"""


def test_load_line3():
    q = load_query(LINE3_YAML)
    assert q.name == "line3"
    assert q.schemas["R2"] == ("Y", "Z")
    assert q.tree_edges == [("R1", "R2"), ("R2", "R3")]
    assert set(q.rooted) == {"R1", "R2", "R3"}


def test_bad_yaml():
    with pytest.raises(ParseError):
        load_query("relations: [not: a: mapping")


def test_missing_relations():
    with pytest.raises(ParseError):
        load_query("name: empty")


def test_invalid_tree_is_rejected_at_load():
    bad = LINE3_YAML.replace("R3: [Z, W]", "R3: [X, W]")
    with pytest.raises(InvalidJoinTree):
        load_query(bad)


def test_unknown_relation_in_fk():
    with pytest.raises(UnknownRelation):
        load_query(LINE3_YAML + """
foreign_keys:
  - {relation: R9, key: [Y], parent: R1}
""")


def test_ghd_elimination_must_permute_bag():
    with pytest.raises(InvalidJoinTree):
        load_query("""
name: bad
relations:
  R1: [a, b]
ghd:
  nodes:
    u: [a, b]
  tree: []
  elimination:
    u: [a]
""")


def test_grouping_flags_parse():
    q = load_query(LINE3_YAML + """
grouping:
  R2: false
""")
    assert q.grouping == {"R2": False}


def test_packaged_queries_all_load():
    names = packaged_query_names()
    assert {"two_table", "line3", "line4", "star3", "wide_middle",
            "triangle", "dumbbell", "hub_chains", "fk_chain"} <= set(names)
    for name in names:
        q = packaged_query(name)
        assert q.schemas


def test_packaged_triangle_plan():
    q = packaged_query("triangle")
    assert q.ghd is not None
    assert q.ghd.nodes == {"u1": ("x1", "x2", "x3")}
    assert q.ghd.anchor_of("R2", q.schemas) == "u1"
    assert q.ghd.elimination_of("u1") == ("x1", "x2", "x3")


def test_packaged_dumbbell_plan():
    q = packaged_query("dumbbell")
    assert set(q.ghd.nodes) == {"u1", "u2", "u3"}
    assert q.ghd.anchor_of("R7", q.schemas) == "u3"
    assert q.ghd.overlapping("R7", q.schemas) == ["u1", "u3", "u2"]
    assert q.ghd.overlapping("R1", q.schemas) == ["u1"]


def test_packaged_fk_chain_decls():
    q = packaged_query("fk_chain")
    assert [(fk.relation, fk.key, fk.parent) for fk in q.foreign_keys] == [
        ("R3", ("Z",), "R2"), ("R3", ("U",), "R4"), ("R6", ("C",), "R5")]
