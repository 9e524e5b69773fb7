"""Ground-truth join enumeration used to check the streaming engine."""

from __future__ import annotations

import random

import pytest

from joinsample.errors import CapExceeded
from joinsample.model import JoinQuery
from joinsample.oracle import (oracle_delta, oracle_join,
                               oracle_subtree_count)

LINE3 = {"R1": ("X", "Y"), "R2": ("Y", "Z"), "R3": ("Z", "W")}
LINE3_EDGES = [("R1", "R2"), ("R2", "R3")]


def test_two_table_join():
    schemas = {"R1": ("X", "Y"), "R2": ("Y", "Z")}
    inst = {"R1": [(1, 1), (2, 1), (3, 2)], "R2": [(1, 10), (2, 20)]}
    got = oracle_join(schemas, inst)
    assert got == {(1, 1, 10), (2, 1, 10), (3, 2, 20)}


def test_empty_relation_gives_empty_join():
    schemas = {"R1": ("X", "Y"), "R2": ("Y", "Z")}
    assert oracle_join(schemas, {"R1": [(1, 1)], "R2": []}) == set()


def test_cartesian_when_no_shared_attrs():
    schemas = {"R1": ("X",), "R2": ("Y",)}
    got = oracle_join(schemas, {"R1": [(1,), (2,)], "R2": [(5,)]})
    assert got == {(1, 5), (2, 5)}


def test_triangle_join():
    schemas = {"R1": ("x1", "x2"), "R2": ("x2", "x3"), "R3": ("x1", "x3")}
    inst = {"R1": [(1, 2)], "R2": [(2, 3), (2, 4)], "R3": [(1, 3)]}
    assert oracle_join(schemas, inst) == {(1, 2, 3)}


def test_delta_counts_only_new_results():
    schemas = {"R1": ("X", "Y"), "R2": ("Y", "Z")}
    inst = {"R1": [(1, 1), (2, 1)], "R2": [(1, 10)]}
    got = oracle_delta(schemas, inst, "R2", (1, 20))
    assert got == {(1, 1, 20), (2, 1, 20)}


def test_delta_with_no_partners_is_empty():
    schemas = {"R1": ("X", "Y"), "R2": ("Y", "Z")}
    assert oracle_delta(schemas, {"R1": [], "R2": []}, "R2", (1, 20)) == set()


def test_cap_raises():
    schemas = {"R1": ("X",), "R2": ("Y",)}
    inst = {"R1": [(i,) for i in range(100)],
            "R2": [(i,) for i in range(100)]}
    with pytest.raises(CapExceeded):
        oracle_join(schemas, inst, cap=5000)


def test_deltas_replay_to_full_join_on_random_line3():
    # Feeding a random 60-tuple stream one tuple at a time, the union of all
    # deltas must be exactly the final join, with no tuple delivered twice.
    rng = random.Random(42)
    events = []
    for _ in range(60):
        rel = rng.choice(["R1", "R2", "R3"])
        events.append((rel, (rng.randrange(4), rng.randrange(4))))
    inst: dict = {"R1": [], "R2": [], "R3": []}
    union: set = set()
    total = 0
    for rel, t in events:
        if t in inst[rel]:
            continue
        delta = oracle_delta(LINE3, inst, rel, t)
        assert not (delta & union), "delta repeated an existing result"
        union |= delta
        total += len(delta)
        inst[rel].append(t)
    final = oracle_join(LINE3, inst)
    assert union == final
    assert total == len(final)
    assert total > 0


class TestSubtreeCount:
    def _brute(self, inst, y):
        # |{(r2, r3) : r2 in R2, r3 in R3, r2.Y == y, r2.Z == r3.Z}|
        return sum(1 for r2 in inst["R2"] if r2[0] == y
                   for r3 in inst["R3"] if r3[0] == r2[1])

    def test_line3_subtree_under_root_r1(self):
        rng = random.Random(3)
        inst = {"R1": [], "R2": [], "R3": []}
        for _ in range(80):
            inst["R2"].append((rng.randrange(3), rng.randrange(5)))
            inst["R3"].append((rng.randrange(5), rng.randrange(3)))
        inst = {k: list(dict.fromkeys(v)) for k, v in inst.items()}
        q = JoinQuery("line3", LINE3, LINE3_EDGES)
        tree = q.rooted["R1"]
        for y in range(3):
            got = oracle_subtree_count(LINE3, inst, tree, "R2", (y,))
            assert got == self._brute(inst, y)

    def test_leaf_count_is_semijoin_size(self):
        inst = {"R1": [], "R2": [], "R3": [(1, 5), (1, 6), (2, 7)]}
        q = JoinQuery("line3", LINE3, LINE3_EDGES)
        tree = q.rooted["R1"]
        assert oracle_subtree_count(LINE3, inst, tree, "R3", (1,)) == 2
        assert oracle_subtree_count(LINE3, inst, tree, "R3", (9,)) == 0
