"""Brute-force ground truth for joins, deltas, and subtree counts.

Everything here recomputes from scratch with naive backtracking; nothing is
shared with the incremental engine, so these functions can serve as the
independent oracle in every equivalence test. Instances are plain dicts
mapping relation name to a list (or set) of value tuples in schema order.
"""

from __future__ import annotations

from .errors import CapExceeded
from .model import JoinTree, project


def _check_cap(instance, cap) -> None:
    if cap is None:
        return
    prod = 1
    for tuples in instance.values():
        prod *= max(len(tuples), 1)
        if prod > cap:
            raise CapExceeded(f"relation-size product exceeds cap {cap}")


def oracle_join(schemas: dict, instance: dict, attr_order=None,
                cap=2_000_000) -> set:
    """Exact result set of the natural join, as canonical value tuples."""
    _check_cap(instance, cap)
    if attr_order is None:
        attr_order = []
        for attrs in schemas.values():
            for a in attrs:
                if a not in attr_order:
                    attr_order.append(a)
    attr_order = tuple(attr_order)
    names = list(schemas)
    results = set()
    assignment: dict = {}

    def backtrack(i: int) -> None:
        if i == len(names):
            results.add(tuple(assignment[a] for a in attr_order))
            return
        name = names[i]
        attrs = schemas[name]
        for t in instance[name]:
            bound = []
            ok = True
            for a, v in zip(attrs, t):
                if a in assignment:
                    if assignment[a] != v:
                        ok = False
                        break
                else:
                    assignment[a] = v
                    bound.append(a)
            if ok:
                backtrack(i + 1)
            for a in bound:
                del assignment[a]

    backtrack(0)
    return results


def oracle_delta(schemas: dict, instance: dict, rel: str, t: tuple,
                 attr_order=None, cap=2_000_000) -> set:
    """Join results that use tuple t of relation rel (t not yet inserted)."""
    pinned = dict(instance)
    pinned[rel] = [tuple(t)]
    return oracle_join(schemas, pinned, attr_order=attr_order, cap=cap)


def oracle_subtree_count(schemas: dict, instance: dict, tree: JoinTree,
                         node: str, key_values: tuple) -> int:
    """Number of subtree join combinations below `node` matching its key.

    Counts the tuples t of `node` whose key(node) projection equals
    key_values, weighted by the product over child subtrees of their own
    counts keyed through t. This is the exact quantity the streaming degree
    index approximates with powers of two.
    """
    memo: dict = {}

    def count(e: str, kv: tuple) -> int:
        got = memo.get((e, kv))
        if got is not None:
            return got
        key = tree.key[e]
        attrs = schemas[e]
        total = 0
        for t in instance[e]:
            if project(t, attrs, key) != kv:
                continue
            prod = 1
            for c in tree.children[e]:
                prod *= count(c, project(t, attrs, tree.key[c]))
                if prod == 0:
                    break
            total += prod
        memo[(e, kv)] = total
        return total

    return count(node, tuple(key_values))
