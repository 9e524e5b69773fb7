"""Streaming join index: degree buckets, delta batches, positional retrieval.

One TreeIndex is kept per rooted version of the join tree. For every
non-root node e it maintains, per key tuple (the values e shares with its
parent), an integer cnt and its power-of-two ceiling wcnt. For internal
nodes, cnt is the sum over matching tuples of the product of their
children's wcnt values, and the tuples are kept in degree buckets keyed by
the exponent of that product, so a batch position can be mapped to a tuple
by one prefix scan plus a mixed-radix decode per level. Leaf nodes need no
buckets: their per-key tuple lists in the relation are exact.

A tuple whose children product is zero is parked in a reserve bucket; it
contributes nothing to cnt and is invisible to retrieval until a child key
gains its first tuple, at which point propagation moves it into a real
bucket. Since wcnt over-counts each level by at most 2x, a batch built on
these counters has size within a constant factor of the true delta-join
size, and every batch position either decodes to a real join result or to
a dummy; the real fraction is bounded below by (1/2) per counter rounding
involved.

A non-root internal node whose schema has attributes beyond its own and
its children's keys can be grouped: tuples agreeing on all those key
attributes are interchangeable, so buckets then hold one group
representative with a member multiplicity rounded up to a power of two
(wmul), and propagation touches each group once instead of once per
member. Retrieval splits a bucket offset into member index and children
offsets; member indexes at or past the true member count are dummies.

Updates are insert-only: counters never shrink, so previously issued batch
positions keep decoding to the same elements.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass

from .errors import PositionOutOfRange
from .model import JoinQuery, Relation, project


def next_pow2(n: int) -> int:
    """Smallest power of two >= n, with 0 for empty counts."""
    if n <= 0:
        return 0
    return 1 << (n - 1).bit_length()


@dataclass
class IndexCounters:
    propagation_loop_count: int = 0
    wcnt_doublings: int = 0
    bucket_moves: int = 0
    retrieve_calls: int = 0
    dummy_hits: int = 0

    def as_dict(self) -> dict:
        return {"propagation_loop_count": self.propagation_loop_count,
                "wcnt_doublings": self.wcnt_doublings,
                "bucket_moves": self.bucket_moves,
                "retrieve_calls": self.retrieve_calls,
                "dummy_hits": self.dummy_hits}


class BucketList:
    """Buckets of elements sharing one exponent, plus a reserve.

    Supports O(1) append, O(1) swap-remove (positions are not stable
    across removals; retrieval only uses positions it reads within a
    single call), and an ascending prefix scan over exponents.
    """

    __slots__ = ("exps", "by_exp", "reserve")

    def __init__(self):
        self.exps: list[int] = []
        self.by_exp: dict[int, list] = {}
        self.reserve: list = []

    def add(self, elem, exp: int | None) -> int:
        """Append under an exponent (None = reserve); returns the slot."""
        if exp is None:
            self.reserve.append(elem)
            return len(self.reserve) - 1
        lst = self.by_exp.get(exp)
        if lst is None:
            lst = self.by_exp[exp] = []
            insort(self.exps, exp)
        lst.append(elem)
        return len(lst) - 1

    def remove_at(self, exp: int | None, idx: int):
        """Swap-remove; returns the element that moved into idx, if any."""
        lst = self.reserve if exp is None else self.by_exp[exp]
        last = lst.pop()
        moved = None
        if idx < len(lst):
            lst[idx] = last
            moved = last
        if exp is not None and not lst:
            del self.by_exp[exp]
            self.exps.remove(exp)
        return moved

    def scan(self, z: int):
        """Locate in-bucket coordinates (elem, exponent, offset) for z."""
        for exp in self.exps:
            width = (1 << exp) * len(self.by_exp[exp])
            if z < width:
                j, off = divmod(z, 1 << exp)
                return self.by_exp[exp][j], exp, off
            z -= width
        raise PositionOutOfRange(f"position beyond bucket contents ({z} over)")


@dataclass
class GroupState:
    """Grouping data for one node: the view relation of group keys."""

    attrs: tuple  # sorted attributes of the group key
    view: Relation  # one tuple per live group, indexed per child key


class TreeIndex:
    """All per-key counters and buckets for one rooted join tree."""

    def __init__(self, query: JoinQuery, root: str,
                 relations: dict[str, Relation],
                 grouping: dict[str, bool] | None = None):
        self.query = query
        self.tree = query.rooted[root]
        self.root = root
        self.relations = relations
        self.counters = IndexCounters()
        tree = self.tree
        self.cnt: dict[str, dict[tuple, int]] = {}
        self.buckets: dict[str, dict[tuple, BucketList]] = {}
        # element -> (key values, exponent or None for reserve, slot)
        self.location: dict[str, dict[tuple, tuple]] = {}
        self.groups: dict[str, GroupState] = {}
        flags = dict(query.grouping)
        if grouping:
            flags.update(grouping)
        for node in tree.order:
            if node == root:
                continue
            relations[node].register_index(tree.key[node])
            if not tree.children[node]:
                continue  # leaf: the relation's key lists are the index
            self.cnt[node] = {}
            self.buckets[node] = {}
            self.location[node] = {}
            ebar = set(tree.key[node])
            for child in tree.children[node]:
                ebar |= set(tree.key[child])
            extra = set(query.schemas[node]) - ebar
            if extra and flags.get(node, True):
                attrs = tuple(sorted(ebar))
                view = Relation(f"{node}:{root}:groups", attrs)
                for child in tree.children[node]:
                    view.register_index(tree.key[child])
                relations[node].register_index(attrs)
                self.groups[node] = GroupState(attrs=attrs, view=view)
            else:
                for child in tree.children[node]:
                    relations[node].register_index(tree.key[child])

    # -- counter access ----------------------------------------------------

    def cnt_of(self, node: str, key_vals: tuple) -> int:
        if self.tree.children[node]:
            return self.cnt[node].get(key_vals, 0)
        rel = self.relations[node]
        return len(rel.semijoin_list(self.tree.key[node], key_vals))

    def wcnt_of(self, node: str, key_vals: tuple) -> int:
        return next_pow2(self.cnt_of(node, key_vals))

    def _child_key(self, node: str, values: tuple, child: str) -> tuple:
        src = self.groups[node].attrs if node in self.groups else None
        attrs = src if src is not None else self.query.schemas[node]
        return project(values, attrs, self.tree.key[child])

    def _children_product(self, node: str, values: tuple, attrs) -> int:
        prod = 1
        for child in self.tree.children[node]:
            prod *= self.wcnt_of(
                child, project(values, attrs, self.tree.key[child]))
            if prod == 0:
                return 0
        return prod

    # -- insertion ---------------------------------------------------------

    def index_insert(self, rel_name: str, values: tuple) -> None:
        """Fold one already-stored tuple into this tree's counters."""
        if rel_name == self.root:
            return
        tree = self.tree
        key_vals = project(values, self.query.schemas[rel_name],
                           tree.key[rel_name])
        if not tree.children[rel_name]:
            n = len(self.relations[rel_name].semijoin_list(
                tree.key[rel_name], key_vals))
            self._after_cnt_change(rel_name, key_vals,
                                   next_pow2(n - 1), next_pow2(n))
        elif rel_name in self.groups:
            self._grouped_insert(rel_name, values)
        else:
            self._update(rel_name, values, 0, fresh=True)

    def _update(self, node: str, values: tuple, old: int,
                fresh: bool = False) -> None:
        """Re-bucket one tuple of an ungrouped internal node."""
        schema = self.query.schemas[node]
        key_vals = project(values, schema, self.tree.key[node])
        new = self._children_product(node, values, schema)
        if fresh:
            bl = self.buckets[node].setdefault(key_vals, BucketList())
            exp = None if new == 0 else new.bit_length() - 1
            slot = bl.add(values, exp)
            self.location[node][values] = (key_vals, exp, slot)
        elif new != old:
            self._move(node, values, new)
        if new != old:
            before = self.cnt[node].get(key_vals, 0)
            after = before + new - old
            self.cnt[node][key_vals] = after
            self._after_cnt_change(node, key_vals,
                                   next_pow2(before), next_pow2(after))
        elif fresh:
            self.cnt[node].setdefault(key_vals, 0)

    def _grouped_insert(self, node: str, values: tuple) -> None:
        state = self.groups[node]
        gkey = project(values, self.query.schemas[node], state.attrs)
        members = self.relations[node].semijoin_list(state.attrs, gkey)
        m = len(members)
        key_vals = project(gkey, state.attrs, self.tree.key[node])
        if m == 1:
            state.view.insert(gkey)
            h = self._children_product(node, gkey, state.attrs)
            bl = self.buckets[node].setdefault(key_vals, BucketList())
            exp = None if h == 0 else h.bit_length() - 1
            slot = bl.add(gkey, exp)
            self.location[node][gkey] = (key_vals, exp, slot)
            delta = h
        else:
            if next_pow2(m) == next_pow2(m - 1):
                return  # multiplicity ceiling unchanged: nothing to redo
            old = self._stored_contribution(node, gkey)
            h = self._children_product(node, gkey, state.attrs)
            new = next_pow2(m) * h
            if new != old:
                self._move(node, gkey, new)
            delta = new - old
        if delta:
            before = self.cnt[node].get(key_vals, 0)
            after = before + delta
            self.cnt[node][key_vals] = after
            self._after_cnt_change(node, key_vals,
                                   next_pow2(before), next_pow2(after))
        else:
            self.cnt[node].setdefault(key_vals, 0)

    def _stored_contribution(self, node: str, elem: tuple) -> int:
        _, exp, _ = self.location[node][elem]
        return 0 if exp is None else 1 << exp

    def _move(self, node: str, elem: tuple, new: int) -> None:
        key_vals, exp, slot = self.location[node][elem]
        bl = self.buckets[node][key_vals]
        moved = bl.remove_at(exp, slot)
        if moved is not None:
            mk, mexp, _ = self.location[node][moved]
            self.location[node][moved] = (mk, mexp, slot)
        new_exp = None if new == 0 else new.bit_length() - 1
        new_slot = bl.add(elem, new_exp)
        self.location[node][elem] = (key_vals, new_exp, new_slot)
        self.counters.bucket_moves += 1

    def _after_cnt_change(self, node: str, key_vals: tuple,
                          wcnt_before: int, wcnt_after: int) -> None:
        """Propagate a wcnt doubling into the parent's buckets."""
        if wcnt_after == wcnt_before:
            return
        self.counters.wcnt_doublings += 1
        parent = self.tree.parent[node]
        if parent is None or parent == self.root:
            return
        key = self.tree.key[node]
        if parent in self.groups:
            matches = self.groups[parent].view.semijoin_list(key, key_vals)
            for gkey in list(matches):
                self.counters.propagation_loop_count += 1
                old = self._stored_contribution(parent, gkey)
                state = self.groups[parent]
                m = len(self.relations[parent].semijoin_list(
                    state.attrs, gkey))
                new = next_pow2(m) * self._children_product(
                    parent, gkey, state.attrs)
                self._apply_contribution(parent, gkey, old, new, state.attrs)
        else:
            matches = self.relations[parent].semijoin_list(key, key_vals)
            for t in list(matches):
                self.counters.propagation_loop_count += 1
                old = self._stored_contribution(parent, t)
                new = self._children_product(
                    parent, t, self.query.schemas[parent])
                self._apply_contribution(parent, t, old, new,
                                         self.query.schemas[parent])

    def _apply_contribution(self, node: str, elem: tuple, old: int, new: int,
                            attrs) -> None:
        if new == old:
            return
        self._move(node, elem, new)
        key_vals = project(elem, attrs, self.tree.key[node])
        before = self.cnt[node].get(key_vals, 0)
        after = before + new - old
        self.cnt[node][key_vals] = after
        self._after_cnt_change(node, key_vals,
                               next_pow2(before), next_pow2(after))

    # -- retrieval ---------------------------------------------------------

    def make_batch(self, values: tuple) -> "DeltaBatch":
        """Delta batch for a tuple just inserted into the root relation."""
        return DeltaBatch(self, tuple(values))

    def _retrieve_key(self, node: str, key_vals: tuple, z: int):
        """Element z under a key tuple of `node`, or None for a dummy."""
        tree = self.tree
        if not tree.children[node]:
            lst = self.relations[node].semijoin_list(tree.key[node], key_vals)
            if z >= len(lst):
                return None
            return dict(zip(self.query.schemas[node], lst[z]))
        if z >= self.cnt[node].get(key_vals, 0):
            return None
        elem, exp, off = self.buckets[node][key_vals].scan(z)
        if node in self.groups:
            state = self.groups[node]
            radices = [self.wcnt_of(c, project(elem, state.attrs,
                                               tree.key[c]))
                       for c in tree.children[node]]
            h = math.prod(radices)
            member_idx, off = divmod(off, h)
            members = self.relations[node].semijoin_list(state.attrs, elem)
            if member_idx >= len(members):
                return None
            out = dict(zip(self.query.schemas[node], members[member_idx]))
            source, attrs = elem, state.attrs
        else:
            radices = [self.wcnt_of(c, project(
                elem, self.query.schemas[node], tree.key[c]))
                for c in tree.children[node]]
            out = dict(zip(self.query.schemas[node], elem))
            source, attrs = elem, self.query.schemas[node]
        for child, rdx in zip(reversed(tree.children[node]),
                              reversed(radices)):
            off, z_c = divmod(off, rdx)
            sub = self._retrieve_key(
                child, project(source, attrs, tree.key[child]), z_c)
            if sub is None:
                return None
            out.update(sub)
        return out


class DeltaBatch:
    """Positional view of the delta join of one root-relation tuple.

    The batch is never materialized: it stores the anchor tuple and the
    per-child radices (their cnt values), so its size is a product known
    up front, position 0 of a non-empty batch is always real, and each
    retrieve(z) decodes z level by level.
    """

    def __init__(self, index: TreeIndex, values: tuple):
        self.index = index
        self.anchor = values
        tree = index.tree
        self.children = tree.children[index.root]
        schema = index.query.schemas[index.root]
        self.radices = [
            index.cnt_of(c, project(values, schema, tree.key[c]))
            for c in self.children]
        self.size = math.prod(self.radices)

    def retrieve(self, z: int):
        """Result tuple at position z, or None when z lands on a dummy."""
        if z < 0 or z >= self.size:
            raise PositionOutOfRange(f"{z} outside batch of {self.size}")
        index = self.index
        index.counters.retrieve_calls += 1
        out = dict(zip(index.query.schemas[index.root], self.anchor))
        for child, rdx in zip(reversed(self.children),
                              reversed(self.radices)):
            z, z_c = divmod(z, rdx)
            key_vals = project(self.anchor,
                               index.query.schemas[index.root],
                               index.tree.key[child])
            sub = index._retrieve_key(child, key_vals, z_c)
            if sub is None:
                index.counters.dummy_hits += 1
                return None
            out.update(sub)
        return index.query.result_tuple(out)

    def sweep(self) -> list:
        """Every position in order; dummies come back as None."""
        return [self.retrieve(z) for z in range(self.size)]


def build_indexes(query: JoinQuery, relations: dict[str, Relation],
                  grouping: dict[str, bool] | None = None) -> dict:
    """One TreeIndex per rooted version of the query's join tree."""
    return {root: TreeIndex(query, root, relations, grouping)
            for root in query.rooted}


def index_insert(indexes: dict, rel_name: str, values: tuple) -> None:
    """Fold a stored tuple into every rooted tree's index."""
    for idx in indexes.values():
        idx.index_insert(rel_name, values)


def overcount_check(query: JoinQuery, relations: dict,
                    indexes: dict) -> list:
    """Compare every wcnt against the exact subtree count upper bound.

    Returns a list of (root, node, key values, wcnt, bound) violations;
    an empty list means every counter respects wcnt <= 2^subtree_size *
    (exact semi-join subtree count). Grouped nodes get one extra factor
    of two for the multiplicity ceiling.
    """
    from .oracle import oracle_subtree_count

    instance = {name: list(rel.tuples) for name, rel in relations.items()}
    violations = []
    for root, idx in indexes.items():
        tree = idx.tree
        for node in tree.order:
            if node == root:
                continue
            if tree.children[node]:
                observed = idx.cnt[node].keys()
            else:
                schema = query.schemas[node]
                observed = {project(t, schema, tree.key[node])
                            for t in relations[node].tuples}
            limit = 1 << tree.subtree_size[node]
            if node in idx.groups:
                limit <<= 1
            for key_vals in observed:
                wcnt = idx.wcnt_of(node, key_vals)
                bound = limit * oracle_subtree_count(
                    query.schemas, instance, tree, node, key_vals)
                if wcnt > bound:
                    violations.append((root, node, key_vals, wcnt, bound))
    return violations
