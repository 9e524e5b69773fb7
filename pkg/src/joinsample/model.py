"""Relational model: tuples, relations, join queries, rooted join trees.

Tuples are plain value tuples whose attribute names live in the owning
relation's schema, in schema order. Relations keep arrival-ordered tuple
lists with hash indexes per registered key, so a semi-join lookup is one dict
probe and positional access inside a semi-join list is O(1). Join queries
bundle the relation schemas with one undirected join tree, from which a
rooted tree per relation is derived; the tree validator enforces attribute
connectedness, and a GYO-style ear-reduction is included to recognize acyclic
hypergraphs and produce a witness tree.

Stream order is the only notion of time: a tuple's arrival index is its
position in the relation's tuple list, and every index list preserves arrival
order, which keeps previously issued positions stable under insertion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (InvalidJoinTree, MissingIndex, UnknownRelation,
                     UnsupportedAttributes)

Value = int | str


def project(values: tuple, attrs, want) -> tuple:
    """Project a value tuple with schema `attrs` onto the attributes `want`."""
    pos = {a: i for i, a in enumerate(attrs)}
    try:
        return tuple(values[pos[a]] for a in want)
    except KeyError as exc:
        raise UnsupportedAttributes(
            f"attribute {exc.args[0]!r} not in {tuple(attrs)}") from None


@dataclass
class StreamEvent:
    relation: str
    values: tuple


class Relation:
    """Arrival-ordered tuple store with hash indexes on registered keys."""

    def __init__(self, name: str, attrs):
        self.name = name
        self.attrs = tuple(attrs)
        self.tuples: list[tuple] = []
        self._set: set[tuple] = set()
        self._indexes: dict[tuple, dict[tuple, list[tuple]]] = {}
        self._positions: dict[tuple, int] = {}

    def __len__(self) -> int:
        return len(self.tuples)

    def register_index(self, key_attrs) -> None:
        key = tuple(sorted(key_attrs))
        if key in self._indexes:
            return
        index: dict[tuple, list[tuple]] = {}
        for t in self.tuples:
            index.setdefault(project(t, self.attrs, key), []).append(t)
        self._indexes[key] = index

    def insert(self, values: tuple) -> bool:
        """Append one tuple; returns False (a no-op) on duplicates."""
        t = tuple(values)
        if len(t) != len(self.attrs):
            raise ValueError(
                f"{self.name}: got {len(t)} values for {len(self.attrs)} attrs")
        if t in self._set:
            return False
        self._positions[t] = len(self.tuples)
        self.tuples.append(t)
        self._set.add(t)
        for key, index in self._indexes.items():
            index.setdefault(project(t, self.attrs, key), []).append(t)
        return True

    def __contains__(self, values: tuple) -> bool:
        return tuple(values) in self._set

    def arrival_index(self, values: tuple) -> int:
        return self._positions[tuple(values)]

    def semijoin_list(self, key_attrs, key_values) -> list[tuple]:
        """Tuples agreeing with key_values on key_attrs, in arrival order."""
        key = tuple(sorted(key_attrs))
        if key == ():
            return self.tuples
        index = self._indexes.get(key)
        if index is None:
            raise MissingIndex(f"{self.name}: no index on {key}")
        order = sorted(range(len(key_attrs)), key=lambda i: key_attrs[i])
        vals = tuple(key_values[i] for i in order) \
            if tuple(key_attrs) != key else tuple(key_values)
        return index.get(vals, [])


class JoinTree:
    """A join tree rooted at one relation."""

    def __init__(self, root: str, parent: dict, children: dict, key: dict,
                 subtree_size: dict, order: list):
        self.root = root
        self.parent = parent
        self.children = children
        self.key = key
        self.subtree_size = subtree_size
        self.order = order  # preorder, root first

    @classmethod
    def rooted_at(cls, root: str, edges, schemas: dict) -> "JoinTree":
        adj: dict[str, list[str]] = {name: [] for name in schemas}
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        parent: dict[str, str | None] = {root: None}
        children: dict[str, list[str]] = {name: [] for name in schemas}
        order = [root]
        stack = [root]
        while stack:
            node = stack.pop(0)
            for nxt in adj[node]:
                if nxt not in parent:
                    parent[nxt] = node
                    children[node].append(nxt)
                    order.append(nxt)
                    stack.append(nxt)
        key = {}
        for node in order:
            p = parent[node]
            key[node] = () if p is None else tuple(
                sorted(set(schemas[node]) & set(schemas[p])))
        size: dict[str, int] = {}
        for node in reversed(order):
            size[node] = 1 + sum(size[c] for c in children[node])
        return cls(root, parent, children, key, size, order)


def validate_join_tree(schemas: dict, edges) -> None:
    """Check the declared tree against the join-tree definition.

    Raises InvalidJoinTree naming the offending attribute or structural
    problem. schemas maps relation name -> attribute tuple; edges are
    undirected pairs over exactly those names.
    """
    names = list(schemas)
    for a, b in edges:
        if a not in schemas or b not in schemas:
            raise UnknownRelation(f"tree edge ({a},{b}) names unknown relation")
    if len(edges) != len(names) - 1:
        raise InvalidJoinTree(
            f"a tree over {len(names)} relations needs {len(names) - 1} edges,"
            f" got {len(edges)}")
    adj: dict[str, set[str]] = {n: set() for n in names}
    for a, b in edges:
        if b in adj[a] or a == b:
            raise InvalidJoinTree(f"duplicate or self edge ({a},{b})")
        adj[a].add(b)
        adj[b].add(a)
    seen = {names[0]}
    stack = [names[0]]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    if len(seen) != len(names):
        raise InvalidJoinTree("tree edges do not connect all relations")
    for attr in sorted({a for attrs in schemas.values() for a in attrs}):
        holders = {n for n in names if attr in schemas[n]}
        start = next(iter(holders))
        reached = {start}
        stack = [start]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt in holders and nxt not in reached:
                    reached.add(nxt)
                    stack.append(nxt)
        if reached != holders:
            raise InvalidJoinTree(
                f"attribute {attr!r}: relations {sorted(holders)} do not form"
                f" a connected subtree")


def gyo_is_acyclic(schemas: dict) -> bool:
    """GYO ear reduction: does this hypergraph admit a join tree at all?"""
    return gyo_join_tree(schemas) is not None


def gyo_join_tree(schemas: dict):
    """Ear-reduce; returns a witness tree edge list, or None if cyclic.

    Repeatedly drop attributes private to one relation, then absorb any
    relation whose remaining attributes are covered by another; each
    absorption contributes one tree edge.
    """
    live = {name: set(attrs) for name, attrs in schemas.items()}
    edges = []
    while len(live) > 1:
        progress = False
        counts: dict[str, int] = {}
        for attrs in live.values():
            for a in attrs:
                counts[a] = counts.get(a, 0) + 1
        for name in live:
            private = {a for a in live[name] if counts[a] == 1}
            if private:
                live[name] -= private
                progress = True
        absorbed = None
        for name in live:
            for other in live:
                if other != name and live[name] <= live[other]:
                    absorbed = (name, other)
                    break
            if absorbed:
                break
        if absorbed:
            edges.append(absorbed)
            del live[absorbed[0]]
            progress = True
        if not progress:
            return None
    return edges


@dataclass
class FkDecl:
    relation: str  # child (foreign-key side)
    key: tuple
    parent: str  # primary-key side, absorbed on fusion


@dataclass
class GhdPlan:
    """Hypertree decomposition: node bags, a tree over them, anchors."""

    nodes: dict  # node name -> attribute tuple (the bag)
    edges: list  # undirected pairs of node names
    anchors: dict = field(default_factory=dict)  # relation -> node overrides
    elimination: dict = field(default_factory=dict)  # node -> attr order

    def validate(self, schemas: dict) -> None:
        bag_schemas = {u: tuple(attrs) for u, attrs in self.nodes.items()}
        validate_join_tree(bag_schemas, self.edges)
        for rel, attrs in schemas.items():
            if not any(set(attrs) <= set(bag) for bag in self.nodes.values()):
                raise InvalidJoinTree(
                    f"relation {rel} is not covered by any node bag")
        for rel, node in self.anchors.items():
            if rel not in schemas:
                raise UnknownRelation(f"anchor override for unknown {rel}")
            if node not in self.nodes:
                raise UnknownRelation(f"anchor node {node} not in plan")
            if not set(schemas[rel]) <= set(self.nodes[node]):
                raise InvalidJoinTree(
                    f"anchor node {node} does not cover relation {rel}")
        for node, order in self.elimination.items():
            if node not in self.nodes:
                raise UnknownRelation(f"elimination order for unknown {node}")
            if sorted(order) != sorted(self.nodes[node]):
                raise InvalidJoinTree(
                    f"elimination order for {node} must permute its bag")

    def elimination_of(self, node: str) -> tuple:
        return tuple(self.elimination.get(node, self.nodes[node]))

    def anchor_of(self, rel: str, schemas: dict) -> str:
        if rel in self.anchors:
            return self.anchors[rel]
        for u, bag in self.nodes.items():
            if set(schemas[rel]) <= set(bag):
                return u
        raise InvalidJoinTree(f"no node covers relation {rel}")

    def overlapping(self, rel: str, schemas: dict) -> list[str]:
        """Plan-order nodes whose bag shares attributes with the relation."""
        rel_attrs = set(schemas[rel])
        return [u for u, bag in self.nodes.items() if rel_attrs & set(bag)]


class JoinQuery:
    """A natural-join query plus the tree/plan structure the engine needs."""

    def __init__(self, name: str, relations: dict, tree_edges=None,
                 attributes=None, foreign_keys=None, ghd: GhdPlan | None = None,
                 grouping: dict | None = None):
        self.name = name
        self.schemas: dict[str, tuple] = {
            rname: tuple(attrs) for rname, attrs in relations.items()}
        if attributes is None:
            seen: list[str] = []
            for attrs in self.schemas.values():
                for a in attrs:
                    if a not in seen:
                        seen.append(a)
            attributes = seen
        self.attributes = tuple(attributes)
        self.tree_edges = [tuple(e) for e in (tree_edges or [])]
        self.foreign_keys = foreign_keys or []
        self.ghd = ghd
        self.grouping = dict(grouping or {})
        if ghd is not None:
            ghd.validate(self.schemas)
        else:
            validate_join_tree(self.schemas, self.tree_edges)
        self.rooted: dict[str, JoinTree] = {}
        if ghd is None:
            for rname in self.schemas:
                self.rooted[rname] = JoinTree.rooted_at(
                    rname, self.tree_edges, self.schemas)

    def fresh_relations(self) -> dict[str, Relation]:
        return {rname: Relation(rname, attrs)
                for rname, attrs in self.schemas.items()}

    def result_tuple(self, assignment: dict) -> tuple:
        return tuple(assignment[a] for a in self.attributes)
