"""Cyclic queries via decomposition nodes: projected sub-instances and
per-node delta enumeration.

A decomposition plan assigns each node a bag of attributes; a base relation
overlaps a node when their attribute sets intersect. Each node keeps one
duplicate-free projected relation per overlapping base relation, and the
node's own join result is never stored. When a base tuple arrives, its
projection lands in every overlapping node; for each node where the
projection is new, the node's delta (all node-join results using that
projection) is enumerated and handed back as simulated insertions into a
bag-level acyclic query whose relations are the node bags and whose join
tree is the plan's tree.

Enumeration is attribute-at-a-time backtracking: the new projection's
attributes are bound first, the rest follow the plan's per-node elimination
order, candidates come from the overlapping projection with the most bound
attributes, and every partially bound projection is probed through a hash
index after each binding. A result appears exactly once, when its last
enabling projection arrives, so the bag-level stream is duplicate-free.
"""

from __future__ import annotations

from .errors import UnknownRelation
from .model import JoinQuery, Relation, project


class NodeInstance:
    """Projected sub-instance of one decomposition node."""

    def __init__(self, node: str, bag: tuple, schemas: dict):
        self.node = node
        self.bag = bag
        bag_set = set(bag)
        self.projections: dict[str, Relation] = {}
        for rel, attrs in schemas.items():
            shared = tuple(a for a in attrs if a in bag_set)
            if shared:
                self.projections[rel] = Relation(f"{rel}@{node}", shared)


class GhdState:
    """All node sub-instances for one plan, plus the bag-level query."""

    def __init__(self, query: JoinQuery):
        if query.ghd is None:
            raise UnknownRelation(f"query {query.name} has no ghd plan")
        self.query = query
        self.plan = query.ghd
        self.nodes = {u: NodeInstance(u, tuple(bag), query.schemas)
                      for u, bag in self.plan.nodes.items()}
        grouping = {u: f for u, f in query.grouping.items()
                    if u in self.plan.nodes}
        self.bag_query = JoinQuery(
            f"{query.name}+nodes",
            {u: tuple(bag) for u, bag in self.plan.nodes.items()},
            self.plan.edges, attributes=query.attributes, grouping=grouping)

    def ghd_ingest(self, rel_name: str, values: tuple) -> list:
        """Project one base tuple into the nodes; return the simulated
        insertions (node name, bag tuple) its new projections produce."""
        if rel_name not in self.query.schemas:
            raise UnknownRelation(f"event for unknown relation {rel_name}")
        schema = self.query.schemas[rel_name]
        out = []
        for u, ni in self.nodes.items():
            proj_rel = ni.projections.get(rel_name)
            if proj_rel is None:
                continue
            proj = project(values, schema, proj_rel.attrs)
            if not proj_rel.insert(proj):
                continue  # projection already present: nothing new here
            for result in self.delta_enumerate(u, rel_name, proj):
                out.append((u, result))
        return out

    def delta_enumerate(self, node: str, rel_name: str, proj: tuple) -> list:
        """Node-join results that use the just-inserted projection."""
        ni = self.nodes[node]
        asg = dict(zip(ni.projections[rel_name].attrs, proj))
        if not all(self._holds(r, asg) for r in ni.projections.values()):
            return []
        order = [a for a in self.plan.elimination_of(node) if a not in asg]
        results: list = []
        self._extend(ni, order, 0, asg, results)
        return results

    def _holds(self, rel: Relation, asg: dict) -> bool:
        """Is the partial assignment consistent with one projection?"""
        bound = tuple(a for a in rel.attrs if a in asg)
        if not bound:
            return True
        if len(bound) == len(rel.attrs):
            return tuple(asg[a] for a in rel.attrs) in rel
        rel.register_index(bound)
        return bool(rel.semijoin_list(bound, tuple(asg[a] for a in bound)))

    def _extend(self, ni: NodeInstance, order: list, depth: int,
                asg: dict, results: list) -> None:
        if depth == len(order):
            results.append(tuple(asg[a] for a in ni.bag))
            return
        x = order[depth]
        pivot = None
        pivot_bound: tuple = ()
        for rel in ni.projections.values():
            if x not in rel.attrs:
                continue
            bound = tuple(a for a in rel.attrs if a in asg)
            if pivot is None or len(bound) > len(pivot_bound):
                pivot, pivot_bound = rel, bound
        if pivot is None:
            return  # no projection constrains this attribute
        if pivot_bound:
            pivot.register_index(pivot_bound)
            matches = pivot.semijoin_list(
                pivot_bound, tuple(asg[a] for a in pivot_bound))
        else:
            matches = pivot.tuples
        seen = set()
        xi = pivot.attrs.index(x)
        touched = [r for r in ni.projections.values() if x in r.attrs]
        for t in matches:
            v = t[xi]
            if v in seen:
                continue
            seen.add(v)
            asg[x] = v
            if all(self._holds(r, asg) for r in touched):
                self._extend(ni, order, depth + 1, asg, results)
            del asg[x]
