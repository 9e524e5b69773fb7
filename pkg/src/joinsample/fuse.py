"""Foreign-key fusion: rewrite a stream so FK-joined relation pairs arrive
pre-joined as one wider relation.

Each declaration names a child relation, its foreign-key attributes, and the
parent relation for which those attributes are a primary key. A child tuple
whose parent has not arrived yet is buffered; the parent's arrival flushes
all buffered children in their original order. Since the parent key is
unique, every child tuple joins with at most one parent tuple, so the fused
relation grows by exactly one tuple per child tuple and the join tree can
drop the edge between the pair.

Declarations are applied in order and may refer to relations that earlier
declarations already fused; the name is resolved through the current
container, so chains collapse step by step into a single relation. The
rewritten query keeps the original attribute order, and the rewritten tree
keeps exactly the declared edges that still connect two distinct containers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PrimaryKeyViolation, UnknownRelation
from .model import JoinQuery, project


@dataclass
class FusionStage:
    """One child/parent pair being fused, with its runtime buffers."""

    child: str
    parent: str
    key: tuple
    out_name: str
    out_attrs: tuple
    child_attrs: tuple
    parent_attrs: tuple
    parents: dict = field(default_factory=dict)  # key values -> parent tuple
    pending: dict = field(default_factory=dict)  # key values -> child tuples

    def push(self, rel_name: str, values: tuple) -> list:
        """Feed one event through this stage; returns the emitted events."""
        if rel_name == self.child:
            kv = project(values, self.child_attrs, self.key)
            parent = self.parents.get(kv)
            if parent is None:
                self.pending.setdefault(kv, []).append(values)
                return []
            return [(self.out_name, self._fuse(values, parent))]
        if rel_name == self.parent:
            kv = project(values, self.parent_attrs, self.key)
            if kv in self.parents:
                raise PrimaryKeyViolation(
                    f"{self.parent} already has a tuple with key {kv}")
            self.parents[kv] = values
            waiting = self.pending.pop(kv, [])
            return [(self.out_name, self._fuse(c, values)) for c in waiting]
        return [(rel_name, values)]

    def _fuse(self, child: tuple, parent: tuple) -> tuple:
        extra = tuple(v for a, v in zip(self.parent_attrs, parent)
                      if a not in self.key)
        return child + extra


class FkPipeline:
    """The ordered fusion stages for a query, plus the rewritten query."""

    def __init__(self, query: JoinQuery):
        self.raw_query = query
        container = {name: name for name in query.schemas}
        attrs = {name: query.schemas[name] for name in query.schemas}
        self.stages: list[FusionStage] = []
        for decl in query.foreign_keys:
            for name in (decl.relation, decl.parent):
                if name not in container:
                    raise UnknownRelation(
                        f"foreign key names unknown relation {name}")
            child = container[decl.relation]
            parent = container[decl.parent]
            out_name = f"{child}_{parent}"
            out_attrs = attrs[child] + tuple(
                a for a in attrs[parent] if a not in decl.key)
            self.stages.append(FusionStage(
                child=child, parent=parent, key=tuple(decl.key),
                out_name=out_name, out_attrs=out_attrs,
                child_attrs=attrs[child], parent_attrs=attrs[parent]))
            for raw, cur in container.items():
                if cur in (child, parent):
                    container[raw] = out_name
            attrs[out_name] = out_attrs
        self.container = container
        fused_names = list(dict.fromkeys(container.values()))
        relations = {name: attrs[name] for name in fused_names}
        edges = []
        for a, b in query.tree_edges:
            ca, cb = container[a], container[b]
            if ca != cb and (ca, cb) not in edges and (cb, ca) not in edges:
                edges.append((ca, cb))
        grouping = {container[n]: f for n, f in query.grouping.items()
                    if n in container and container[n] in relations}
        self.fused_query = JoinQuery(
            f"{query.name}+fused", relations, edges,
            attributes=query.attributes, grouping=grouping)

    def feed(self, rel_name: str, values: tuple) -> list:
        """Rewrite one stream event; may emit zero, one, or many events."""
        events = [(rel_name, values)]
        for stage in self.stages:
            nxt: list = []
            for name, vals in events:
                nxt.extend(stage.push(name, vals))
            events = nxt
        return events

    def buffered_count(self) -> int:
        """Child tuples currently waiting for their parent."""
        return sum(len(lst) for stage in self.stages
                   for lst in stage.pending.values())
