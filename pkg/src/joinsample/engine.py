"""The end-to-end streaming sampler: per event, update the degree index,
address the event's delta batch, and let the reservoir consume it.

One Engine owns the relation stores, one index per rooted join tree, and a
single reservoir shared across all events: every batch is consumed with the
carried-over skip, so the reservoir behaves exactly as if all deltas formed
one concatenated stream. A batch position that decodes to a dummy is simply
a rejected landing. The running sum of batch sizes is maintained in O(1)
and reported by snapshot().

Cyclic queries run the same machinery over the decomposition's bag-level
query: each base event is projected into the node sub-instances and every
new node-join result is fed through the engine as a simulated insertion.
Foreign-key declarations instead rewrite the stream in front of the engine,
fusing child/parent pairs into wider relations before indexing.
"""

from __future__ import annotations

from .acyclic import DeltaBatch, build_indexes, index_insert
from .fuse import FkPipeline
from .ghd import GhdState
from .model import JoinQuery, Relation
from .reservoir import Reservoir
from .rng import SplitMix64


def is_real(item) -> bool:
    """Batch positions decode to a result tuple or to None for a dummy."""
    return item is not None


class BatchCursor:
    """Skippable stream view of one delta batch (positions decode lazily)."""

    __slots__ = ("batch", "pos")

    def __init__(self, batch: DeltaBatch):
        self.batch = batch
        self.pos = -1

    def next(self):
        return self.skip(0)

    def skip(self, i: int):
        self.pos += i + 1
        if self.pos >= self.batch.size:
            return None
        return self.batch.retrieve(self.pos)

    def remain(self) -> int:
        return self.batch.size - self.pos - 1


class Engine:
    """Streaming uniform sampler over one join query."""

    def __init__(self, query: JoinQuery, k: int, seed: int,
                 grouping: dict | None = None):
        self.query = query
        self.reservoir = Reservoir(k, SplitMix64(seed))
        self.events_seen = 0
        self.duplicate_events = 0
        self.join_size_total = 0  # running sum of batch sizes
        self.ghd_state: GhdState | None = None
        self.pipeline: FkPipeline | None = None
        self.base: dict[str, Relation] | None = None
        if query.ghd is not None:
            self.ghd_state = GhdState(query)
            self.exec_query = self.ghd_state.bag_query
            self.base = query.fresh_relations()
        elif query.foreign_keys:
            self.pipeline = FkPipeline(query)
            self.exec_query = self.pipeline.fused_query
        else:
            self.exec_query = query
        self.relations = self.exec_query.fresh_relations()
        self.indexes = build_indexes(self.exec_query, self.relations,
                                     grouping)

    def feed(self, rel_name: str, values: tuple) -> None:
        """Process one stream event end to end."""
        values = tuple(values)
        self.events_seen += 1
        if self.ghd_state is not None:
            if not self.base[rel_name].insert(values):
                self.duplicate_events += 1
                return
            for node, bag_tuple in self.ghd_state.ghd_ingest(
                    rel_name, values):
                self._exec_event(node, bag_tuple)
        elif self.pipeline is not None:
            for name, vals in self.pipeline.feed(rel_name, values):
                self._exec_event(name, vals)
        else:
            self._exec_event(rel_name, values)

    def _exec_event(self, rel_name: str, values: tuple) -> None:
        if not self.relations[rel_name].insert(values):
            self.duplicate_events += 1
            return
        index_insert(self.indexes, rel_name, values)
        batch = self.indexes[rel_name].make_batch(values)
        self.join_size_total += batch.size
        self.reservoir.batch_update(BatchCursor(batch), is_real)

    def snapshot(self) -> dict:
        """Current sample state; safe to call any time, never draws."""
        return {"events": self.events_seen,
                "sample_size": len(self.reservoir.samples),
                "join_positions": self.join_size_total,
                "samples": list(self.reservoir.samples)}

    def metrics(self) -> dict:
        r = self.reservoir
        out = {"events": self.events_seen,
               "duplicate_events": self.duplicate_events,
               "join_positions": self.join_size_total,
               "reservoir": {"next_calls": r.next_calls,
                             "skip_calls": r.skip_calls,
                             "skip_stops": r.skip_stops,
                             "dummy_hits": r.dummy_hits,
                             "replacements": r.replacements},
               "index": {root: idx.counters.as_dict()
                         for root, idx in self.indexes.items()}}
        if self.pipeline is not None:
            out["fk_buffered"] = self.pipeline.buffered_count()
        return out
