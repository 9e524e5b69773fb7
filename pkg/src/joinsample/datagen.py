"""Synthetic stream generation and stream-file round-tripping.

Streams are lists of (relation name, value tuple) events. Generators cover
the shapes the harness measures: uniform schema-shaped tuples for any query,
Erdős–Rényi and Chung-Lu (power-law) edge streams for binary-relation
queries, and a foreign-key-aware generator that creates parents with unique
keys before children that reference them. Each generator builds its
per-relation share first and then shuffles the whole event order, so
relation arrivals interleave randomly but reproducibly.

The on-disk format is one event per line: the relation name and its values
joined by commas. Parsing is strict; any malformed line is reported with
its 1-based line number.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from itertools import accumulate

from .errors import ParseError
from .model import JoinQuery


def _spread(total: int, buckets: int) -> list[int]:
    share, extra = divmod(total, buckets)
    return [share + (1 if i < extra else 0) for i in range(buckets)]


def uniform_events(query: JoinQuery, n: int, dom: int, seed: int) -> list:
    """n events with uniform attribute values over range(dom)."""
    rng = random.Random(seed)
    events = []
    names = list(query.schemas)
    for rel, count in zip(names, _spread(n, len(names))):
        arity = len(query.schemas[rel])
        events.extend((rel, tuple(rng.randrange(dom) for _ in range(arity)))
                      for _ in range(count))
    rng.shuffle(events)
    return events


def er_events(query: JoinQuery, n: int, vertices: int, seed: int) -> list:
    """Erdős–Rényi style edge stream for binary-relation queries."""
    for rel, attrs in query.schemas.items():
        if len(attrs) != 2:
            raise ValueError(f"{rel} is not binary; use uniform_events")
    return uniform_events(query, n, vertices, seed)


def powerlaw_events(query: JoinQuery, n: int, vertices: int, seed: int,
                    alpha: float = 2.1) -> list:
    """Chung-Lu power-law edge stream for binary-relation queries.

    Endpoint v is drawn with probability proportional to (v+1)^(-1/(alpha-1)),
    which makes expected vertex degrees follow a power law with exponent
    alpha.
    """
    rng = random.Random(seed)
    beta = 1.0 / (alpha - 1.0)
    weights = [(v + 1.0) ** -beta for v in range(vertices)]
    cum = list(accumulate(weights))
    total = cum[-1]

    def endpoint() -> int:
        return bisect_right(cum, rng.random() * total)

    events = []
    names = list(query.schemas)
    for rel, count in zip(names, _spread(n, len(names))):
        if len(query.schemas[rel]) != 2:
            raise ValueError(f"{rel} is not binary; use uniform_events")
        events.extend((rel, (endpoint(), endpoint())) for _ in range(count))
    rng.shuffle(events)
    return events


def fk_events(query: JoinQuery, n: int, dom: int, seed: int) -> list:
    """Uniform events that respect the query's foreign-key declarations.

    Relations that act as a parent get serially numbered key values, so keys
    are unique; children draw their foreign-key values from the keys issued
    so far. Parent events are generated first, then the order is shuffled
    with children only ever referencing keys that exist somewhere in the
    stream (arrival order may still interleave; the fusion stage buffers).
    """
    rng = random.Random(seed)
    by_parent = {d.parent: d for d in query.foreign_keys}
    by_child: dict[str, list] = {}
    for d in query.foreign_keys:
        by_child.setdefault(d.relation, []).append(d)
    issued: dict[str, list[tuple]] = {d.parent: [] for d in
                                      query.foreign_keys}
    names = list(query.schemas)
    shares = dict(zip(names, _spread(n, len(names))))
    events = []
    for rel in names:  # parents first so children have keys to cite
        if rel not in by_parent:
            continue
        decl = by_parent[rel]
        attrs = query.schemas[rel]
        for i in range(shares[rel]):
            t = tuple(i if a in decl.key else rng.randrange(dom)
                      for a in attrs)
            issued[rel].append(tuple(
                v for a, v in zip(attrs, t) if a in decl.key))
            events.append((rel, t))
    for rel in names:
        if rel in by_parent:
            continue
        attrs = query.schemas[rel]
        decls = by_child.get(rel, [])
        for _ in range(shares[rel]):
            values = {a: rng.randrange(dom) for a in attrs}
            for d in decls:
                keys = issued[d.parent]
                if keys:
                    for a, v in zip(d.key, rng.choice(keys)):
                        values[a] = v
            events.append((rel, tuple(values[a] for a in attrs)))
    rng.shuffle(events)
    return events


def write_stream(path: str, events) -> None:
    """One event per line: relation name, then values, comma-separated."""
    with open(path, "w", encoding="utf-8") as fh:
        for rel, values in events:
            fh.write(",".join([rel, *map(str, values)]) + "\n")


def read_stream(path: str, query: JoinQuery) -> list:
    """Parse a stream file against the query's schemas."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            rel = parts[0]
            schema = query.schemas.get(rel)
            if schema is None:
                raise ParseError(f"unknown relation {rel!r}", line=lineno)
            if len(parts) - 1 != len(schema):
                raise ParseError(
                    f"{rel} expects {len(schema)} values, got "
                    f"{len(parts) - 1}", line=lineno)
            try:
                values = tuple(int(p) for p in parts[1:])
            except ValueError:
                raise ParseError(f"non-integer value in {line!r}",
                                 line=lineno) from None
            events.append((rel, values))
    return events
