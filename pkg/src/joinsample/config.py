"""Query config loading.

Configs are YAML documents (JSON works too, being a YAML subset) naming the
relations with their attribute lists, the undirected join tree, and
optionally foreign-key declarations, a hypertree plan for cyclic queries,
per-relation grouping flags, and an explicit output attribute order:

    name: line3
    relations:
      R1: [X, Y]
      R2: [Y, Z]
      R3: [Z, W]
    tree:
      - [R1, R2]
      - [R2, R3]

Dict order is meaningful: it fixes relation order, node order, and the
canonical output attribute order (when `attributes` is not given).
"""

from __future__ import annotations

import importlib.resources

import yaml

from .errors import ParseError, UnknownRelation
from .model import FkDecl, GhdPlan, JoinQuery


def _as_str_list(x, what: str) -> list:
    if not isinstance(x, list) or not all(isinstance(a, str) for a in x):
        raise ParseError(f"{what} must be a list of strings, got {x!r}")
    return x


def load_query(text: str) -> JoinQuery:
    """Parse and validate one query config document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"bad YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("config root must be a mapping")
    relations = doc.get("relations")
    if not isinstance(relations, dict) or not relations:
        raise ParseError("config needs a non-empty 'relations' mapping")
    schemas = {}
    for rname, attrs in relations.items():
        schemas[str(rname)] = tuple(_as_str_list(attrs, f"relations.{rname}"))
    name = str(doc.get("name", "query"))

    tree = doc.get("tree", [])
    if tree is None:
        tree = []
    edges = []
    for e in tree:
        if not isinstance(e, list) or len(e) != 2:
            raise ParseError(f"tree edge must be a pair, got {e!r}")
        edges.append((str(e[0]), str(e[1])))

    fks = []
    for fk in doc.get("foreign_keys", []) or []:
        if not isinstance(fk, dict) or not {"relation", "key", "parent"} <= set(fk):
            raise ParseError(f"foreign key needs relation/key/parent: {fk!r}")
        if fk["relation"] not in schemas or fk["parent"] not in schemas:
            raise UnknownRelation(f"foreign key references unknown relation: {fk!r}")
        fks.append(FkDecl(relation=str(fk["relation"]),
                          key=tuple(_as_str_list(fk["key"], "foreign_keys.key")),
                          parent=str(fk["parent"])))

    ghd = None
    if "ghd" in doc and doc["ghd"] is not None:
        g = doc["ghd"]
        if not isinstance(g, dict) or "nodes" not in g:
            raise ParseError("'ghd' needs a 'nodes' mapping")
        nodes = {str(u): tuple(_as_str_list(attrs, f"ghd.nodes.{u}"))
                 for u, attrs in g["nodes"].items()}
        gedges = []
        for e in g.get("tree", []) or []:
            if not isinstance(e, list) or len(e) != 2:
                raise ParseError(f"ghd tree edge must be a pair, got {e!r}")
            gedges.append((str(e[0]), str(e[1])))
        anchors = {str(r): str(u) for r, u in (g.get("anchors") or {}).items()}
        elim = {str(u): tuple(_as_str_list(order, f"ghd.elimination.{u}"))
                for u, order in (g.get("elimination") or {}).items()}
        ghd = GhdPlan(nodes=nodes, edges=gedges, anchors=anchors,
                      elimination=elim)

    grouping = doc.get("grouping") or {}
    if not isinstance(grouping, dict):
        raise ParseError("'grouping' must map relation name to true/false")
    for rname in grouping:
        if str(rname) not in schemas and (ghd is None or str(rname) not in ghd.nodes):
            raise UnknownRelation(f"grouping flag for unknown relation {rname!r}")

    attributes = doc.get("attributes")
    if attributes is not None:
        attributes = _as_str_list(attributes, "attributes")

    return JoinQuery(name=name, relations=schemas, tree_edges=edges,
                     attributes=attributes, foreign_keys=fks, ghd=ghd,
                     grouping={str(k): bool(v) for k, v in grouping.items()})


def load_query_file(path) -> JoinQuery:
    with open(path, "r", encoding="utf-8") as fh:
        return load_query(fh.read())


def packaged_query(name: str) -> JoinQuery:
    """Load one of the query configs shipped inside the package."""
    ref = importlib.resources.files("joinsample") / "queries" / f"{name}.yaml"
    return load_query(ref.read_text(encoding="utf-8"))


def packaged_query_names() -> list:
    out = []
    for entry in (importlib.resources.files("joinsample") / "queries").iterdir():
        if entry.name.endswith(".yaml"):
            out.append(entry.name[:-5])
    return sorted(out)
