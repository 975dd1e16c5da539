"""Node-per-object graph of a schema: entities, relationships, and attributes at every level."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .errors import MappingError
from .model import AttributeDef, ErSchema


@dataclass(frozen=True)
class ErNode:
    id: str
    kind: str  # entity | relationship | attribute
    owner: str | None = None  # parent node id for attributes
    multi_valued: bool = False


@dataclass(frozen=True)
class ErEdge:
    a: str
    b: str
    kind: str  # participates | isa | has_attribute | identifies


def entity_node(name: str) -> str:
    return f"E:{name}"


def relationship_node(name: str) -> str:
    return f"R:{name}"


def attribute_node(owner: str, path: Iterable[str]) -> str:
    return "A:" + ".".join((owner,) + tuple(path))


@dataclass(frozen=True)
class ErGraph:
    nodes: tuple[ErNode, ...]
    edges: tuple[ErEdge, ...]

    @cached_property
    def node_index(self) -> dict[str, ErNode]:
        return {n.id: n for n in self.nodes}

    @cached_property
    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {n.id: set() for n in self.nodes}
        for e in self.edges:
            adj[e.a].add(e.b)
            adj[e.b].add(e.a)
        return adj

    def has_node(self, nid: str) -> bool:
        return nid in self.node_index

    def edge_kinds(self, a: str, b: str) -> set[str]:
        return {e.kind for e in self.edges if {e.a, e.b} == {a, b}}

    def to_dot(self) -> str:
        lines = ["graph er {"]
        for n in self.nodes:
            label = f"{n.kind}:{n.id[2:]}" + ("[]" if n.multi_valued else "")
            lines.append(f'  "{n.id}" [label="{label}"];')
        for e in self.edges:
            lines.append(f'  "{e.a}" -- "{e.b}" [label="{e.kind}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def _attr_nodes(owner_obj: str, parent_id: str, attrs: tuple[AttributeDef, ...], prefix: tuple[str, ...], nodes, edges):
    for a in attrs:
        path = prefix + (a.name,)
        nid = attribute_node(owner_obj, path)
        nodes.append(ErNode(nid, "attribute", parent_id, a.is_multi))
        edges.append(ErEdge(parent_id, nid, "has_attribute"))
        children = a.children if a.is_composite else (a.element.children if a.is_multi and a.element and a.element.is_composite else ())
        if children:
            _attr_nodes(owner_obj, nid, children, path, nodes, edges)


def build_graph(schema: ErSchema) -> ErGraph:
    nodes: list[ErNode] = []
    edges: list[ErEdge] = []
    for e in schema.entities:
        nodes.append(ErNode(entity_node(e.name), "entity"))
    for e in schema.entities:
        if e.superclass is not None:
            edges.append(ErEdge(entity_node(e.superclass), entity_node(e.name), "isa"))
        _attr_nodes(e.name, entity_node(e.name), e.attributes, (), nodes, edges)
    for r in schema.relationships:
        rid = relationship_node(r.name)
        nodes.append(ErNode(rid, "relationship"))
        weak = schema.identified_entity(r.name)
        for p in r.participants:
            kind = "identifies" if p.entity == weak else "participates"
            edge = ErEdge(entity_node(p.entity), rid, kind)
            if edge not in edges:
                edges.append(edge)
        _attr_nodes(r.name, rid, r.attributes, (), nodes, edges)
    return ErGraph(tuple(nodes), tuple(edges))


def is_connected(graph: ErGraph, nodes: Iterable[str]) -> bool:
    """True iff the subgraph induced by ``nodes`` is connected (empty set counts as connected)."""
    ids = set(nodes)
    for n in ids:
        if not graph.has_node(n):
            raise MappingError(f"unknown node {n}")
    if not ids:
        return True
    start = next(iter(ids))
    seen = {start}
    todo = deque([start])
    adj = graph.adjacency
    while todo:
        cur = todo.popleft()
        for nb in adj[cur]:
            if nb in ids and nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return len(seen) == len(ids)


def components(graph: ErGraph, nodes: Iterable[str]) -> list[set[str]]:
    ids = set(nodes)
    out = []
    while ids:
        start = min(ids)
        seen = {start}
        todo = deque([start])
        while todo:
            cur = todo.popleft()
            for nb in graph.adjacency[cur]:
                if nb in ids and nb not in seen:
                    seen.add(nb)
                    todo.append(nb)
        out.append(seen)
        ids -= seen
    return out
