"""Fragments, mappings, and their document serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from ..errors import MappingError
from ..model import ErSchema

LAYOUTS = ("flat", "nested", "factorized")


@dataclass(frozen=True)
class Fragment:
    name: str
    layout: str
    nodes: tuple[str, ...]
    nesting_spec: dict | None = None
    factorized_spec: dict | None = None

    def to_doc(self) -> dict:
        d: dict[str, Any] = {"name": self.name, "layout": self.layout, "nodes": sorted(self.nodes)}
        if self.nesting_spec is not None:
            d["nesting_spec"] = _sorted_doc(self.nesting_spec)
        if self.factorized_spec is not None:
            d["factorized_spec"] = _sorted_doc(self.factorized_spec)
        return d


@dataclass(frozen=True)
class Mapping:
    name: str
    schema_fingerprint: str
    fragments: tuple[Fragment, ...]
    notes: tuple[str, ...] = field(default=(), compare=False)

    def fragment(self, name: str) -> Fragment:
        for f in self.fragments:
            if f.name == name:
                return f
        raise MappingError(f"unknown fragment {name}")

    def fragment_names(self) -> list[str]:
        return [f.name for f in self.fragments]

    def signature(self) -> str:
        """Structure-only identity (ignores the mapping name)."""
        return json.dumps([f.to_doc() for f in sorted(self.fragments, key=lambda f: f.name)], sort_keys=True)

    def renamed(self, name: str) -> "Mapping":
        return Mapping(name, self.schema_fingerprint, self.fragments, self.notes)


def _sorted_doc(v: Any) -> Any:
    if isinstance(v, dict):
        return {k: _sorted_doc(v[k]) for k in sorted(v)}
    if isinstance(v, (list, tuple)):
        return [_sorted_doc(x) for x in v]
    return v


def serialize_mapping(m: Mapping) -> str:
    doc = {
        "name": m.name,
        "schema_fingerprint": m.schema_fingerprint,
        "fragments": [f.to_doc() for f in m.fragments],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def deserialize_mapping(text: str, schema: ErSchema) -> Mapping:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as e:
        raise MappingError(f"malformed mapping document: {e}") from None
    if not isinstance(doc, dict):
        raise MappingError("malformed mapping document: expected an object")
    for k in ("name", "schema_fingerprint", "fragments"):
        if k not in doc:
            raise MappingError(f"malformed mapping document: missing {k}")
    if doc["schema_fingerprint"] != schema.fingerprint():
        raise MappingError("schema mismatch: mapping was built for a different schema")
    if not isinstance(doc["fragments"], list) or not isinstance(doc["name"], str):
        raise MappingError("malformed mapping document: bad field types")
    frags = []
    names = set()
    for f in doc["fragments"]:
        if not isinstance(f, dict) or not isinstance(f.get("name"), str):
            raise MappingError("malformed mapping document: fragment needs a name")
        if f["name"] in names:
            raise MappingError(f"malformed mapping document: duplicate fragment {f['name']}")
        names.add(f["name"])
        layout = f.get("layout")
        if layout not in LAYOUTS:
            raise MappingError(f"malformed mapping document: fragment {f['name']} has bad layout {layout!r}")
        nodes = f.get("nodes")
        if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
            raise MappingError(f"malformed mapping document: fragment {f['name']} needs a node list")
        ns, fs = f.get("nesting_spec"), f.get("factorized_spec")
        for spec in (ns, fs):
            if spec is not None and not isinstance(spec, dict):
                raise MappingError(f"malformed mapping document: fragment {f['name']} has a bad spec")
        frags.append(Fragment(f["name"], layout, tuple(sorted(nodes)), ns, fs))
    return Mapping(doc["name"], doc["schema_fingerprint"], tuple(frags))
