"""Logical values, instance documents, datasets, and canonical ordering."""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable

from .errors import DataError
from .model import AttributeDef, ErSchema


def sort_key(v: Any) -> tuple:
    """Total order over logical values: absent < bool < number < text < array < composite."""
    if v is None:
        return (0,)
    if isinstance(v, bool):
        return (1, v)
    if isinstance(v, (int, float)):
        return (2, v)
    if isinstance(v, str):
        return (3, v)
    if isinstance(v, (list, tuple)):
        return (4, tuple(sort_key(x) for x in v))
    if isinstance(v, dict):
        return (5, tuple((k, sort_key(v[k])) for k in sorted(v)))
    raise TypeError(f"not a logical value: {v!r}")


def canonical_value(v: Any) -> Any:
    """Recursively sort every array so equal multisets compare equal."""
    if isinstance(v, (list, tuple)):
        items = [canonical_value(x) for x in v]
        items.sort(key=sort_key)
        return items
    if isinstance(v, dict):
        return {k: canonical_value(x) for k, x in v.items()}
    return v


def canonical_json(v: Any) -> str:
    return json.dumps(v, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def fingerprint_of(v: Any) -> str:
    return hashlib.sha256(canonical_json(v).encode()).hexdigest()


# ---- scalar conformance -------------------------------------------------------


def conform_scalar(type_: str, v: Any, where: str) -> Any:
    if v is None:
        return None
    if type_ in ("int", "bigint"):
        if isinstance(v, bool) or not isinstance(v, int):
            raise DataError(f"{where}: expected {type_}, got {v!r}")
        return v
    if type_ == "float":
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise DataError(f"{where}: expected float, got {v!r}")
        f = float(v)
        if not math.isfinite(f):
            raise DataError(f"{where}: non-finite float")
        return f
    if type_ == "text":
        if not isinstance(v, str):
            raise DataError(f"{where}: expected text, got {v!r}")
        return v
    if type_ == "bool":
        if not isinstance(v, bool):
            raise DataError(f"{where}: expected bool, got {v!r}")
        return v
    if type_ == "date":
        if isinstance(v, _dt.date):
            return v.isoformat()
        if isinstance(v, str):
            try:
                return _dt.date.fromisoformat(v).isoformat()
            except ValueError:
                pass
        raise DataError(f"{where}: expected date (YYYY-MM-DD), got {v!r}")
    raise DataError(f"{where}: unknown type {type_}")


def conform_value(attr: AttributeDef, v: Any, where: str) -> Any:
    """Conform a value to an attribute: composites become full dicts, multi-valued
    attributes become sorted duplicate-free lists (absent → [])."""
    where = f"{where}.{attr.name}" if where else attr.name
    if attr.is_scalar:
        return conform_scalar(attr.type or "", v, where)
    if attr.is_composite:
        if v is None:
            v = {}
        if not isinstance(v, dict):
            raise DataError(f"{where}: expected composite document, got {v!r}")
        unknown = set(v) - {c.name for c in attr.children}
        if unknown:
            raise DataError(f"{where}: unknown field {sorted(unknown)[0]}")
        return {c.name: conform_value(c, v.get(c.name), where) for c in attr.children}
    assert attr.element is not None
    if v is None:
        return []
    if not isinstance(v, (list, tuple)):
        raise DataError(f"{where}: expected array for multi-valued attribute, got {v!r}")
    items = [conform_value(attr.element, x, "")  for x in v]
    if any(x is None for x in items):
        raise DataError(f"{where}: array elements cannot be absent")
    items.sort(key=sort_key)
    for a, b in zip(items, items[1:]):
        if sort_key(a) == sort_key(b):
            raise DataError(f"{where}: duplicate element {a!r}")
    return items


def empty_value(attr: AttributeDef) -> Any:
    if attr.is_scalar:
        return None
    if attr.is_composite:
        return {c.name: empty_value(c) for c in attr.children}
    return []


# ---- datasets -----------------------------------------------------------------


@dataclass
class RelInstance:
    """One relationship instance: a key tuple per participant (in participant order)."""

    keys: tuple[tuple, ...]
    attrs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"keys": [list(k) for k in self.keys], "attrs": self.attrs}

    @classmethod
    def from_json(cls, d: dict) -> "RelInstance":
        return cls(tuple(tuple(k) for k in d.get("keys", [])), dict(d.get("attrs", {})))


@dataclass
class Dataset:
    """Logical contents: entity documents keyed by most-specific class, relationship instances
    by relationship name. Identifying relationships are implied by weak-entity keys."""

    entities: dict[str, list[dict]] = field(default_factory=dict)
    relationships: dict[str, list[RelInstance]] = field(default_factory=dict)

    def count(self) -> int:
        return sum(len(v) for v in self.entities.values()) + sum(len(v) for v in self.relationships.values())

    def copy(self) -> "Dataset":
        import copy

        return copy.deepcopy(self)


def conform_doc(schema: ErSchema, entity: str, doc: dict) -> dict:
    """Validate and complete an instance document for class ``entity``."""
    if not isinstance(doc, dict):
        raise DataError(f"{entity}: instance document must be a composite")
    fields = schema.doc_fields(entity)
    unknown = [k for k in doc if k not in fields]
    if unknown:
        owner = schema.subclass_owner(entity, unknown[0])
        if owner:
            raise DataError(f"{entity}: {unknown[0]} belongs to subclass {owner}")
        raise DataError(f"{entity}: unknown attribute {unknown[0]}")
    out = {}
    for name, (_, attr) in fields.items():
        out[name] = conform_value(attr, doc.get(name), entity)
    for owner, attr in schema.key_attributes(entity):
        if out[attr.name] is None:
            raise DataError(f"{entity}: key attribute {attr.name} is required")
    return out


def key_of(schema: ErSchema, entity: str, doc: dict) -> tuple:
    return tuple(doc[a] for _, a in schema.key_closure(entity))


def conform_key(schema: ErSchema, entity: str, key: Iterable[Any]) -> tuple:
    key = tuple(key)
    attrs = schema.key_attributes(entity)
    if len(key) != len(attrs):
        raise DataError(f"{entity}: key needs {len(attrs)} values, got {len(key)}")
    out = tuple(conform_scalar(a.type or "", v, f"{entity}.{a.name}") for (_, a), v in zip(attrs, key))
    if any(v is None for v in out):
        raise DataError(f"{entity}: key values cannot be absent")
    return out


def conform_rel_attrs(schema: ErSchema, rel: str, attrs: dict | None) -> dict:
    r = schema.relationship(rel)
    attrs = attrs or {}
    if not isinstance(attrs, dict):
        raise DataError(f"{rel}: descriptive values must be a composite")
    names = {a.name for a in r.attributes}
    unknown = [k for k in attrs if k not in names]
    if unknown:
        raise DataError(f"{rel}: unknown attribute {unknown[0]}")
    return {a.name: conform_value(a, attrs.get(a.name), rel) for a in r.attributes}


def is_concrete(schema: ErSchema, entity: str) -> bool:
    """False for classes whose total specialization forbids direct instances."""
    kids = schema.children(entity)
    return not (kids and any(schema.entity(k).total for k in kids))


class InstanceIndex:
    """Lookup structure over a conformed dataset: key → (class, doc) per hierarchy root."""

    def __init__(self, schema: ErSchema, ds: Dataset):
        self.schema = schema
        self.by_root: dict[str, dict[tuple, tuple[str, dict]]] = {}
        for cls, docs in ds.entities.items():
            root = schema.root(cls)
            idx = self.by_root.setdefault(root, {})
            for d in docs:
                idx[key_of(schema, cls, d)] = (cls, d)

    def lookup(self, entity: str, key: tuple) -> tuple[str, dict] | None:
        hit = self.by_root.get(self.schema.root(entity), {}).get(key)
        if hit is None or hit[0] not in self.schema.descendants(entity):
            return None
        return hit


def normalize_dataset(schema: ErSchema, ds: Dataset) -> Dataset:
    """Conform every document and check keys, ownership, and relationship constraints.

    Returns a new dataset with documents in canonical order."""
    ents: dict[str, list[dict]] = {}
    seen: dict[str, dict[tuple, str]] = {}
    for cls, docs in ds.entities.items():
        if not schema.has_entity(cls):
            raise DataError(f"unknown entity {cls}")
        if docs and not is_concrete(schema, cls):
            raise DataError(f"{cls}: total specialization requires a concrete subclass")
        out = []
        fam = seen.setdefault(schema.root(cls), {})
        for d in docs:
            c = conform_doc(schema, cls, d)
            k = key_of(schema, cls, c)
            if k in fam:
                raise DataError(f"{cls}: duplicate key {list(k)}")
            fam[k] = cls
            out.append(c)
        if out:
            ents[cls] = out
    norm = Dataset({c: ents[c] for c in schema.entity_names() if c in ents}, {})
    index = InstanceIndex(schema, norm)
    for cls, docs in norm.entities.items():
        e = schema.entity(cls)
        if e.weak_owner is None:
            continue
        n = len(schema.key_closure(e.weak_owner))
        for d in docs:
            okey = key_of(schema, cls, d)[:n]
            if index.lookup(e.weak_owner, okey) is None:
                raise DataError(f"{cls}: owner {e.weak_owner} {list(okey)} does not exist")
    for name, insts in ds.relationships.items():
        if not schema.has_relationship(name):
            raise DataError(f"unknown relationship {name}")
        if schema.is_identifying(name):
            if insts:
                raise DataError(f"{name}: identifying relationship instances are implied by keys")
            continue
        r = schema.relationship(name)
        out_r: list[RelInstance] = []
        pairs: set[tuple] = set()
        ones: list[dict[tuple, tuple]] = [dict() for _ in r.participants]
        for inst in insts:
            if len(inst.keys) != len(r.participants):
                raise DataError(f"{name}: expected {len(r.participants)} participant keys")
            keys = tuple(conform_key(schema, p.entity, k) for p, k in zip(r.participants, inst.keys))
            for p, k in zip(r.participants, keys):
                if index.lookup(p.entity, k) is None:
                    raise DataError(f"{name}: {p.role} {list(k)} does not exist")
            if keys in pairs:
                raise DataError(f"{name}: duplicate instance {[list(k) for k in keys]}")
            pairs.add(keys)
            check_cardinality(r, keys, ones)
            out_r.append(RelInstance(keys, conform_rel_attrs(schema, name, inst.attrs)))
        out_r.sort(key=lambda i: sort_key([list(k) for k in i.keys]))
        if out_r:
            norm.relationships[name] = out_r
    for cls in norm.entities:
        norm.entities[cls].sort(key=lambda d, c=cls: sort_key(list(key_of(schema, c, d))))
    norm.relationships = {r: norm.relationships[r] for r in schema.relationship_names() if r in norm.relationships}
    return norm


def check_cardinality(r, keys: tuple, seen: list[dict]) -> None:
    """Participant P with cardinality one: each counterpart combination relates to at most one P."""
    for i, p in enumerate(r.participants):
        if p.cardinality != "one":
            continue
        others = tuple(k for j, k in enumerate(keys) if j != i)
        prev = seen[i].get(others)
        if prev is not None and prev != keys[i]:
            raise DataError(f"{r.name}: cardinality violation, {[list(o) for o in others]} already linked")
        seen[i][others] = keys[i]


def canonical_dataset(schema: ErSchema, ds: Dataset) -> dict:
    """JSON-able canonical form used for equality checks."""
    ents = {}
    for cls in sorted(ds.entities):
        docs = [canonical_value(d) for d in ds.entities[cls]]
        if docs:
            docs.sort(key=lambda d, c=cls: sort_key([d.get(a) for _, a in schema.key_closure(c)]) if schema.has_entity(c) else sort_key(d))
            ents[cls] = docs
    rels = {}
    for name in sorted(ds.relationships):
        insts = [{"keys": [list(k) for k in i.keys], "attrs": canonical_value(i.attrs)} for i in ds.relationships[name]]
        if insts:
            insts.sort(key=sort_key)
            rels[name] = insts
    return {"entities": ents, "relationships": rels}


def datasets_equal(schema: ErSchema, a: Dataset, b: Dataset) -> bool:
    return canonical_json(canonical_dataset(schema, a)) == canonical_json(canonical_dataset(schema, b))


def dataset_diff(schema: ErSchema, a: Dataset, b: Dataset) -> str:
    """Short human-readable description of the first difference (for test messages)."""
    ca, cb = canonical_dataset(schema, a), canonical_dataset(schema, b)
    for part in ("entities", "relationships"):
        for name in sorted(set(ca[part]) | set(cb[part])):
            xa, xb = ca[part].get(name, []), cb[part].get(name, [])
            if xa != xb:
                only_a = [x for x in xa if x not in xb][:2]
                only_b = [x for x in xb if x not in xa][:2]
                return f"{part}.{name}: left-only {only_a} right-only {only_b}"
    return ""
