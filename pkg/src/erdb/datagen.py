"""Seeded random datasets for any schema (used by property tests and the CLI)."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .model import AttributeDef, ErSchema
from .values import Dataset, RelInstance, is_concrete, key_of, normalize_dataset

WORDS = ("ash", "birch", "cedar", "elm", "fir", "oak", "pine", "yew")


@dataclass
class GenConfig:
    instances: int = 6  # per hierarchy root
    weak_per_owner: int = 2
    links: float = 1.5  # relationship instances per participant instance (upper bound)
    absent: float = 0.15  # probability of an absent optional value
    max_elements: int = 3


def random_scalar(rng: random.Random, type_: str, key: bool = False) -> object:
    if type_ in ("int", "bigint"):
        return rng.randint(0, 1000 if key else 6)
    if type_ == "float":
        return rng.choice((0.5, 1.25, 2.0, 3.75, 10.0))
    if type_ == "text":
        return rng.choice(WORDS) + (str(rng.randint(0, 999)) if key else "")
    if type_ == "bool":
        return rng.random() < 0.5
    if type_ == "date":
        return f"2024-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
    raise ValueError(type_)


def random_value(rng: random.Random, a: AttributeDef, cfg: GenConfig) -> object:
    if a.is_scalar:
        if rng.random() < cfg.absent:
            return None
        return random_scalar(rng, a.type or "")
    if a.is_composite:
        return {c.name: random_value(rng, c, cfg) for c in a.children}
    assert a.element is not None
    out: list = []
    seen: set = set()
    for _ in range(rng.randint(0, cfg.max_elements)):
        el = random_element(rng, a.element)
        marker = repr(el)
        if marker not in seen:
            seen.add(marker)
            out.append(el)
    return out


def random_element(rng: random.Random, a: AttributeDef) -> object:
    if a.is_scalar:
        return random_scalar(rng, a.type or "")
    return {c.name: random_element(rng, c) if not c.is_multi else [] for c in a.children}


def _fresh_key(rng: random.Random, attrs: list[AttributeDef], used: set) -> tuple:
    for _ in range(1000):
        k = tuple(random_scalar(rng, a.type or "", key=True) for a in attrs)
        if k not in used:
            used.add(k)
            return k
    raise RuntimeError("key space exhausted")


def generate(schema: ErSchema, seed: int = 0, cfg: GenConfig | None = None) -> Dataset:
    """Random conformed dataset respecting keys, ownership, and cardinalities."""
    cfg = cfg or GenConfig()
    rng = random.Random(seed)
    ents: dict[str, list[dict]] = {}
    done: set[str] = set()

    def fill(cls: str, keyvals: dict) -> dict:
        doc = dict(keyvals)
        for name, (_, a) in schema.doc_fields(cls).items():
            if name not in doc:
                doc[name] = random_value(rng, a, cfg)
        return doc

    def emit(root: str) -> None:
        e = schema.entity(root)
        concrete = [c for c in schema.descendants(root) if is_concrete(schema, c)]
        own_keys = [a for a in e.key_attributes]
        if e.weak_owner is None:
            used: set = set()
            n = rng.randint(max(0, cfg.instances - 3), cfg.instances + 3)
            for _ in range(n):
                k = _fresh_key(rng, own_keys, used)
                cls = rng.choice(concrete)
                ents.setdefault(cls, []).append(fill(cls, {a.name: v for a, v in zip(own_keys, k)}))
            return
        owner = e.weak_owner
        owner_docs = [(c, d) for c in schema.descendants(owner) for d in ents.get(c, [])]
        closure = schema.key_closure(owner)
        for oc, od in owner_docs:
            used = set()
            for _ in range(rng.randint(0, cfg.weak_per_owner)):
                k = _fresh_key(rng, own_keys, used)
                kv = {a: od[a] for _, a in closure}
                kv.update({a.name: v for a, v in zip(own_keys, k)})
                cls = rng.choice(concrete)
                ents.setdefault(cls, []).append(fill(cls, kv))

    pending = [e.name for e in schema.entities if e.superclass is None]
    while pending:
        progressed = False
        for root in list(pending):
            owner = schema.entity(root).weak_owner
            if owner is None or schema.root(owner) in done:
                emit(root)
                done.add(root)
                pending.remove(root)
                progressed = True
        if not progressed:
            raise ValueError("cyclic weak ownership")
    ds = Dataset(ents, {})
    rels: dict[str, list[RelInstance]] = {}
    for r in schema.relationships:
        if schema.is_identifying(r.name):
            continue
        pools = []
        for p in r.participants:
            pools.append([key_of(schema, c, d) for c in schema.descendants(p.entity) for d in ents.get(c, [])])
        if any(not pool for pool in pools):
            continue
        target = int(cfg.links * max(len(pool) for pool in pools))
        seen: set = set()
        ones: list[dict] = [dict() for _ in r.participants]
        out = []
        for _ in range(rng.randint(0, max(target, 1))):
            keys = tuple(rng.choice(pool) for pool in pools)
            if keys in seen:
                continue
            ok = True
            for i, p in enumerate(r.participants):
                if p.cardinality == "one":
                    others = tuple(k for j, k in enumerate(keys) if j != i)
                    if others in ones[i] and ones[i][others] != keys[i]:
                        ok = False
            if not ok:
                continue
            for i, p in enumerate(r.participants):
                if p.cardinality == "one":
                    ones[i][tuple(k for j, k in enumerate(keys) if j != i)] = keys[i]
            seen.add(keys)
            out.append(RelInstance(keys, {a.name: random_value(rng, a, cfg) for a in r.attributes}))
        if out:
            rels[r.name] = out
    ds.relationships = rels
    return normalize_dataset(schema, ds)


def random_statement(schema: ErSchema, ds: Dataset, rng: random.Random, cfg: GenConfig | None = None):
    """A random bound DML statement against ``ds``; a fair share of them must fail
    (duplicate keys, missing instances, cardinality violations)."""
    from .erql.binder import (
        BoundDelete,
        BoundDeleteRelationship,
        BoundInsertEntity,
        BoundInsertRelationship,
        BoundPurge,
        BoundSet,
        BoundUpdate,
    )
    from .values import conform_doc, conform_rel_attrs

    cfg = cfg or GenConfig()
    existing = [(c, d) for c, docs in ds.entities.items() for d in docs]
    concrete = [e.name for e in schema.entities if is_concrete(schema, e.name)]
    kind = rng.choice(("insert", "insert", "link", "link", "unlink", "update", "update", "delete", "purge"))
    if kind == "insert" or not existing:
        cls = rng.choice(concrete)
        e = schema.entity(cls)
        same = [d for c, d in existing if schema.root(c) == schema.root(cls)]
        if same and rng.random() < 0.3:
            # reuse the key of an existing instance of the same hierarchy
            src = rng.choice(same)
            keyvals = {a: src[a] for _, a in schema.key_closure(cls)}
        else:
            keyvals = {a.name: random_scalar(rng, a.type or "", key=True) for _, a in schema.key_attributes(cls)}
        if e.weak_owner is not None:
            owners = [d for c, d in existing if c in schema.descendants(e.weak_owner)]
            if owners and rng.random() < 0.85:
                od = rng.choice(owners)
                for _, a in schema.key_closure(e.weak_owner):
                    keyvals[a] = od[a]
        doc = dict(keyvals)
        for name, (_, a) in schema.doc_fields(cls).items():
            if name not in doc:
                doc[name] = random_value(rng, a, cfg)
        doc = conform_doc(schema, cls, doc)
        return BoundInsertEntity(cls, doc, key_of(schema, cls, doc))
    rels = [r for r in schema.relationships if not schema.is_identifying(r.name)]
    if kind in ("link", "unlink") and rels:
        r = rng.choice(rels)
        if kind == "unlink" and ds.relationships.get(r.name) and rng.random() < 0.8:
            return BoundDeleteRelationship(r.name, rng.choice(ds.relationships[r.name]).keys)
        keys = []
        for p in r.participants:
            pool = [key_of(schema, c, d) for c, d in existing if c in schema.descendants(p.entity)]
            keys.append(rng.choice(pool) if pool and rng.random() < 0.9 else _fresh_key(rng, [a for _, a in schema.key_attributes(p.entity)], set()))
        keys = tuple(keys)
        if kind == "unlink":
            return BoundDeleteRelationship(r.name, keys)
        attrs = conform_rel_attrs(schema, r.name, {a.name: random_value(rng, a, cfg) for a in r.attributes})
        return BoundInsertRelationship(r.name, keys, attrs)
    cls, doc = rng.choice(existing)
    target = rng.choice(schema.ancestors(cls)) if rng.random() < 0.8 else rng.choice(concrete)
    key = key_of(schema, cls, doc)
    if schema.root(target) != schema.root(cls):
        target = cls
    if kind == "delete":
        return BoundDelete(target, key)
    if kind == "purge":
        return BoundPurge(target, key)
    fields = [(o, a) for name, (o, a) in schema.attribute_scope(target).items() if not a.is_key]
    if not fields:
        return BoundDelete(target, key)
    owner, a = rng.choice(fields)
    if a.is_multi:
        op = rng.choice(("=", "+=", "-="))
        if op == "=":
            return BoundUpdate(target, key, (BoundSet(owner, (a.name,), a, "=", _conform(a, random_value(rng, a, cfg))),))
        assert a.element is not None
        cur = doc.get(a.name) or []
        if cur and rng.random() < 0.5:
            v = rng.choice(cur)
        else:
            v = random_element(rng, a.element)
        from .values import conform_value

        return BoundUpdate(target, key, (BoundSet(owner, (a.name,), a, op, conform_value(a.element, v, "")),))
    if a.is_composite and rng.random() < 0.5:
        c = rng.choice(a.children)
        return BoundUpdate(target, key, (BoundSet(owner, (a.name, c.name), c, "=", _conform(c, random_value(rng, c, cfg))),))
    return BoundUpdate(target, key, (BoundSet(owner, (a.name,), a, "=", _conform(a, random_value(rng, a, cfg))),))


def _conform(a: AttributeDef, v):
    from .values import conform_value

    return conform_value(a, v, "")
