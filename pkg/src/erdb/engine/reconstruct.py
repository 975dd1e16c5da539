"""Bulk loading of logical datasets into a store, and the inverse reconstruction."""

from __future__ import annotations

from typing import Any

from ..compiler.rows import applies, element_value, entity_row, fk_values, fold_roles, get_path, mv_rows, rel_row
from ..errors import DataError, ReconstructionError
from ..mapping.design import Container, entity_units
from ..mapping.model import Mapping
from ..model import ErSchema
from ..values import Dataset, RelInstance, is_concrete, key_of, normalize_dataset, sort_key
from .store import Store, create_store


def materialize(schema: ErSchema, mapping: Mapping, ds: Dataset, normalize: bool = True) -> Store:
    """Store holding exactly the instances of ``ds`` laid out by ``mapping``."""
    if normalize:
        ds = normalize_dataset(schema, ds)
    store = create_store(schema, mapping)
    d = store.design
    nested: dict[tuple[str, tuple], list[tuple[Container, dict]]] = {}
    for cls, docs in ds.entities.items():
        homes = [c for c in d.all_containers() if c.kind == "entity" and cls in c.inst_classes]
        mvs = [c for c in d.containers if c.kind == "multivalued" and applies(schema, ("mv", c.mv[0]), cls)]
        for doc in docs:
            key = key_of(schema, cls, doc)
            for c in homes:
                row = entity_row(d, c, cls, doc)
                if c.parent is None:
                    t = store.tables[c.id]
                    if t.get(key) is not None:
                        raise DataError(f"{cls}: duplicate key {list(key)}")
                    t.put(row)
                else:
                    n = len(c.parent.key_columns)
                    nested.setdefault((c.parent.id, key[:n]), []).append((c, row))
            for c in mvs:
                t = store.tables[c.id]
                for r in mv_rows(c, key, get_path(doc, c.mv[1])):
                    t.put(r)
    for (pid, pkey), items in nested.items():
        t = store.tables[pid]
        row = t.get(pkey)
        if row is None:
            raise DataError(f"nested rows without a parent row {list(pkey)} in {pid}")
        for c, el in items:
            row[c.array_column].append(el)
    for (pid, pkey), items in nested.items():
        row = store.tables[pid].get(pkey)
        for c in {c for c, _ in items}:
            row[c.array_column].sort(key=lambda x, c=c: sort_key([x[k] for k in c.key_columns]))
    for name, insts in ds.relationships.items():
        if schema.is_identifying(name):
            continue
        for c, mode in d.rel_hosts.get(name, []):
            t = store.tables[c.id]
            if mode == "fk":
                m, o = fold_roles(d, name)
                for inst in insts:
                    row = t.get(inst.keys[m])
                    if row is not None:
                        row.update(fk_values(d, c, name, inst.keys[o], inst.attrs))
            else:
                for inst in insts:
                    t.put(rel_row(d, c, inst.keys, inst.attrs))
    return store


def _set_path(doc: dict, names: tuple[str, ...], value: Any) -> None:
    cur = doc
    for n in names[:-1]:
        cur = cur.setdefault(n, {})
    cur[names[-1]] = value


def _same(a: Any, b: Any) -> bool:
    return sort_key(_canon(a)) == sort_key(_canon(b))


def _canon(v: Any) -> Any:
    if isinstance(v, list):
        return sorted((_canon(x) for x in v), key=sort_key)
    if isinstance(v, dict):
        return {k: _canon(x) for k, x in v.items()}
    return v


class _Rebuild:
    def __init__(self, store: Store):
        self.store = store
        self.s = store.schema
        self.d = store.design

    def presence(self) -> dict[str, dict[tuple, dict]]:
        """root -> key -> {"rows": [(container, row)], "types": set}"""
        s, d = self.s, self.d
        out: dict[str, dict[tuple, dict]] = {}
        for c in d.containers:
            if c.kind != "entity":
                continue
            fam = out.setdefault(s.root(c.entity), {})
            for row in self.store.tables[c.id].scan():
                key = tuple(row[k] for k in c.key_columns)
                hit = fam.setdefault(key, {"rows": [], "types": set()})
                hit["rows"].append((c, row))
                if c.type_column:
                    hit["types"].add(row.get("type"))
                for e in c.embedded:
                    wf = out.setdefault(s.root(e.entity), {})
                    for el in row.get(e.array_column) or []:
                        wkey = key + tuple(el[k] for k in e.key_columns)
                        wh = wf.setdefault(wkey, {"rows": [], "types": set()})
                        wh["rows"].append((e, el))
        return out

    def signatures(self, root: str) -> dict[frozenset, str]:
        s, d = self.s, self.d
        sigs: dict[frozenset, str] = {}
        for cls in s.descendants(root):
            if not is_concrete(s, cls):
                continue
            sig = frozenset(c.id for c in d.all_containers() if c.kind == "entity" and cls in c.inst_classes)
            sigs.setdefault(sig, cls)
        return sigs

    def classify(self, root: str, key: tuple, hit: dict, sigs: dict) -> str:
        types = hit["types"]
        if types:
            if len(types) > 1:
                raise ReconstructionError(f"inconsistent duplicates: {root} {list(key)} has types {sorted(types)}")
            cls = next(iter(types))
            if not self.s.has_entity(cls) or cls not in self.s.descendants(root):
                raise ReconstructionError(f"{root} {list(key)} has unknown type {cls!r}")
            return cls
        sig = frozenset(c.id for c, _ in hit["rows"])
        cls = sigs.get(sig)
        if cls is None:
            raise ReconstructionError(f"cannot determine the class of {root} {list(key)} from fragments {sorted(sig)}")
        return cls

    def entity_doc(self, cls: str, key: tuple, rows: list[tuple[Container, dict]]) -> dict:
        s, d = self.s, self.d
        doc: dict = {}
        for (_, a), v in zip(s.key_closure(cls), key):
            doc[a] = v
        for u in entity_units(s, cls):
            vals = []
            for c, row in rows:
                if u in c.units:
                    vals.append(row.get(c.units[u][0]))
            if u[0] == "mv":
                for mc in d.containers:
                    if mc.kind == "multivalued" and mc.mv == (u[1], u[2]):
                        t = self.store.tables[mc.id]
                        n = len(key)
                        pks = t.lookup(zip(mc.key_columns[:n], key))
                        vals.append(sorted((element_value(mc, t.rows[pk]) for pk in pks), key=sort_key))
                vals = [list(v) if v is not None else [] for v in vals]
            if not vals:
                raise ReconstructionError(f"no fragment stores {'.'.join((u[1],) + u[2])} for {cls} {list(key)}")
            first = vals[0]
            for v in vals[1:]:
                if not _same(first, v):
                    raise ReconstructionError(
                        f"inconsistent duplicates: {cls} {list(key)} {'.'.join(u[2])} is {first!r} in one copy and {v!r} in another"
                    )
            _set_path(doc, u[2], _canon(first) if u[0] == "mv" else first)
        return doc

    def relationships(self) -> dict[str, list[RelInstance]]:
        s, d = self.s, self.d
        out: dict[str, list[RelInstance]] = {}
        for r in s.relationships:
            if s.is_identifying(r.name):
                continue
            copies: list[dict] = []
            for c, mode in d.rel_hosts.get(r.name, []):
                found: dict = {}
                rattrs = [(u, cols[0]) for u, cols in c.units.items() if u[0] == "rattr" and u[1] == r.name]
                for row in self.store.tables[c.id].scan():
                    if mode == "fk":
                        m, o = fold_roles(d, r.name)
                        fk = tuple(row[col] for col in c.units[("fk", r.name)])
                        if all(v is None for v in fk):
                            continue
                        keys: list = [None, None]
                        keys[m] = tuple(row[k] for k in c.key_columns)
                        keys[o] = fk
                        kt = tuple(keys)
                    else:
                        kt = tuple(
                            tuple(row[col] for col in cols)
                            for cols in _role_cols(s, r)
                        )
                    attrs: dict = {}
                    for u, col in rattrs:
                        _set_path(attrs, u[2], row.get(col))
                    if kt in found and not _same(found[kt], attrs):
                        raise ReconstructionError(f"inconsistent duplicates: {r.name} {[list(k) for k in kt]}")
                    found[kt] = attrs
                copies.append(found)
            if not copies:
                continue
            first = copies[0]
            for other in copies[1:]:
                if set(other) != set(first) or any(not _same(first[k], other[k]) for k in first):
                    raise ReconstructionError(f"inconsistent duplicates: copies of {r.name} disagree")
            insts = []
            for kt, attrs in first.items():
                full = {a.name: None for a in r.attributes}
                full.update(attrs)
                insts.append(RelInstance(kt, full))
            if insts:
                out[r.name] = insts
        return out


def _role_cols(schema: ErSchema, r) -> list[list[str]]:
    from ..mapping.design import role_key_columns

    return [role_key_columns(schema, p.role, p.entity) for p in r.participants]


def reconstruct_entities(store: Store) -> Dataset:
    """Logical dataset stored in ``store``; raises ReconstructionError on disagreeing copies
    or rows that cannot be attributed to a class."""
    rb = _Rebuild(store)
    s = rb.s
    ents: dict[str, list[dict]] = {}
    for root, keys in rb.presence().items():
        sigs = rb.signatures(root)
        for key, hit in keys.items():
            cls = rb.classify(root, key, hit, sigs)
            ents.setdefault(cls, []).append(rb.entity_doc(cls, key, hit["rows"]))
    ds = Dataset(ents, rb.relationships())
    try:
        return normalize_dataset(s, ds)
    except DataError as e:
        raise ReconstructionError(f"stored rows violate the schema: {e}") from None
