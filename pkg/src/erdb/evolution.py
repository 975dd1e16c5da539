"""Schema changes and data migration between mappings of successive schema versions."""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from typing import Any

from .changes import (
    HIERARCHY_STRATEGIES,
    AddAttribute,
    ChangeCardinality,
    DropAttribute,
    MakeMultivalued,
    SchemaChange,
    SetHierarchyStrategy,
)
from .compiler.rows import entity_row, fk_values, fold_roles, mv_rows, rel_row
from .errors import BindError, ErdbError, MappingError, MigrationError, ParseError, ReconstructionError, SchemaError
from .mapping.design import Container, Design, design_of, entity_units
from .mapping.generate import Options, build_mapping, multivalued_attributes, option_lattice
from .mapping.model import Mapping
from .model import AttributeDef, ErSchema, leaf_units, require_valid
from .values import RelInstance, sort_key

# ---- schema changes --------------------------------------------------------------------


def _entity(schema: ErSchema, name: str):
    if not schema.has_entity(name):
        raise SchemaError(f"unknown entity {name}")
    return schema.entity(name)


def _participant_index(schema: ErSchema, rel: str, role: str) -> int:
    r = schema.relationship(rel)
    hits = [i for i, p in enumerate(r.participants) if p.role == role]
    if not hits:
        hits = [i for i, p in enumerate(r.participants) if p.entity == role]
        if len(hits) > 1:
            raise SchemaError(f"{role} plays several roles in {rel}; name the role")
    if not hits:
        raise SchemaError(f"{rel} has no role {role}")
    return hits[0]


def apply_change(schema: ErSchema, change: SchemaChange) -> ErSchema:
    """The schema after one change; raises SchemaError when the change does not apply."""
    if isinstance(change, MakeMultivalued):
        e = _entity(schema, change.entity)
        a = e.attribute(change.attribute)
        if a is None:
            raise SchemaError(f"{e.name} has no attribute {change.attribute}")
        if a.is_key:
            raise SchemaError(f"{e.name}.{a.name} is a key attribute")
        if a.is_multi:
            raise SchemaError(f"{e.name}.{a.name} is already multi-valued")
        if any(c.is_multi for _, c in leaf_units(a.children)):
            raise SchemaError(f"{e.name}.{a.name} contains a multi-valued component")
        new = AttributeDef(a.name, "multi_valued", element=dataclasses.replace(a, is_key=False))
        attrs = tuple(new if x.name == a.name else x for x in e.attributes)
        return require_valid(schema.replace_entity(dataclasses.replace(e, attributes=attrs)))
    if isinstance(change, ChangeCardinality):
        if not schema.has_relationship(change.relationship):
            raise SchemaError(f"unknown relationship {change.relationship}")
        if schema.is_identifying(change.relationship):
            raise SchemaError(f"{change.relationship} identifies a weak entity; its cardinality is fixed")
        if change.cardinality not in ("one", "many"):
            raise SchemaError(f"cardinality must be one or many, not {change.cardinality}")
        r = schema.relationship(change.relationship)
        i = _participant_index(schema, r.name, change.role)
        parts = list(r.participants)
        parts[i] = dataclasses.replace(parts[i], cardinality=change.cardinality)
        return require_valid(schema.replace_relationship(dataclasses.replace(r, participants=tuple(parts))))
    if isinstance(change, SetHierarchyStrategy):
        _entity(schema, change.root)
        if schema.entity(change.root).superclass is not None or not schema.children(change.root):
            raise SchemaError(f"{change.root} is not the root of a hierarchy")
        if change.strategy not in HIERARCHY_STRATEGIES:
            raise SchemaError(f"unknown hierarchy strategy {change.strategy}")
        return schema
    if isinstance(change, AddAttribute):
        e = _entity(schema, change.entity)
        a = change.attribute
        if a.is_key:
            raise SchemaError("cannot add a key attribute to an existing entity")
        scope = set(schema.doc_fields(e.name))
        for d in schema.descendants(e.name):
            scope |= set(schema.doc_fields(d))
        if a.name in scope:
            raise SchemaError(f"{e.name} already has an attribute {a.name}")
        return require_valid(schema.replace_entity(dataclasses.replace(e, attributes=e.attributes + (a,))))
    if isinstance(change, DropAttribute):
        e = _entity(schema, change.entity)
        a = e.attribute(change.attribute)
        if a is None:
            raise SchemaError(f"{e.name} has no attribute {change.attribute}")
        if a.is_key:
            raise SchemaError(f"cannot drop key attribute {e.name}.{a.name}")
        attrs = tuple(x for x in e.attributes if x.name != a.name)
        return require_valid(schema.replace_entity(dataclasses.replace(e, attributes=attrs)))
    raise SchemaError(f"unsupported change {change!r}")


def infer_change(old: ErSchema, new: ErSchema) -> SchemaChange | None:
    """The single change turning ``old`` into ``new`` (None when they are equal)."""
    if old.fingerprint() == new.fingerprint():
        return None
    if old.entity_names() != new.entity_names() or old.relationship_names() != new.relationship_names():
        raise MigrationError("schemas differ in their entity or relationship sets")
    ents = [(a, b) for a, b in zip(old.entities, new.entities) if a != b]
    rels = [(a, b) for a, b in zip(old.relationships, new.relationships) if a != b]
    found: SchemaChange | None = None
    if len(ents) == 1 and not rels:
        a, b = ents[0]
        before = {x.name: x for x in a.attributes}
        after = {x.name: x for x in b.attributes}
        added = [n for n in after if n not in before]
        dropped = [n for n in before if n not in after]
        changed = [n for n in after if n in before and before[n] != after[n]]
        if added == [] and dropped == [] and len(changed) == 1 and after[changed[0]].is_multi:
            found = MakeMultivalued(a.name, changed[0])
        elif len(added) == 1 and not dropped and not changed:
            found = AddAttribute(a.name, after[added[0]])
        elif len(dropped) == 1 and not added and not changed:
            found = DropAttribute(a.name, dropped[0])
    elif len(rels) == 1 and not ents:
        a, b = rels[0]
        diff = [i for i, (p, q) in enumerate(zip(a.participants, b.participants)) if p != q]
        if len(a.participants) == len(b.participants) and len(diff) == 1:
            p, q = a.participants[diff[0]], b.participants[diff[0]]
            if dataclasses.replace(p, cardinality=q.cardinality) == q:
                found = ChangeCardinality(a.name, p.role, q.cardinality)
    if found is None or apply_change(old, found).fingerprint() != new.fingerprint():
        raise MigrationError("schemas differ by more than one supported change")
    return found


# ---- mapping re-derivation ----------------------------------------------------------------


def mapping_options(schema: ErSchema, mapping: Mapping) -> Options | None:
    """Generator options reproducing ``mapping``, if it came from the generator family."""
    sig = mapping.signature()
    for opts in option_lattice(schema):
        try:
            if build_mapping(schema, opts).signature() == sig:
                return opts
        except MappingError:
            continue
    return None


def rederive_mapping(old_schema: ErSchema, new_schema: ErSchema, old_mapping: Mapping, change: SchemaChange | None) -> Mapping:
    """The new-schema mapping built with the same layout choices as ``old_mapping``."""
    opts = mapping_options(old_schema, old_mapping)
    if opts is None:
        raise MigrationError(f"mapping {old_mapping.name} is not a generated layout; supply the new mapping explicitly")
    strategies = dict(opts.strategies)
    old_mvs = set(multivalued_attributes(old_schema))
    all_arrays = bool(old_mvs) and set(opts.arrays) == old_mvs
    arrays = {m for m in opts.arrays if m in set(multivalued_attributes(new_schema))}
    for m in multivalued_attributes(new_schema):
        if m not in old_mvs and all_arrays:
            arrays.add(m)
    if isinstance(change, SetHierarchyStrategy):
        strategies[change.root] = change.strategy
    factorize = {r for r in opts.factorize if new_schema.relationship(r).kind == "many_to_many"}
    new_opts = Options(strategies, frozenset(arrays), opts.fold_weak, frozenset(factorize))
    try:
        return build_mapping(new_schema, new_opts, old_mapping.name)
    except MappingError as e:
        raise MigrationError(f"cannot carry mapping {old_mapping.name} over: {e}") from None


# ---- planning ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MigrationStep:
    target: str  # new container id
    transform: str  # copy | wrap_singleton | explode | fold | union_split | split_union | fk_to_table | table_to_fk
    sources: tuple[str, ...]  # old container ids
    detail: str = ""

    def render(self) -> str:
        src = ", ".join(self.sources) or "nothing"
        return f"{self.target} <- {self.transform}({src})" + (f"  [{self.detail}]" if self.detail else "")


@dataclass
class MigrationPlan:
    old_schema: ErSchema
    new_schema: ErSchema
    old_mapping: Mapping
    new_mapping: Mapping
    change: SchemaChange | None = None
    steps: list[MigrationStep] = field(default_factory=list)

    def render(self) -> str:
        if not self.steps:
            return "nothing to migrate"
        return "\n".join(f"{i}. {s.render()}" for i, s in enumerate(self.steps, 1))

    def step(self, target: str) -> MigrationStep:
        for s in self.steps:
            if s.target == target:
                return s
        raise MigrationError(f"no step targets {target}")

    @property
    def transforms(self) -> list[str]:
        return [s.transform for s in self.steps]


def _units(c: Container) -> list:
    out = list(c.units)
    for e in c.embedded:
        out += list(e.units)
    return out


@dataclass(frozen=True)
class _Ctx:
    change: SchemaChange | None
    mv_attr: AttributeDef | None = None  # attribute made multi-valued, as it was before

    @property
    def new_mv(self) -> tuple | None:
        ch = self.change
        return ("mv", ch.entity, (ch.attribute,)) if isinstance(ch, MakeMultivalued) else None

    def old_units(self, unit: tuple) -> list[tuple]:
        """Old units feeding a new unit ([] for an added attribute)."""
        ch = self.change
        if unit == self.new_mv:
            assert self.mv_attr is not None
            if self.mv_attr.is_composite:
                return [("attr", unit[1], unit[2] + p) for p, _ in leaf_units(self.mv_attr.children)]
            return [("attr", unit[1], unit[2])]
        if isinstance(ch, AddAttribute) and unit[0] in ("attr", "mv") and unit[1] == ch.entity and unit[2][0] == ch.attribute.name:
            return []
        return [unit]


def _ctx(old_schema: ErSchema, change: SchemaChange | None) -> _Ctx:
    if isinstance(change, MakeMultivalued):
        return _Ctx(change, old_schema.entity(change.entity).attribute(change.attribute))
    return _Ctx(change)


def _rel_modes(d: Design, rel: str) -> set[str]:
    return {m for _, m in d.rel_hosts.get(rel, [])}


def _classify(od: Design, nd: Design, c: Container, ctx: _Ctx) -> tuple[str, list[str], str]:
    srcs: list[str] = []

    def add(cid: str) -> None:
        top = od.container(cid)
        while top.parent is not None:
            top = top.parent
        if top.id not in srcs:
            srcs.append(top.id)

    details: list[str] = []
    units = _units(c)
    for u in units:
        for ou in ctx.old_units(u):
            hosts = od.unit_hosts(ou)
            if hosts:
                add(hosts[0].id)
            elif ou[0] == "fk":
                for h, _ in od.rel_hosts.get(ou[1], []):
                    add(h.id)
    presence: list[str] = []
    if c.kind == "entity":
        same = [oc for oc in od.all_containers() if oc.id == c.id and oc.kind == "entity"]
        for k in sorted(c.inst_classes):
            for oc in same + list(od.all_containers()):
                if oc.kind == "entity" and k in oc.inst_classes:
                    top = oc
                    while top.parent is not None:
                        top = top.parent
                    if top.id not in presence:
                        presence.append(top.id)
                    break
        srcs[:] = presence + [x for x in srcs if x not in presence]
    elif c.kind == "multivalued":
        for ou in ctx.old_units(("mv", c.mv[0], c.mv[1])):
            for h in od.unit_hosts(ou)[:1]:
                add(h.id)
        for oc in od.containers:
            if oc.kind == "multivalued" and oc.mv == c.mv:
                add(oc.id)
    else:
        for h, _ in od.rel_hosts.get(c.relationship, []):
            add(h.id)
    change, nmv = ctx.change, ctx.new_mv
    if isinstance(change, AddAttribute):
        added = [u for u in units if u[0] in ("attr", "mv") and u[1] == change.entity and u[2][0] == change.attribute.name]
        if added:
            details.append(f"adds {change.entity}.{change.attribute.name} as absent")
    if isinstance(change, DropAttribute):
        for h in srcs:
            oc = od.container(h)
            if any(u[1] == change.entity and u[0] in ("attr", "mv") and u[2][0] == change.attribute for u in _units(oc)):
                details.append(f"drops {change.entity}.{change.attribute}")
                break
    # change-specific transforms take priority
    if nmv is not None and (nmv in units or (c.kind == "multivalued" and ("mv", c.mv[0], c.mv[1]) == nmv)):
        col = c.units[nmv][0] if nmv in c.units else c.id
        return "wrap_singleton", srcs, "; ".join([col] + details)
    for u in units:
        if u[0] == "fk" and "fk" not in _rel_modes(od, u[1]):
            return "table_to_fk", srcs, "; ".join([f"{u[1]} key"] + details)
    if c.kind == "relationship" and "fk" in _rel_modes(od, c.relationship) and not (_rel_modes(od, c.relationship) - {"fk"}):
        return "fk_to_table", srcs, "; ".join([c.relationship] + details)
    if c.kind == "multivalued":
        old_exploded = [oc for oc in od.containers if oc.kind == "multivalued" and oc.mv == c.mv]
        return ("copy" if old_exploded else "explode"), srcs, "; ".join(details)
    if c.kind == "entity":
        for u in units:
            if u[0] == "mv" and not od.unit_hosts(u) and u != nmv and ctx.old_units(u):
                return "fold", srcs, "; ".join([".".join((u[1],) + u[2])] + details)
        for e in c.embedded:
            if not od.is_embedded_only(e.entity):
                return "fold", srcs, "; ".join([e.entity] + details)
        if c.parent is None and od.is_embedded_only(c.entity) and not nd.is_embedded_only(c.entity):
            return "explode", srcs, "; ".join([c.entity] + details)
        ents = [x for x in srcs if od.container(x).kind == "entity"]
        if len(ents) > 1:
            return "union_split", srcs, "; ".join(details)
        if ents and od.container(ents[0]).inst_classes > c.inst_classes:
            return "split_union", srcs, "; ".join(details)
    return "copy", srcs, "; ".join(details)


def plan_migration(
    old_schema: ErSchema,
    new_schema: ErSchema,
    old_mapping: Mapping,
    new_mapping: Mapping | None = None,
    change: SchemaChange | None = None,
) -> MigrationPlan:
    """Ordered container transforms turning an ``old_mapping`` store into a ``new_mapping`` one."""
    if change is None:
        change = infer_change(old_schema, new_schema)
    elif apply_change(old_schema, change).fingerprint() != new_schema.fingerprint():
        raise MigrationError("the change does not turn the old schema into the new one")
    if new_mapping is None:
        new_mapping = rederive_mapping(old_schema, new_schema, old_mapping, change)
    if new_mapping.schema_fingerprint != new_schema.fingerprint():
        raise MigrationError("schema mismatch: the new mapping was built for another schema")
    plan = MigrationPlan(old_schema, new_schema, old_mapping, new_mapping, change)
    if old_schema.fingerprint() == new_schema.fingerprint() and old_mapping.signature() == new_mapping.signature():
        return plan
    try:
        od = design_of(old_schema, old_mapping)
        nd = design_of(new_schema, new_mapping)
    except MappingError as e:
        raise MigrationError(str(e)) from None
    ctx = _ctx(old_schema, change)
    for c in nd.containers:
        t, srcs, detail = _classify(od, nd, c, ctx)
        plan.steps.append(MigrationStep(c.id, t, tuple(srcs), detail))
    return plan


# ---- execution --------------------------------------------------------------------------


def _singleton(old_attr: AttributeDef, v: Any) -> list:
    if old_attr.is_composite:
        if v is None or all(x is None for _, x in _flat(v, old_attr)):
            return []
        return [v]
    return [] if v is None else [v]


def _flat(v: Any, a: AttributeDef):
    for path, _ in leaf_units(a.children):
        cur = v
        for n in path:
            cur = cur.get(n) if isinstance(cur, dict) else None
        yield path, cur


class _OldData:
    """Row-level reader of the old store: instances by class, unit values, relationship instances."""

    def __init__(self, store):
        from .engine.reconstruct import _Rebuild

        self.store = store
        self.rb = _Rebuild(store)
        self.s = store.schema
        self.d = store.design
        self.instances: dict[str, list[tuple[tuple, dict]]] = {}  # class -> [(key, hit)]
        for root, keys in self.rb.presence().items():
            sigs = self.rb.signatures(root)
            for key, hit in keys.items():
                cls = self.rb.classify(root, key, hit, sigs)
                self.instances.setdefault(cls, []).append((key, hit))
        self.rels = self.rb.relationships()

    def value(self, unit: tuple, key: tuple, hit: dict) -> Any:
        for c, row in hit["rows"]:
            if unit in c.units:
                v = row.get(c.units[unit][0])
                return list(v) if unit[0] == "mv" and v is not None else v
        if unit[0] == "mv":
            from .compiler.rows import element_value

            for mc in self.d.containers:
                if mc.kind == "multivalued" and mc.mv == (unit[1], unit[2]):
                    t = self.store.tables[mc.id]
                    pks = t.lookup(zip(mc.key_columns[: len(key)], key))
                    return [element_value(mc, t.rows[pk]) for pk in pks]
            return []
        return None


def _set(doc: dict, path: tuple, v: Any) -> None:
    cur = doc
    for n in path[:-1]:
        cur = cur.setdefault(n, {})
    cur[path[-1]] = v


def _check_cardinalities(schema: ErSchema, rels: dict[str, list[RelInstance]], only: str | None) -> None:
    for r in schema.relationships:
        if only is not None and r.name != only:
            continue
        for i, p in enumerate(r.participants):
            if p.cardinality != "one":
                continue
            seen: dict[tuple, set] = {}
            for inst in rels.get(r.name, []):
                others = tuple(k for j, k in enumerate(inst.keys) if j != i)
                seen.setdefault(others, set()).add(inst.keys[i])
            bad = sorted((k for k, v in seen.items() if len(v) > 1), key=sort_key)
            if bad:
                who = ", ".join(str([list(x) for x in k]) if len(k) > 1 else str(list(k[0])) for k in bad)
                side = "/".join(q.role for j, q in enumerate(r.participants) if j != i)
                raise MigrationError(
                    f"{r.name}: tightening {p.role} to one is violated by {side} {who}"
                )


def execute_migration(store, plan: MigrationPlan):
    """Store of ``plan.new_mapping`` holding the migrated instances of ``store``."""
    from .engine.store import create_store

    if store.mapping.signature() != plan.old_mapping.signature():
        raise MigrationError("schema mismatch: the store does not use the plan's old mapping")
    s_new = plan.new_schema
    new_store = create_store(s_new, plan.new_mapping)
    if not plan.steps:
        for cid, t in store.tables.items():
            for row in t.scan():
                new_store.tables[cid].put(copy.deepcopy(row))
        return new_store
    try:
        old = _OldData(store)
    except ReconstructionError as e:
        raise MigrationError(f"old store is inconsistent: {e}") from None
    ctx = _ctx(plan.old_schema, plan.change)
    change, nmv = ctx.change, ctx.new_mv
    nd = new_store.design
    od = store.design
    rels = {}
    for name, insts in old.rels.items():
        rels[name] = list(insts)
    if isinstance(change, ChangeCardinality):
        _check_cardinalities(s_new, rels, change.relationship)
    old_mv_attr = ctx.mv_attr

    docs: dict[tuple[str, tuple], dict] = {}

    def doc_of(cls: str, key: tuple, hit: dict) -> dict:
        got = docs.get((cls, key))
        if got is not None:
            return got
        doc: dict = {}
        for (_, a), v in zip(s_new.key_closure(cls), key):
            doc[a] = v
        for u in entity_units(s_new, cls):
            if u == nmv:
                assert old_mv_attr is not None
                if old_mv_attr.is_composite:
                    v: Any = {}
                    for p, _ in leaf_units(old_mv_attr.children):
                        _set(v, p, old.value(("attr", u[1], u[2] + p), key, hit))
                else:
                    v = old.value(("attr", u[1], u[2]), key, hit)
                val: Any = _singleton(old_mv_attr, v)
            elif not ctx.old_units(u):
                val = [] if u[0] == "mv" else None
            else:
                val = old.value(u, key, hit)
            _set(doc, u[2], val)
        docs[(cls, key)] = doc
        return doc

    fk_index: dict[str, dict[tuple, RelInstance]] = {}

    def fk_of(rel: str, many_key: tuple):
        idx = fk_index.get(rel)
        if idx is None:
            m, _ = fold_roles(nd, rel)
            idx = {inst.keys[m]: inst for inst in rels.get(rel, [])}
            fk_index[rel] = idx
        return idx.get(many_key)

    weak_by_parent: dict[str, dict[tuple, list[tuple[str, tuple, dict]]]] = {}

    def weak_rows(e: Container, parent_key: tuple) -> list[dict]:
        idx = weak_by_parent.get(e.id)
        if idx is None:
            idx = {}
            n = len(e.parent.key_columns)
            for cls in sorted(e.inst_classes):
                for key, hit in old.instances.get(cls, []):
                    idx.setdefault(key[:n], []).append((cls, key, hit))
            weak_by_parent[e.id] = idx
        out = [build_entity_row(e, cls, key, hit) for cls, key, hit in idx.get(parent_key, [])]
        out.sort(key=lambda r: sort_key([r[k] for k in e.key_columns]))
        return out

    def build_entity_row(c: Container, cls: str, key: tuple, hit: dict) -> dict:
        row = entity_row(nd, c, cls, doc_of(cls, key, hit))
        for u in c.units:
            if u[0] == "fk":
                m, o = fold_roles(nd, u[1])
                inst = fk_of(u[1], key)
                if inst is not None:
                    row.update(fk_values(nd, c, u[1], inst.keys[o], inst.attrs))
        for e in c.embedded:
            row[e.array_column] = weak_rows(e, key)
        return row

    for step in plan.steps:
        c = nd.container(step.target)
        t = new_store.tables[c.id]
        try:
            if _same_layout(od, c, step, change):
                for row in store.tables[c.id].scan():
                    t.put(copy.deepcopy(row))
                continue
            if c.kind == "entity":
                for cls in sorted(c.inst_classes):
                    for key, hit in old.instances.get(cls, []):
                        t.put(build_entity_row(c, cls, key, hit))
            elif c.kind == "multivalued":
                owner, path = c.mv
                for cls in s_new.descendants(owner):
                    for key, hit in old.instances.get(cls, []):
                        vals = doc_of(cls, key, hit)
                        for n in path:
                            vals = vals.get(n) if isinstance(vals, dict) else None
                        for r in mv_rows(c, key, vals or []):
                            t.put(r)
            else:
                for inst in rels.get(c.relationship, []):
                    t.put(rel_row(nd, c, inst.keys, inst.attrs))
        except MigrationError:
            raise
        except ErdbError as e:
            raise MigrationError(f"{step.transform} into {step.target} failed: {e}") from None
    return new_store


def _same_layout(od: Design, c: Container, step: MigrationStep, change) -> bool:
    """Whether the target container is unchanged and its rows can be copied verbatim."""
    if step.transform != "copy" or step.sources != (c.id,):
        return False
    try:
        o = od.container(c.id)
    except MappingError:
        return False
    if o.parent is not None or o.kind != c.kind or o.columns != c.columns or o.units != c.units:
        return False
    if o.inst_classes != c.inst_classes or [e.id for e in o.embedded] != [e.id for e in c.embedded]:
        return False
    if isinstance(change, ChangeCardinality):
        touched = {u[1] for u in _units(c) if u[0] in ("fk", "rattr")} | ({c.relationship} if c.relationship else set())
        if change.relationship in touched:
            return False
    return True


# ---- query revalidation ----------------------------------------------------------------------


@dataclass(frozen=True)
class QueryStatus:
    query: str
    status: str  # ok | needs_edit
    diagnostic: str = ""


def _paths(v: Any, out: list) -> None:
    from .erql.binder import BoundPath

    if isinstance(v, BoundPath):
        out.append(v)
    elif dataclasses.is_dataclass(v) and not isinstance(v, type):
        for f in dataclasses.fields(v):
            _paths(getattr(v, f.name), out)
    elif isinstance(v, (list, tuple)):
        for x in v:
            _paths(x, out)


def revalidate_queries(queries, new_schema: ErSchema, old_schema: ErSchema | None = None) -> list[QueryStatus]:
    """Status of each saved query under ``new_schema``: ok iff it binds with the same result shape."""
    from .erql import bind, parse_query

    out = []
    for q in queries:
        text = q if isinstance(q, str) else str(q)
        before = None
        if old_schema is not None:
            try:
                before = bind(old_schema, parse_query(text))
            except (ParseError, BindError):
                before = None
        hint = ""
        if before is not None:
            used: list = []
            _paths(before, used)
            for p in used:
                if p.scope == "entity" and not p.attr.is_multi and new_schema.has_entity(p.owner):
                    na = new_schema.entity(p.owner).attribute(p.names[0])
                    if na is not None and na.is_multi and len(p.names) >= 1:
                        hint = f"{p.names[0]} is now multi-valued; wrap in unnest(…)"
                        break
        try:
            after = bind(new_schema, parse_query(text))
        except (ParseError, BindError) as e:
            out.append(QueryStatus(text, "needs_edit", hint or str(e)))
            continue
        if before is not None and before.shape != after.shape:
            diff = [f"{a[0]}: {a[1]} -> {b[1]}" for a, b in zip(before.shape, after.shape) if a != b]
            out.append(QueryStatus(text, "needs_edit", hint or "result shape changed: " + ", ".join(diff)))
            continue
        out.append(QueryStatus(text, "ok"))
    return out


__all__ = [
    "MigrationPlan",
    "MigrationStep",
    "QueryStatus",
    "apply_change",
    "execute_migration",
    "infer_change",
    "mapping_options",
    "plan_migration",
    "rederive_mapping",
    "revalidate_queries",
]
