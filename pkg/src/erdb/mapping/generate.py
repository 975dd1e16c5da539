"""Mapping generators: normalized, nested, hierarchy variants, factorized, and enumeration."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from ..errors import MappingError
from ..graph import attribute_node, entity_node, relationship_node
from ..model import AttributeDef, ErSchema, walk_attributes
from ..values import is_concrete
from .model import Fragment, Mapping

STRATEGIES = ("class_per_subclass", "single_table", "disjoint")


@dataclass
class Options:
    strategies: dict[str, str] = field(default_factory=dict)  # root -> strategy
    arrays: frozenset = frozenset()  # {(owner, path)}
    fold_weak: frozenset = frozenset()
    factorize: frozenset = frozenset()

    def describe(self, schema: ErSchema) -> str:
        parts = []
        for root in sorted(self.strategies):
            if self.strategies[root] != "class_per_subclass":
                parts.append(f"{self.strategies[root]}_{root}")
        all_mv = set(multivalued_attributes(schema))
        if self.arrays and set(self.arrays) == all_mv:
            parts.append("arrays")
        else:
            for owner, path in sorted(self.arrays):
                parts.append(f"array_{owner}_{'_'.join(path)}")
        for w in sorted(self.fold_weak):
            parts.append(f"fold_{w}")
        for r in sorted(self.factorize):
            parts.append(f"factorized_{r}")
        return "+".join(parts) or "normalized"


def multivalued_attributes(schema: ErSchema) -> list[tuple[str, tuple[str, ...]]]:
    """(owner, path) of every multi-valued entity attribute outside other collections."""
    out = []
    for e in schema.entities:
        for path, a in _mv_paths(e.attributes, ()):
            out.append((e.name, path))
    return out


def _mv_paths(attrs, prefix):
    for a in attrs:
        p = prefix + (a.name,)
        if a.is_multi:
            yield p, a
        elif a.is_composite:
            yield from _mv_paths(a.children, p)


def hierarchy_roots(schema: ErSchema) -> list[str]:
    return [e.name for e in schema.entities if e.superclass is None and schema.children(e.name)]


def _attr_nodes(owner: str, attrs: tuple[AttributeDef, ...], skip_mv: set, include_keys: bool = True) -> list[str]:
    out = []
    skipped: list[tuple[str, ...]] = []
    for path, a in walk_attributes(attrs):
        if any(path[: len(s)] == s for s in skipped):
            continue
        if a.is_key and not include_keys:
            continue
        if a.is_multi and (owner, path) in skip_mv:
            skipped.append(path)
            continue
        out.append(attribute_node(owner, path))
    return out


def _check_supported(schema: ErSchema) -> None:
    for r in schema.relationships:
        if not r.is_binary:
            raise MappingError(f"relationship {r.name} is not binary; generators support binary relationships only")
        for path, a in walk_attributes(r.attributes):
            if a.is_multi:
                raise MappingError(f"relationship {r.name} has a multi-valued attribute; generators cannot place it")


class _Builder:
    def __init__(self, schema: ErSchema, opts: Options):
        self.s = schema
        self.o = opts
        self.notes: list[str] = []
        # fragment name -> dict(kind, nodes, spec fields)
        self.frags: dict[str, dict] = {}
        self.order: list[str] = []

    def add(self, name: str, **kw) -> dict:
        if name in self.frags:
            raise MappingError(f"fragment name collision: {name}")
        kw.setdefault("nodes", [])
        kw.setdefault("embedded", [])
        self.frags[name] = kw
        self.order.append(name)
        return kw

    def build(self, name: str) -> Mapping:
        s, o = self.s, self.o
        _check_supported(s)
        for root, strat in o.strategies.items():
            if strat not in STRATEGIES:
                raise MappingError(f"unknown hierarchy strategy {strat}")
            if not s.has_entity(root) or not s.children(root):
                raise MappingError(f"{root} has no subclasses")
        for owner, path in o.arrays:
            if (owner, tuple(path)) not in set(multivalued_attributes(s)):
                raise MappingError(f"{owner}.{'.'.join(path)} is not a multi-valued attribute")
        exploded = {mv for mv in multivalued_attributes(s) if mv not in o.arrays}
        # entity fragments per hierarchy / entity
        self.homes: dict[str, list[str]] = {}  # entity -> fragments hosting its declared attributes
        self.inst: dict[str, list[str]] = {}  # class -> fragments containing a row for it
        for e in s.entities:
            if e.superclass is not None or e.weak_owner is not None:
                continue
            self._hierarchy(e.name, o.strategies.get(e.name, "class_per_subclass"), exploded)
        for e in s.entities:
            if e.weak_owner is not None:
                self._weak(e.name, exploded)
        for owner, path in multivalued_attributes(s):
            if (owner, path) in exploded:
                fname = f"{owner}_{'_'.join(path)}".lower()
                a = _resolve(s, owner, path)
                nodes = [attribute_node(owner, path)]
                if a.element is not None and a.element.is_composite:
                    nodes += [attribute_node(owner, path + p) for p, _ in walk_attributes(a.element.children)]
                self.add(fname, kind="multivalued", nodes=nodes, entity=owner, attribute=".".join(path))
        for r in s.relationships:
            if s.is_identifying(r.name):
                continue
            self._relationship(r.name)
        for rel in sorted(o.factorize):
            self._factorize(rel)
        return self._emit(name)

    def _entity_frag(self, name: str, entity: str, classes: list[str], type_column: bool) -> dict:
        return self.add(name, kind="entity", entity=entity, classes=classes, type_column=type_column)

    def _hierarchy(self, root: str, strategy: str, exploded: set) -> None:
        s = self.s
        fam = s.descendants(root)
        if len(fam) == 1 or strategy == "class_per_subclass":
            for c in fam:
                f = self._entity_frag(c.lower(), c, s.descendants(c), False)
                f["nodes"] += [entity_node(c)] + _attr_nodes(c, s.entity(c).attributes, exploded)
                self.homes.setdefault(c, []).append(c.lower())
                for d in s.descendants(c):
                    self.inst.setdefault(d, []).append(c.lower())
        elif strategy == "single_table":
            f = self._entity_frag(root.lower(), root, fam, True)
            for c in fam:
                f["nodes"] += [entity_node(c)] + _attr_nodes(c, s.entity(c).attributes, exploded)
                self.homes.setdefault(c, []).append(root.lower())
                self.inst.setdefault(c, []).append(root.lower())
        else:
            for c in fam:
                if not is_concrete(s, c):
                    continue
                fname = f"{c.lower()}_only" if c == root else f"{c.lower()}_full"
                f = self._entity_frag(fname, c, [c], False)
                for anc in reversed(s.ancestors(c)):
                    f["nodes"] += [entity_node(anc)] + _attr_nodes(anc, s.entity(anc).attributes, exploded)
                    self.homes.setdefault(anc, []).append(fname)
                self.inst.setdefault(c, []).append(fname)

    def _weak(self, w: str, exploded: set) -> None:
        s = self.s
        e = s.entity(w)
        owner = e.weak_owner
        assert owner is not None and e.identifying is not None
        nodes = [entity_node(w)] + _attr_nodes(w, e.attributes, exploded) + [relationship_node(e.identifying)]
        if w in self.o.fold_weak:
            if s.weak_dependents(w):
                raise MappingError(f"cannot fold {w}: it owns weak entities")
            if s.children(w):
                raise MappingError(f"cannot fold {w}: it has subclasses")
            targets = [
                f for f in self.homes.get(owner, []) if set(s.descendants(owner)) <= set(self.frags[f]["classes"])
            ]
            if len(targets) != 1:
                raise MappingError(f"cannot fold {w}: {owner} instances are not stored in a single fragment")
            f = self.frags[targets[0]]
            f["nodes"] += nodes
            f["embedded"].append(w)
            self.homes[w] = [targets[0]]
            self.inst[w] = [targets[0]]
            for r in s.relationships:
                if s.is_identifying(r.name) or all(p.entity != w for p in r.participants):
                    continue
                others = [p.entity for p in r.participants if p.entity != w]
                if any(s.root(x) != s.root(owner) for x in others):
                    self.notes.append(f"{w} is folded into {owner}; queries joining it through {r.name} need unnest")
            return
        f = self._entity_frag(w.lower(), w, [w], False)
        f["nodes"] += nodes
        self.homes[w] = [w.lower()]
        self.inst[w] = [w.lower()]

    def _relationship(self, rel: str) -> None:
        s = self.s
        r = s.relationship(rel)
        nodes = [relationship_node(rel)] + [attribute_node(rel, p) for p, _ in walk_attributes(r.attributes)]
        fs = r.fold_side()
        if fs is not None and rel not in self.o.factorize:
            many = fs[0].entity
            if many not in self.o.fold_weak:
                hosts = []
                for c in s.descendants(many):
                    for fname in self.inst.get(c, []):
                        fr = self.frags[fname]
                        if fname not in hosts and (set(fr["classes"]) & set(s.descendants(many))):
                            hosts.append(fname)
                # prefer one fragment holding every instance of the many side
                whole = [h for h in hosts if set(s.descendants(many)) <= set(self.frags[h]["classes"])]
                whole.sort(key=lambda h: h not in self.homes.get(many, []))
                for h in whole[:1] or hosts:
                    self.frags[h]["nodes"] += nodes
                if whole or hosts:
                    return
        if rel in self.o.factorize:
            if r.kind != "many_to_many":
                raise MappingError(f"factorization applies to many-to-many relationships ({rel} is {r.kind})")
            return
        self.add(rel.lower(), kind="relationship", nodes=nodes, relationship=rel)

    def _factorize(self, rel: str) -> None:
        s = self.s
        r = s.relationship(rel)
        groups = []
        for p in r.participants:
            own = [
                f
                for f in self.inst.get(p.entity, [])
                if f in self.frags
                and self.frags[f]["kind"] == "entity" and set(self.frags[f]["classes"]) == set(s.descendants(p.entity))
                and self.frags[f]["entity"] == p.entity
            ]
            if not own or self.frags[own[0]]["embedded"] or p.entity in self.o.fold_weak:
                raise MappingError(
                    f"cannot factorize {rel}: {p.entity} is not stored in a fragment of its own (folded hierarchy or embedding)"
                )
            groups.append(own[0])
        if s.root(r.participants[0].entity) == s.root(r.participants[1].entity):
            raise MappingError(f"cannot factorize {rel}: both participants are in one hierarchy")
        if groups[0] == groups[1]:
            raise MappingError(f"cannot factorize {rel}: participants share a fragment")
        lf, rf = self.frags[groups[0]], self.frags[groups[1]]
        name = f"{groups[0]}_{rel.lower()}_{groups[1]}"
        nodes = lf["nodes"] + rf["nodes"] + [relationship_node(rel)]
        nodes += [attribute_node(rel, p) for p, _ in walk_attributes(r.attributes)]
        spec = {
            "relationship": rel,
            "left": {"entity": lf["entity"], "classes": lf["classes"], "type_column": lf["type_column"]},
            "right": {"entity": rf["entity"], "classes": rf["classes"], "type_column": rf["type_column"]},
        }
        pos = min(self.order.index(groups[0]), self.order.index(groups[1]))
        for g in groups:
            del self.frags[g]
            self.order.remove(g)
        self.frags[name] = {"kind": "factorized", "nodes": nodes, "spec": spec, "embedded": []}
        self.order.insert(pos, name)

    def _emit(self, name: str) -> Mapping:
        out = []
        for fname in self.order:
            f = self.frags[fname]
            nodes = tuple(sorted(set(f["nodes"])))
            if f["kind"] == "factorized":
                out.append(Fragment(fname, "factorized", nodes, None, f["spec"]))
                continue
            if f["kind"] == "entity":
                spec = {
                    "kind": "entity",
                    "entity": f["entity"],
                    "classes": list(f["classes"]),
                    "type_column": f["type_column"],
                }
                if f["embedded"]:
                    spec["embedded"] = [{"entity": w} for w in f["embedded"]]
                nested = bool(f["embedded"]) or any(
                    (n[2:].split(".")[0], tuple(n[2:].split(".")[1:])) in self.o.arrays for n in nodes if n.startswith("A:")
                )
            elif f["kind"] == "multivalued":
                spec = {"kind": "multivalued", "entity": f["entity"], "attribute": f["attribute"]}
                nested = False
            else:
                spec = {"kind": "relationship", "relationship": f["relationship"]}
                nested = False
            out.append(Fragment(fname, "nested" if nested else "flat", nodes, spec, None))
        return Mapping(name, self.s.fingerprint(), tuple(out), tuple(self.notes))


def _resolve(schema: ErSchema, owner: str, path: tuple[str, ...]) -> AttributeDef:
    from ..model import resolve_path

    a = resolve_path(schema.entity(owner).attributes, path)
    assert a is not None
    return a


def build_mapping(schema: ErSchema, opts: Options, name: str | None = None) -> Mapping:
    return _Builder(schema, opts).build(name or opts.describe(schema))


def generate_normalized(schema: ErSchema) -> Mapping:
    return build_mapping(schema, Options())


def generate_nested(
    schema: ErSchema,
    arrays_for_multivalued: bool = False,
    fold_weak_into_owner=(),
    fold_hierarchy: bool = False,
) -> Mapping:
    opts = Options(
        strategies={r: "single_table" for r in hierarchy_roots(schema)} if fold_hierarchy else {},
        arrays=frozenset(multivalued_attributes(schema)) if arrays_for_multivalued else frozenset(),
        fold_weak=frozenset(fold_weak_into_owner),
    )
    return build_mapping(schema, opts)


def generate_hierarchy_variant(schema: ErSchema, root: str, strategy: str) -> Mapping:
    if not schema.has_entity(root):
        raise MappingError(f"unknown entity {root}")
    if not schema.children(root):
        raise MappingError(f"{root} has no subclasses")
    if strategy not in STRATEGIES:
        raise MappingError(f"unknown hierarchy strategy {strategy}")
    return build_mapping(schema, Options(strategies={root: strategy}))


def generate_factorized(schema: ErSchema, relationship: str) -> Mapping:
    r = schema.relationship(relationship)
    if not r.is_binary:
        raise MappingError(f"relationship {relationship} is not binary")
    return build_mapping(schema, Options(factorize=frozenset([relationship])))


def option_lattice(schema: ErSchema) -> list[Options]:
    roots = hierarchy_roots(schema)
    mvs = multivalued_attributes(schema)
    weak = [e.name for e in schema.entities if e.weak_owner is not None]
    mm = [r.name for r in schema.relationships if r.kind == "many_to_many" and not schema.is_identifying(r.name)]
    out = []
    for strat in itertools.product(STRATEGIES, repeat=len(roots)):
        for arr in itertools.product((False, True), repeat=len(mvs)):
            for fold in itertools.product((False, True), repeat=len(weak)):
                for fact in itertools.product((False, True), repeat=len(mm)):
                    out.append(
                        Options(
                            strategies=dict(zip(roots, strat)),
                            arrays=frozenset(m for m, on in zip(mvs, arr) if on),
                            fold_weak=frozenset(w for w, on in zip(weak, fold) if on),
                            factorize=frozenset(r for r, on in zip(mm, fact) if on),
                        )
                    )
    return out


def enumerate_mappings(schema: ErSchema, budget: int) -> list[Mapping]:
    """Deterministic walk over the option lattice; invalid combinations and duplicates skipped."""
    from .check import check_cover

    out: list[Mapping] = []
    seen: set[str] = set()
    if budget <= 0:
        return out
    for opts in option_lattice(schema):
        try:
            m = build_mapping(schema, opts)
        except MappingError:
            continue
        sig = m.signature()
        if sig in seen:
            continue
        if not check_cover(schema, None, m).ok:
            continue
        seen.add(sig)
        out.append(m)
        if len(out) >= budget:
            break
    return out
