"""Resolution of a mapping into physical containers.

A fragment resolves into one or more containers:

* ``entity``: one row per instance of ``classes`` (optionally with a ``type`` column naming the
  most specific class); hosts attribute units, folded relationship keys, and array columns.
  Weak entities folded into their owner become *embedded* entity containers whose rows live
  as composite elements inside an array column of the parent row.
* ``multivalued``: one row per element of a multi-valued attribute, keyed by owner key + element.
* ``relationship``: one row per relationship instance, keyed by the participants' keys.

A factorized fragment holds two entity row-groups plus a relationship container of edges.

Units are the atoms of storage:
``("attr", owner, path)`` scalar leaf, ``("mv", owner, path)`` whole multi-valued attribute,
``("fk", rel)`` folded relationship key, ``("rattr", rel, path)`` relationship attribute leaf.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from ..errors import MappingError
from ..graph import build_graph
from ..model import AttributeDef, ErSchema, leaf_units, resolve_path
from ..values import is_concrete
from .model import Fragment, Mapping

Unit = tuple


@dataclass
class Container:
    id: str
    fragment: str
    kind: str  # entity | multivalued | relationship
    layout: str
    entity: str | None = None
    classes: frozenset = frozenset()
    type_column: bool = False
    relationship: str | None = None
    mv: tuple | None = None  # (owner, path) of an exploded multi-valued attribute
    group: str | None = None  # left | right | edges inside a factorized fragment
    parent: "Container | None" = None
    array_column: str | None = None
    key_columns: list[str] = field(default_factory=list)
    columns: list[tuple[str, str]] = field(default_factory=list)
    units: dict = field(default_factory=dict)  # unit -> list of column names
    embedded: list["Container"] = field(default_factory=list)
    element_columns: list[tuple[str, tuple, AttributeDef]] = field(default_factory=list)
    inst_classes: frozenset = frozenset()

    def __hash__(self) -> int:
        return hash(self.id)

    def __eq__(self, other) -> bool:
        return isinstance(other, Container) and other.id == self.id

    def __repr__(self) -> str:
        return f"Container({self.id})"

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def column_names(self) -> list[str]:
        return [c for c, _ in self.columns]

    def hosts(self, unit: Unit) -> bool:
        return unit in self.units


# ---- naming --------------------------------------------------------------------


def attr_column(owner: str, path: tuple[str, ...]) -> str:
    return f"{owner}_{'_'.join(path)}"


def key_columns_for(schema: ErSchema, entity: str) -> list[str]:
    return [f"{o}_{a}" for o, a in schema.key_closure(entity)]


def role_key_columns(schema: ErSchema, role: str, entity: str) -> list[str]:
    return [f"{role}_{a}" for _, a in schema.key_closure(entity)]


def key_types(schema: ErSchema, entity: str) -> list[str]:
    return [a.type or "" for _, a in schema.key_attributes(entity)]


def element_layout(owner: str, path: tuple[str, ...], element: AttributeDef) -> list[tuple[str, tuple, AttributeDef]]:
    """Columns of an exploded element: (column, path inside the element, attribute)."""
    base = attr_column(owner, path)
    if not element.is_composite:
        return [(base, (), element)]
    out = []
    for sub, a in leaf_units(element.children):
        out.append((f"{base}_{'_'.join(sub)}", sub, a))
    return out


def unit_attr(schema: ErSchema, unit: Unit) -> AttributeDef:
    if unit[0] in ("attr", "mv"):
        a = resolve_path(schema.entity(unit[1]).attributes, unit[2])
    else:
        a = resolve_path(schema.relationship(unit[1]).attributes, unit[2])
    assert a is not None, unit
    return a


def unit_label(unit: Unit) -> str:
    if unit[0] == "fk":
        return f"{unit[1]} key"
    return ".".join((unit[1],) + tuple(unit[2]))


def unit_order(schema: ErSchema) -> dict:
    order: dict = {}
    for e in schema.entities:
        for path, a in leaf_units(e.attributes):
            if a.is_key:
                continue
            order[("mv" if a.is_multi else "attr", e.name, path)] = len(order)
    for r in schema.relationships:
        order[("fk", r.name)] = len(order)
        for path, a in leaf_units(r.attributes):
            order[("rattr", r.name, path)] = len(order)
    return order


def entity_units(schema: ErSchema, entity: str) -> list[Unit]:
    """Attribute units applicable to instances of ``entity`` (own + inherited), in schema order."""
    out = []
    for anc in reversed(schema.ancestors(entity)):
        for path, a in leaf_units(schema.entity(anc).attributes):
            if not a.is_key:
                out.append(("mv" if a.is_multi else "attr", anc, path))
    return out


def rel_units(schema: ErSchema, rel: str) -> list[Unit]:
    return [("rattr", rel, p) for p, _ in leaf_units(schema.relationship(rel).attributes)]


# ---- node classification ----------------------------------------------------------------


@dataclass(frozen=True)
class NodeInfo:
    kind: str  # entity | relationship | unit | structural
    name: str  # entity / relationship / owner name
    unit: Unit | None = None


def classify_node(schema: ErSchema, nid: str) -> NodeInfo:
    if nid.startswith("E:"):
        return NodeInfo("entity", nid[2:])
    if nid.startswith("R:"):
        return NodeInfo("relationship", nid[2:])
    parts = nid[2:].split(".")
    owner, path = parts[0], tuple(parts[1:])
    if schema.has_entity(owner):
        attrs = schema.entity(owner).attributes
        is_rel = False
    else:
        attrs = schema.relationship(owner).attributes
        is_rel = True
    pool = attrs
    for i, name in enumerate(path):
        a = next(x for x in pool if x.name == name)
        sub = path[: i + 1]
        if a.is_multi:
            return NodeInfo("unit", owner, ("rattr" if is_rel else "mv", owner, sub))
        if a.is_composite:
            pool = a.children
            continue
        if a.is_key:
            return NodeInfo("structural", owner)
        return NodeInfo("unit", owner, (("rattr" if is_rel else "attr"), owner, sub))
    return NodeInfo("structural", owner)


# ---- design -------------------------------------------------------------------------------


class Design:
    """Physical containers of a mapping plus hosting indexes."""

    def __init__(self, schema: ErSchema, mapping: Mapping):
        self.schema = schema
        self.mapping = mapping
        self.problems: list[tuple[str, str]] = []
        self.containers: list[Container] = []
        self.order = unit_order(schema)
        self.fragment_containers: dict[str, list[Container]] = {}
        graph = build_graph(schema)
        for f in mapping.fragments:
            for n in f.nodes:
                if not graph.has_node(n):
                    raise MappingError(f"fragment {f.name} references unknown node {n}")
        for f in mapping.fragments:
            self._resolve_fragment(f)
        self._finish()

    # ---- public lookups ----------------------------------------------------------------

    def all_containers(self) -> Iterator[Container]:
        for c in self.containers:
            yield c
            yield from c.embedded

    def container(self, cid: str) -> Container:
        for c in self.all_containers():
            if c.id == cid:
                return c
        raise MappingError(f"unknown container {cid}")

    def entity_containers(self, entity: str) -> list[Container]:
        """Top-level entity containers storing instances of ``entity``'s hierarchy."""
        fam = set(self.schema.family(entity))
        return [c for c in self.containers if c.kind == "entity" and c.classes & fam]

    def weak_containers(self, weak: str) -> list[Container]:
        return [c for c in self.all_containers() if c.kind == "entity" and c.entity == weak]

    def class_containers(self, cls: str) -> list[Container]:
        return [c for c in self.all_containers() if c.kind == "entity" and cls in c.classes]

    def is_embedded_only(self, entity: str) -> bool:
        cs = [c for c in self.all_containers() if c.kind == "entity" and entity in c.classes]
        return bool(cs) and all(c.parent is not None for c in cs)

    # ---- resolution ----------------------------------------------------------------------

    def _problem(self, rule: str, detail: str) -> None:
        self.problems.append((rule, detail))

    def _resolve_fragment(self, f: Fragment) -> None:
        s = self.schema
        infos = [(n, classify_node(s, n)) for n in f.nodes]
        if f.layout == "factorized":
            self._resolve_factorized(f, infos)
            return
        spec = f.nesting_spec or self._infer_spec(f, infos)
        kind = spec.get("kind")
        if kind == "entity":
            c = self._entity_container(f, spec, f.name, None)
            if c is None:
                return
            self.containers.append(c)
            self.fragment_containers[f.name] = [c]
            embedded = {}
            for emb in spec.get("embedded", []) or []:
                w = emb.get("entity") if isinstance(emb, dict) else None
                ec = self._embedded_container(f, c, w)
                if ec is not None:
                    embedded[w] = ec
            self._assign_nodes(f, infos, {"main": c}, embedded)
            if f.layout == "flat" and (c.embedded or any(u[0] == "mv" for u in c.units)):
                self._problem("reversibility", f"flat fragment {f.name} cannot hold arrays; use a nested layout")
        elif kind == "multivalued":
            self._mv_container(f, spec, infos)
        elif kind == "relationship":
            self._rel_container(f, spec, infos)
        else:
            self._problem("reversibility", f"fragment {f.name} has unknown nesting kind {kind!r}")

    def _infer_spec(self, f: Fragment, infos) -> dict:
        s = self.schema
        units = [i.unit for _, i in infos if i.kind == "unit"]
        mvs = {(u[1], u[2]) for u in units if u[0] == "mv"}
        if len(mvs) == 1 and all(u[0] == "mv" for u in units) and f.layout == "flat":
            owner, path = next(iter(mvs))
            return {"kind": "multivalued", "entity": owner, "attribute": ".".join(path)}
        ents = [i.name for _, i in infos if i.kind == "entity"]
        ents += [i.name for _, i in infos if i.kind in ("unit", "structural") and s.has_entity(i.name)]
        rels = [i.name for _, i in infos if i.kind == "relationship"]
        attr_ents = {i.name for _, i in infos if i.kind in ("unit", "structural") and s.has_entity(i.name)}
        if len(rels) == 1 and not attr_ents and s.relationship(rels[0]).fold_side() is None:
            return {"kind": "relationship", "relationship": rels[0]}
        if not ents:
            return {"kind": "relationship", "relationship": rels[0]} if rels else {"kind": None}
        anchor = min(ents, key=lambda e: (len(s.ancestors(e)), ents.index(e)))
        return {"kind": "entity", "entity": anchor, "classes": s.descendants(anchor), "type_column": False}

    def _entity_container(self, f: Fragment, spec: dict, cid: str, group: str | None) -> Container | None:
        s = self.schema
        ent = spec.get("entity")
        if not isinstance(ent, str) or not s.has_entity(ent):
            self._problem("reversibility", f"fragment {f.name} names unknown entity {ent!r}")
            return None
        classes = spec.get("classes")
        if classes is None:
            classes = s.descendants(ent)
        if not isinstance(classes, list) or not classes:
            self._problem("reversibility", f"fragment {f.name} needs a non-empty class list")
            return None
        fam = set(s.family(ent))
        bad = [c for c in classes if not isinstance(c, str) or c not in fam]
        if bad:
            self._problem("reversibility", f"fragment {f.name}: class {bad[0]} is not in the hierarchy of {ent}")
            return None
        return Container(
            id=cid,
            fragment=f.name,
            kind="entity",
            layout=f.layout,
            entity=ent,
            classes=frozenset(classes),
            type_column=bool(spec.get("type_column", False)),
            group=group,
        )

    def _embedded_container(self, f: Fragment, parent: Container, w) -> Container | None:
        s = self.schema
        if not isinstance(w, str) or not s.has_entity(w) or s.entity(w).weak_owner is None:
            self._problem("reversibility", f"fragment {f.name}: only weak entities can be embedded ({w!r})")
            return None
        owner = s.entity(w).weak_owner
        assert owner is not None
        if not set(s.descendants(owner)) <= parent.classes:
            self._problem(
                "reversibility", f"fragment {f.name}: {w} can only be embedded where every {owner} has a row"
            )
            return None
        if s.weak_dependents(w):
            self._problem("reversibility", f"fragment {f.name}: {w} owns weak entities and cannot be embedded")
            return None
        if f.layout != "nested":
            self._problem("reversibility", f"flat fragment {f.name} cannot embed {w}; use a nested layout")
        ec = Container(
            id=f"{f.name}/{w}",
            fragment=f.name,
            kind="entity",
            layout=f.layout,
            entity=w,
            classes=frozenset([w]),
            parent=parent,
            array_column=f"{owner}_{w}",
        )
        parent.embedded.append(ec)
        return ec

    def _assign_nodes(self, f: Fragment, infos, groups: dict[str, Container], embedded: dict[str, Container]) -> None:
        """Place each node's unit into a container of the fragment."""
        s = self.schema
        entity_groups = [c for c in groups.values() if c.kind == "entity"]
        edges = groups.get("edges")

        def group_for(entity: str) -> Container | None:
            if entity in embedded:
                return embedded[entity]
            fam = set(s.family(entity))
            for c in entity_groups:
                if c.classes & fam and any(entity in s.ancestors(k) for k in c.classes):
                    return c
            return None

        folded: dict[str, Container] = {}
        for nid, info in infos:
            if info.kind != "relationship":
                continue
            r = s.relationship(info.name)
            if edges is not None and edges.relationship == r.name:
                continue
            w = s.identified_entity(r.name)
            if w is not None:
                if w in embedded or any(c.entity == w for c in entity_groups):
                    continue
                self._problem("reversibility", f"fragment {f.name} holds {r.name} without the entity it identifies")
                continue
            fs = r.fold_side()
            target = None
            if fs is not None:
                many = fs[0].entity
                if many in embedded:
                    self._problem(
                        "reversibility", f"fragment {f.name}: {r.name} cannot be folded into embedded {many}"
                    )
                    continue
                for c in entity_groups:
                    if c.classes & set(s.descendants(many)):
                        target = c
                        break
            if target is None:
                self._problem("reversibility", f"relationship {r.name} cannot be stored in fragment {f.name}")
                continue
            target.units[("fk", r.name)] = []
            folded[r.name] = target
        for nid, info in infos:
            if info.kind != "unit":
                continue
            u = info.unit
            if u[0] == "rattr":
                rel = u[1]
                if edges is not None and edges.relationship == rel:
                    edges.units[u] = []
                elif rel in folded:
                    folded[rel].units[u] = []
                else:
                    self._problem("reversibility", f"attribute {unit_label(u)} needs its relationship in fragment {f.name}")
                continue
            owner = u[1]
            target = group_for(owner)
            if target is None:
                self._problem("reversibility", f"attribute {unit_label(u)} does not apply to fragment {f.name}")
                continue
            target.units[u] = []
        for nid, info in infos:
            if info.kind == "structural" and s.has_entity(info.name):
                # key attributes: fine when they belong to the key closure of a container here
                ok = any(
                    info.name in {o for o, _ in s.key_closure(c.entity)}
                    for c in list(entity_groups) + list(embedded.values())
                )
                ok = ok or any(info.name == c.entity or info.name in s.family(c.entity) for c in entity_groups)
                if not ok:
                    self._problem("reversibility", f"attribute node {nid} does not apply to fragment {f.name}")

    def _mv_container(self, f: Fragment, spec: dict, infos) -> None:
        s = self.schema
        ent, attr = spec.get("entity"), spec.get("attribute")
        if not isinstance(ent, str) or not s.has_entity(ent) or not isinstance(attr, str):
            self._problem("reversibility", f"fragment {f.name} has a bad multi-valued spec")
            return
        path = tuple(attr.split("."))
        a = resolve_path(s.entity(ent).attributes, path)
        if a is None or not a.is_multi:
            self._problem("reversibility", f"fragment {f.name}: {ent}.{attr} is not multi-valued")
            return
        unit = ("mv", ent, path)
        for nid, info in infos:
            if info.kind == "unit" and info.unit != unit:
                self._problem("reversibility", f"fragment {f.name} holds {unit_label(info.unit)} next to an exploded array")
            if info.kind == "relationship":
                self._problem("reversibility", f"relationship {info.name} cannot be stored in fragment {f.name}")
        if all(info.unit != unit for _, info in infos):
            self._problem("reversibility", f"fragment {f.name} does not contain {ent}.{attr}")
        assert a.element is not None
        c = Container(
            id=f.name,
            fragment=f.name,
            kind="multivalued",
            layout=f.layout,
            entity=ent,
            classes=frozenset(s.descendants(ent)),
            mv=(ent, path),
            element_columns=element_layout(ent, path, a.element),
        )
        c.units[unit] = []
        self.containers.append(c)
        self.fragment_containers[f.name] = [c]

    def _rel_container(self, f: Fragment, spec: dict, infos) -> None:
        s = self.schema
        rel = spec.get("relationship")
        if not isinstance(rel, str) or not s.has_relationship(rel) or s.is_identifying(rel):
            self._problem("reversibility", f"fragment {f.name} names a bad relationship {rel!r}")
            return
        c = Container(id=f.name, fragment=f.name, kind="relationship", layout=f.layout, relationship=rel)
        has_rel = False
        for nid, info in infos:
            if info.kind == "relationship":
                if info.name == rel:
                    has_rel = True
                else:
                    self._problem("reversibility", f"relationship {info.name} cannot be stored in fragment {f.name}")
            elif info.kind == "unit":
                if info.unit[0] == "rattr" and info.unit[1] == rel:
                    c.units[info.unit] = []
                else:
                    self._problem("reversibility", f"attribute {unit_label(info.unit)} does not apply to fragment {f.name}")
        if not has_rel:
            self._problem("reversibility", f"fragment {f.name} does not contain relationship {rel}")
        self.containers.append(c)
        self.fragment_containers[f.name] = [c]

    def _resolve_factorized(self, f: Fragment, infos) -> None:
        s = self.schema
        spec = f.factorized_spec or {}
        rel = spec.get("relationship")
        if not isinstance(rel, str) or not s.has_relationship(rel) or s.is_identifying(rel):
            self._problem("reversibility", f"factorized fragment {f.name} names a bad relationship {rel!r}")
            return
        r = s.relationship(rel)
        if not r.is_binary:
            self._problem("reversibility", f"factorized fragment {f.name}: {rel} is not binary")
            return
        left, right = spec.get("left"), spec.get("right")
        if not isinstance(left, dict) or not isinstance(right, dict):
            self._problem("reversibility", f"factorized fragment {f.name} needs left and right groups")
            return
        ents = sorted([str(left.get("entity")), str(right.get("entity"))])
        if ents != sorted(p.entity for p in r.participants):
            self._problem("reversibility", f"factorized fragment {f.name}: groups must be the participants of {rel}")
            return
        if s.root(ents[0]) == s.root(ents[1]):
            self._problem("reversibility", f"factorized fragment {f.name}: participants share a hierarchy")
            return
        lc = self._entity_container(f, left, f"{f.name}.left", "left")
        rc = self._entity_container(f, right, f"{f.name}.right", "right")
        if lc is None or rc is None:
            return
        for g in (lc, rc):
            if set(g.classes) != set(s.descendants(g.entity)):
                self._problem(
                    "reversibility", f"factorized fragment {f.name}: group {g.entity} must hold every {g.entity} instance"
                )
        ec = Container(id=f"{f.name}.edges", fragment=f.name, kind="relationship", layout=f.layout, relationship=rel, group="edges")
        self.containers.extend([lc, rc, ec])
        self.fragment_containers[f.name] = [lc, rc, ec]
        self._assign_nodes(f, infos, {"left": lc, "right": rc, "edges": ec}, {})
        if ("R:" + rel) not in f.nodes:
            self._problem("reversibility", f"factorized fragment {f.name} does not contain relationship {rel}")

    # ---- columns and indexes ---------------------------------------------------------------

    def _finish(self) -> None:
        s = self.schema
        concrete = {e.name for e in s.entities if is_concrete(s, e.name)}
        for c in self.all_containers():
            c.inst_classes = frozenset(c.classes & concrete) if c.kind == "entity" else frozenset(
                x for x in c.classes if x in concrete
            )
            self._columns(c)
        self.hosts: dict = {}
        for c in self.all_containers():
            for u in sorted(c.units, key=lambda u: self.order.get(u, 1 << 30)):
                self.hosts.setdefault(u, []).append(c)
        self.rel_hosts: dict[str, list[tuple[Container, str]]] = {}
        for c in self.all_containers():
            for u in c.units:
                if u[0] == "fk":
                    self.rel_hosts.setdefault(u[1], []).append((c, "fk"))
            if c.kind == "relationship":
                self.rel_hosts.setdefault(c.relationship, []).append((c, "edges" if c.group == "edges" else "table"))
        names = [c.id for c in self.all_containers()]
        for n in sorted({n for n in names if names.count(n) > 1}):
            self._problem("reversibility", f"duplicate container name {n}")

    def _columns(self, c: Container) -> None:
        s = self.schema
        cols: list[tuple[str, str]] = []
        if c.kind == "entity":
            if c.parent is None:
                kc = key_columns_for(s, c.entity)
                kt = key_types(s, c.entity)
            else:
                local = [(o, a) for o, a in s.key_attributes(c.entity) if o == c.entity]
                kc = [f"{o}_{a.name}" for o, a in local]
                kt = [a.type or "" for _, a in local]
            c.key_columns = kc
            cols.extend(zip(kc, kt))
            if c.type_column:
                cols.append(("type", "text"))
        elif c.kind == "multivalued":
            owner, path = c.mv
            kc = key_columns_for(s, owner)
            cols.extend(zip(kc, key_types(s, owner)))
            for name, _, a in c.element_columns:
                cols.append((name, a.shape()))
            c.key_columns = kc + [n for n, _, _ in c.element_columns]
            c.units[("mv", owner, path)] = [n for n, _, _ in c.element_columns]
        else:
            r = s.relationship(c.relationship)
            kc = []
            for p in r.participants:
                names = role_key_columns(s, p.role, p.entity)
                kc.extend(names)
                cols.extend(zip(names, key_types(s, p.entity)))
            c.key_columns = kc
        for u in sorted(c.units, key=lambda u: self.order.get(u, 1 << 30)):
            if c.kind == "multivalued":
                continue
            if u[0] == "fk":
                r = s.relationship(u[1])
                fs = r.fold_side()
                assert fs is not None
                one = fs[1]
                names = role_key_columns(s, one.role, one.entity)
                c.units[u] = names
                cols.extend(zip(names, key_types(s, one.entity)))
            elif u[0] == "rattr":
                name = attr_column(u[1], u[2])
                c.units[u] = [name]
                cols.append((name, unit_attr(s, u).shape()))
            else:
                name = attr_column(u[1], u[2])
                c.units[u] = [name]
                cols.append((name, unit_attr(s, u).shape()))
        for e in c.embedded:
            cols.append((e.array_column, "{" + ",".join(f"{n}:{t}" for n, t in e.columns) + "}[]" if e.columns else "{}[]"))
        # embedded columns are computed before the parent's (all_containers yields parents first),
        # so refresh the array column type once children are known
        c.columns = cols
        if c.parent is not None:
            p = c.parent
            p.columns = [
                (n, "{" + ",".join(f"{cn}:{ct}" for cn, ct in c.columns) + "}[]") if n == c.array_column else (n, t)
                for n, t in p.columns
            ]
        seen = set()
        for n, _ in cols:
            if n in seen:
                self._problem("reversibility", f"duplicate column {n} in fragment {c.fragment}")
            seen.add(n)

    # ---- source selection ---------------------------------------------------------------------

    def sources(self, entity: str) -> list[tuple[Container, frozenset | None]]:
        """Containers whose rows, filtered by type where needed, are exactly the instances
        of ``entity`` and its subclasses: [(container, type filter or None)]."""
        s = self.schema
        want = frozenset(c for c in s.descendants(entity) if is_concrete(s, c))
        if not want:
            return []
        tops = [c for c in self.containers if c.kind == "entity" and c.inst_classes & want]
        exact = [c for c in tops if c.inst_classes == want]
        if exact:
            return [(min(exact, key=lambda c: (c.width, self.containers.index(c))), None)]
        typed = [c for c in tops if c.type_column and c.inst_classes > want]
        if typed:
            return [(min(typed, key=lambda c: (c.width, self.containers.index(c))), want)]
        pieces: list[tuple[Container, frozenset | None]] = []
        for c in tops:
            if c.inst_classes <= want:
                pieces.append((c, None))
        for c in tops:
            if c.type_column and not c.inst_classes <= want:
                pieces.append((c, c.inst_classes & want))
        found = _exact_cover(want, pieces)
        if found is not None:
            return found
        emb = [c for c in self.all_containers() if c.parent is not None and c.inst_classes == want]
        if emb:
            return [(emb[0], None)]
        raise MappingError(f"no combination of fragments stores exactly the {entity} instances")

    def unit_hosts(self, unit: Unit) -> list[Container]:
        return list(self.hosts.get(unit, []))


def _exact_cover(want: frozenset, pieces) -> list | None:
    def cls(p):
        return p[1] if p[1] is not None else p[0].inst_classes

    def go(remaining: frozenset, chosen: list) -> list | None:
        if not remaining:
            return chosen
        target = min(remaining)
        for p in pieces:
            cs = cls(p)
            if target in cs and cs <= remaining:
                r = go(remaining - cs, chosen + [p])
                if r is not None:
                    return r
        return None

    return go(want, [])


_CACHE_ATTR = "_erdb_design_cache"


def design_of(schema: ErSchema, mapping: Mapping, strict: bool = True) -> Design:
    """Resolve (and cache on the mapping object) the container structure of a mapping."""
    cache = mapping.__dict__.get(_CACHE_ATTR)
    fp = id(schema)
    if cache is None or cache[0] != fp or cache[1] is not schema:
        d = Design(schema, mapping)
        object.__setattr__(mapping, _CACHE_ATTR, (fp, schema, d))
    else:
        d = cache[2]
    if strict and d.problems:
        raise MappingError("invalid mapping: " + "; ".join(p[1] for p in d.problems[:3]))
    return d
