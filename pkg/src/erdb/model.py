"""Extended E/R schema: entity sets, attributes, ISA hierarchies, weak entities, relationships."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

from .errors import SchemaError

SCALAR_TYPES = ("int", "bigint", "float", "text", "bool", "date")
NUMERIC_TYPES = ("int", "bigint", "float")


@dataclass(frozen=True)
class AttributeDef:
    name: str
    kind: str = "scalar"  # scalar | composite | multi_valued
    type: str | None = None
    children: tuple["AttributeDef", ...] = ()
    element: "AttributeDef | None" = None
    is_key: bool = False

    @property
    def is_scalar(self) -> bool:
        return self.kind == "scalar"

    @property
    def is_composite(self) -> bool:
        return self.kind == "composite"

    @property
    def is_multi(self) -> bool:
        return self.kind == "multi_valued"

    def child(self, name: str) -> "AttributeDef | None":
        for c in self.children:
            if c.name == name:
                return c
        return None

    def shape(self) -> str:
        """Compact type rendering, e.g. ``text[]`` or ``{street:text,zip:int}``."""
        if self.is_scalar:
            return self.type or "?"
        if self.is_composite:
            return "{" + ",".join(f"{c.name}:{c.shape()}" for c in self.children) + "}"
        assert self.element is not None
        return self.element.shape() + "[]"


def scalar(name: str, type_: str, key: bool = False) -> AttributeDef:
    return AttributeDef(name, "scalar", type=type_, is_key=key)


def composite(name: str, *children: AttributeDef) -> AttributeDef:
    return AttributeDef(name, "composite", children=tuple(children))


def multi(name: str, element: AttributeDef | str) -> AttributeDef:
    if isinstance(element, str):
        element = scalar(name, element)
    else:
        element = dataclasses.replace(element, name=name)
    return AttributeDef(name, "multi_valued", element=element)


@dataclass(frozen=True)
class EntitySetDef:
    name: str
    attributes: tuple[AttributeDef, ...] = ()
    superclass: str | None = None
    disjoint: bool = False
    total: bool = False
    weak_owner: str | None = None
    identifying: str | None = None
    description: str | None = None

    def attribute(self, name: str) -> AttributeDef | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    @property
    def key_attributes(self) -> tuple[AttributeDef, ...]:
        return tuple(a for a in self.attributes if a.is_key)


@dataclass(frozen=True)
class Participant:
    entity: str
    role: str
    cardinality: str = "many"  # one | many
    participation: str = "partial"  # total | partial


@dataclass(frozen=True)
class RelationshipDef:
    name: str
    participants: tuple[Participant, ...]
    attributes: tuple[AttributeDef, ...] = ()
    description: str | None = None

    def participant(self, role: str) -> Participant | None:
        for p in self.participants:
            if p.role == role:
                return p
        return None

    @property
    def is_binary(self) -> bool:
        return len(self.participants) == 2

    @property
    def kind(self) -> str:
        """``many_to_many``, ``many_to_one``, ``one_to_one`` or ``n_ary``."""
        if not self.is_binary:
            return "n_ary"
        ones = sum(p.cardinality == "one" for p in self.participants)
        return {0: "many_to_many", 1: "many_to_one", 2: "one_to_one"}[ones]

    def fold_side(self) -> tuple[Participant, Participant] | None:
        """(many side, one side) for a foldable binary relationship, else None.

        One-to-one relationships fold into the second participant.
        """
        if self.kind == "many_to_one":
            a, b = self.participants
            return (a, b) if b.cardinality == "one" else (b, a)
        if self.kind == "one_to_one":
            a, b = self.participants
            return (b, a)
        return None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    object: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.object}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class ErSchema:
    entities: tuple[EntitySetDef, ...] = ()
    relationships: tuple[RelationshipDef, ...] = ()

    @classmethod
    def build(cls, entities: Iterable[EntitySetDef], relationships: Iterable[RelationshipDef] = ()) -> "ErSchema":
        """Assemble a schema, adding an implicit identifying relationship for each weak entity
        whose identifying relationship is not declared."""
        entities = tuple(entities)
        rels = list(relationships)
        declared = {r.name for r in rels}
        for e in entities:
            if e.weak_owner and e.identifying and e.identifying not in declared:
                rels.append(
                    RelationshipDef(
                        e.identifying,
                        (
                            Participant(e.weak_owner, e.weak_owner, "one", "partial"),
                            Participant(e.name, e.name, "many", "total"),
                        ),
                    )
                )
                declared.add(e.identifying)
        return cls(entities, tuple(rels))

    # ---- indexes -------------------------------------------------------------

    @cached_property
    def _entities(self) -> dict[str, EntitySetDef]:
        out: dict[str, EntitySetDef] = {}
        for e in self.entities:
            out.setdefault(e.name, e)
        return out

    @cached_property
    def _relationships(self) -> dict[str, RelationshipDef]:
        out: dict[str, RelationshipDef] = {}
        for r in self.relationships:
            out.setdefault(r.name, r)
        return out

    @cached_property
    def _children(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {e.name: [] for e in self.entities}
        for e in self.entities:
            if e.superclass in out:
                out[e.superclass].append(e.name)
        return out

    @cached_property
    def _identifying(self) -> dict[str, str]:
        return {e.identifying: e.name for e in self.entities if e.weak_owner and e.identifying}

    # ---- lookups -------------------------------------------------------------

    def has_entity(self, name: str) -> bool:
        return name in self._entities

    def has_relationship(self, name: str) -> bool:
        return name in self._relationships

    def entity(self, name: str) -> EntitySetDef:
        try:
            return self._entities[name]
        except KeyError:
            raise SchemaError(f"unknown entity {name}") from None

    def relationship(self, name: str) -> RelationshipDef:
        try:
            return self._relationships[name]
        except KeyError:
            raise SchemaError(f"unknown relationship {name}") from None

    def entity_names(self) -> list[str]:
        return list(self._entities)

    def relationship_names(self) -> list[str]:
        return list(self._relationships)

    def is_identifying(self, rel: str) -> bool:
        return rel in self._identifying

    def identified_entity(self, rel: str) -> str | None:
        """The weak entity a relationship identifies, if any."""
        return self._identifying.get(rel)

    def children(self, name: str) -> list[str]:
        return list(self._children.get(name, ()))

    def ancestors(self, name: str) -> list[str]:
        """``name`` followed by its superclasses up to the root."""
        out = [name]
        seen = {name}
        cur = self.entity(name).superclass
        while cur is not None and cur in self._entities and cur not in seen:
            out.append(cur)
            seen.add(cur)
            cur = self._entities[cur].superclass
        return out

    def root(self, name: str) -> str:
        return self.ancestors(name)[-1]

    def descendants(self, name: str) -> list[str]:
        """``name`` and all its (transitive) subclasses in preorder."""
        out: list[str] = []
        stack = [name]
        seen: set[str] = set()
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            out.append(cur)
            stack.extend(reversed(self._children.get(cur, [])))
        return out

    def family(self, name: str) -> list[str]:
        return self.descendants(self.root(name))

    def is_weak(self, name: str) -> bool:
        return self.entity(name).weak_owner is not None

    def is_related(self, a: str, b: str) -> bool:
        """True when one entity is a (reflexive) ancestor of the other."""
        return a in self.ancestors(b) or b in self.ancestors(a)

    @cached_property
    def _memo(self) -> dict:
        return {}

    def key_closure(self, name: str) -> list[tuple[str, str]]:
        """Ordered (owning entity, attribute name) pairs forming the full key of ``name``."""
        return [(owner, a.name) for owner, a in self.key_attributes(name)]

    def key_attributes(self, name: str) -> list[tuple[str, AttributeDef]]:
        hit = self._memo.get(("key", name))
        if hit is None:
            hit = self._memo[("key", name)] = tuple(self._key_attributes(name))
        return list(hit)

    def _key_attributes(self, name: str) -> list[tuple[str, AttributeDef]]:
        e = self.entity(name)
        if e.superclass is not None:
            return self.key_attributes(self.root(name))
        out: list[tuple[str, AttributeDef]] = []
        if e.weak_owner is not None:
            out.extend(self.key_attributes(e.weak_owner))
        out.extend((name, a) for a in e.key_attributes)
        return out

    def attribute_scope(self, name: str) -> dict[str, tuple[str, AttributeDef]]:
        """Attributes visible from ``name``: its own and every ancestor's."""
        out: dict[str, tuple[str, AttributeDef]] = {}
        for anc in reversed(self.ancestors(name)):
            for a in self.entity(anc).attributes:
                out[a.name] = (anc, a)
        return out

    def doc_fields(self, name: str) -> dict[str, tuple[str, AttributeDef]]:
        """Fields of an instance document: inherited attributes plus, for weak
        entities, the owner key attributes."""
        out: dict[str, tuple[str, AttributeDef]] = {}
        for owner, a in self.key_attributes(name):
            out[a.name] = (owner, a)
        out.update(self.attribute_scope(name))
        return out

    def subclass_owner(self, name: str, attr: str) -> str | None:
        """Name of a proper subclass of ``name`` that declares ``attr``."""
        for d in self.descendants(name)[1:]:
            if self.entity(d).attribute(attr) is not None:
                return d
        return None

    def relationships_of(self, name: str) -> list[RelationshipDef]:
        fam = set(self.ancestors(name))
        return [r for r in self.relationships if any(p.entity in fam for p in r.participants)]

    def weak_dependents(self, name: str) -> list[str]:
        """Weak entities (transitively) owned by any class of ``name``'s family."""
        owners = set(self.family(name))
        out: list[str] = []
        changed = True
        while changed:
            changed = False
            for e in self.entities:
                if e.weak_owner in owners and e.name not in out:
                    out.append(e.name)
                    owners.add(e.name)
                    changed = True
        return out

    def fingerprint(self) -> str:
        hit = self._memo.get("fingerprint")
        if hit is None:
            hit = self._memo["fingerprint"] = self._fingerprint()
        return hit

    def _fingerprint(self) -> str:
        payload = json.dumps(
            {
                "entities": [dataclasses.asdict(e) for e in self.entities],
                "relationships": [dataclasses.asdict(r) for r in self.relationships],
            },
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def replace_entity(self, new: EntitySetDef) -> "ErSchema":
        return ErSchema(tuple(new if e.name == new.name else e for e in self.entities), self.relationships)

    def replace_relationship(self, new: RelationshipDef) -> "ErSchema":
        return ErSchema(self.entities, tuple(new if r.name == new.name else r for r in self.relationships))


def walk_attributes(attrs: Iterable[AttributeDef], prefix: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], AttributeDef]]:
    """Every attribute at every nesting level with its path (multi-valued elements included)."""
    for a in attrs:
        path = prefix + (a.name,)
        yield path, a
        if a.is_composite:
            yield from walk_attributes(a.children, path)
        elif a.is_multi and a.element is not None and a.element.is_composite:
            yield from walk_attributes(a.element.children, path)


def leaf_units(attrs: Iterable[AttributeDef], prefix: tuple[str, ...] = ()) -> Iterator[tuple[tuple[str, ...], AttributeDef]]:
    """Storage units: scalar leaves outside collections, and whole multi-valued attributes."""
    for a in attrs:
        path = prefix + (a.name,)
        if a.is_composite:
            yield from leaf_units(a.children, path)
        else:
            yield path, a


def resolve_path(attrs: Iterable[AttributeDef], path: tuple[str, ...]) -> AttributeDef | None:
    cur: AttributeDef | None = None
    pool = tuple(attrs)
    for name in path:
        cur = next((a for a in pool if a.name == name), None)
        if cur is None:
            return None
        pool = cur.children if cur.is_composite else ()
    return cur


# ---- validation ----------------------------------------------------------------


def _check_attribute(a: AttributeDef, obj: str, out: list[Diagnostic], in_element: bool = False) -> None:
    if a.kind not in ("scalar", "composite", "multi_valued"):
        out.append(Diagnostic("error", obj, f"attribute {a.name} has unknown kind {a.kind}"))
        return
    if a.is_key and not a.is_scalar:
        out.append(Diagnostic("error", obj, f"key attribute {a.name} must be scalar"))
    if a.is_scalar and a.type not in SCALAR_TYPES:
        out.append(Diagnostic("error", obj, f"attribute {a.name} has unknown type {a.type}"))
    if a.is_composite:
        if not a.children:
            out.append(Diagnostic("error", obj, f"composite attribute {a.name} has no children"))
        names = [c.name for c in a.children]
        for n in sorted({n for n in names if names.count(n) > 1}):
            out.append(Diagnostic("error", obj, f"duplicate child {n} in composite {a.name}"))
        for c in a.children:
            if c.is_key:
                out.append(Diagnostic("error", obj, f"composite child {a.name}.{c.name} cannot be a key"))
            _check_attribute(dataclasses.replace(c, is_key=False), obj, out, in_element)
    if a.is_multi:
        el = a.element
        if el is None:
            out.append(Diagnostic("error", obj, f"multi-valued attribute {a.name} has no element"))
            return
        if el.is_multi:
            out.append(Diagnostic("error", obj, f"multi-valued attribute {a.name} has a multi-valued element"))
            return
        _check_attribute(dataclasses.replace(el, is_key=False), obj, out, True)


def validate_schema(schema: ErSchema) -> ValidationReport:
    """Check every schema invariant and return all diagnostics (never raises)."""
    out: list[Diagnostic] = []
    ent_names = [e.name for e in schema.entities]
    rel_names = [r.name for r in schema.relationships]
    all_names = ent_names + rel_names
    for n in sorted({n for n in all_names if all_names.count(n) > 1}):
        out.append(Diagnostic("error", n, "duplicate name"))
    entities = schema._entities

    # inheritance forest
    cyclic: set[str] = set()
    for e in schema.entities:
        seen = [e.name]
        cur = e.superclass
        while cur is not None:
            if cur not in entities:
                out.append(Diagnostic("error", e.name, f"unknown superclass {cur}"))
                break
            if cur in seen:
                if e.name not in cyclic:
                    out.append(Diagnostic("error", e.name, "inheritance cycle"))
                cyclic.update(seen)
                break
            seen.append(cur)
            cur = entities[cur].superclass

    for e in schema.entities:
        names = [a.name for a in e.attributes]
        for n in sorted({n for n in names if names.count(n) > 1}):
            out.append(Diagnostic("error", e.name, f"duplicate attribute {n}"))
        for a in e.attributes:
            _check_attribute(a, e.name, out)
        keys = e.key_attributes
        if e.superclass is not None:
            if keys:
                out.append(Diagnostic("error", e.name, "subclass declares its own key"))
            if e.weak_owner is not None:
                out.append(Diagnostic("error", e.name, "a subclass cannot be a weak entity"))
            if e.name not in cyclic and e.superclass in entities:
                inherited: set[str] = set()
                for anc in schema.ancestors(e.name)[1:]:
                    inherited.update(a.name for a in entities[anc].attributes)
                for a in e.attributes:
                    if a.name in inherited:
                        out.append(Diagnostic("error", e.name, f"attribute {a.name} shadows an inherited attribute"))
        elif e.weak_owner is not None:
            if not keys:
                out.append(Diagnostic("error", e.name, "weak entity declares no discriminator (missing key)"))
            if e.weak_owner not in entities:
                out.append(Diagnostic("error", e.name, f"unknown owner {e.weak_owner}"))
            if not e.identifying:
                out.append(Diagnostic("error", e.name, "weak entity names no identifying relationship"))
        elif not keys:
            out.append(Diagnostic("error", e.name, "missing key"))

    # weak ownership chains must terminate and not feed back
    for e in schema.entities:
        seen = {e.name}
        cur = e.weak_owner
        while cur is not None and cur in entities:
            owner_root = cur
            if owner_root in seen:
                out.append(Diagnostic("error", e.name, "weak ownership cycle"))
                break
            seen.add(owner_root)
            nxt = entities[owner_root]
            cur = nxt.weak_owner
            if cur is None and nxt.superclass is not None and owner_root not in cyclic:
                cur = entities[schema.root(owner_root)].weak_owner

    if not out:
        # key closure field names must not collide inside instance documents
        for e in schema.entities:
            if e.weak_owner is None:
                continue
            owner_keys = {a for _, a in schema.key_closure(e.weak_owner)}
            for a in e.attributes:
                if a.name in owner_keys:
                    out.append(Diagnostic("error", e.name, f"attribute {a.name} collides with an owner key attribute"))
            if schema.children(e.name):
                out.append(Diagnostic("error", e.name, "weak entities cannot have subclasses"))

    # specialization flags
    for parent, kids in schema._children.items():
        if len(kids) < 1:
            continue
        flags = {(entities[k].disjoint, entities[k].total) for k in kids}
        if len(flags) > 1:
            out.append(Diagnostic("warning", parent, "subclasses declare inconsistent specialization flags"))
        if any(not entities[k].disjoint for k in kids):
            out.append(
                Diagnostic(
                    "warning",
                    parent,
                    "overlapping specialization: each instance is stored under a single most-specific class",
                )
            )

    weak_by_ident = {e.identifying: e for e in schema.entities if e.weak_owner and e.identifying}
    for r in schema.relationships:
        if len(r.participants) < 2:
            out.append(Diagnostic("error", r.name, "relationship needs at least two participants"))
        roles = [p.role for p in r.participants]
        for n in sorted({n for n in roles if roles.count(n) > 1}):
            out.append(Diagnostic("error", r.name, f"duplicate role {n}"))
        for p in r.participants:
            if p.entity not in entities:
                out.append(Diagnostic("error", r.name, f"unknown entity {p.entity}"))
            if p.cardinality not in ("one", "many"):
                out.append(Diagnostic("error", r.name, f"bad cardinality {p.cardinality}"))
            if p.participation not in ("total", "partial"):
                out.append(Diagnostic("error", r.name, f"bad participation {p.participation}"))
        anames = [a.name for a in r.attributes]
        for n in sorted({n for n in anames if anames.count(n) > 1}):
            out.append(Diagnostic("error", r.name, f"duplicate attribute {n}"))
        for a in r.attributes:
            _check_attribute(a, r.name, out)
            if a.is_key:
                out.append(Diagnostic("error", r.name, f"relationship attribute {a.name} cannot be a key"))
            if a.name in roles:
                out.append(Diagnostic("error", r.name, f"attribute {a.name} collides with a role name"))
        w = weak_by_ident.get(r.name)
        if w is not None:
            ents = sorted(p.entity for p in r.participants)
            if ents != sorted([w.name, w.weak_owner or ""]) or r.attributes:
                out.append(
                    Diagnostic("error", r.name, f"identifying relationship must relate exactly {w.weak_owner} and {w.name}")
                )
    return ValidationReport(tuple(out))


def require_valid(schema: ErSchema) -> ErSchema:
    report = validate_schema(schema)
    if not report.ok:
        raise SchemaError("; ".join(str(d) for d in report.errors))
    return schema
