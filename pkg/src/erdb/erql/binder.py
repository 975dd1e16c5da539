"""Name resolution and typing of parsed queries and DML against a schema."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import BindError, DataError
from ..model import NUMERIC_TYPES, AttributeDef, ErSchema
from ..values import conform_doc, conform_key, conform_rel_attrs, conform_scalar, conform_value, is_concrete
from . import ast as A
from .printer import print_expr

# ---- bound query types ------------------------------------------------------------


@dataclass(frozen=True)
class BoundPath:
    binder: str  # entity binder the value belongs to (for relationship attributes: the join's new binder)
    scope: str  # entity | relationship
    entity: str  # binder class, or relationship name
    owner: str  # declaring entity or relationship
    names: tuple[str, ...]
    attr: AttributeDef
    key_index: int | None = None
    text: str = ""

    @property
    def is_multi(self) -> bool:
        return self.attr.is_multi

    @property
    def is_scalar(self) -> bool:
        return self.attr.is_scalar

    @property
    def type(self) -> str:
        return self.attr.shape()


@dataclass(frozen=True)
class BoundExpr:
    kind: str  # path | agg | unnest
    path: BoundPath
    fn: str | None = None
    label: str = ""

    @property
    def shape(self) -> str:
        if self.kind == "agg":
            if self.fn == "count":
                return "bigint"
            if self.fn == "avg":
                return "float"
            return self.path.attr.shape()
        if self.kind == "unnest":
            assert self.path.attr.element is not None
            return self.path.attr.element.shape()
        return self.path.attr.shape()


@dataclass(frozen=True)
class BoundNested:
    name: str
    items: tuple
    label: str = ""

    @property
    def scalar_elements(self) -> bool:
        return len(self.items) == 1 and isinstance(self.items[0], BoundExpr)

    @property
    def shape(self) -> str:
        if self.scalar_elements:
            return self.items[0].shape + "[]"
        return "{" + ",".join(f"{i.label}:{i.shape}" for i in self.items) + "}[]"


@dataclass(frozen=True)
class BoundJoin:
    binder: str
    entity: str
    relationship: str | None = None
    prev: str | None = None
    role: int | None = None
    prev_role: int | None = None
    predicate: Any = None
    outer: bool = False


@dataclass(frozen=True)
class BoundQuery:
    query: A.Query
    base: str
    binders: tuple[tuple[str, str], ...]
    joins: tuple[BoundJoin, ...]
    items: tuple
    where: Any = None
    grouped: bool = False
    group_keys: tuple[BoundExpr, ...] = ()

    def entity_of(self, binder: str) -> str:
        return dict(self.binders)[binder]

    @property
    def columns(self) -> list[str]:
        return [i.label for i in self.items]

    @property
    def shape(self) -> list[tuple[str, str]]:
        return [(i.label, i.shape) for i in self.items]

    @property
    def outer(self) -> frozenset[str]:
        return frozenset(j.binder for j in self.joins if j.outer)


def walk_items(items):
    for i in items:
        yield i
        if isinstance(i, BoundNested):
            yield from walk_items(i.items)


def pred_paths(p) -> list[BoundPath]:
    if p is None:
        return []
    if isinstance(p, (A.Compare, A.Member)):
        return [o for o in (p.left, p.right) if isinstance(o, BoundPath)]
    if isinstance(p, A.Not):
        return pred_paths(p.operand)
    if isinstance(p, A.BoolOp):
        return pred_paths(p.left) + pred_paths(p.right)
    return []


def item_binders(item) -> set[str]:
    if isinstance(item, BoundExpr):
        return {item.path.binder}
    out: set[str] = set()
    for i in item.items:
        out |= item_binders(i)
    return out


# ---- bound DML types --------------------------------------------------------------


@dataclass(frozen=True)
class BoundInsertEntity:
    entity: str
    doc: dict
    key: tuple


@dataclass(frozen=True)
class BoundInsertRelationship:
    relationship: str
    keys: tuple[tuple, ...]
    attrs: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BoundSet:
    owner: str
    names: tuple[str, ...]
    attr: AttributeDef
    op: str
    value: Any


@dataclass(frozen=True)
class BoundUpdate:
    entity: str
    key: tuple
    sets: tuple[BoundSet, ...]


@dataclass(frozen=True)
class BoundDelete:
    entity: str
    key: tuple


@dataclass(frozen=True)
class BoundPurge:
    entity: str
    key: tuple


@dataclass(frozen=True)
class BoundDeleteRelationship:
    relationship: str
    keys: tuple[tuple, ...]


BOUND_TYPES = (
    BoundQuery,
    BoundInsertEntity,
    BoundInsertRelationship,
    BoundUpdate,
    BoundDelete,
    BoundPurge,
    BoundDeleteRelationship,
)

# ---- binding ------------------------------------------------------------------------


def _resolve_entity_path(schema: ErSchema, binder: str, entity: str, names: tuple[str, ...]) -> BoundPath:
    fields = schema.doc_fields(entity)
    first = names[0]
    if first not in fields:
        sub = schema.subclass_owner(entity, first)
        if sub is not None:
            raise BindError(f"{first} belongs to subclass {sub}")
        raise BindError(f"{entity} has no attribute {first}")
    owner, attr = fields[first]
    key_index = None
    if len(names) == 1:
        for i, (_, a) in enumerate(schema.key_attributes(entity)):
            if a.name == first:
                key_index = i
    attr = _descend(attr, names)
    return BoundPath(binder, "entity", entity, owner, names, attr, key_index, ".".join((binder,) + names))


def _descend(attr: AttributeDef, names: tuple[str, ...]) -> AttributeDef:
    for i, n in enumerate(names[1:], start=1):
        where = ".".join(names[:i])
        if attr.is_multi:
            raise BindError(f"cannot navigate into multi-valued attribute {where}; use unnest")
        if not attr.is_composite:
            raise BindError(f"{where} is not a composite")
        child = attr.child(n)
        if child is None:
            raise BindError(f"{where} has no field {n}")
        attr = child
    return attr


class _QueryBinder:
    def __init__(self, schema: ErSchema, q: A.Query):
        self.schema = schema
        self.q = q
        self.binders: dict[str, str] = {}
        self.rel_binders: dict[str, str | None] = {}  # relationship name -> new binder (None if ambiguous)

    def add_binder(self, ref: A.EntityRef) -> None:
        if not self.schema.has_entity(ref.entity):
            raise BindError(f"unknown entity {ref.entity}")
        if ref.binder in self.binders:
            raise BindError(f"duplicate binder {ref.binder}")
        self.binders[ref.binder] = ref.entity

    def path(self, p: A.Path) -> BoundPath:
        if p.binder in self.binders:
            return _resolve_entity_path(self.schema, p.binder, self.binders[p.binder], p.names)
        if p.binder in self.rel_binders:
            b = self.rel_binders[p.binder]
            if b is None:
                raise BindError(f"relationship {p.binder} is joined more than once; attribute access is ambiguous")
            r = self.schema.relationship(p.binder)
            attr = next((a for a in r.attributes if a.name == p.names[0]), None)
            if attr is None:
                raise BindError(f"{r.name} has no attribute {p.names[0]}")
            attr = _descend(attr, p.names)
            return BoundPath(b, "relationship", r.name, r.name, p.names, attr, None, p.text())
        raise BindError(f"unknown binder {p.binder}")

    # predicates

    def operand(self, o):
        if isinstance(o, A.Path):
            return self.path(o)
        return o

    def pred(self, p):
        if isinstance(p, A.BoolOp):
            return A.BoolOp(p.op, self.pred(p.left), self.pred(p.right))
        if isinstance(p, A.Not):
            return A.Not(self.pred(p.operand))
        if isinstance(p, A.Compare):
            left, right = self.operand(p.left), self.operand(p.right)
            for o in (left, right):
                if isinstance(o, A.ListLiteral):
                    raise BindError("list literal only allowed on the right of in")
                if isinstance(o, BoundPath) and not o.is_scalar:
                    hint = "; use in" if o.is_multi else ""
                    raise BindError(f"{o.text} is not a scalar{hint}")
            left, right = _coerce_pair(left, right, p.op)
            return A.Compare(p.op, left, right)
        if isinstance(p, A.Member):
            left, right = self.operand(p.left), self.operand(p.right)
            if isinstance(left, A.ListLiteral):
                raise BindError("left side of in must be a scalar")
            if isinstance(left, BoundPath) and not left.is_scalar:
                raise BindError(f"{left.text} is not a scalar")
            if isinstance(right, BoundPath):
                if not right.is_multi:
                    raise BindError(f"{right.text} is not multi-valued")
                el = right.attr.element
                assert el is not None
                if not el.is_scalar:
                    raise BindError(f"{right.text} has composite elements")
                left = _coerce_to(left, el.type or "", right.text)
                if isinstance(left, BoundPath):
                    _check_comparable(left.attr.type or "", el.type or "", left.text, right.text)
                return A.Member(left, right)
            if isinstance(right, A.Literal):
                raise BindError("right side of in must be a list or a multi-valued path")
            if isinstance(left, BoundPath):
                t = left.attr.type or ""
                items = tuple(_coerce_to(i, t, left.text) for i in right.items)
                return A.Member(left, A.ListLiteral(items))
            return A.Member(left, right)
        raise BindError(f"bad predicate {p!r}")

    # select list

    def item(self, it, nested: bool):
        if isinstance(it, A.NestedItem):
            items = tuple(self.item(x, True) for x in it.items)
            labels = [x.label for x in items]
            for lab in labels:
                if labels.count(lab) > 1 and len(items) > 1:
                    raise BindError(f"duplicate field {lab} in nested constructor {it.name}")
            return BoundNested(it.name, items, it.name)
        e = it.expr
        if isinstance(e, A.Path):
            bp = self.path(e)
            label = it.alias or (bp.names[-1] if nested else e.text())
            return BoundExpr("path", bp, None, label)
        if isinstance(e, A.Agg):
            if nested:
                raise BindError("aggregates are not allowed inside nested constructors")
            bp = self.path(e.arg)
            if not bp.is_scalar:
                raise BindError(f"aggregate argument {bp.text} must be a scalar attribute")
            if e.fn in ("sum", "avg") and bp.attr.type not in NUMERIC_TYPES:
                raise BindError(f"{e.fn} needs a numeric argument, {bp.text} is {bp.attr.type}")
            return BoundExpr("agg", bp, e.fn, it.alias or print_expr(e))
        if isinstance(e, A.Unnest):
            if nested:
                raise BindError("unnest is not allowed inside nested constructors")
            bp = self.path(e.arg)
            if not bp.is_multi:
                raise BindError(f"unnest applies only to multi-valued paths, {bp.text} is not")
            return BoundExpr("unnest", bp, None, it.alias or print_expr(e))
        raise BindError(f"bad select item {it!r}")

    # joins

    def rel_join(self, j: A.Join, order: list[str]) -> BoundJoin:
        s = self.schema
        if not s.has_relationship(j.relationship):
            raise BindError(f"unknown relationship {j.relationship}")
        r = s.relationship(j.relationship)
        new_ent = j.target.entity
        prev_binder = order[-1]
        if len(r.participants) != 2:
            raise BindError(f"{r.name} is not binary; relationship joins need binary relationships")
        best = None
        for pb in reversed(order):
            pe = self.binders[pb]
            cands = []
            for i, pi in enumerate(r.participants):
                for k, pk in enumerate(r.participants):
                    if i == k:
                        continue
                    if s.is_related(new_ent, pi.entity) and s.is_related(pe, pk.entity):
                        exact = (new_ent == pi.entity) + (pe == pk.entity)
                        cands.append((exact, i > k, i, k))
            if cands:
                cands.sort(reverse=True)
                _, _, i, k = cands[0]
                best = (pb, i, k)
                break
        if best is None:
            raise BindError(f"{r.name} does not relate {self.binders[prev_binder]} and {new_ent}")
        pb, i, k = best
        return BoundJoin(j.target.binder, new_ent, r.name, pb, i, k, None)

    def bind(self) -> BoundQuery:
        q = self.q
        self.add_binder(q.source)
        order = [q.source.binder]
        joins: list[BoundJoin] = []
        for j in q.joins:
            if j.relationship is not None:
                bj = self.rel_join(j, order)
                self.add_binder(j.target)
                self.rel_binders[bj.relationship] = None if bj.relationship in self.rel_binders else bj.binder
            else:
                self.add_binder(j.target)
                pred = self.pred(j.predicate)
                bj = BoundJoin(j.target.binder, j.target.entity, None, None, None, None, pred)
            order.append(j.target.binder)
            joins.append(bj)
        # a regular binder shadows a relationship name
        for b in self.binders:
            self.rel_binders.pop(b, None)
        items = tuple(self.item(i, False) for i in q.items)
        where = self.pred(q.where) if q.where is not None else None
        grouped, keys = infer_groupby_items(items)
        joins = _mark_outer(q.source.binder, joins, items, where)
        return BoundQuery(q, q.source.binder, tuple(self.binders.items()), tuple(joins), items, where, grouped, keys)


def _mark_outer(base: str, joins: list[BoundJoin], items, where) -> list[BoundJoin]:
    top: set[str] = set()
    nested: set[str] = set()
    for it in items:
        (nested if isinstance(it, BoundNested) else top).update(item_binders(it))
    top.update(p.binder for p in pred_paths(where))
    outer = {j.binder for j in joins if j.binder in nested and j.binder not in top}
    changed = True
    while changed:
        changed = False
        for j in joins:
            deps = {j.prev} if j.relationship else {p.binder for p in pred_paths(j.predicate)} - {j.binder}
            if j.binder in outer:
                continue
            bad = deps & outer
            if bad:
                outer -= bad
                changed = True
    out = []
    for j in joins:
        out.append(BoundJoin(j.binder, j.entity, j.relationship, j.prev, j.role, j.prev_role, j.predicate, j.binder in outer))
    return out


def infer_groupby_items(items) -> tuple[bool, tuple[BoundExpr, ...]]:
    has_agg = any(isinstance(i, BoundExpr) and i.kind == "agg" for i in items)
    has_nested = any(isinstance(i, BoundNested) for i in items)
    if not (has_agg or has_nested):
        return False, ()
    keys = tuple(i for i in items if isinstance(i, BoundExpr) and i.kind != "agg")
    if has_agg:
        for k in keys:
            if k.kind == "path" and k.path.is_multi:
                raise BindError(
                    f"{k.path.text} is multi-valued and cannot be grouped next to aggregates; wrap it in unnest(...)"
                )
    return True, keys


def infer_groupby(query: BoundQuery) -> list[str]:
    """Grouping paths implied by the select list (empty when no grouping applies)."""
    return [k.label if k.kind == "unnest" else k.path.text for k in query.group_keys] if query.grouped else []


def _literal_type(v: Any) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    return "text"


def _check_comparable(ta: str, tb: str, a: str, b: str) -> None:
    def fam(t: str) -> str:
        return "number" if t in NUMERIC_TYPES else ("text" if t in ("text", "date") else t)

    if fam(ta) != fam(tb):
        raise BindError(f"type mismatch: {a} is {ta}, {b} is {tb}")


def _coerce_to(o, type_: str, what: str):
    if not isinstance(o, A.Literal):
        return o
    v = o.value
    lt = _literal_type(v)
    want = "number" if type_ in NUMERIC_TYPES else ("text" if type_ in ("text", "date") else type_)
    if lt != want:
        raise BindError(f"type mismatch: {what} is {type_}, literal {v!r} is {lt}")
    if type_ == "date":
        try:
            return A.Literal(conform_scalar("date", v, what))
        except DataError as e:
            raise BindError(str(e)) from None
    if type_ in ("int", "bigint") and isinstance(v, float):
        return o
    return o


def _coerce_pair(left, right, op: str):
    if isinstance(left, BoundPath) and isinstance(right, BoundPath):
        _check_comparable(left.attr.type or "", right.attr.type or "", left.text, right.text)
        return left, right
    if isinstance(left, BoundPath):
        return left, _coerce_to(right, left.attr.type or "", left.text)
    if isinstance(right, BoundPath):
        return _coerce_to(left, right.attr.type or "", right.text), right
    if _literal_type(left.value) != _literal_type(right.value):
        raise BindError("type mismatch between literals")
    return left, right


# ---- DML binding --------------------------------------------------------------------


def _key_from_where(schema: ErSchema, entity: str, where) -> tuple:
    attrs = [a.name for _, a in schema.key_attributes(entity)]
    given = dict(where)
    if len(given) != len(where):
        raise BindError("duplicate condition in where")
    if sorted(given) != sorted(attrs):
        raise BindError(f"where must fix exactly the key of {entity}: {', '.join(attrs)}")
    try:
        return conform_key(schema, entity, [given[a] for a in attrs])
    except DataError as e:
        raise BindError(str(e)) from None


def _key_from_value(schema: ErSchema, entity: str, v: Any, role: str) -> tuple:
    attrs = [a.name for _, a in schema.key_attributes(entity)]
    if isinstance(v, dict):
        if sorted(v) != sorted(attrs):
            raise BindError(f"key for {role} must name exactly: {', '.join(attrs)}")
        vals = [v[a] for a in attrs]
    elif isinstance(v, list):
        raise BindError(f"key for {role} cannot be an array")
    else:
        if len(attrs) != 1:
            raise BindError(f"key for {role} needs fields {', '.join(attrs)}")
        vals = [v]
    try:
        return conform_key(schema, entity, vals)
    except DataError as e:
        raise BindError(str(e)) from None


def _role_keys(schema: ErSchema, rel: str, roles) -> tuple[tuple, ...]:
    if not schema.has_relationship(rel):
        raise BindError(f"unknown relationship {rel}")
    if schema.is_identifying(rel):
        raise BindError(f"{rel} is an identifying relationship; its instances follow from weak-entity keys")
    r = schema.relationship(rel)
    given = dict(roles)
    if len(given) != len(roles):
        raise BindError("duplicate role")
    want = [p.role for p in r.participants]
    if sorted(given) != sorted(want):
        raise BindError(f"{rel} needs roles {', '.join(want)}")
    return tuple(_key_from_value(schema, p.entity, given[p.role], p.role) for p in r.participants)


def _bind_set(schema: ErSchema, entity: str, c: A.SetClause) -> BoundSet:
    fields = schema.doc_fields(entity)
    first = c.path[0]
    if first not in fields:
        sub = schema.subclass_owner(entity, first)
        if sub is not None:
            raise BindError(f"{first} belongs to subclass {sub}")
        raise BindError(f"{entity} has no attribute {first}")
    owner, attr = fields[first]
    if any(a.name == first for _, a in schema.key_attributes(entity)):
        raise BindError(f"key attribute {first} cannot be updated")
    attr = _descend(attr, c.path)
    try:
        if c.op == "=":
            value = conform_value(attr, c.value, "")
        else:
            if not attr.is_multi:
                raise BindError(f"{'.'.join(c.path)} is not multi-valued; {c.op} needs an array attribute")
            assert attr.element is not None
            value = conform_value(attr.element, c.value, "")
            if value is None:
                raise BindError("element cannot be absent")
    except DataError as e:
        raise BindError(str(e)) from None
    if attr.is_scalar and isinstance(c.value, (list, dict)):
        raise BindError(f"{'.'.join(c.path)} is scalar")
    return BoundSet(owner, c.path, attr, c.op, value)


def _bind_dml(schema: ErSchema, s):
    if isinstance(s, A.InsertEntity):
        if not schema.has_entity(s.entity):
            raise BindError(f"unknown entity {s.entity}")
        if not is_concrete(schema, s.entity):
            raise BindError(f"{s.entity} has a total specialization; a concrete class is required")
        try:
            doc = conform_doc(schema, s.entity, s.doc)
        except DataError as e:
            raise BindError(str(e)) from None
        key = tuple(doc[a] for _, a in schema.key_closure(s.entity))
        return BoundInsertEntity(s.entity, doc, key)
    if isinstance(s, A.InsertRelationship):
        keys = _role_keys(schema, s.relationship, s.roles)
        try:
            attrs = conform_rel_attrs(schema, s.relationship, s.attrs)
        except DataError as e:
            raise BindError(str(e)) from None
        return BoundInsertRelationship(s.relationship, keys, attrs)
    if isinstance(s, A.DeleteRelationship):
        return BoundDeleteRelationship(s.relationship, _role_keys(schema, s.relationship, s.roles))
    if not schema.has_entity(s.entity):
        raise BindError(f"unknown entity {s.entity}")
    key = _key_from_where(schema, s.entity, s.where)
    if isinstance(s, A.UpdateEntity):
        sets = tuple(_bind_set(schema, s.entity, c) for c in s.sets)
        for i, a in enumerate(sets):
            for b in sets[i + 1 :]:
                n = min(len(a.names), len(b.names))
                if a.names[:n] == b.names[:n]:
                    raise BindError(f"conflicting assignments to {'.'.join(a.names)} and {'.'.join(b.names)}")
        return BoundUpdate(s.entity, key, sets)
    if isinstance(s, A.DeleteEntity):
        return BoundDelete(s.entity, key)
    if isinstance(s, A.PurgeEntity):
        return BoundPurge(s.entity, key)
    raise BindError(f"cannot bind {s!r}")


def bind(schema: ErSchema, ast):
    """Resolve names and types; binding an already bound tree returns it unchanged."""
    if isinstance(ast, BOUND_TYPES):
        return ast
    if isinstance(ast, A.Query):
        return _QueryBinder(schema, ast).bind()
    return _bind_dml(schema, ast)
