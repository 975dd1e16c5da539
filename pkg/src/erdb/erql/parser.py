"""Recursive-descent parser for the DDL, query, and DML grammars."""

from __future__ import annotations

from typing import Any

from ..changes import (
    HIERARCHY_STRATEGIES,
    AddAttribute,
    ChangeCardinality,
    DropAttribute,
    MakeMultivalued,
    SetHierarchyStrategy,
)
from ..errors import ParseError
from ..model import SCALAR_TYPES, AttributeDef, EntitySetDef, Participant, RelationshipDef
from .ast import (
    Agg,
    AlterStatement,
    BoolOp,
    Compare,
    CreateEntity,
    CreateRelationship,
    DeleteEntity,
    DeleteRelationship,
    EntityRef,
    ExprItem,
    InsertEntity,
    InsertRelationship,
    Join,
    ListLiteral,
    Literal,
    Member,
    NestedItem,
    Not,
    Path,
    PurgeEntity,
    Query,
    SetClause,
    Unnest,
    UpdateEntity,
)
from .lexer import RESERVED, Token, tokenize

AGGREGATES = ("count", "sum", "avg", "min", "max")
COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")
MAX_DEPTH = 200


class _Parser:
    def __init__(self, text: str):
        if not isinstance(text, str):
            raise ParseError("input must be text")
        self.toks = tokenize(text)
        self.pos = 0
        self.depth = 0

    # ---- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def error(self, msg: str, expected: tuple[str, ...] = ()) -> ParseError:
        t = self.tok
        return ParseError(f"{msg}, found {t.describe()}", t.line, t.column, expected)

    def at_word(self, *words: str) -> bool:
        return self.tok.kind == "name" and str(self.tok.value).lower() in words

    def at_punct(self, p: str) -> bool:
        return self.tok.kind == "punct" and self.tok.value == p

    def expect_word(self, *words: str) -> str:
        if not self.at_word(*words):
            raise self.error("unexpected token", words)
        return str(self.advance().value).lower()

    def expect_punct(self, p: str) -> None:
        if not self.at_punct(p):
            raise self.error("unexpected token", (repr(p),))
        self.advance()

    def accept_word(self, *words: str) -> str | None:
        if self.at_word(*words):
            return str(self.advance().value).lower()
        return None

    def accept_punct(self, p: str) -> bool:
        if self.at_punct(p):
            self.advance()
            return True
        return False

    def name(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != "name" or str(t.value).lower() in RESERVED:
            raise self.error(f"expected {what}", (what,))
        self.advance()
        return str(t.value)

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("nesting too deep")

    def leave(self) -> None:
        self.depth -= 1

    def expect_eof(self) -> None:
        if self.tok.kind != "eof":
            raise self.error("unexpected trailing input", ("end of input",))

    # ---- DDL ----------------------------------------------------------------

    def ddl_statement(self):
        if self.at_word("alter"):
            return self.alter()
        self.expect_word("create")
        kind = self.expect_word("entity", "relationship")
        return self.create_entity() if kind == "entity" else self.create_relationship()

    def attr_list(self, owner: str) -> tuple[AttributeDef, ...]:
        self.enter()
        attrs = [self.attr()]
        while self.accept_punct(","):
            attrs.append(self.attr())
        names = [a.name for a in attrs]
        for n in names:
            if names.count(n) > 1:
                raise self.error(f"duplicate attribute name {n} in {owner}")
        self.leave()
        return tuple(attrs)

    def attr(self) -> AttributeDef:
        name = self.name("attribute name")
        a = self.type_expr(name)
        if self.accept_word("key"):
            a = AttributeDef(a.name, a.kind, a.type, a.children, a.element, True)
        return a

    def type_expr(self, name: str) -> AttributeDef:
        if self.accept_punct("{"):
            children = self.attr_list(name)
            self.expect_punct("}")
            a = AttributeDef(name, "composite", children=children)
        elif self.at_word(*SCALAR_TYPES):
            a = AttributeDef(name, "scalar", type=self.expect_word(*SCALAR_TYPES))
        else:
            raise self.error("expected a type", SCALAR_TYPES + ("'{'",))
        while self.at_punct("[") and self.peek().kind == "punct" and self.peek().value == "]":
            self.advance()
            self.advance()
            a = AttributeDef(name, "multi_valued", element=a)
        return a

    def comment(self) -> str | None:
        if self.accept_word("comment"):
            t = self.tok
            if t.kind != "string":
                raise self.error("expected a string", ("string",))
            self.advance()
            return str(t.value)
        return None

    def create_entity(self) -> CreateEntity:
        name = self.name("entity name")
        sup = None
        disjoint = total = False
        if self.accept_word("extends"):
            sup = self.name("superclass name")
            d = self.accept_word("disjoint", "overlapping")
            disjoint = d == "disjoint"
            t = self.accept_word("total", "partial")
            total = t == "total"
        self.expect_punct("(")
        attrs = self.attr_list(name)
        self.expect_punct(")")
        owner = ident = None
        if self.accept_word("weak"):
            self.expect_word("of")
            owner = self.name("owner entity name")
            self.expect_word("via")
            ident = self.name("identifying relationship name")
        desc = self.comment()
        return CreateEntity(EntitySetDef(name, attrs, sup, disjoint, total, owner, ident, desc))

    def create_relationship(self) -> CreateRelationship:
        name = self.name("relationship name")
        self.expect_word("between")
        parts = [self.participant()]
        while self.accept_punct(","):
            parts.append(self.participant())
        attrs: tuple[AttributeDef, ...] = ()
        if self.accept_punct("("):
            attrs = self.attr_list(name)
            self.expect_punct(")")
        desc = self.comment()
        return CreateRelationship(RelationshipDef(name, tuple(parts), attrs, desc))

    def participant(self) -> Participant:
        ent = self.name("entity name")
        role = ent
        if self.accept_word("as"):
            role = self.name("role name")
        card = self.accept_word("one", "many") or "many"
        part = self.accept_word("total", "partial") or "partial"
        return Participant(ent, role, card, part)

    def alter(self) -> AlterStatement:
        self.expect_word("alter")
        kind = self.expect_word("entity", "relationship", "hierarchy")
        if kind == "entity":
            ent = self.name("entity name")
            verb = self.expect_word("make", "add", "drop")
            if verb == "make":
                self.expect_word("multivalued")
                return AlterStatement(MakeMultivalued(ent, self.name("attribute name")))
            if verb == "add":
                return AlterStatement(AddAttribute(ent, self.attr()))
            return AlterStatement(DropAttribute(ent, self.name("attribute name")))
        if kind == "relationship":
            rel = self.name("relationship name")
            self.expect_word("set")
            role = self.name("role name")
            card = self.expect_word("one", "many")
            return AlterStatement(ChangeCardinality(rel, role, card))
        root = self.name("entity name")
        self.expect_word("strategy")
        return AlterStatement(SetHierarchyStrategy(root, self.expect_word(*HIERARCHY_STRATEGIES)))

    # ---- queries --------------------------------------------------------------

    def query(self) -> Query:
        self.expect_word("select")
        items = self.select_items()
        self.expect_word("from")
        source = EntityRef(self.name("entity name"), self.name("binder"))
        joins = []
        while self.accept_word("join"):
            target = EntityRef(self.name("entity name"), self.name("binder"))
            self.expect_word("on")
            if self.tok.kind == "name" and str(self.tok.value).lower() not in RESERVED and not (
                self.peek().kind == "punct" and self.peek().value == "."
            ):
                joins.append(Join(target, relationship=self.name("relationship name")))
            else:
                joins.append(Join(target, predicate=self.predicate()))
        where = None
        if self.accept_word("where"):
            where = self.predicate()
        return Query(tuple(items), source, tuple(joins), where)

    def select_items(self) -> list:
        self.enter()
        items = [self.select_item()]
        while self.accept_punct(","):
            items.append(self.select_item())
        self.leave()
        return items

    def select_item(self):
        t = self.tok
        if t.kind == "name" and self.peek().kind == "punct" and self.peek().value == ":":
            name = self.name("constructor name")
            self.expect_punct(":")
            self.expect_punct("[")
            items = self.select_items()
            self.expect_punct("]")
            return NestedItem(name, tuple(items))
        expr = self.expr()
        alias = None
        if self.accept_word("as"):
            alias = self.name("alias")
        return ExprItem(expr, alias)

    def expr(self):
        t = self.tok
        if t.kind == "name" and self.peek().kind == "punct" and self.peek().value == "(":
            fn = str(t.value).lower()
            if fn == "unnest":
                self.advance()
                self.expect_punct("(")
                p = self.path()
                self.expect_punct(")")
                return Unnest(p)
            if fn in AGGREGATES:
                self.advance()
                self.expect_punct("(")
                p = self.path()
                self.expect_punct(")")
                return Agg(fn, p)
            raise self.error("unknown function", AGGREGATES + ("unnest",))
        return self.path()

    def path(self) -> Path:
        binder = self.name("binder")
        names = []
        self.expect_punct(".")
        names.append(self.name("attribute name"))
        while self.accept_punct("."):
            names.append(self.name("attribute name"))
        return Path(binder, tuple(names))

    def predicate(self):
        self.enter()
        left = self.and_pred()
        while self.accept_word("or"):
            left = BoolOp("or", left, self.and_pred())
        self.leave()
        return left

    def and_pred(self):
        left = self.not_pred()
        while self.accept_word("and"):
            left = BoolOp("and", left, self.not_pred())
        return left

    def not_pred(self):
        if self.accept_word("not"):
            self.enter()
            inner = self.not_pred()
            self.leave()
            return Not(inner)
        if self.accept_punct("("):
            p = self.predicate()
            self.expect_punct(")")
            return p
        left = self.operand()
        if self.accept_word("in"):
            return Member(left, self.operand())
        if self.tok.kind == "punct" and self.tok.value in COMPARE_OPS:
            op = str(self.advance().value)
            return Compare(op, left, self.operand())
        raise self.error("expected a comparison", COMPARE_OPS + ("in",))

    def operand(self):
        t = self.tok
        if t.kind in ("int", "float", "string"):
            self.advance()
            return Literal(t.value)
        if t.is_word("true") or t.is_word("false"):
            self.advance()
            return Literal(t.is_word("true"))
        if self.accept_punct("["):
            items = []
            if not self.at_punct("]"):
                items.append(self.scalar_literal())
                while self.accept_punct(","):
                    items.append(self.scalar_literal())
            self.expect_punct("]")
            return ListLiteral(tuple(items))
        return self.path()

    def scalar_literal(self) -> Literal:
        t = self.tok
        if t.kind in ("int", "float", "string"):
            self.advance()
            return Literal(t.value)
        if t.is_word("true") or t.is_word("false"):
            self.advance()
            return Literal(t.is_word("true"))
        raise self.error("expected a literal", ("number", "string", "true", "false"))

    # ---- DML ------------------------------------------------------------------

    def dml_statement(self):
        verb = self.expect_word("insert", "update", "delete", "purge")
        if verb == "insert":
            kind = self.expect_word("entity", "relationship")
            if kind == "entity":
                ent = self.name("entity name")
                return InsertEntity(ent, self.document())
            rel = self.name("relationship name")
            roles = self.role_keys()
            attrs = self.document() if self.at_punct("{") else None
            return InsertRelationship(rel, roles, attrs)
        if verb == "update":
            self.expect_word("entity")
            ent = self.name("entity name")
            self.expect_word("set")
            sets = [self.set_clause()]
            while self.accept_punct(","):
                sets.append(self.set_clause())
            return UpdateEntity(ent, tuple(sets), self.key_where())
        if verb == "delete":
            kind = self.expect_word("entity", "relationship")
            if kind == "relationship":
                rel = self.name("relationship name")
                return DeleteRelationship(rel, self.role_keys())
            ent = self.name("entity name")
            return DeleteEntity(ent, self.key_where())
        self.expect_word("entity")
        ent = self.name("entity name")
        return PurgeEntity(ent, self.key_where())

    def role_keys(self) -> tuple[tuple[str, Any], ...]:
        self.expect_punct("(")
        out = []
        while True:
            role = self.name("role name")
            self.expect_punct(":")
            out.append((role, self.value()))
            if not self.accept_punct(","):
                break
        self.expect_punct(")")
        return tuple(out)

    def set_clause(self) -> SetClause:
        path = [self.name("attribute name")]
        while self.accept_punct("."):
            path.append(self.name("attribute name"))
        t = self.tok
        if t.kind == "punct" and t.value in ("=", "+=", "-="):
            self.advance()
            return SetClause(tuple(path), str(t.value), self.value())
        raise self.error("expected an assignment", ("=", "+=", "-="))

    def key_where(self) -> tuple[tuple[str, Any], ...]:
        self.expect_word("where")
        out = []
        while True:
            n = self.name("attribute name")
            self.expect_punct("=")
            out.append((n, self.scalar_literal().value))
            if not self.accept_word("and"):
                break
        return tuple(out)

    def value(self) -> Any:
        t = self.tok
        if self.at_punct("{"):
            return self.document()
        if self.accept_punct("["):
            self.enter()
            items = []
            if not self.at_punct("]"):
                items.append(self.value())
                while self.accept_punct(","):
                    items.append(self.value())
            self.expect_punct("]")
            self.leave()
            return items
        if t.kind in ("int", "float", "string") or t.is_word("true") or t.is_word("false"):
            return self.scalar_literal().value
        raise self.error("expected a value", ("literal", "'['", "'{'"))

    def document(self) -> dict:
        self.enter()
        self.expect_punct("{")
        out: dict = {}
        if not self.at_punct("}"):
            while True:
                k = self.name("field name")
                if k in out:
                    raise self.error(f"duplicate field {k}")
                self.expect_punct(":")
                out[k] = self.value()
                if not self.accept_punct(","):
                    break
        self.expect_punct("}")
        self.leave()
        return out


def _guard(fn):
    def run(text, *args):
        try:
            return fn(text, *args)
        except RecursionError:
            raise ParseError("nesting too deep") from None

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


@_guard
def parse_ddl(text: str) -> list:
    """Parse a DDL script into statements in source order (``;`` separators optional)."""
    p = _Parser(text)
    out = []
    while True:
        while p.accept_punct(";"):
            pass
        if p.tok.kind == "eof":
            return out
        out.append(p.ddl_statement())


@_guard
def parse_query(text: str) -> Query:
    p = _Parser(text)
    q = p.query()
    p.accept_punct(";")
    p.expect_eof()
    return q


@_guard
def parse_dml(text: str):
    p = _Parser(text)
    s = p.dml_statement()
    p.accept_punct(";")
    p.expect_eof()
    return s


@_guard
def parse_statement(text: str):
    """Parse one statement of any grammar, dispatching on its first keyword."""
    p = _Parser(text)
    if p.at_word("select"):
        s = p.query()
    elif p.at_word("create", "alter"):
        s = p.ddl_statement()
    elif p.at_word("insert", "update", "delete", "purge"):
        s = p.dml_statement()
    else:
        raise p.error("expected a statement", ("select", "create", "alter", "insert", "update", "delete", "purge"))
    p.accept_punct(";")
    p.expect_eof()
    return s
