from __future__ import annotations

import random

import pytest

import grammar_gen as G
from erdb.changes import ChangeCardinality, MakeMultivalued
from erdb.erql import (
    AlterStatement,
    BoolOp,
    CreateEntity,
    CreateRelationship,
    DeleteEntity,
    ExprItem,
    InsertEntity,
    InsertRelationship,
    NestedItem,
    Not,
    Path,
    bind,
    infer_groupby,
    parse_ddl,
    parse_dml,
    parse_query,
    parse_statement,
    print_schema,
    print_statement,
    schema_from_ddl,
    tokenize,
)
from erdb.errors import BindError, ParseError
from erdb.schemas import UNIVERSITY_DDL


def test_create_entity_with_multivalued_attribute():
    [st] = parse_ddl("create entity Person (ID bigint key, name text, Ph text[])")
    assert isinstance(st, CreateEntity)
    e = st.entity
    assert [a.name for a in e.attributes] == ["ID", "name", "Ph"]
    assert e.attributes[0].is_key and e.attributes[0].type == "bigint"
    ph = e.attribute("Ph")
    assert ph.is_multi and ph.element.type == "text"


def test_create_binary_relationship():
    [st] = parse_ddl("create relationship advisor between Instructor one, Student many")
    assert isinstance(st, CreateRelationship)
    r = st.relationship
    assert r.is_binary and r.kind == "many_to_one"
    assert r.participant("Instructor").cardinality == "one"
    assert r.participant("Student").cardinality == "many"


def test_empty_ddl():
    assert parse_ddl("") == []
    assert parse_ddl("  -- only a comment\n") == []


def test_query_with_nested_item():
    q = parse_query("select c.title, sections: [s.sec_id, s.semester] from Course c join Section s on sec_course")
    plain, nested = q.items
    assert plain == ExprItem(Path("c", ("title",)))
    assert isinstance(nested, NestedItem) and nested.name == "sections" and len(nested.items) == 2
    assert q.joins[0].relationship == "sec_course" and q.joins[0].predicate is None


def test_aggregate_query_without_group_by(uni):
    q = parse_query("select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor")
    agg = q.items[1].expr
    assert agg.fn == "avg" and agg.arg == Path("s", ("tot_credits",))
    assert infer_groupby(bind(uni, q)) == ["i.ID"]


def test_minimal_query():
    q = parse_query("select p.ID from Person p")
    assert len(q.items) == 1 and q.joins == () and q.where is None


def test_insert_entity_document():
    st = parse_dml('insert entity Person {ID: 1, name: "Ann", Ph: ["555-1111","555-2222"]}')
    assert st == InsertEntity("Person", {"ID": 1, "name": "Ann", "Ph": ["555-1111", "555-2222"]})


def test_delete_and_insert_relationship():
    assert parse_dml("delete entity Person where ID = 1") == DeleteEntity("Person", (("ID", 1),))
    st = parse_dml("insert relationship advisor (Instructor: 2, Student: 1)")
    assert st == InsertRelationship("advisor", (("Instructor", 2), ("Student", 1)))


def test_alter_statements():
    [a, b] = parse_ddl("alter entity Person make multivalued city; alter relationship advisor set Instructor many")
    assert a == AlterStatement(MakeMultivalued("Person", "city"))
    assert b == AlterStatement(ChangeCardinality("advisor", "Instructor", "many"))


def test_predicate_precedence():
    q = parse_query("select p.ID from Person p where not p.ID = 1 or p.ID = 2 and p.name = \"x\"")
    assert isinstance(q.where, BoolOp) and q.where.op == "or"
    assert isinstance(q.where.left, Not)
    assert q.where.right.op == "and"


def test_bind_direct_attribute(uni):
    b = bind(uni, parse_query("select s.tot_credits from Student s"))
    p = b.items[0].path
    assert (p.entity, p.names, p.attr.type) == ("Student", ("tot_credits",), "int")


def test_bind_subclass_attribute_through_root_is_rejected(uni):
    with pytest.raises(BindError, match="rank belongs to subclass Instructor"):
        bind(uni, parse_query("select p.rank from Person p"))


def test_bind_join_on_unrelated_relationship(uni):
    with pytest.raises(BindError, match="advisor does not relate Course and Student"):
        bind(uni, parse_query("select c.title from Course c join Student s on advisor"))


@pytest.mark.parametrize(
    "text",
    [
        "select p.nope from Person p",
        "select q.ID from Person p",
        "select p.ID from Nobody p",
        "select p.ID from Person p join Person p on advisor",
        'select p.ID from Person p where p.ID = "one"',
        "select sum(p.name) from Person p",
        "select unnest(p.name) from Person p",
    ],
)
def test_bind_errors(uni, text):
    with pytest.raises(BindError):
        bind(uni, parse_query(text))


@pytest.mark.parametrize(
    "text,line,column",
    [
        ("select from", 1, 8),
        ("select p.ID\nfrom Person", 2, 12),
        ('insert entity P {a: "x}', 1, 21),
        ("create entity A (x blob)", 1, 20),
    ],
)
def test_parse_errors_carry_locus(text, line, column):
    with pytest.raises(ParseError) as ei:
        parse_statement(text)
    assert (ei.value.line, ei.value.column) == (line, column)


def test_tokens_reject_non_ascii_digits():
    with pytest.raises(ParseError):
        tokenize("x = 9³")


def test_schema_print_parse_round_trip(uni):
    assert schema_from_ddl(print_schema(uni)) == uni
    assert schema_from_ddl(UNIVERSITY_DDL).fingerprint() == uni.fingerprint()


def test_seeded_tree_round_trip():
    rng = random.Random(42)
    for _ in range(500):
        tree = G.statement(rng)
        assert parse_statement(print_statement(tree)) == tree


def test_print_is_canonical():
    text = "SELECT  p.ID ,count( p.name )FROM Person p WHERE ( p.ID > 1 )"
    assert print_statement(parse_statement(text)) == "select p.ID, count(p.name) from Person p where p.ID > 1"
