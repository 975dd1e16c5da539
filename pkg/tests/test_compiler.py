from __future__ import annotations

import pytest

from oracles import purge_expected
from erdb.bench import SYNTHETIC_WORKLOAD, build_mappings, build_synthetic_schema
from erdb.compiler import compile_crud, compile_query, explain, plan_metrics, purge_compile
from erdb.compiler.plan import Filter, PTypeIn, Scan, UnionAll, walk
from erdb.engine import materialize, reconstruct_entities
from erdb.erql import bind, infer_groupby, parse_query
from erdb.errors import CompileError
from erdb.mapping import generate_factorized, generate_hierarchy_variant, generate_normalized
from erdb.values import datasets_equal

Q_MV = "select r.id, r.mv1, r.mv2, r.mv3 from R r"
W = dict(SYNTHETIC_WORKLOAD)


@pytest.fixture(scope="module")
def syn():
    s = build_synthetic_schema()
    return s, build_mappings(s)


def metrics(syn, m, q):
    s, ms = syn
    return plan_metrics(compile_query(s, ms[m], q))


def ops(plan, kind):
    return [op for op in walk(plan.root) if isinstance(op, kind)]


def test_groupby_inference(uni):
    def groups(q):
        return infer_groupby(bind(uni, parse_query(q)))

    assert groups("select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor") == ["i.ID"]
    assert groups("select c.title, sections: [s.sec_id] from Course c join Section s on sec_course") == ["c.title"]
    assert groups("select p.ID, p.name from Person p") == []


def test_multivalued_query_joins(syn):
    assert metrics(syn, "M1", Q_MV).joins == 3
    m2 = metrics(syn, "M2", Q_MV)
    assert (m2.joins, m2.unnests) == (0, 0)


def test_subclass_scan_per_hierarchy_strategy(syn):
    s, ms = syn
    q = W["q_r3_scan"]
    assert metrics(syn, "M1", q).joins == 2
    m3 = compile_query(s, ms["M3"], q)
    assert plan_metrics(m3).joins == 0
    assert any(isinstance(f.pred, PTypeIn) for f in ops(m3, Filter))
    m4 = compile_query(s, ms["M4"], q)
    assert plan_metrics(m4).joins == 0 and len(ops(m4, Scan)) == 1


def test_root_scan_under_disjoint_is_a_five_way_union(syn):
    s, ms = syn
    p = compile_query(s, ms["M4"], "select r.a from R r where r.a > 2")
    [u] = ops(p, UnionAll)
    assert len(u.children) == 5 and len(ops(p, Scan)) == 5
    assert plan_metrics(p).unions == 1
    r3 = plan_metrics(compile_query(s, ms["M4"], W["q_r3_scan"]))
    assert (r3.unions, r3.joins) == (0, 0)


def test_metrics_are_deterministic(syn):
    s, ms = syn
    for q, text in SYNTHETIC_WORKLOAD:
        for m in ms.values():
            assert plan_metrics(compile_query(s, m, text)) == plan_metrics(compile_query(s, m, text))
            assert explain(compile_query(s, m, text)) == explain(compile_query(s, m, text))


def test_insert_student_class_per_subclass(uni):
    ws = compile_crud(uni, generate_normalized(uni), 'insert entity Student {ID: 1, name: "Ann", tot_credits: 3}')
    assert ws.count("insert") == 2
    assert ws.containers("insert") == ["person", "student"]


def test_insert_student_single_table(uni):
    m = generate_hierarchy_variant(uni, "Person", "single_table")
    ws = compile_crud(uni, m, 'insert entity Student {ID: 1, name: "Ann", tot_credits: 3}')
    [ins] = [a for a in ws.actions if a.action == "insert"]
    assert ins.row["type"] == "Student"


def test_insert_advisor_updates_the_student_row(uni):
    ws = compile_crud(uni, generate_normalized(uni), "insert relationship advisor (Instructor: 2, Student: 1)")
    [upd] = [a for a in ws.actions if a.action == "update"]
    assert upd.container == "student" and upd.key == (1,)
    assert dict(upd.set) == {"Instructor_ID": 2}
    assert ws.count("insert") == 0


def test_purge_student_under_normalized(uni, d0):
    m = generate_normalized(uni)
    ws = purge_compile(uni, m, "Person", 1)
    touched = set(ws.containers("delete"))
    assert {"student", "person", "person_ph", "takes"} <= touched
    assert "course" not in ws.containers() and "section" not in ws.containers()
    st = materialize(uni, m, d0)
    st.apply_writes(ws)
    assert datasets_equal(uni, reconstruct_entities(st), purge_expected(uni, d0, "Person", (1,)))


def test_purge_leaf_entity_is_a_single_delete():
    from erdb.erql import schema_from_ddl

    s = schema_from_ddl("create entity A (id int key, x text)")
    ws = purge_compile(s, generate_normalized(s), "A", 5)
    assert [a.action for a in ws.actions if a.action.startswith("delete")] == ["delete"]
    assert ws.containers("delete") == ["a"]


def test_purge_under_factorized_takes(uni, d0):
    m = generate_factorized(uni, "takes")
    ws = purge_compile(uni, m, "Student", 1)
    assert ws.count("nested_delete", "student_takes_section.left") == 1
    assert ws.count("delete", "student_takes_section.edges") == 1
    st = materialize(uni, m, d0)
    st.apply_writes(ws)
    assert datasets_equal(uni, reconstruct_entities(st), purge_expected(uni, d0, "Student", (1,)))
    assert st.edge_count("student_takes_section") == 0


def test_purge_of_missing_instance_is_a_no_op(uni, d0):
    m = generate_normalized(uni)
    st = materialize(uni, m, d0)
    st.apply_writes(purge_compile(uni, m, "Person", 99))
    assert datasets_equal(uni, reconstruct_entities(st), d0)


def test_query_is_not_a_write(uni):
    with pytest.raises(CompileError):
        compile_crud(uni, generate_normalized(uni), "select p.ID from Person p")
