from __future__ import annotations

import os
import sqlite3
from pathlib import Path

import pytest

from erdb.bench import SYNTHETIC_WORKLOAD, UNIVERSITY_WORKLOAD, build_mappings, build_synthetic_schema
from erdb.compiler import compile_query
from erdb.compiler.plan import Coalesce, Filter, GroupNest, PBool, PIn, PNot, Project, Unnest, walk
from erdb.datagen import generate
from erdb.engine import PROFILES, emit_sql, execute, materialize
from erdb.engine.sqlemit import column_names, table_name
from erdb.errors import EmitError
from erdb.model import SCALAR_TYPES
from erdb.mapping import design_of, enumerate_mappings, generate_factorized
from erdb.schemas import university_schema
from erdb.values import sort_key

from conftest import university_families

GOLDEN = Path(__file__).parent / "golden"
SW, UW = dict(SYNTHETIC_WORKLOAD), dict(UNIVERSITY_WORKLOAD)

# (golden name, schema, mapping label, profile, query)
CASES = [
    ("q1_mv_m2_standard", "syn", "M2", "standard", SW["q1_mv"]),
    ("q1_mv_m1_standard", "syn", "M1", "standard", SW["q1_mv"]),
    ("q1_mv_m1_postgres", "syn", "M1", "postgres", SW["q1_mv"]),
    ("r3_scan_m1_standard", "syn", "M1", "standard", SW["q_r3_scan"]),
    ("r3_scan_m3_standard", "syn", "M3", "standard", SW["q_r3_scan"]),
    ("r3_scan_m4_standard", "syn", "M4", "standard", SW["q_r3_scan"]),
    ("r_scan_m4_standard", "syn", "M4", "standard", SW["q_r_scan"]),
    ("key_lookup_m1_duckdb", "syn", "M1", "duckdb", SW["q_key_lookup"]),
    ("key_lookup_m2_duckdb", "syn", "M2", "duckdb", SW["q_key_lookup"]),
    ("prejoin_m1_standard", "syn", "M1", "standard", SW["q_prejoin"]),
    ("s1_join_m5_postgres", "syn", "M5", "postgres", SW["q_s1_join"]),
    ("s1_join_m5_duckdb", "syn", "M5", "duckdb", SW["q_s1_join"]),
    ("mv_group_m2_postgres", "syn", "M2", "postgres", SW["q_mv_group"]),
    ("s1_nest_m1_postgres", "syn", "M1", "postgres", SW["q_s1_nest"]),
    ("mv_member_m2_standard", "syn", "M2", "standard", SW["q_mv_member"]),
    ("advisor_avg_normalized_standard", "uni", "normalized", "standard", UW["u_advisor_avg"]),
    ("advisor_avg_single_table_postgres", "uni", "single_table", "postgres", UW["u_advisor_avg"]),
    ("sections_nest_normalized_postgres", "uni", "normalized", "postgres", "select c.title, sections: [s.sec_id, s.semester] from Course c join Section s on sec_course"),
    ("sections_fold_duckdb", "uni", "fold_section", "duckdb", "select c.title, x.sec_id from Course c join Section x on sec_course"),
    ("phone_rows_normalized_standard", "uni", "normalized", "standard", UW["u_phone_rows"]),
    ("phone_member_arrays_postgres", "uni", "arrays", "postgres", UW["u_phone_member"]),
    ("or_not_disjoint_standard", "uni", "disjoint", "standard", UW["u_or_not"]),
    ("roster_normalized_duckdb", "uni", "normalized", "duckdb", UW["u_section_roster"]),
    ("same_city_normalized_standard", "uni", "normalized", "standard", UW["u_same_city"]),
]


@pytest.fixture(scope="module")
def schemas():
    s = build_synthetic_schema()
    return {"syn": (s, build_mappings(s)), "uni": (university_schema(), university_families())}


def emitted(schemas, which, label, prof, query):
    schema, maps = schemas[which]
    m = maps[label]
    return emit_sql(schema, m, compile_query(schema, m, query), prof)


@pytest.mark.parametrize("name,which,label,prof,query", CASES, ids=[c[0] for c in CASES])
def test_golden_select(schemas, name, which, label, prof, query):
    path = GOLDEN / f"{name}.sql"
    text = emitted(schemas, which, label, prof, query)
    if os.environ.get("ERDB_WRITE_GOLDEN"):
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8")


def test_golden_count():
    assert len(CASES) >= 20 and len({c[0] for c in CASES}) == len(CASES)


def test_multivalued_arrays_select_text(schemas):
    text = emitted(schemas, "syn", "M2", "standard", SW["q1_mv"])
    assert " ".join(text.split()) == "SELECT r.id, r.mv1, r.mv2, r.mv3 FROM r"


def test_nested_item_uses_grouped_array_aggregation(schemas):
    text = emitted(schemas, "uni", "normalized", "postgres", "select c.title, sections: [s.sec_id, s.semester] from Course c join Section s on sec_course")
    assert "array_agg(" in text and "GROUP BY c.title" in text and "JOIN section" in text


def test_factorized_is_not_emittable(uni):
    m = generate_factorized(uni, "takes")
    with pytest.raises(EmitError, match="factorized not emittable"):
        emit_sql(uni, m)
    with pytest.raises(EmitError, match="factorized not emittable"):
        emit_sql(uni, m, compile_query(uni, m, UW["u_grades"]))


def test_unknown_profile(uni, families):
    with pytest.raises(EmitError, match="unknown dialect profile"):
        emit_sql(uni, families["normalized"], None, "oracle")


@pytest.mark.parametrize("prof", sorted(PROFILES))
def test_ddl_covers_every_container(uni, families, prof):
    for label in ("normalized", "nested", "disjoint"):
        m = families[label]
        ddl = emit_sql(uni, m, None, prof)
        for c in design_of(uni, m).containers:
            assert f"CREATE TABLE {table_name(c)} (" in ddl


# ---- sqlite oracle for flat plans ------------------------------------------------------------


def _flat(plan) -> bool:
    for op in walk(plan.root):
        if isinstance(op, Unnest) or (isinstance(op, GroupNest) and op.nests):
            return False
        if isinstance(op, Filter) and any(isinstance(p, PIn) for p in walk_pred(op.pred)):
            return False
        if isinstance(op, Project) and any(isinstance(e, Coalesce) for _, e in op.exprs):
            return False
    return True


def walk_pred(p):
    yield p
    if isinstance(p, PBool):
        yield from walk_pred(p.left)
        yield from walk_pred(p.right)
    elif isinstance(p, PNot):
        yield from walk_pred(p.operand)


def _sqlite_rows(schema, m, store, sql):
    db = sqlite3.connect(":memory:")
    db.executescript(emit_sql(schema, m))
    for c in store.design.containers:
        names = column_names(c)
        cols = [n for n, _ in c.columns]
        ins = f"INSERT INTO {table_name(c)} ({', '.join(names[n] for n in cols)}) VALUES ({', '.join('?' * len(cols))})"
        db.executemany(ins, [tuple(r[n] for n in cols) for r in store.tables[c.id].scan()])
    return db.execute(sql).fetchall()


def _norm(rows):
    def f(v):
        return round(v, 9) if isinstance(v, float) else v

    return sorted((tuple(f(v) for v in r) for r in rows), key=sort_key)


def _flat_design(schema, m) -> bool:
    d = design_of(schema, m)
    return not any(c.group for c in d.containers) and not any("[]" in t or "{" in t for c in d.containers for _, t in c.columns)


def test_flat_plans_agree_with_sqlite(uni):
    checked = 0
    maps = [m for m in enumerate_mappings(uni, 100) if _flat_design(uni, m)]
    assert len(maps) >= 3
    for seed in range(3):
        ds = generate(uni, seed)
        for m in maps:
            st = materialize(uni, m, ds)
            for _, q in UNIVERSITY_WORKLOAD:
                plan = compile_query(uni, m, q)
                if not _flat(plan) or not all(shape in SCALAR_TYPES for _, shape in plan.columns):
                    continue
                expected = _norm(execute(st, plan).rows)
                got = _norm(_sqlite_rows(uni, m, st, emit_sql(uni, m, plan)))
                assert got == expected, (m.name, q)
                checked += 1
    print(f"sqlite oracle: {checked} flat plans agree")
    assert checked >= 60
