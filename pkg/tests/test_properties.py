from __future__ import annotations

import random

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import grammar_gen as gg
from oracles import migrate_expected, purge_expected
from erdb.bench import UNIVERSITY_WORKLOAD, SyntheticSpec, build_synthetic_schema, generate_dataset
from erdb.changes import AddAttribute, DropAttribute
from erdb.compiler import compile_crud, compile_query, plan_metrics, purge_compile
from erdb.compiler.plan import Col, GroupNest, NestSpec, PhysicalPlan, Scan, Unnest
from erdb.datagen import generate, random_statement
from erdb.engine import apply_writes, execute, materialize, reconstruct_entities
from erdb.errors import DataError, ErdbError, ParseError
from erdb.erql import bind, parse_query, parse_statement, print_statement, schema_from_ddl, tokenize
from erdb.evolution import apply_change, execute_migration, plan_migration, revalidate_queries
from erdb.graph import build_graph, is_connected
from erdb.logical import apply_logical
from erdb.mapping import check_cover, enumerate_mappings, generate_factorized, generate_nested, generate_normalized
from erdb.model import multi, scalar, validate_schema
from erdb.schemas import university_schema
from erdb.values import datasets_equal

from conftest import university_families

UNI = university_schema()
SYN = build_synthetic_schema()
FAMILIES = university_families()
ENUMERATED = enumerate_mappings(UNI, 20)
NORMALIZED = generate_normalized(UNI)

fast = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(min_value=0, max_value=10**6)
family = st.sampled_from(sorted(FAMILIES))
mapping = st.sampled_from(ENUMERATED)
query = st.sampled_from([q for _, q in UNIVERSITY_WORKLOAD])


# ---- model and grammar ----------------------------------------------------------------------


@fast
@given(st.sampled_from([UNI, SYN]))
def test_validation_is_deterministic(schema):
    assert validate_schema(schema) == validate_schema(schema)


@fast
@given(st.sampled_from([UNI, SYN]).flatmap(lambda s: st.tuples(st.just(s), st.sampled_from(s.entity_names()))))
def test_key_closure_shape(pair):
    schema, e = pair
    closure = schema.key_closure(e)
    assert closure
    if schema.is_weak(e):
        owner = schema.entity(e).weak_owner
        assert closure[: len(schema.key_closure(owner))] == schema.key_closure(owner)
        assert len(closure) > len(schema.key_closure(owner))
    assert len(schema.ancestors(e)) <= len(schema.entity_names())
    assert schema.root(e) == schema.ancestors(e)[-1]


@settings(max_examples=300, deadline=None)
@given(st.randoms(use_true_random=False))
def test_print_parse_round_trip(rng):
    tree = gg.statement(rng)
    assert parse_statement(print_statement(tree)) == tree


@settings(max_examples=500, deadline=None)
@given(st.text(max_size=80))
def test_parse_never_crashes_on_text(text):
    try:
        tokenize(text)
        parse_statement(text)
    except ParseError:
        pass


@fast
@given(query)
def test_bind_is_idempotent(q):
    bound = bind(UNI, parse_query(q))
    assert bind(UNI, bound) == bound


# ---- graph and mapping ----------------------------------------------------------------------


@fast
@given(mapping)
def test_cover_and_connectivity(m):
    g = build_graph(UNI)
    assert check_cover(UNI, g, m).ok
    covered = set().union(*(f.nodes for f in m.fragments))
    assert covered == {n.id for n in g.nodes}
    assert all(is_connected(g, f.nodes) for f in m.fragments if f.layout != "factorized")


def test_graph_ids_are_stable():
    assert build_graph(UNI) == build_graph(university_schema())


def test_enumeration_is_deterministic_and_duplicate_free():
    again = enumerate_mappings(UNI, 20)
    assert [m.name for m in again] == [m.name for m in ENUMERATED]
    assert len({frozenset(frozenset(f.nodes) for f in m.fragments) for m in ENUMERATED}) == len(ENUMERATED)


# ---- data round trips and equivalence ----------------------------------------------------


@fast
@given(seeds, mapping)
def test_round_trip_is_lossless(seed, m):
    ds = generate(UNI, seed)
    assert datasets_equal(UNI, reconstruct_entities(materialize(UNI, m, ds)), ds)


@fast
@given(seeds, mapping, query)
def test_queries_agree_with_normalized(seed, m, q):
    ds = generate(UNI, seed)
    want = execute(materialize(UNI, NORMALIZED, ds), compile_query(UNI, NORMALIZED, q))
    got = execute(materialize(UNI, m, ds), compile_query(UNI, m, q))
    assert got.fingerprint() == want.fingerprint()


@fast
@given(seeds, mapping, query)
def test_execute_is_deterministic(seed, m, q):
    store = materialize(UNI, m, generate(UNI, seed))
    plan = compile_query(UNI, m, q)
    assert execute(store, plan).rows == execute(store, plan).rows


@fast
@given(st.sampled_from(["takes", "teaches"]), query)
def test_factorization_never_adds_joins(rel, q):
    fact = generate_factorized(UNI, rel)
    assert plan_metrics(compile_query(UNI, NORMALIZED, q)).joins >= plan_metrics(compile_query(UNI, fact, q)).joins


ARRAYS = schema_from_ddl("create entity A (id int key, xs int[])")


@fast
@given(st.lists(st.lists(st.integers(-5, 5), max_size=6, unique=True), max_size=8))
def test_unnest_then_group_nest_is_identity(arrays):
    from erdb.values import Dataset

    m = generate_nested(ARRAYS, True)
    ds = Dataset({"A": [{"id": i, "xs": xs} for i, xs in enumerate(arrays)]})
    store = materialize(ARRAYS, m, ds)
    scan = Scan("a", "a", "a", ("A_id", "A_xs"))
    flat = Unnest(scan, Col("a.A_xs"), "#u")
    rows = execute(store, PhysicalPlan(flat, ("a.A_id", "#u"), (("id", "int"), ("x", "int")))).rows
    assert len(rows) == sum(len(xs) for xs in arrays)
    packed = GroupNest(flat, (("#0", Col("a.A_id")),), nests=(("#1", NestSpec(("#u",), Col("#u"))),), order=("#0", "#1"))
    back = execute(store, PhysicalPlan(packed, ("#0", "#1"), (("id", "int"), ("xs", "int[]")))).rows
    assert sorted((i, sorted(xs)) for i, xs in back) == sorted((i, sorted(xs)) for i, xs in enumerate(arrays) if xs)


# ---- writes ---------------------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(seeds, family)
def test_crud_commutes_with_materialization(seed, label):
    m = FAMILIES[label]
    ds = generate(UNI, seed % 50)
    rng = random.Random(seed)
    store = materialize(UNI, m, ds)
    for _ in range(15):
        stmt = random_statement(UNI, ds, rng)
        try:
            expected = apply_logical(UNI, ds, stmt)
        except DataError:
            snapshot = {cid: sorted(map(repr, t.scan())) for cid, t in store.tables.items()}
            try:
                apply_writes(store, compile_crud(UNI, m, stmt))
            except ErdbError:
                pass
            else:
                raise AssertionError(f"{label} accepted {stmt!r}")
            assert {cid: sorted(map(repr, t.scan())) for cid, t in store.tables.items()} == snapshot
            continue
        apply_writes(store, compile_crud(UNI, m, stmt))
        ds = expected
        assert datasets_equal(UNI, reconstruct_entities(store), ds)


@fast
@given(seeds, family, st.data())
def test_purge_is_complete(seed, label, data):
    ds = generate(UNI, seed)
    cls = data.draw(st.sampled_from([c for c in ("Student", "Instructor", "Course", "Section") if ds.entities.get(c)]))
    doc = data.draw(st.sampled_from(ds.entities[cls]))
    root = UNI.root(cls)
    key = tuple(doc[a] for _, a in UNI.key_closure(cls))
    m = FAMILIES[label]
    store = materialize(UNI, m, ds)
    store.apply_writes(purge_compile(UNI, m, root, key))
    assert datasets_equal(UNI, reconstruct_entities(store), purge_expected(UNI, ds, root, key))


# ---- evolution ------------------------------------------------------------------------------


@fast
@given(seeds, family)
def test_add_attribute_migration_preserves_data(seed, label):
    change = AddAttribute("Person", multi("emails", "text"))
    new = apply_change(UNI, change)
    ds = generate(UNI, seed)
    m = FAMILIES[label]
    plan = plan_migration(UNI, new, m, change=change)
    got = reconstruct_entities(execute_migration(materialize(UNI, m, ds), plan))
    assert datasets_equal(new, got, migrate_expected(UNI, new, change, ds))


@fast
@given(st.sampled_from(["Person", "Student", "Course"]), st.sampled_from(["int", "text", "float"]))
def test_add_then_drop_restores_schema(entity, type_):
    added = apply_change(UNI, AddAttribute(entity, scalar("extra", type_)))
    assert apply_change(added, DropAttribute(entity, "extra")) == UNI


@fast
@given(st.lists(query, min_size=1, max_size=5))
def test_revalidation_against_unchanged_schema(qs):
    assert {s.status for s in revalidate_queries(qs, UNI, UNI)} == {"ok"}


@settings(max_examples=10, deadline=None)
@given(st.integers(50, 400), seeds)
def test_synthetic_generation_is_deterministic(scale, seed):
    spec = SyntheticSpec(scale, seed)
    assert generate_dataset(spec, SYN) == generate_dataset(spec, SYN)
