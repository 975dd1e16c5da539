"""Acceptance suite: one test per criterion, each printing a single pass/fail line."""

from __future__ import annotations

import random
import time

import grammar_gen as gg
from conftest import ACCEPTANCE, university_families
from oracles import migrate_expected, purge_expected
from erdb.bench import (
    SYNTHETIC_WORKLOAD,
    UNIVERSITY_WORKLOAD,
    SyntheticSpec,
    build_mappings,
    build_synthetic_schema,
    directional_timings,
    generate_dataset,
    run_workload,
    structural_checks,
)
from erdb.changes import AddAttribute, ChangeCardinality, DropAttribute, MakeMultivalued, SetHierarchyStrategy
from erdb.compiler import compile_crud, compile_query, purge_compile
from erdb.datagen import GenConfig, generate, random_statement
from erdb.engine import emit_sql, execute, materialize, reconstruct_entities
from erdb.erql import bind, parse_query, parse_statement, print_statement
from erdb.errors import DataError, ErdbError, MigrationError, ParseError
from erdb.evolution import apply_change, execute_migration, plan_migration, revalidate_queries
from erdb.logical import apply_logical, evaluate
from erdb.mapping import check_cover, enumerate_mappings
from erdb.model import multi, scalar
from erdb.schemas import university_schema
from erdb.values import datasets_equal

UNI = university_schema()
SYN = build_synthetic_schema()


def report(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)


def snapshot(store):
    return {cid: sorted(map(repr, t.scan())) for cid, t in store.tables.items()}


# ---- 1. cross-mapping equivalence -----------------------------------------------------------


def _equivalence(schema, mappings, workload, datasets):
    plans = {(q, name): compile_query(schema, m, text) for q, text in workload for name, m in mappings.items()}
    bound = {q: bind(schema, parse_query(text)) for q, text in workload}
    checked, bad = 0, []
    for i, ds in enumerate(datasets):
        stores = {name: materialize(schema, m, ds) for name, m in mappings.items()}
        for q, _ in workload:
            want = evaluate(schema, ds, bound[q]).canonical_text()  # independent logical route
            for name in mappings:
                checked += 1
                if execute(stores[name], plans[(q, name)]).canonical_text() != want:
                    bad.append((i, q, name))
    return checked, bad


def test_criterion_1_cross_mapping_equivalence():
    t0 = time.perf_counter()
    n = 200
    syn = _equivalence(SYN, build_mappings(SYN), SYNTHETIC_WORKLOAD, (generate_dataset(SyntheticSpec(60 + (i * 37) % 1900, i), SYN) for i in range(n)))
    uni = _equivalence(UNI, university_families(UNI), UNIVERSITY_WORKLOAD, (generate(UNI, i, GenConfig(instances=4 + i % 12)) for i in range(n)))
    checked, bad = syn[0] + uni[0], syn[1] + uni[1]
    assert len(SYNTHETIC_WORKLOAD) >= 12 and len(UNIVERSITY_WORKLOAD) >= 12
    report(1, not bad, f"{n}+{n} datasets, {checked} (query, mapping, dataset) results identical, {len(bad)} mismatches, {time.perf_counter() - t0:.0f}s")
    assert not bad, bad[:5]


# ---- 2. round-trip reversibility ------------------------------------------------------------


def test_criterion_2_round_trip():
    maps = enumerate_mappings(UNI, 20)
    assert len(maps) >= 10 and all(check_cover(UNI, None, m).ok for m in maps)
    bad = []
    for seed in range(500):
        ds = generate(UNI, seed, GenConfig(instances=3 + seed % 8))
        for m in maps:
            if not datasets_equal(UNI, reconstruct_entities(materialize(UNI, m, ds)), ds):
                bad.append((seed, m.name))
    report(2, not bad, f"500 datasets x {len(maps)} enumerated mappings, {len(bad)} failures")
    assert not bad, bad[:5]


# ---- 3. CRUD commutation --------------------------------------------------------------------


def _crud_run(m, seed, length):
    ds = generate(UNI, seed)
    rng = random.Random(seed)
    store = materialize(UNI, m, ds)
    for step in range(length):
        stmt = random_statement(UNI, ds, rng)
        try:
            expected = apply_logical(UNI, ds, stmt)
        except DataError:
            before = snapshot(store)
            try:
                store.apply_writes(compile_crud(UNI, m, stmt))
            except ErdbError:
                if snapshot(store) != before:
                    return f"step {step}: failed write was not undone"
                continue
            return f"step {step}: compiled writes accepted a rejected statement"
        store.apply_writes(compile_crud(UNI, m, stmt))
        ds = expected
        if not datasets_equal(UNI, reconstruct_entities(store), ds):
            return f"step {step}: stores diverge"
    return None


def test_criterion_3_crud_commutation():
    fams = university_families(UNI)
    bad, runs = [], 0
    for label, m in fams.items():
        for seed in range(25):
            runs += 1
            err = _crud_run(m, seed, 1 + (seed * 7) % 50)
            if err:
                bad.append((label, seed, err))
    report(3, not bad, f"{runs} sequences (length 1-50) over {len(fams)} families, {len(bad)} divergences")
    assert not bad, bad[:5]


# ---- 4. purge completeness ------------------------------------------------------------------


def test_criterion_4_purge_completeness():
    fams = university_families(UNI)
    bad, runs = [], 0
    for seed in range(60):
        ds = generate(UNI, seed)
        rng = random.Random(seed)
        cls = rng.choice([c for c in ("Student", "Instructor", "Course", "Section") if ds.entities.get(c)])
        doc = rng.choice(ds.entities[cls])
        root = UNI.root(cls)
        key = tuple(doc[a] for _, a in UNI.key_closure(cls))
        expected = purge_expected(UNI, ds, root, key)
        for label, m in fams.items():
            runs += 1
            store = materialize(UNI, m, ds)
            store.apply_writes(purge_compile(UNI, m, root, key))
            if not datasets_equal(UNI, reconstruct_entities(store), expected):
                bad.append((seed, label, cls, key))
    report(4, not bad, f"{runs} purges over {len(fams)} families, {len(bad)} mismatches")
    assert not bad, bad[:5]


# ---- 5. structural proxies ------------------------------------------------------------------


def test_criterion_5_structural_proxies():
    checks = structural_checks(SYN, build_mappings(SYN))
    failed = [f"{name} ({seen})" for name, ok, seen in checks if not ok]
    report(5, not failed, f"{len(checks) - len(failed)}/{len(checks)} plan-metric checks hold" + (f": {failed}" if failed else ""))
    assert not failed


# ---- 6. desk-scale timings (informational) --------------------------------------------------


def test_criterion_6_directional_timings():
    ds = generate_dataset(SyntheticSpec(50000, 0), SYN)
    wanted = {"q1_mv", "q_key_lookup", "q_mv_group"}
    maps = {k: m for k, m in build_mappings(SYN).items() if k in ("M1", "M2")}  # the orderings compare only these two
    rep = run_workload(SYN, [q for q in SYNTHETIC_WORKLOAD if q[0] in wanted], maps, ds, runs=10)
    results = directional_timings(rep)
    misses = [f"{label} ({seen})" for label, ok, seen in results if not ok]
    detail = "; ".join(seen for _, _, seen in results)
    # informational gate: wall-clock orderings depend on the host, so a miss is reported, not raised
    report(6, not misses, f"scale 50000, median of 10: {detail}" + (" (informational)" if misses else ""))


# ---- 7. migration preservation --------------------------------------------------------------

LOOSE = apply_change(UNI, ChangeCardinality("advisor", "Instructor", "many"))
SINGLE = apply_change(UNI, SetHierarchyStrategy("Person", "single_table"))
MIGRATIONS = [
    (UNI, MakeMultivalued("Person", "city")),
    (UNI, MakeMultivalued("Section", "room")),
    (UNI, ChangeCardinality("advisor", "Instructor", "many")),
    (UNI, SetHierarchyStrategy("Person", "single_table")),
    (UNI, SetHierarchyStrategy("Person", "disjoint")),
    (UNI, AddAttribute("Student", scalar("gpa", "float"))),
    (UNI, AddAttribute("Person", multi("emails", "text"))),
    (UNI, DropAttribute("Person", "city")),
    (UNI, DropAttribute("Section", "room")),
    (LOOSE, ChangeCardinality("advisor", "Instructor", "one")),
    (SINGLE, SetHierarchyStrategy("Person", "class_per_subclass")),
]


def test_criterion_7_migration_preservation():
    t0 = time.perf_counter()
    bad, runs, pairs, unsupported, refused = [], 0, 0, [], 0
    for base, change in MIGRATIONS:
        new = apply_change(base, change)
        for label, m in university_families(base).items():
            if not check_cover(base, None, m).ok:
                continue
            try:
                plan = plan_migration(base, new, m, change=change)
            except MigrationError as e:
                unsupported.append(f"{change} on {label}: {e}")
                continue
            pairs += 1
            for seed in range(100):
                ds = generate(base, seed, GenConfig(instances=10, links=2.5))
                expected = migrate_expected(base, new, change, ds)
                runs += 1
                try:
                    got = reconstruct_entities(execute_migration(materialize(base, m, ds), plan))
                except MigrationError:
                    if expected is None:
                        refused += 1
                    else:
                        bad.append((str(change), label, seed, "refused"))
                    continue
                if expected is None or not datasets_equal(new, got, expected):
                    bad.append((str(change), label, seed, "differs"))
    city = revalidate_queries(["select p.ID, p.city from Person p"], apply_change(UNI, MakeMultivalued("Person", "city")), UNI)
    avg = "select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor"
    card = revalidate_queries([avg], LOOSE, UNI)
    rewrite_ok = city[0].status == "needs_edit" and card[0].status == "ok"
    ok = not bad and rewrite_ok
    report(
        7,
        ok,
        f"{pairs} (change, mapping) pairs x 100 datasets = {runs} migrations, {len(bad)} mismatches, "
        f"{refused} correctly refused tightenings, {len(unsupported)} unsupported pairs; "
        f"revalidation city={city[0].status} advisor-avg={card[0].status}; {time.perf_counter() - t0:.0f}s",
    )
    for line in unsupported:
        print("  unsupported:", line)
    assert not bad, bad[:5]
    assert rewrite_ok


# ---- 8. grammar round trip and fuzz ---------------------------------------------------------


def test_criterion_8_grammar_round_trip_and_fuzz():
    t0 = time.perf_counter()
    rng = random.Random(8)
    texts, bad = [], []
    kinds = {"ddl": 0, "query": 0, "dml": 0}
    gens = (("ddl", gg.ddl_statement), ("query", gg.query), ("dml", gg.dml_statement))
    for i in range(10_000):
        kind, gen = gens[i % 3]
        tree = gen(rng)
        text = print_statement(tree)
        texts.append(text)
        kinds[kind] += 1
        try:
            if parse_statement(text) != tree:
                bad.append(text)
        except ParseError:
            bad.append(text)
    crashes = []
    n_fuzz = 1_000_000
    for i in range(n_fuzz):
        src = gg.mutate(rng, texts[i % len(texts)]) if i % 4 else gg.token_soup(rng)
        try:
            parse_statement(src)
        except ParseError:
            pass
        except Exception as e:  # noqa: BLE001
            crashes.append((src, repr(e)))
    ok = not bad and not crashes
    report(8, ok, f"10000 trees {kinds} round-trip, {len(bad)} failures; {n_fuzz} fuzzed inputs, {len(crashes)} crashes; {time.perf_counter() - t0:.0f}s")
    assert not bad, bad[:3]
    assert not crashes, crashes[:3]


# ---- 9. SQL golden files --------------------------------------------------------------------


def test_criterion_9_sql_goldens():
    from test_sqlemit import CASES, GOLDEN

    syn_maps = build_mappings(SYN)
    uni_maps = university_families(UNI)
    mismatched = []
    for name, which, label, prof, query in CASES:
        schema, m = (SYN, syn_maps[label]) if which == "syn" else (UNI, uni_maps[label])
        text = emit_sql(schema, m, compile_query(schema, m, query), prof)
        path = GOLDEN / f"{name}.sql"
        if not path.exists() or path.read_text(encoding="utf-8") != text:
            mismatched.append(name)
    ok = len(CASES) >= 20 and not mismatched
    report(9, ok, f"{len(CASES) - len(mismatched)}/{len(CASES)} (query, mapping, profile) goldens match byte-exactly")
    assert ok, mismatched
