from __future__ import annotations

import pytest

from oracles import migrate_expected
from erdb.changes import (
    AddAttribute,
    ChangeCardinality,
    DropAttribute,
    MakeMultivalued,
    SetHierarchyStrategy,
)
from erdb.datagen import GenConfig, generate
from erdb.engine import create_store, materialize, reconstruct_entities
from erdb.errors import MigrationError, SchemaError
from erdb.evolution import (
    apply_change,
    execute_migration,
    infer_change,
    plan_migration,
    rederive_mapping,
    revalidate_queries,
)
from erdb.mapping import check_cover, generate_hierarchy_variant, generate_nested, generate_normalized
from erdb.model import multi, scalar
from erdb.values import Dataset, RelInstance, datasets_equal, normalize_dataset

CITY = MakeMultivalued("Person", "city")
ADVISOR_MANY = ChangeCardinality("advisor", "Instructor", "many")
ADVISOR_AVG = "select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor"


def test_make_multivalued_city(uni):
    city = apply_change(uni, CITY).entity("Person").attribute("city")
    assert city.is_multi and city.element.type == "text"


def test_advisor_becomes_many_to_many(uni):
    assert apply_change(uni, ADVISOR_MANY).relationship("advisor").kind == "many_to_many"


def test_add_then_drop_is_identity(uni):
    added = apply_change(uni, AddAttribute("Student", scalar("gpa", "float")))
    assert added != uni
    assert apply_change(added, DropAttribute("Student", "gpa")) == uni


@pytest.mark.parametrize(
    "change",
    [
        MakeMultivalued("Person", "ID"),
        MakeMultivalued("Person", "Ph"),
        MakeMultivalued("Person", "nope"),
        ChangeCardinality("sec_course", "Course", "many"),
        ChangeCardinality("advisor", "Dean", "many"),
        SetHierarchyStrategy("Course", "disjoint"),
        AddAttribute("Person", scalar("rank", "text")),
        AddAttribute("Person", scalar("pid", "int", True)),
        DropAttribute("Person", "ID"),
    ],
)
def test_invalid_changes_are_rejected(uni, change):
    with pytest.raises(SchemaError):
        apply_change(uni, change)


def test_infer_change_recovers_single_steps(uni):
    for ch in (CITY, ADVISOR_MANY, AddAttribute("Person", multi("emails", "text")), DropAttribute("Section", "room")):
        assert infer_change(uni, apply_change(uni, ch)) == ch


def test_city_wrap_under_nested_mapping(uni):
    m = generate_nested(uni, True, ["Section"], True)
    plan = plan_migration(uni, apply_change(uni, CITY), m, change=CITY)
    step = plan.step("person")
    assert step.transform == "wrap_singleton" and "Person_city" in step.detail
    assert {s.transform for s in plan.steps if s.target != "person"} == {"copy"}


def test_advisor_relaxation_creates_a_table(uni):
    plan = plan_migration(uni, apply_change(uni, ADVISOR_MANY), generate_normalized(uni), change=ADVISOR_MANY)
    step = plan.step("advisor")
    assert step.transform == "fk_to_table" and step.sources == ("student",)
    assert "advisor" in plan.new_mapping.fragment_names()
    assert check_cover(plan.new_schema, None, plan.new_mapping).ok


def test_identity_plan_is_empty(uni):
    m = generate_normalized(uni)
    plan = plan_migration(uni, uni, m, m)
    assert plan.steps == [] and plan.render() == "nothing to migrate"


def test_city_migration_on_d0(uni, d0):
    new = apply_change(uni, CITY)
    for m in (generate_normalized(uni), generate_nested(uni, True, ["Section"], True)):
        plan = plan_migration(uni, new, m, change=CITY)
        got = reconstruct_entities(execute_migration(materialize(uni, m, d0), plan))
        docs = [d for docs in got.entities.values() for d in docs if "city" in d]
        assert sorted(d["city"] for d in docs) == [["Paris"], ["Rome"]]
        assert datasets_equal(new, got, migrate_expected(uni, new, CITY, d0))


def test_empty_store_migrates_to_empty_store(uni):
    m = generate_normalized(uni)
    plan = plan_migration(uni, apply_change(uni, CITY), m, change=CITY)
    new = execute_migration(create_store(uni, m), plan)
    assert all(len(t) == 0 for t in new.tables.values())
    assert reconstruct_entities(new).count() == 0


def test_single_table_to_disjoint_partitions_rows(uni):
    change = SetHierarchyStrategy("Person", "disjoint")
    old_m = generate_hierarchy_variant(uni, "Person", "single_table")
    plan = plan_migration(uni, apply_change(uni, change), old_m, change=change)
    assert {plan.step(t).transform for t in ("person_only", "instructor_full", "student_full")} == {"split_union"}
    for seed in range(5):
        ds = generate(uni, seed)
        old = materialize(uni, old_m, ds)
        new = execute_migration(old, plan)
        types = {}
        for r in old.table("person").scan():
            types.setdefault(r["type"], set()).add(r["Person_ID"])
        assert {r["Person_ID"] for r in new.table("instructor_full").scan()} == types.get("Instructor", set())
        assert {r["Person_ID"] for r in new.table("student_full").scan()} == types.get("Student", set())
        assert {r["Person_ID"] for r in new.table("person_only").scan()} == types.get("Person", set())
        assert datasets_equal(uni, reconstruct_entities(new), ds)


def test_tightening_lists_violating_keys(uni):
    loose = apply_change(uni, ADVISOR_MANY)
    tighten = ChangeCardinality("advisor", "Instructor", "one")
    m = rederive_mapping(uni, loose, generate_normalized(uni), ADVISOR_MANY)
    ds = Dataset(
        {"Instructor": [{"ID": 2}, {"ID": 3}], "Student": [{"ID": 1}]},
        {"advisor": [RelInstance(((2,), (1,))), RelInstance(((3,), (1,)))]},
    )
    st = materialize(loose, m, normalize_dataset(loose, ds))
    plan = plan_migration(loose, uni, m, change=tighten)
    with pytest.raises(MigrationError, match=r"advisor: tightening Instructor to one is violated by Student \[1\]"):
        execute_migration(st, plan)


def test_plan_rejects_store_of_another_mapping(uni, d0):
    m = generate_normalized(uni)
    plan = plan_migration(uni, apply_change(uni, CITY), m, change=CITY)
    other = materialize(uni, generate_nested(uni, True), d0)
    with pytest.raises(MigrationError):
        execute_migration(other, plan)


def test_mapping_for_other_schema_is_a_mismatch(uni):
    new = apply_change(uni, CITY)
    with pytest.raises(MigrationError, match="schema mismatch"):
        plan_migration(uni, new, generate_normalized(uni), generate_normalized(uni), CITY)


def test_rederived_mapping_keeps_family(uni):
    m = generate_nested(uni, True)
    new = apply_change(uni, AddAttribute("Person", multi("emails", "text")))
    m2 = rederive_mapping(uni, new, m, AddAttribute("Person", multi("emails", "text")))
    assert check_cover(new, None, m2).ok
    assert m2.name == m.name and "person_emails" not in m2.fragment_names()


def test_revalidate_after_city_change(uni):
    new = apply_change(uni, CITY)
    statuses = revalidate_queries(["select p.ID, p.city from Person p", ADVISOR_AVG, "select c.title from Course c"], new, uni)
    assert [s.status for s in statuses] == ["needs_edit", "ok", "ok"]
    assert statuses[0].diagnostic == "city is now multi-valued; wrap in unnest(…)"


def test_revalidate_after_cardinality_change(uni):
    [st] = revalidate_queries([ADVISOR_AVG], apply_change(uni, ADVISOR_MANY), uni)
    assert st.status == "ok"


def test_revalidate_reports_bind_errors(uni):
    new = apply_change(uni, DropAttribute("Person", "city"))
    [st] = revalidate_queries(["select p.city from Person p"], new, uni)
    assert st.status == "needs_edit" and "city" in st.diagnostic


def test_sparse_data_with_tight_cardinality_migrates(uni):
    loose = apply_change(uni, ADVISOR_MANY)
    tighten = ChangeCardinality("advisor", "Instructor", "one")
    m = rederive_mapping(uni, loose, generate_normalized(uni), ADVISOR_MANY)
    for seed in range(10):
        ds = generate(loose, seed, GenConfig(instances=10, links=2.5))
        expected = migrate_expected(loose, uni, tighten, ds)
        plan = plan_migration(loose, uni, m, change=tighten)
        st = materialize(loose, m, ds)
        if expected is None:
            with pytest.raises(MigrationError):
                execute_migration(st, plan)
        else:
            assert datasets_equal(uni, reconstruct_entities(execute_migration(st, plan)), expected)
