from __future__ import annotations

import json
import random

import pytest

from oracles import purge_expected
from erdb.compiler import compile_crud
from erdb.datagen import generate, random_statement
from erdb.engine import materialize, reconstruct_entities
from erdb.erql import bind, parse_dml
from erdb.errors import DataError
from erdb.logical import apply_logical
from erdb.values import datasets_equal, dataset_diff

from conftest import university_families

SECTION = '{course_id: "CS1", sec_id: 1, semester: "Fall", year: 2024}'
SCRIPT = [
    'insert entity Instructor {ID: 3, name: "Cy", city: "Oslo", rank: "full"}',
    'insert entity Course {course_id: "CS2", title: "Data", credits: 4}',
    'insert entity Section {course_id: "CS2", sec_id: 1, semester: "Spring", year: 2025, room: {building: "B", room_no: 7}}',
    'insert relationship teaches (Instructor: 3, Section: {course_id: "CS2", sec_id: 1, semester: "Spring", year: 2025})',
    'update entity Person set Ph += "555-3333" where ID = 1',
    'update entity Person set Ph -= "555-1111" where ID = 1',
    'update entity Student set tot_credits = 40, city = "Lyon" where ID = 1',
    'update entity Section set room.building = "C" where course_id = "CS1" and sec_id = 1 and semester = "Fall" and year = 2024',
    f"delete relationship takes (Student: 1, Section: {SECTION})",
    f'insert relationship takes (Student: 1, Section: {SECTION}) {{grade: "B"}}',
    "delete relationship advisor (Instructor: 2, Student: 1)",
    "insert relationship advisor (Instructor: 3, Student: 1)",
    "delete entity Person where ID = 2",
    'purge entity Course where course_id = "CS1"',
]
FAMILIES = university_families()


def stepwise(schema, m, ds, statements):
    """Apply each statement through the compiler and the logical oracle, comparing after every step."""
    st = materialize(schema, m, ds)
    for text in statements:
        stmt = bind(schema, parse_dml(text)) if isinstance(text, str) else text
        try:
            expected, err = apply_logical(schema, ds, stmt), None
        except DataError as e:
            expected, err = ds, e
        if err is None:
            st.apply_writes(compile_crud(schema, m, stmt))
        else:
            with pytest.raises(DataError):
                st.apply_writes(compile_crud(schema, m, stmt))
        ds = expected
        got = reconstruct_entities(st)
        assert datasets_equal(schema, got, ds), f"{m.name} after {text}:\n{dataset_diff(schema, ds, got)}"
    return ds


@pytest.mark.parametrize("label", list(FAMILIES))
def test_scripted_sequence_on_d0(uni, d0, label):
    final = stepwise(uni, FAMILIES[label], d0, SCRIPT)
    assert sorted(final.entities) == ["Course", "Instructor", "Section", "Student"]
    assert [d["course_id"] for d in final.entities["Section"]] == ["CS2"]
    ann = final.entities["Student"][0]
    assert ann["city"] == "Lyon" and ann["tot_credits"] == 40 and sorted(ann["Ph"]) == ["555-2222", "555-3333"]
    assert [r.keys for r in final.relationships.get("advisor", [])] == [((3,), (1,))]
    assert not final.relationships.get("takes")  # purged with the CS1 section
    assert [r.keys for r in final.relationships["teaches"]] == [((3,), ("CS2", 1, "Spring", 2025))]


@pytest.mark.parametrize(
    "text",
    [
        'insert entity Student {ID: 1, name: "Dup"}',
        "insert relationship advisor (Instructor: 1, Student: 1)",
        f"insert relationship takes (Student: 9, Section: {SECTION})",
        'insert entity Section {course_id: "ZZ", sec_id: 1, semester: "Fall", year: 2024}',
        "update entity Person set name = \"X\" where ID = 99",
    ],
)
def test_rejected_writes_leave_every_family_unchanged(uni, d0, text):
    stmt = bind(uni, parse_dml(text))
    with pytest.raises(DataError):
        apply_logical(uni, d0, stmt)
    for m in FAMILIES.values():
        st = materialize(uni, m, d0)
        with pytest.raises(DataError):
            st.apply_writes(compile_crud(uni, m, stmt))
        assert datasets_equal(uni, reconstruct_entities(st), d0)


@pytest.mark.parametrize("label", list(FAMILIES))
def test_purge_matches_oracle_on_generated_data(uni, label):
    m = FAMILIES[label]
    for seed in range(4):
        ds = generate(uni, seed)
        targets = [("Person", "ID", d["ID"]) for d in ds.entities.get("Student", [])[:1]]
        targets += [("Course", "course_id", d["course_id"]) for d in ds.entities.get("Course", [])[:1]]
        for cls, attr, key in targets:
            text = f"purge entity {cls} where {attr} = {json.dumps(key)}"
            st = materialize(uni, m, ds)
            st.apply_writes(compile_crud(uni, m, text))
            assert datasets_equal(uni, reconstruct_entities(st), purge_expected(uni, ds, cls, (key,)))


@pytest.mark.parametrize("label", list(FAMILIES))
def test_random_sequences_commute(uni, label):
    m = FAMILIES[label]
    for seed in range(3):
        ds = generate(uni, seed)
        stepwise(uni, m, ds, _random_run(uni, ds, random.Random(seed), 30))


def _random_run(schema, ds, rng, n):
    # statements are drawn against the evolving oracle state so keys stay mostly valid
    out = []
    for _ in range(n):
        stmt = random_statement(schema, ds, rng)
        out.append(stmt)
        try:
            ds = apply_logical(schema, ds, stmt)
        except DataError:
            pass
    return out
