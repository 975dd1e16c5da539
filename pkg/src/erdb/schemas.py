"""Built-in example schema (a small university) and its reference dataset."""

from __future__ import annotations

from functools import lru_cache

from .model import ErSchema
from .values import Dataset, RelInstance, normalize_dataset

UNIVERSITY_DDL = """\
create entity Person (ID bigint key, name text, city text, Ph text[]);
create entity Instructor extends Person disjoint (rank text);
create entity Student extends Person disjoint (tot_credits int);
create entity Course (course_id text key, title text, credits int);
create entity Section (sec_id int key, semester text key, year int key, room {building text, room_no int}) weak of Course via sec_course;
create relationship advisor between Instructor one, Student many;
create relationship takes between Student many, Section many (grade text);
create relationship teaches between Instructor many, Section many;
"""


@lru_cache(maxsize=None)
def university_schema() -> ErSchema:
    from .erql import schema_from_ddl

    return schema_from_ddl(UNIVERSITY_DDL)


def university_d0() -> Dataset:
    """Two persons (student Ann with two phones, instructor Bo with none), one course with one
    section, Ann takes the section and is advised by Bo."""
    s = university_schema()
    ds = Dataset(
        entities={
            "Student": [{"ID": 1, "name": "Ann", "city": "Paris", "Ph": ["555-2222", "555-1111"], "tot_credits": 30}],
            "Instructor": [{"ID": 2, "name": "Bo", "city": "Rome", "rank": "assistant"}],
            "Course": [{"course_id": "CS1", "title": "Intro", "credits": 4}],
            "Section": [
                {"course_id": "CS1", "sec_id": 1, "semester": "Fall", "year": 2024, "room": {"building": "A", "room_no": 101}}
            ],
        },
        relationships={
            "advisor": [RelInstance(((2,), (1,)))],
            "takes": [RelInstance(((1,), ("CS1", 1, "Fall", 2024)), {"grade": "A"})],
        },
    )
    return normalize_dataset(s, ds)
