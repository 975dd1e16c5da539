from __future__ import annotations

import pytest

from erdb.mapping import (
    build_mapping,
    Options,
    generate_factorized,
    generate_hierarchy_variant,
    generate_nested,
    generate_normalized,
)
from erdb.schemas import university_d0, university_schema

# one "criterion N: PASS|FAIL ..." line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def university_families(schema=None) -> dict:
    """One mapping per family over the university schema, keyed by a short label."""
    s = schema or university_schema()
    return {
        "normalized": generate_normalized(s),
        "nested": generate_nested(s, True, ["Section"], True),
        "arrays": generate_nested(s, True),
        "single_table": generate_hierarchy_variant(s, "Person", "single_table"),
        "disjoint": generate_hierarchy_variant(s, "Person", "disjoint"),
        "fold_section": generate_nested(s, False, ["Section"]),
        "factorized_takes": generate_factorized(s, "takes"),
        "factorized_teaches": generate_factorized(s, "teaches"),
        "disjoint_arrays_factorized": build_mapping(
            s,
            Options(
                strategies={"Person": "disjoint"},
                arrays=frozenset([("Person", ("Ph",))]),
                factorize=frozenset(["takes"]),
            ),
        ),
    }


@pytest.fixture(scope="session")
def uni():
    return university_schema()


@pytest.fixture
def d0():
    return university_d0()


@pytest.fixture(scope="session")
def families(uni):
    return university_families(uni)
