from __future__ import annotations

import csv

import pytest

from erdb.bench import SYNTHETIC_DDL
from erdb.cli import EXIT_OK, EXIT_USER, SessionState, UserError, dispatch, main, parse_change
from erdb.changes import AddAttribute, ChangeCardinality, MakeMultivalued
from erdb.engine import dump_dataset, reconstruct_entities
from erdb.errors import ErdbError
from erdb.schemas import UNIVERSITY_DDL
from erdb.values import datasets_equal

ANN = 'insert entity Student {ID: 1, name: "Ann", city: "Paris", tot_credits: 30}'


@pytest.fixture
def files(tmp_path):
    (tmp_path / "uni.erdl").write_text(UNIVERSITY_DDL, encoding="utf-8")
    (tmp_path / "syn.erdl").write_text(SYNTHETIC_DDL, encoding="utf-8")
    return tmp_path


def run(lines, st=None):
    st = st or SessionState()
    outs = []
    for line in lines:
        out, st = dispatch(line, st)
        outs.append(out)
    return outs, st


def uni_session(files, *extra):
    return run([f"\\schema load {files / 'uni.erdl'}", "\\map generate normalized", *extra])


def test_generate_then_check(files):
    outs, st = uni_session(files, "\\map check")
    assert outs[1] == "mapping normalized: 8 fragments"
    assert outs[2] == "ok"
    assert st.mapping.name == "normalized"


def test_plan_under_arrays_has_no_joins(files):
    outs, _ = run([f"\\schema load {files / 'syn.erdl'}", "\\map generate nested arrays", "\\plan select r.id, r.mv1 from R r"])
    assert "joins=0" in outs[2].splitlines()


def test_insert_and_query(files):
    outs, st = uni_session(files, ANN, "select p.ID, p.city from Person p")
    assert outs[2] == "ok (2 rows written)"
    assert outs[3].splitlines() == ["p.ID | p.city", "1 | Paris", "(1 rows)"]


def test_dry_run_leaves_store_untouched(files):
    _, st = uni_session(files, ANN)
    out, after = dispatch("\\migrate make_multivalued Person city --dry-run", st)
    assert "person_city <- wrap_singleton(person)" in out
    assert after is st
    assert dispatch("select p.city from Person p", after)[0].splitlines()[1] == "Paris"


def test_migration_rewrites_the_store(files):
    outs, st = uni_session(files, ANN, "\\migrate make_multivalued Person city", "select p.ID, p.city from Person p")
    assert outs[3].endswith("migrated: 3 rows")
    assert outs[4].splitlines()[1] == '1 | ["Paris"]'
    assert "person_city" in st.mapping.fragment_names()


def test_alter_statement_form(files):
    _, st = uni_session(files, "\\migrate alter entity Person add email text")
    assert "email" in st.schema.doc_fields("Person")


@pytest.mark.parametrize(
    "line",
    [
        "select p.nope from Person p",
        ANN,  # duplicate key
        "\\migrate make_multivalued Person ID",
        "\\map generate hierarchy Course disjoint",
        "\\data load /no/such/file.jsonl",
        "\\unknown",
        "\\sql oracle",
    ],
)
def test_error_leaves_state_unchanged(files, line):
    _, st = uni_session(files, ANN)
    before = reconstruct_entities(st.store)
    with pytest.raises(ErdbError):
        dispatch(line, st)
    assert datasets_equal(st.schema, reconstruct_entities(st.store), before)


def test_commands_need_schema_and_mapping(files):
    with pytest.raises(UserError, match="no schema loaded"):
        dispatch("\\map generate normalized", SessionState())
    _, st = run([f"\\schema load {files / 'uni.erdl'}"])
    with pytest.raises(UserError, match="no mapping"):
        dispatch("select p.ID from Person p", st)


def test_data_dump_load_round_trip(files, uni, d0):
    src = files / "d0.jsonl"
    dump_dataset(uni, d0, src)
    outs, st = uni_session(files, f"\\data load {src}", f"\\data dump {files / 'out.jsonl'}")
    assert outs[2] == f"loaded {d0.count()} records"
    assert (files / "out.jsonl").read_text(encoding="utf-8") == src.read_text(encoding="utf-8")
    assert datasets_equal(uni, reconstruct_entities(st.store), d0)


def test_switching_mapping_carries_data(files, uni, d0):
    src = files / "d0.jsonl"
    dump_dataset(uni, d0, src)
    _, st = uni_session(files, f"\\data load {src}", "\\map generate hierarchy Person single_table")
    assert "type" in dict(st.store.design.container("person").columns)
    assert datasets_equal(uni, reconstruct_entities(st.store), d0)


def test_sql_mode_emits_instead_of_executing(files):
    outs, st = uni_session(files, "\\sql postgres", "select p.ID from Person p", "\\sql off")
    assert "CREATE TABLE person (" in outs[2]
    assert outs[3].startswith("SELECT p.id")
    assert st.dialect is None
    _, st = uni_session(files, "\\sql standard")
    with pytest.raises(UserError, match="not emitted"):
        dispatch(ANN, st)


def test_mapping_save_and_load(files):
    path = files / "m.json"
    _, st = uni_session(files, "\\map generate nested arrays", f"\\map save {path}", "\\map generate normalized", f"\\map load {path}")
    assert st.mapping.name == "arrays" and "person_ph" not in st.mapping.fragment_names()


@pytest.mark.parametrize(
    "words,change",
    [
        (["make_multivalued", "Person", "city"], MakeMultivalued("Person", "city")),
        (["change_cardinality", "advisor", "Instructor", "many"], ChangeCardinality("advisor", "Instructor", "many")),
        (["add_attribute", "Person", "email", "text"], None),
    ],
)
def test_functional_change_forms(words, change):
    got = parse_change(words)
    if change is None:
        assert isinstance(got, AddAttribute) and got.attribute.name == "email"
    else:
        assert got == change


def test_main_executes_lines(files, capsys):
    code = main(["--no-color", "-e", f"\\schema load {files / 'uni.erdl'}", "-e", "\\map generate normalized", "-e", "\\map check"])
    assert code == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == "ok"


def test_main_reports_user_errors(files, capsys):
    code = main(["--no-color", "-e", "select p.ID from Person p"])
    assert code == EXIT_USER
    assert capsys.readouterr().err.startswith("error: no schema loaded")


def test_main_runs_a_script(files, capsys):
    script = files / "s.txt"
    script.write_text(f"-- comment\n\\schema load {files / 'uni.erdl'}\n\\map generate normalized\n{ANN}\n", encoding="utf-8")
    assert main(["--no-color", str(script)]) == EXIT_OK
    assert "ok (2 rows written)" in capsys.readouterr().out


def test_catalog_persists_across_sessions(files, capsys):
    cat = files / "cat"
    assert main(["--catalog", str(cat), "-e", f"\\schema load {files / 'uni.erdl'}", "-e", "\\map generate normalized", "-e", ANN]) == EXIT_OK
    assert main(["--catalog", str(cat), "-e", "select p.name from Person p"]) == EXIT_OK
    assert "Ann" in capsys.readouterr().out.splitlines()


def test_bench_subcommand(files, capsys):
    report = files / "r.csv"
    argv = ["bench", "--scale", "300", "--seed", "1", "--runs", "1", "--queries", "q1_mv,q_r3_scan", "--report", str(report)]
    assert main(argv) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("  pass  ") == 6
    with open(report, newline="", encoding="utf-8") as fh:
        assert len(list(csv.DictReader(fh))) == 12


@pytest.mark.parametrize("argv", [["bench", "--scale", "0"], ["bench", "--queries", "nope"], ["bench", "--bogus"]])
def test_bench_bad_arguments(argv, capsys):
    assert main(argv) == EXIT_USER
    assert capsys.readouterr().err.splitlines()[-1].startswith("error:")
