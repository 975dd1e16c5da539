from __future__ import annotations

import csv

import pytest

from erdb.bench import (
    MAPPING_NAMES,
    REPORT_COLUMNS,
    SYNTHETIC_WORKLOAD,
    EquivalenceError,
    SyntheticSpec,
    allocation,
    build_mappings,
    build_synthetic_schema,
    directional_timings,
    generate_dataset,
    run_workload,
    structural_checks,
)
from erdb.compiler import compile_query, plan_metrics
from erdb.engine import format_dataset
from erdb.mapping import check_cover
from erdb.model import validate_schema
from erdb.values import Dataset

R_CLASSES = {"R", "R1", "R2", "R3", "R4"}


@pytest.fixture(scope="module")
def syn():
    s = build_synthetic_schema()
    return s, build_mappings(s)


@pytest.fixture(scope="module")
def small(syn):
    s, _ = syn
    return generate_dataset(SyntheticSpec(600, 3), s)


def test_schema_is_valid(syn):
    s, _ = syn
    assert validate_schema(s).errors == []


def test_schema_has_eight_entities(syn):
    assert len(syn[0].entities) == 8


def test_hierarchy_has_five_classes_rooted_at_r(syn):
    s, _ = syn
    assert set(s.descendants("R")) == R_CLASSES
    assert all(s.root(c) == "R" for c in R_CLASSES)
    assert sorted(e for e in s.entity_names() if s.is_weak(e)) == ["S1", "S2"]


def test_relationship_endpoints(syn):
    s, _ = syn
    ends = {r.name: sorted(p.entity for p in r.participants) for r in s.relationships if not s.is_identifying(r.name)}
    assert ends == {"rs": ["R2", "S1"], "rr": ["R1", "R3"]}


def test_six_mappings_pass_cover(syn):
    s, ms = syn
    assert tuple(ms) == MAPPING_NAMES
    assert [check_cover(s, None, m).render() for m in ms.values()] == ["ok"] * 6


def test_single_table_has_fewer_fragments(syn):
    _, ms = syn
    assert len(ms["M3"].fragments) < len(ms["M1"].fragments)


def test_disjoint_has_five_hierarchy_fragments(syn):
    _, ms = syn
    hier = [f for f in ms["M4"].fragments if f.nesting_spec["kind"] == "entity" and f.nesting_spec["entity"] in R_CLASSES]
    assert len(hier) == 5
    assert all(len(f.nesting_spec["classes"]) == 1 for f in hier)
    assert sorted(f.nesting_spec["classes"][0] for f in hier) == sorted(R_CLASSES)


def test_generation_is_byte_identical(syn):
    s, _ = syn
    a = generate_dataset(SyntheticSpec(1000, 7), s)
    b = generate_dataset(SyntheticSpec(1000, 7), s)
    assert format_dataset(s, a) == format_dataset(s, b)
    assert format_dataset(s, a) != format_dataset(s, generate_dataset(SyntheticSpec(1000, 8), s))


@pytest.mark.parametrize("scale", [200, 1000, 5000, 20000])
def test_total_entries_within_five_percent(syn, scale):
    ds = generate_dataset(SyntheticSpec(scale, 1), syn[0])
    total = sum(len(v) for v in ds.entities.values()) + sum(len(v) for v in ds.relationships.values())
    assert abs(total - scale) <= 0.05 * scale


def test_allocation_matches_generated_counts(syn):
    spec = SyntheticSpec(1000, 7)
    ds = generate_dataset(spec, syn[0])
    n = allocation(spec)
    got = {k: len(v) for k, v in ds.entities.items()} | {k: len(v) for k, v in ds.relationships.items()}
    assert got == {k: v for k, v in n.items() if v}


def test_every_s1_carries_its_owner_key(syn):
    s, _ = syn
    ds = generate_dataset(SyntheticSpec(1000, 7), s)
    sids = {d["sid"] for d in ds.entities["S"]}
    assert ds.entities["S1"] and all(d["sid"] in sids for d in ds.entities["S1"])
    assert s.key_closure("S1") == [("S", "sid"), ("S1", "k1")]


def test_classes_spread_across_hierarchy(small):
    assert all(small.entities.get(c) for c in R_CLASSES)


@pytest.mark.parametrize("bad", [{"scale": 0}, {"scale": -5}, {"scale": 10, "fanouts": {"s1": -1.0, "s2": 1.0, "rs": 1.0, "rr": 1.0}}])
def test_invalid_specs(bad):
    with pytest.raises(ValueError):
        SyntheticSpec(**bad)


def test_workload_metric_examples(syn):
    s, ms = syn
    w = dict(SYNTHETIC_WORKLOAD)

    def m(q, name):
        return plan_metrics(compile_query(s, ms[name], w[q]))

    assert (m("q1_mv", "M1").joins, m("q1_mv", "M2").joins) == (3, 0)
    assert (m("q_key_lookup", "M1").fragments_touched, m("q_key_lookup", "M2").fragments_touched) == (2, 1)
    r3 = {k: m("q_r3_scan", k) for k in MAPPING_NAMES}
    assert (r3["M1"].joins, r3["M3"].joins, r3["M4"].joins) == (2, 0, 0)
    assert r3["M4"].estimated_scan_width == min(x.estimated_scan_width for x in r3.values())


def test_structural_checks_all_pass(syn):
    s, ms = syn
    checks = structural_checks(s, ms)
    assert len(checks) == 6
    assert [name for name, ok, _ in checks if not ok] == []


def test_run_workload_reports_every_pair(syn, small, tmp_path):
    s, ms = syn
    report = run_workload(s, SYNTHETIC_WORKLOAD, ms, small, runs=2)
    assert len(report.entries) == len(SYNTHETIC_WORKLOAD) * 6
    for q, _ in SYNTHETIC_WORKLOAD:
        assert len({report.entry(q, m).fingerprint for m in ms}) == 1
    assert all(e.median_ms >= 0 for e in report.entries)
    assert [label for label, _, _ in directional_timings(report)]
    path = tmp_path / "r.csv"
    report.write_csv(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == REPORT_COLUMNS == ("query", "mapping", "joins", "unions", "unnests", "fragments", "median_ms", "fingerprint")
    assert len(rows) == len(report.entries)


def test_equivalence_gate_rejects_disagreement(syn, small, monkeypatch):
    from erdb.bench import workload

    s, ms = syn
    real = workload.materialize
    data = iter([small, Dataset()])  # M2 is materialized over an empty dataset
    monkeypatch.setattr(workload, "materialize", lambda schema, m, ds: real(schema, m, next(data)))
    with pytest.raises(EquivalenceError, match="q1_mv: M2 disagrees with M1"):
        run_workload(s, SYNTHETIC_WORKLOAD[:1], {"M1": ms["M1"], "M2": ms["M2"]}, small, runs=1)


def test_runs_must_be_positive(syn, small):
    s, ms = syn
    with pytest.raises(ValueError):
        run_workload(s, SYNTHETIC_WORKLOAD, ms, small, runs=0)
