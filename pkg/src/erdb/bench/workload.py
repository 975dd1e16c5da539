"""Benchmark workloads, timed runs with an equivalence gate, and structural expectations."""

from __future__ import annotations

import csv
import gc
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

from ..compiler import compile_query, plan_metrics
from ..compiler.plan import PlanMetrics
from ..engine import execute, materialize
from ..errors import InternalError
from ..mapping.model import Mapping
from ..model import ErSchema
from ..values import Dataset

# (name, query) pairs over the synthetic schema
SYNTHETIC_WORKLOAD: tuple[tuple[str, str], ...] = (
    ("q1_mv", "select r.id, r.mv1, r.mv2, r.mv3 from R r"),
    ("q_key_lookup", "select r.mv1 from R r where r.id = 7"),
    ("q_r3_scan", "select x.id, x.a, x.c1, x.c3 from R3 x"),
    ("q_r_scan", "select r.id, r.a from R r"),
    ("q_prejoin", "select x.id, y.k1, rs.w from R2 x join S1 y on rs"),
    ("q_s1_join", "select s.sid, y.k1, y.v1 from S s join S1 y on s_s1"),
    ("q_mv_group", "select unnest(r.mv1), count(r.id) from R r"),
    ("q_rr", "select a.id, b.id from R1 a join R3 b on rr"),
    ("q_r4", "select x.id, x.b, x.c2, x.c4 from R4 x"),
    ("q_r1_agg", "select x.a, count(x.id), avg(x.c1) from R1 x"),
    ("q_s1_nest", "select s.sid, kids: [y.k1, y.v1] from S s join S1 y on s_s1"),
    ("q_s2_count", "select s.name, count(z.k2) from S s join S2 z on s_s2"),
    ("q_filter", 'select r.id, r.b from R r where r.a = 2 or r.b = "oak"'),
    ("q_mv_member", "select r.id from R r where 3 in r.mv3"),
    ("q_rs_sum", "select y.tag, sum(rs.w) from R2 x join S1 y on rs"),
)

# (name, query) pairs over the university schema
UNIVERSITY_WORKLOAD: tuple[tuple[str, str], ...] = (
    ("u_advisor_avg", "select i.ID, avg(s.tot_credits) from Instructor i join Student s on advisor"),
    ("u_course_students", "select c.title, sections: [t.ID] from Course c join Section x on sec_course join Student t on takes"),
    ("u_phones", "select p.name, p.Ph from Person p"),
    ("u_phone_rows", "select p.name, unnest(p.Ph) from Person p"),
    ("u_key", "select p.ID from Person p where p.ID = 1"),
    ("u_phone_member", 'select p.ID from Person p where "ash" in p.Ph'),
    ("u_rooms", "select s.sec_id, s.room.building, s.room.room_no from Section s"),
    ("u_grades", "select s.ID, takes.grade, x.sec_id from Student s join Section x on takes"),
    ("u_section_course", "select x.sec_id, x.room.building, c.title from Section x join Course c on sec_course"),
    ("u_advisor_names", "select s.name, i.name from Student s join Instructor i on advisor"),
    ("u_section_roster", "select p.sec_id, studs: [s.name, takes.grade] from Section p join Student s on takes"),
    ("u_teaching", "select i.name, secs: [x.sec_id, c.title] from Instructor i join Section x on teaches join Course c on sec_course"),
    ("u_empty_count", 'select count(p.ID) from Person p where p.name = "zz"'),
    ("u_same_city", "select p.ID, q.ID from Person p join Person q on p.city = q.city"),
    ("u_two_level", "select c.course_id, n: [x.sec_id, st: [t.name]] from Course c join Section x on sec_course join Student t on takes"),
    ("u_rank_stats", "select i.rank, count(i.ID), sum(s.tot_credits) from Instructor i join Student s on advisor"),
    ("u_or_not", 'select p.name, p.city from Person p where p.city = "oak" or not p.name = "ash"'),
    ("u_advisors_nested", "select s.ID, adv: [i.ID] from Student s join Instructor i on advisor"),
)

REPORT_COLUMNS = ("query", "mapping", "joins", "unions", "unnests", "fragments", "median_ms", "fingerprint")


class EquivalenceError(InternalError):
    """Two mappings returned different normalized results for one query."""


@dataclass
class WorkloadEntry:
    query: str
    mapping: str
    metrics: PlanMetrics
    median_ms: float
    fingerprint: str


@dataclass
class WorkloadReport:
    entries: list[WorkloadEntry] = field(default_factory=list)

    def entry(self, query: str, mapping: str) -> WorkloadEntry:
        for e in self.entries:
            if e.query == query and e.mapping == mapping:
                return e
        raise KeyError((query, mapping))

    def rows(self) -> list[dict]:
        return [
            {
                "query": e.query,
                "mapping": e.mapping,
                "joins": e.metrics.joins,
                "unions": e.metrics.unions,
                "unnests": e.metrics.unnests,
                "fragments": e.metrics.fragments_touched,
                "median_ms": f"{e.median_ms:.3f}",
                "fingerprint": e.fingerprint,
            }
            for e in self.entries
        ]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
            w.writeheader()
            w.writerows(self.rows())

    def render(self) -> str:
        lines = [" ".join(f"{c:>12}" for c in REPORT_COLUMNS[:-1])]
        for r in self.rows():
            lines.append(" ".join(f"{str(r[c]):>12}" for c in REPORT_COLUMNS[:-1]))
        return "\n".join(lines)


def _named(queries) -> list[tuple[str, str]]:
    out = []
    for i, q in enumerate(queries, 1):
        out.append(q if isinstance(q, tuple) else (f"q{i}", q))
    return out


def run_workload(
    schema: ErSchema,
    queries,
    mappings: dict[str, Mapping],
    dataset: Dataset,
    runs: int = 10,
) -> WorkloadReport:
    """Materialize each mapping once, run each query ``runs`` times, record medians and
    fingerprints; raises EquivalenceError before any timing when mappings disagree."""
    if runs < 1:
        raise ValueError("runs must be at least 1")
    named = _named(queries)
    stores = {name: materialize(schema, m, dataset) for name, m in mappings.items()}
    report = WorkloadReport()
    for qname, text in named:
        plans = {mname: compile_query(schema, m, text) for mname, m in mappings.items()}
        # untimed first execution doubles as warm-up and feeds the equivalence gate
        prints = {mname: execute(stores[mname], plan).fingerprint() for mname, plan in plans.items()}
        first = next(iter(prints))
        for mname, fp in prints.items():
            if fp != prints[first]:
                raise EquivalenceError(f"{qname}: {mname} disagrees with {first} ({fp} vs {prints[first]})")
        times: dict[str, list[float]] = {mname: [] for mname in plans}
        for _ in range(runs):
            for mname, plan in plans.items():  # interleaved so host drift hits every mapping alike
                times[mname].append(_timed(stores[mname], plan))
        for mname, plan in plans.items():
            report.entries.append(WorkloadEntry(qname, mname, plan_metrics(plan), statistics.median(times[mname]), prints[mname]))
    return report


def _timed(store, plan) -> float:
    gc.collect()
    gc.disable()  # keep collector pauses out of the timed region, as timeit does
    try:
        t0 = time.perf_counter()
        execute(store, plan)
        return (time.perf_counter() - t0) * 1000.0
    finally:
        gc.enable()


def structural_checks(schema: ErSchema, mappings: dict[str, Mapping]) -> list[tuple[str, bool, str]]:
    """Plan-metric expectations for the synthetic workload: (check, passed, observed)."""
    from ..compiler.plan import Filter, PTypeIn, walk

    q = dict(SYNTHETIC_WORKLOAD)

    def metrics(query: str, m: str) -> PlanMetrics:
        return plan_metrics(compile_query(schema, mappings[m], q[query]))

    def typed(query: str, m: str) -> bool:
        plan = compile_query(schema, mappings[m], q[query])
        return any(isinstance(op, Filter) and isinstance(op.pred, PTypeIn) for op in walk(plan.root))

    out = []
    q1 = {m: metrics("q1_mv", m) for m in ("M1", "M2")}
    out.append(("Q1 joins M1=3, M2=0", q1["M1"].joins == 3 and q1["M2"].joins == 0, f"M1={q1['M1'].joins} M2={q1['M2'].joins}"))
    key = {m: metrics("q_key_lookup", m) for m in ("M1", "M2")}
    out.append((
        "key lookup fragments M1=2, M2=1",
        key["M1"].fragments_touched == 2 and key["M2"].fragments_touched == 1,
        f"M1={key['M1'].fragments_touched} M2={key['M2'].fragments_touched}",
    ))
    r3 = {m: metrics("q_r3_scan", m) for m in ("M1", "M3", "M4")}
    order = [(r3[m].fragments_touched, r3[m].estimated_scan_width) for m in ("M1", "M3", "M4")]
    out.append((
        "R3 scan joins M1=2, M3=0 typed, M4=0 narrowest",
        r3["M1"].joins == 2 and r3["M3"].joins == 0 and typed("q_r3_scan", "M3") and r3["M4"].joins == 0
        and order[0] > order[1] > order[2]
        and r3["M4"].estimated_scan_width == min(metrics("q_r3_scan", m).estimated_scan_width for m in mappings),
        f"(fragments, width) M1={order[0]} M3={order[1]} M4={order[2]}",
    ))
    rs = metrics("q_r_scan", "M4")
    out.append(("R scan M4 unions=1 over 5 fragments", rs.unions == 1 and rs.fragments_touched == 5, f"unions={rs.unions} fragments={rs.fragments_touched}"))
    pj = {m: metrics("q_prejoin", m) for m in ("M1", "M6")}
    out.append(("prejoin joins M6=0 < M1", pj["M6"].joins == 0 < pj["M1"].joins, f"M1={pj['M1'].joins} M6={pj['M6'].joins}"))
    un = {m: metrics("q_s1_join", m) for m in ("M1", "M5")}
    out.append(("S1 join unnests M5>=1, M1=0", un["M5"].unnests >= 1 and un["M1"].unnests == 0, f"M1={un['M1'].unnests} M5={un['M5'].unnests}"))
    return out


def directional_timings(report: WorkloadReport) -> list[tuple[str, bool, str]]:
    """Wall-clock orderings (informational only)."""
    out = []
    for label, query, fast, slow in (
        ("Q1: M2 faster than M1", "q1_mv", "M2", "M1"),
        ("key lookup: M2 faster than M1", "q_key_lookup", "M2", "M1"),
        ("unnest-heavy grouping: M1 faster than M2", "q_mv_group", "M1", "M2"),
    ):
        a, b = report.entry(query, fast).median_ms, report.entry(query, slow).median_ms
        out.append((label, a < b, f"{fast}={a:.3f}ms {slow}={b:.3f}ms"))
    return out
