"""Validity checks for mappings: coverage, connectivity, reversibility, write targets."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import MappingError
from ..graph import ErGraph, build_graph, is_connected
from ..model import ErSchema
from ..values import is_concrete
from .design import Design, entity_units, rel_units, unit_label
from .model import Mapping

RULES = ("coverage", "connectivity", "reversibility", "crud")


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.detail}"


@dataclass
class ValidityReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def check_cover(schema: ErSchema, graph: ErGraph | None, mapping: Mapping) -> ValidityReport:
    graph = graph or build_graph(schema)
    out: list[Violation] = []
    warnings: list[str] = []
    for f in mapping.fragments:
        for n in f.nodes:
            if not graph.has_node(n):
                raise MappingError(f"fragment {f.name} references unknown node {n}")
    if mapping.schema_fingerprint != schema.fingerprint():
        out.append(Violation("reversibility", "mapping fingerprint does not match the schema"))

    covered = set()
    for f in mapping.fragments:
        covered.update(f.nodes)
    for n in graph.nodes:
        if n.kind in ("attribute", "relationship") and n.id not in covered:
            out.append(Violation("coverage", f"{n.id[2:]} uncovered"))

    for f in mapping.fragments:
        if not f.nodes:
            out.append(Violation("connectivity", f"fragment {f.name} is empty"))
        elif not is_connected(graph, f.nodes):
            out.append(Violation("connectivity", f"fragment {f.name} is not connected"))

    design = Design(schema, mapping)
    crud: list[Violation] = []
    for rule, detail in design.problems:
        (crud if rule == "crud" else out).append(Violation(rule, detail))
    _check_hosting(schema, design, out, crud, warnings)
    out.extend(crud)
    order = {r: i for i, r in enumerate(RULES)}
    out.sort(key=lambda v: order[v.rule])
    return ValidityReport(out, warnings)


def _check_hosting(schema: ErSchema, d: Design, out: list[Violation], crud: list[Violation], warnings: list[str]) -> None:
    concrete = [e.name for e in schema.entities if is_concrete(schema, e.name)]
    for cls in concrete:
        if not d.class_containers(cls):
            crud.append(Violation("crud", f"no fragment stores {cls} instances"))
            continue
        for u in entity_units(schema, cls):
            hosts = d.hosts.get(u, [])
            if hosts and not any(cls in c.inst_classes for c in hosts):
                out.append(Violation("reversibility", f"{unit_label(u)} of {cls} instances is not stored"))
    for r in schema.relationships:
        if schema.is_identifying(r.name):
            continue
        hosts = d.rel_hosts.get(r.name, [])
        if not hosts:
            crud.append(Violation("crud", f"relationship {r.name} has no write target"))
            continue
        complete = any(mode != "fk" for _, mode in hosts)
        fs = r.fold_side()
        if not complete and fs is not None:
            many = [c for c in schema.descendants(fs[0].entity) if is_concrete(schema, c)]
            complete = all(any(m in c.inst_classes for c, _ in hosts) for m in many)
        if not complete:
            out.append(Violation("reversibility", f"relationship {r.name} is not stored for every participant class"))
        for c, _ in hosts:
            missing = [u for u in rel_units(schema, r.name) if u not in c.units]
            for u in missing:
                out.append(Violation("reversibility", f"fragment {c.fragment} stores {r.name} without {unit_label(u)}"))
        if len(hosts) > 1:
            warnings.append(f"relationship {r.name} is stored in {len(hosts)} places; writes fan out")
    # classes sharing every container must be told apart by a type column
    for root in sorted({schema.root(c) for c in concrete}):
        sigs: dict[frozenset, list[str]] = {}
        for cls in concrete:
            if schema.root(cls) != root:
                continue
            sig = frozenset(c.id for c in d.all_containers() if c.kind == "entity" and cls in c.inst_classes)
            if sig:
                sigs.setdefault(sig, []).append(cls)
        for sig, classes in sigs.items():
            if len(classes) < 2:
                continue
            if not any(d.container(cid).type_column for cid in sig):
                out.append(
                    Violation("reversibility", f"classes {', '.join(classes)} cannot be told apart; add a type column")
                )
