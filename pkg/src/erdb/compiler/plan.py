"""Physical plan operators, expressions, pretty printer, and structural metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterator, Union

# ---- expressions ------------------------------------------------------------------------


@dataclass(frozen=True)
class Col:
    name: str


@dataclass(frozen=True)
class Const:
    value: Any


@dataclass(frozen=True)
class Coalesce:
    expr: "Expr"
    default: Any


@dataclass(frozen=True)
class Compose:
    fields: tuple[tuple[str, "Expr"], ...]


Expr = Union[Col, Const, Coalesce, Compose]

# ---- predicates ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PCmp:
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class PIn:
    left: Expr
    right: Expr  # array-valued expression or Const(list)


@dataclass(frozen=True)
class PBool:
    op: str  # and | or
    left: "Pred"
    right: "Pred"


@dataclass(frozen=True)
class PNot:
    operand: "Pred"


@dataclass(frozen=True)
class PTypeIn:
    column: str
    classes: tuple[str, ...]


Pred = Union[PCmp, PIn, PBool, PNot, PTypeIn]

# ---- operators ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Scan:
    container: str
    fragment: str
    alias: str
    columns: tuple[str, ...]
    eq: tuple[tuple[str, Any], ...] = ()

    @property
    def width(self) -> int:
        return len(self.columns)


@dataclass(frozen=True)
class FactorizedScan:
    fragment: str
    left: str  # container ids
    right: str
    edges: str
    left_alias: str
    right_alias: str
    edge_alias: str
    left_columns: tuple[str, ...]
    right_columns: tuple[str, ...]
    edge_columns: tuple[str, ...]
    eq: tuple[tuple[str, Any], ...] = ()  # on left group columns

    @property
    def width(self) -> int:
        return len(self.left_columns) + len(self.right_columns) + len(self.edge_columns)


@dataclass(frozen=True)
class Filter:
    child: "Op"
    pred: Pred


@dataclass(frozen=True)
class Join:
    kind: str  # inner | left | semi
    left: "Op"
    right: "Op"
    keys: tuple[tuple[str, str], ...]
    residual: Pred | None = None


@dataclass(frozen=True)
class UnionAll:
    children: tuple["Op", ...]


@dataclass(frozen=True)
class Unnest:
    child: "Op"
    column: Expr
    out: str  # output prefix (fields) or column name (whole element)
    fields: tuple[str, ...] | None = None
    outer: bool = False


@dataclass(frozen=True)
class Project:
    child: "Op"
    exprs: tuple[tuple[str, Expr], ...]


@dataclass(frozen=True)
class NestSpec:
    presence: tuple[str, ...]  # columns that must be non-absent for a row to contribute
    element: Expr | None = None  # scalar elements
    fields: tuple[tuple[str, Any], ...] = ()  # (label, Expr | NestSpec) for composite elements


@dataclass(frozen=True)
class GroupNest:
    child: "Op"
    keys: tuple[tuple[str, Expr], ...]
    aggs: tuple[tuple[str, str, Expr], ...] = ()
    nests: tuple[tuple[str, NestSpec], ...] = ()
    order: tuple[str, ...] = ()  # output column order

    @property
    def name(self) -> str:
        return "group_nest" if self.nests else "aggregate"


Op = Union[Scan, FactorizedScan, Filter, Join, UnionAll, Unnest, Project, GroupNest]


@dataclass(frozen=True)
class PhysicalPlan:
    root: Op
    outputs: tuple[str, ...]  # internal column names, in result order
    columns: tuple[tuple[str, str], ...]  # (label, shape)
    mapping: str = ""
    notes: tuple[str, ...] = field(default=(), compare=False)


def children(op: Op) -> tuple[Op, ...]:
    if isinstance(op, (Scan, FactorizedScan)):
        return ()
    if isinstance(op, Join):
        return (op.left, op.right)
    if isinstance(op, UnionAll):
        return op.children
    return (op.child,)


def walk(op: Op) -> Iterator[Op]:
    yield op
    for c in children(op):
        yield from walk(c)


# ---- metrics ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class PlanMetrics:
    joins: int = 0
    unions: int = 0
    unnests: int = 0
    fragments_touched: int = 0
    estimated_scan_width: int = 0

    def render(self) -> str:
        return "\n".join(f"{k}={getattr(self, k)}" for k in self.__dataclass_fields__)


def plan_metrics(plan: PhysicalPlan | Op) -> PlanMetrics:
    root = plan.root if isinstance(plan, PhysicalPlan) else plan
    joins = unions = unnests = width = 0
    frags: set[str] = set()
    for op in walk(root):
        if isinstance(op, Join):
            joins += 1
        elif isinstance(op, UnionAll):
            unions += 1
        elif isinstance(op, Unnest):
            unnests += 1
        elif isinstance(op, (Scan, FactorizedScan)):
            frags.add(op.fragment)
            width += op.width
    return PlanMetrics(joins, unions, unnests, len(frags), width)


# ---- pretty printer ------------------------------------------------------------------------


def expr_text(e: Expr) -> str:
    if isinstance(e, Col):
        return e.name
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Coalesce):
        return f"coalesce({expr_text(e.expr)}, {e.default!r})"
    if isinstance(e, Compose):
        return "{" + ", ".join(f"{k}: {expr_text(v)}" for k, v in e.fields) + "}"
    raise TypeError(e)


def pred_text(p: Pred) -> str:
    if isinstance(p, PCmp):
        return f"{expr_text(p.left)} {p.op} {expr_text(p.right)}"
    if isinstance(p, PIn):
        return f"{expr_text(p.left)} in {expr_text(p.right)}"
    if isinstance(p, PBool):
        return f"({pred_text(p.left)} {p.op} {pred_text(p.right)})"
    if isinstance(p, PNot):
        return f"not {pred_text(p.operand)}"
    if isinstance(p, PTypeIn):
        return f"{p.column} in ({', '.join(p.classes)})"
    raise TypeError(p)


def _nest_text(n: NestSpec) -> str:
    if n.element is not None:
        return f"[{expr_text(n.element)}]"
    parts = []
    for k, v in n.fields:
        parts.append(f"{k}: {_nest_text(v) if isinstance(v, NestSpec) else expr_text(v)}")
    return "[{" + ", ".join(parts) + "}]"


def _eq_text(eq) -> str:
    return " where " + " and ".join(f"{c} = {v!r}" for c, v in eq) if eq else ""


def op_line(op: Op) -> str:
    if isinstance(op, Scan):
        return f"scan {op.container} as {op.alias}{_eq_text(op.eq)}"
    if isinstance(op, FactorizedScan):
        return (
            f"factorized_scan {op.fragment} ({op.left} as {op.left_alias}, {op.edges} as {op.edge_alias}, "
            f"{op.right} as {op.right_alias}){_eq_text(op.eq)}"
        )
    if isinstance(op, Filter):
        return f"filter {pred_text(op.pred)}"
    if isinstance(op, Join):
        keys = " and ".join(f"{a} = {b}" for a, b in op.keys) or "true"
        extra = f" and {pred_text(op.residual)}" if op.residual is not None else ""
        return f"join {op.kind} on {keys}{extra}"
    if isinstance(op, UnionAll):
        return f"union_all ({len(op.children)} inputs)"
    if isinstance(op, Unnest):
        tag = " outer" if op.outer else ""
        return f"unnest{tag} {expr_text(op.column)} as {op.out}"
    if isinstance(op, Project):
        return "project " + ", ".join(f"{n} := {expr_text(e)}" if expr_text(e) != n else n for n, e in op.exprs)
    if isinstance(op, GroupNest):
        parts = [f"keys [{', '.join(n + ' := ' + expr_text(e) for n, e in op.keys)}]"]
        if op.aggs:
            parts.append("aggs [" + ", ".join(f"{n} := {fn}({expr_text(e)})" for n, fn, e in op.aggs) + "]")
        if op.nests:
            parts.append("nest [" + ", ".join(f"{n} := {_nest_text(s)}" for n, s in op.nests) + "]")
        return f"{op.name} " + " ".join(parts)
    raise TypeError(op)


def explain(plan: PhysicalPlan | Op) -> str:
    root = plan.root if isinstance(plan, PhysicalPlan) else plan
    lines: list[str] = []

    def go(op: Op, depth: int) -> None:
        lines.append("  " * depth + op_line(op))
        for c in children(op):
            go(c, depth + 1)

    go(root, 0)
    return "\n".join(lines) + "\n"


def output_columns(op: Op) -> tuple[str, ...]:
    """Column names produced by an operator."""
    if isinstance(op, Scan):
        return tuple(f"{op.alias}.{c}" for c in op.columns)
    if isinstance(op, FactorizedScan):
        return (
            tuple(f"{op.left_alias}.{c}" for c in op.left_columns)
            + tuple(f"{op.edge_alias}.{c}" for c in op.edge_columns)
            + tuple(f"{op.right_alias}.{c}" for c in op.right_columns)
        )
    if isinstance(op, Filter):
        return output_columns(op.child)
    if isinstance(op, Join):
        left = output_columns(op.left)
        return left if op.kind == "semi" else left + output_columns(op.right)
    if isinstance(op, UnionAll):
        return output_columns(op.children[0])
    if isinstance(op, Unnest):
        extra = (op.out,) if op.fields is None else tuple(f"{op.out}.{f}" for f in op.fields)
        return output_columns(op.child) + extra
    if isinstance(op, Project):
        return tuple(n for n, _ in op.exprs)
    if isinstance(op, GroupNest):
        return op.order
    raise TypeError(op)
