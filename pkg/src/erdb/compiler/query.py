"""Compilation of bound queries into physical plans over a mapping's containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..errors import CompileError, MappingError
from ..erql import ast as A
from ..erql.binder import BoundExpr, BoundJoin, BoundNested, BoundPath, BoundQuery, pred_paths, walk_items
from ..mapping.design import Container, Design, attr_column, design_of, role_key_columns
from ..mapping.model import Mapping
from ..model import ErSchema, leaf_units
from ..values import is_concrete
from .plan import (
    Coalesce,
    Col,
    Compose,
    Const,
    Expr,
    FactorizedScan,
    Filter,
    GroupNest,
    Join,
    NestSpec,
    Op,
    PBool,
    PCmp,
    PhysicalPlan,
    PIn,
    PNot,
    Pred,
    Project,
    PTypeIn,
    Scan,
    UnionAll,
    Unnest,
)
from .rows import applies, fold_roles


@dataclass
class _Binder:
    name: str
    entity: str
    key: list[str]  # plan column names holding the key
    cols: dict = field(default_factory=dict)  # unit -> list[Expr]


def element_expr(alias: str, c: Container) -> Expr:
    """Logical element of an exploded multi-valued container row."""
    if len(c.element_columns) == 1 and not c.element_columns[0][1]:
        return Col(f"{alias}.{c.element_columns[0][0]}")
    tree: dict = {}
    for col, sub, _ in c.element_columns:
        cur = tree
        for n in sub[:-1]:
            cur = cur.setdefault(n, {})
        cur[sub[-1]] = Col(f"{alias}.{col}")

    def build(t: dict) -> Expr:
        return Compose(tuple((k, build(v) if isinstance(v, dict) else v) for k, v in t.items()))

    return build(tree)


def path_units(p: BoundPath) -> list[tuple]:
    """Storage units read by a non-key path."""
    if p.scope == "relationship":
        if p.attr.is_composite:
            return [("rattr", p.owner, p.names + sub) for sub, _ in leaf_units(p.attr.children)]
        return [("rattr", p.owner, p.names)]
    if p.attr.is_multi:
        return [("mv", p.owner, p.names)]
    if p.attr.is_composite:
        return [("mv" if a.is_multi else "attr", p.owner, p.names + sub) for sub, a in leaf_units(p.attr.children)]
    return [("attr", p.owner, p.names)]


def _conjuncts(p) -> list:
    if isinstance(p, A.BoolOp) and p.op == "and":
        return _conjuncts(p.left) + _conjuncts(p.right)
    return [] if p is None else [p]


def _and_all(ps: list):
    out = None
    for p in ps:
        out = p if out is None else A.BoolOp("and", out, p)
    return out


class _QueryCompiler:
    def __init__(self, schema: ErSchema, design: Design, q: BoundQuery):
        self.s = schema
        self.d = design
        self.q = q
        self.info: dict[str, _Binder] = {}
        self.rel_cols: dict[str, dict] = {}  # new binder -> {rattr unit: Expr}
        self.needs: dict[str, dict] = {b: {} for b, _ in q.binders}
        self.unnest_needs: dict[str, list[tuple[int, tuple]]] = {b: [] for b, _ in q.binders}
        self.unnest_exprs: dict[int, Expr] = {}
        self.semis: list[tuple[str, tuple, Any]] = []
        self.eq: dict[str, dict[int, Any]] = {}
        self.modes: dict[int, tuple] = {}
        self.factorized_first = None
        self.notes: list[str] = []

    # ---- analysis -------------------------------------------------------------------------

    def exploded(self, unit: tuple) -> Container | None:
        hosts = self.d.unit_hosts(unit)
        if hosts and all(h.kind == "multivalued" for h in hosts):
            return hosts[0]
        return None

    def need(self, binder: str, unit: tuple) -> None:
        self.needs[binder].setdefault(unit, None)

    def need_path(self, p: BoundPath) -> None:
        if p.scope == "entity" and p.key_index is not None:
            return
        if p.scope == "relationship":
            mode = self.mode_for_binder(p.binder)
            if mode[0] == "fk":
                for u in path_units(p):
                    self.need(mode[2], u)
            return
        for u in path_units(p):
            self.need(p.binder, u)

    def mode_for_binder(self, b: str) -> tuple:
        for i, j in enumerate(self.q.joins):
            if j.binder == b:
                return self.modes[i]
        raise CompileError(f"no relationship join introduces {b}")

    def join_mode(self, i: int, j: BoundJoin) -> tuple:
        s, d = self.s, self.d
        r = s.relationship(j.relationship)
        w = s.identified_entity(r.name)
        if w is not None:
            new_is_weak = r.participants[j.role].entity == w
            if new_is_weak and d.is_embedded_only(w):
                return ("unnest", w)
            return ("prefix", new_is_weak)
        hosts = d.rel_hosts.get(r.name, [])
        fk = [c for c, k in hosts if k == "fk"]
        if fk:
            many, _ = fold_roles(d, r.name)
            many_binder = j.prev if j.prev_role == many else j.binder
            return ("fk", r.name, many_binder)
        table = [c for c, k in hosts if k == "table"]
        if table:
            return ("table", table[0])
        edges = [c for c, k in hosts if k == "edges"]
        if edges:
            return ("table", edges[0])
        raise CompileError(f"relationship {r.name} is not stored by the mapping")

    def analyze(self) -> None:
        q = self.q
        for i, j in enumerate(q.joins):
            if j.relationship is None:
                self.modes[i] = ("pred",)
                continue
            m = self.join_mode(i, j)
            self.modes[i] = m
            if m[0] == "fk":
                self.need(m[2], ("fk", m[1]))
            elif m[0] == "unnest":
                self.need(j.prev, ("emb", m[1]))
        self.factorized_first = self._factorized_candidate()
        for i, j in enumerate(q.joins):
            for p in pred_paths(j.predicate):
                self.need_path(p)
        for it in walk_items(q.items):
            if isinstance(it, BoundExpr) and it.kind != "unnest":
                self.need_path(it.path)
        for idx, it in enumerate(q.items):
            if isinstance(it, BoundExpr) and it.kind == "unnest":
                (u,) = path_units(it.path)
                if self.exploded(u) is not None:
                    self.unnest_needs[it.path.binder].append((idx, u))
                else:
                    self.need(it.path.binder, u)
        rest = []
        for c in _conjuncts(q.where):
            if self._key_pushdown(c):
                continue
            if (
                isinstance(c, A.Member)
                and isinstance(c.left, A.Literal)
                and c.left.value is not None
                and isinstance(c.right, BoundPath)
                and c.right.scope == "entity"
                and self.exploded(path_units(c.right)[0]) is not None
            ):
                self.semis.append((c.right.binder, path_units(c.right)[0], c.left.value))
                continue
            rest.append(c)
        self.where = rest
        for c in rest:
            for p in pred_paths(c):
                self.need_path(p)

    def _key_pushdown(self, c) -> bool:
        """Record ``base.key = literal``; true when the conjunct is fully enforced by scans."""
        if not (isinstance(c, A.Compare) and c.op == "="):
            return False
        a, b = c.left, c.right
        if isinstance(b, BoundPath):
            a, b = b, a
        if not (isinstance(a, BoundPath) and isinstance(b, A.Literal)):
            return False
        if a.scope != "entity" or a.key_index is None or a.binder != self.q.base or b.value is None:
            return False
        self.eq.setdefault(a.binder, {})[a.key_index] = b.value
        srcs = self.d.sources(self.q.entity_of(a.binder))
        return all(c.parent is None for c, _ in srcs)

    def _factorized_candidate(self):
        q, d = self.q, self.d
        if not q.joins:
            return None
        j = q.joins[0]
        if j.relationship is None or j.prev != q.base or j.outer or self.modes[0][0] != "table":
            return None
        edges = self.modes[0][1]
        if edges.group != "edges":
            return None
        groups = {c.group: c for c in d.fragment_containers[edges.fragment]}
        try:
            bs = d.sources(q.entity_of(q.base))
            ns = d.sources(j.entity)
        except MappingError:
            return None
        if len(bs) != 1 or len(ns) != 1 or bs[0][1] is not None or ns[0][1] is not None:
            return None
        bc, nc = bs[0][0], ns[0][0]
        if {bc.id, nc.id} != {groups["left"].id, groups["right"].id}:
            return None
        return (edges, bc, nc)

    # ---- expressions ----------------------------------------------------------------------

    def unit_exprs(self, binder: str, unit: tuple) -> list[Expr]:
        return self.info[binder].cols[unit]

    def path_expr(self, p: BoundPath) -> Expr:
        if p.scope == "relationship":
            cols = self.rel_cols.get(p.binder, {})
            return self._compose(p, lambda u: cols[u][0])
        b = self.info[p.binder]
        if p.key_index is not None:
            return Col(b.key[p.key_index])
        return self._compose(p, lambda u: b.cols[u][0])

    def _compose(self, p: BoundPath, get) -> Expr:
        kind = "rattr" if p.scope == "relationship" else None

        def build(attr, names):
            if attr.is_composite:
                return Compose(tuple((c.name, build(c, names + (c.name,))) for c in attr.children))
            k = kind or ("mv" if attr.is_multi else "attr")
            return get((k, p.owner, names))

        return build(p.attr, p.names)

    def operand(self, o) -> Expr:
        if isinstance(o, BoundPath):
            return self.path_expr(o)
        if isinstance(o, A.Literal):
            return Const(o.value)
        if isinstance(o, A.ListLiteral):
            return Const([i.value for i in o.items])
        raise CompileError(f"bad operand {o!r}")

    def pred(self, p) -> Pred:
        if isinstance(p, A.Compare):
            return PCmp(p.op, self.operand(p.left), self.operand(p.right))
        if isinstance(p, A.Member):
            return PIn(self.operand(p.left), self.operand(p.right))
        if isinstance(p, A.Not):
            return PNot(self.pred(p.operand))
        if isinstance(p, A.BoolOp):
            return PBool(p.op, self.pred(p.left), self.pred(p.right))
        raise CompileError(f"bad predicate {p!r}")

    # ---- binder sources --------------------------------------------------------------------

    def scan(self, c: Container, alias: str, binder: str | None, extra: tuple = ()) -> Scan:
        eq = []
        if binder is not None and binder in self.eq:
            if c.kind == "entity":
                n = len(c.key_columns)
                for i, v in self.eq[binder].items():
                    if i < n:
                        eq.append((c.key_columns[i], v))
            elif c.kind == "multivalued":
                n = len(self.s.key_closure(c.mv[0]))
                for i, v in self.eq[binder].items():
                    if i < n:
                        eq.append((c.key_columns[i], v))
        return Scan(c.id, c.fragment, alias, tuple(c.column_names), tuple(eq) + tuple(extra))

    def fetch(self, plan: Op, b: str, classes: frozenset, home: Container | None, alias: str, units, key: list[str], force_left: bool = False, unnests=()) -> tuple[Op, dict]:
        """Resolve the units of binder ``b`` on top of ``plan``; ``home`` is the container the
        binder's rows come from (its columns are available under ``alias``)."""
        s, d = self.s, self.d
        cols: dict = {}
        by_host: dict[str, tuple[Container, list]] = {}
        for u in units:
            if u[0] == "emb":
                emb = next((c for c in d.weak_containers(u[1]) if c.parent is not None), None)
                if emb is None:
                    raise CompileError(f"{u[1]} is not embedded")
                if home is not None and home.id == emb.parent.id:
                    cols[u] = [Col(f"{alias}.{emb.array_column}")]
                    continue
                by_host.setdefault(emb.parent.id, (emb.parent, []))[1].append(u)
                continue
            if home is not None and home.hosts(u):
                cols[u] = [Col(f"{alias}.{c}") for c in home.units[u]]
                continue
            if u[0] in ("attr", "mv"):
                app = frozenset(x for x in classes if applies(s, u, x))
            else:
                app = classes
            if u[0] == "fk":
                many, _ = fold_roles(d, u[1])
                m_ent = s.relationship(u[1]).participants[many].entity
                app = frozenset(x for x in classes if x in s.descendants(m_ent))
            if not app:
                width = len(d.unit_hosts(u)[0].units[u]) if d.unit_hosts(u) and u[0] != "mv" else 1
                cols[u] = [Const(None)] * width
                continue
            mvc = self.exploded(u) if u[0] == "mv" else None
            if mvc is not None:
                m = f"{b}*{mvc.id}"
                n = len(s.key_closure(mvc.mv[0]))
                okeys = mvc.key_columns[:n]
                sub = GroupNest(
                    self.scan(mvc, m, b),
                    tuple((f"{m}.{k}", Col(f"{m}.{k}")) for k in okeys),
                    nests=((f"{m}.array", NestSpec((), element_expr(m, mvc))),),
                    order=tuple(f"{m}.{k}" for k in okeys) + (f"{m}.array",),
                )
                plan = Join("left", plan, sub, tuple(zip(key, [f"{m}.{k}" for k in okeys])))
                cols[u] = [Coalesce(Col(f"{m}.array"), [])]
                continue
            cands = [h for h in d.unit_hosts(u) if h.kind == "entity" and app <= h.inst_classes]
            if not cands:
                raise CompileError(f"no fragment stores {u} for {sorted(app)}")
            chosen = next((h for h in cands if h.id in by_host), None)
            if chosen is None:
                top = [h for h in cands if h.parent is None]
                if not top:
                    raise CompileError(f"{u} is only stored inside nested rows")
                chosen = min(top, key=lambda h: (h.width, d.containers.index(h)))
            by_host.setdefault(chosen.id, (chosen, []))[1].append(u)
        for hid, (h, us) in by_host.items():
            ha = f"{b}#{h.id}"
            kind = "inner" if classes <= h.inst_classes and not force_left else "left"
            plan = Join(kind, plan, self.scan(h, ha, b), tuple(zip(key, [f"{ha}.{k}" for k in h.key_columns])))
            for u in us:
                if u[0] == "emb":
                    emb = next(c for c in d.weak_containers(u[1]) if c.parent is not None)
                    cols[u] = [Col(f"{ha}.{emb.array_column}")]
                else:
                    cols[u] = [Col(f"{ha}.{c}") for c in h.units[u]]
        for idx, u in unnests:
            mvc = self.exploded(u)
            assert mvc is not None
            m = f"{b}*u{idx}"
            n = len(s.key_closure(mvc.mv[0]))
            plan = Join("inner", plan, self.scan(mvc, m, b), tuple(zip(key, [f"{m}.{k}" for k in mvc.key_columns[:n]])))
            self.unnest_exprs[idx] = element_expr(m, mvc)
        return plan, cols

    def canonical_names(self, b: str, unit: tuple) -> list[str]:
        if unit[0] == "fk":
            r = self.s.relationship(unit[1])
            _, one = fold_roles(self.d, unit[1])
            p = r.participants[one]
            return [f"{b}.{c}" for c in role_key_columns(self.s, p.role, p.entity)]
        if unit[0] == "emb":
            return [f"{b}.{self.s.entity(unit[1]).weak_owner}_{unit[1]}"]
        return [f"{b}.{attr_column(unit[1], unit[2])}"]

    def binder_plan(self, b: str, entity: str, force_left: bool = False, base: Op | None = None) -> Op:
        """Plan producing binder ``b``'s rows with every needed unit resolved."""
        s, d = self.s, self.d
        srcs = d.sources(entity)
        units = list(self.needs[b])
        unnests = self.unnest_needs[b]
        want = frozenset(c for c in s.descendants(entity) if is_concrete(s, c))
        if len(srcs) == 1:
            c, filt = srcs[0]
            if c.parent is not None:
                pa = f"{b}^"
                parent = c.parent
                plan: Op = self.scan(parent, pa, b)
                plan = Unnest(plan, Col(f"{pa}.{c.array_column}"), b, tuple(c.column_names))
                key = [f"{pa}.{k}" for k in parent.key_columns] + [f"{b}.{k}" for k in c.key_columns]
                plan, cols = self.fetch(plan, b, want, c, b, units, key, force_left, unnests)
                self.info[b] = _Binder(b, entity, key, cols)
                return plan
            only = self._mv_only(b, c, filt, want, units, unnests, force_left)
            if only is not None:
                return only
            plan = self.scan(c, b, b)
            if filt is not None:
                plan = Filter(plan, PTypeIn(f"{b}.type", tuple(sorted(filt))))
            key = [f"{b}.{k}" for k in c.key_columns]
            plan, cols = self.fetch(plan, b, filt or c.inst_classes, c, b, units, key, force_left, unnests)
            self.info[b] = _Binder(b, entity, key, cols)
            return plan
        # several containers: union of branches projected onto shared column names
        branch_units = []
        post_units = []
        for u in units:
            per = True
            for c, filt in srcs:
                bc = filt or c.inst_classes
                app = u[0] not in ("attr", "mv") or any(applies(s, u, x) for x in bc)
                if app and not (c.hosts(u) or (u[0] == "emb" and any(e.entity == u[1] for e in c.embedded))):
                    per = False
            (branch_units if per else post_units).append(u)
        branches = []
        key_names = [f"{b}.{k}" for k in srcs[0][0].key_columns]
        for c, filt in srcs:
            plan = self.scan(c, b, b)
            if filt is not None:
                plan = Filter(plan, PTypeIn(f"{b}.type", tuple(sorted(filt))))
            bkey = [f"{b}.{k}" for k in c.key_columns]
            plan, cols = self.fetch(plan, b, filt or c.inst_classes, c, b, branch_units, bkey)
            exprs = [(kn, Col(k)) for kn, k in zip(key_names, bkey)]
            for u in branch_units:
                exprs.extend(zip(self.canonical_names(b, u), cols[u]))
            branches.append(Project(plan, tuple(exprs)))
        plan = UnionAll(tuple(branches))
        cols = {u: [Col(n) for n in self.canonical_names(b, u)] for u in branch_units}
        plan, more = self.fetch(plan, b, want, None, b, post_units, key_names, force_left, unnests)
        cols.update(more)
        self.info[b] = _Binder(b, entity, key_names, cols)
        return plan

    def _mv_only(self, b: str, c: Container, filt, want: frozenset, units, unnests, force_left: bool) -> Op | None:
        """Join elimination: a binder read only through its key and one unnested exploded
        attribute is answered from the element rows alone, since every element row has an
        owner row and every owner instance belongs to ``want``."""
        if units or len(unnests) != 1 or filt is not None or force_left or c.inst_classes != want:
            return None
        idx, u = unnests[0]
        mvc = self.exploded(u)
        if mvc is None:
            return None
        s = self.s
        owners = frozenset(x for x in s.descendants(mvc.mv[0]) if is_concrete(s, x))
        if not owners <= want:
            return None
        m = f"{b}*u{idx}"
        n = len(s.key_closure(mvc.mv[0]))
        self.unnest_exprs[idx] = element_expr(m, mvc)
        self.info[b] = _Binder(b, self.q.entity_of(b), [f"{m}.{k}" for k in mvc.key_columns[:n]], {})
        return self.scan(mvc, m, b)

    # ---- joins --------------------------------------------------------------------------------

    def as_columns(self, plan: Op, exprs: list[Expr], prefix: str) -> tuple[Op, list[str]]:
        if all(isinstance(e, Col) for e in exprs):
            return plan, [e.name for e in exprs]  # type: ignore[union-attr]
        names = [f"{prefix}.{i}" for i in range(len(exprs))]
        raise CompileError(f"cannot join on computed values ({', '.join(names)})")

    def factorized_base(self) -> Op:
        q = self.q
        edges, bc, nc = self.factorized_first
        j = q.joins[0]
        b, n = q.base, j.binder
        ea = f"{n}~{edges.relationship}"
        eqs = tuple((bc.key_columns[i], v) for i, v in self.eq.get(b, {}).items() if i < len(bc.key_columns))
        plan: Op = FactorizedScan(
            edges.fragment, bc.id, nc.id, edges.id, b, n, ea,
            tuple(bc.column_names), tuple(nc.column_names), tuple(edges.column_names), eqs,
        )
        bkey = [f"{b}.{k}" for k in bc.key_columns]
        plan, cols = self.fetch(plan, b, bc.inst_classes, bc, b, list(self.needs[b]), bkey, False, self.unnest_needs[b])
        self.info[b] = _Binder(b, q.entity_of(b), bkey, cols)
        nkey = [f"{n}.{k}" for k in nc.key_columns]
        plan, cols = self.fetch(plan, n, nc.inst_classes, nc, n, list(self.needs[n]), nkey, False, self.unnest_needs[n])
        self.info[n] = _Binder(n, j.entity, nkey, cols)
        self.rel_cols[n] = {u: [Col(f"{ea}.{c[0]}")] for u, c in edges.units.items() if u[0] == "rattr"}
        return plan

    def join(self, plan: Op, i: int, j: BoundJoin) -> Op:
        s, d = self.s, self.d
        mode = self.modes[i]
        kind = "left" if j.outer else "inner"
        if mode[0] == "pred":
            bplan = self.binder_plan(j.binder, j.entity)
            keys, rest = [], []
            for c in _conjuncts(j.predicate):
                pair = self._equi(c, j.binder)
                if pair is not None:
                    keys.append(pair)
                else:
                    rest.append(c)
            residual = self.pred(_and_all(rest)) if rest else None
            return Join(kind, plan, bplan, tuple(keys), residual)
        r = s.relationship(j.relationship)
        prev = self.info[j.prev]
        if mode[0] == "fk":
            many, _ = fold_roles(d, r.name)
            if mode[2] == j.prev:
                bplan = self.binder_plan(j.binder, j.entity)
                plan, fkcols = self.as_columns(plan, prev.cols[("fk", r.name)], f"{j.prev}.fk")
                new = self.info[j.binder]
                self.rel_cols[j.binder] = {u: prev.cols[u] for u in prev.cols if u[0] == "rattr" and u[1] == r.name}
                return Join(kind, plan, bplan, tuple(zip(fkcols, new.key)))
            bplan = self.binder_plan(j.binder, j.entity)
            new = self.info[j.binder]
            bplan, fkcols = self.as_columns(bplan, new.cols[("fk", r.name)], f"{j.binder}.fk")
            self.rel_cols[j.binder] = {u: new.cols[u] for u in new.cols if u[0] == "rattr" and u[1] == r.name}
            return Join(kind, plan, bplan, tuple(zip(prev.key, fkcols)))
        if mode[0] == "table":
            t: Container = mode[1]
            ta = f"{j.binder}~{r.name}"
            pp, np_ = r.participants[j.prev_role], r.participants[j.role]
            pcols = [f"{ta}.{c}" for c in role_key_columns(s, pp.role, pp.entity)]
            ncols = [f"{ta}.{c}" for c in role_key_columns(s, np_.role, np_.entity)]
            bplan = self.binder_plan(j.binder, j.entity)
            new = self.info[j.binder]
            self.rel_cols[j.binder] = {u: [Col(f"{ta}.{c[0]}")] for u, c in t.units.items() if u[0] == "rattr"}
            tscan = Scan(t.id, t.fragment, ta, tuple(t.column_names))
            if j.outer:
                sub = Join("inner", tscan, bplan, tuple(zip(ncols, new.key)))
                return Join("left", plan, sub, tuple(zip(prev.key, pcols)))
            plan = Join("inner", plan, tscan, tuple(zip(prev.key, pcols)))
            return Join("inner", plan, bplan, tuple(zip(ncols, new.key)))
        if mode[0] == "prefix":
            bplan = self.binder_plan(j.binder, j.entity)
            new = self.info[j.binder]
            if mode[1]:
                n = len(prev.key)
                return Join(kind, plan, bplan, tuple(zip(prev.key, new.key[:n])))
            n = len(new.key)
            return Join(kind, plan, bplan, tuple(zip(prev.key[:n], new.key)))
        if mode[0] == "unnest":
            w = mode[1]
            emb = next(c for c in d.weak_containers(w) if c.parent is not None)
            arr = prev.cols[("emb", w)][0]
            plan = Unnest(plan, arr, j.binder, tuple(emb.column_names), outer=j.outer)
            key = list(prev.key) + [f"{j.binder}.{k}" for k in emb.key_columns]
            want = frozenset([w])
            plan, cols = self.fetch(plan, j.binder, want, emb, j.binder, list(self.needs[j.binder]), key, j.outer, self.unnest_needs[j.binder])
            self.info[j.binder] = _Binder(j.binder, j.entity, key, cols)
            self.notes.append(f"{j.binder} is read from nested {w} elements")
            return plan
        raise CompileError(f"unknown join mode {mode}")

    def _equi(self, c, new: str) -> tuple[str, str] | None:
        if not (isinstance(c, A.Compare) and c.op == "="):
            return None
        if not (isinstance(c.left, BoundPath) and isinstance(c.right, BoundPath)):
            return None
        if c.left.scope != "entity" or c.right.scope != "entity":
            return None
        a, b = c.left, c.right
        if a.binder == new and b.binder != new:
            a, b = b, a
        if b.binder != new or a.binder == new:
            return None
        ea, eb = self.path_expr(a), self.path_expr(b)
        if isinstance(ea, Col) and isinstance(eb, Col):
            return (ea.name, eb.name)
        return None

    # ---- output -------------------------------------------------------------------------------

    def nest_spec(self, n: BoundNested) -> NestSpec:
        presence: list[str] = []
        for it in n.items:
            if isinstance(it, BoundExpr):
                for k in self.info[it.path.binder].key:
                    if k not in presence:
                        presence.append(k)
        if n.scalar_elements:
            return NestSpec(tuple(presence), self.path_expr(n.items[0].path))
        fields = []
        for it in n.items:
            fields.append((it.label, self.nest_spec(it) if isinstance(it, BoundNested) else self.path_expr(it.path)))
        return NestSpec(tuple(presence), None, tuple(fields))

    def compile(self) -> PhysicalPlan:
        q = self.q
        self.analyze()
        if self.factorized_first is not None:
            plan = self.factorized_base()
            start = 1
        else:
            plan = self.binder_plan(q.base, q.entity_of(q.base))
            start = 0
        for i, j in enumerate(q.joins):
            if i < start:
                continue
            plan = self.join(plan, i, j)
        for k, (b, u, v) in enumerate(self.semis):
            mvc = self.exploded(u)
            assert mvc is not None
            m = f"{b}?{k}"
            n = len(self.s.key_closure(mvc.mv[0]))
            (ecol, _, _), = mvc.element_columns
            sc = self.scan(mvc, m, b, ((ecol, v),))
            plan = Join("semi", plan, sc, tuple(zip(self.info[b].key, [f"{m}.{c}" for c in mvc.key_columns[:n]])))
        if self.where:
            plan = Filter(plan, self.pred(_and_all(self.where)))
        for idx, it in enumerate(q.items):
            if isinstance(it, BoundExpr) and it.kind == "unnest" and idx not in self.unnest_exprs:
                out = f"#u{idx}"
                plan = Unnest(plan, self.path_expr(it.path), out)
                self.unnest_exprs[idx] = Col(out)
        names = tuple(f"#{i}" for i in range(len(q.items)))

        def item_expr(idx: int, it: BoundExpr) -> Expr:
            return self.unnest_exprs[idx] if it.kind == "unnest" else self.path_expr(it.path)

        if not q.grouped:
            plan = Project(plan, tuple((names[i], item_expr(i, it)) for i, it in enumerate(q.items)))
        else:
            keys, aggs, nests = [], [], []
            for i, it in enumerate(q.items):
                if isinstance(it, BoundNested):
                    nests.append((names[i], self.nest_spec(it)))
                elif it.kind == "agg":
                    aggs.append((names[i], it.fn, self.path_expr(it.path)))
                else:
                    keys.append((names[i], item_expr(i, it)))
            plan = GroupNest(plan, tuple(keys), tuple(aggs), tuple(nests), names)
        return PhysicalPlan(plan, names, tuple((it.label, it.shape) for it in q.items), self.d.mapping.name, tuple(self.notes))


def compile_query(schema: ErSchema, mapping: Mapping, query) -> PhysicalPlan:
    """Compile a bound query (or query text / AST) against a valid mapping."""
    from ..erql import bind, parse_statement as parse

    if isinstance(query, str):
        query = parse(query)
    bq = bind(schema, query)
    if not isinstance(bq, BoundQuery):
        raise CompileError("not a query")
    design = design_of(schema, mapping)
    try:
        return _QueryCompiler(schema, design, bq).compile()
    except MappingError as e:
        raise CompileError(str(e)) from None
