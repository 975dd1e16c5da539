"""In-memory physical store: one table per container, plus atomic application of write plans."""

from __future__ import annotations

import copy
from typing import Any, Iterator

from ..compiler.crud import WriteAction, WritePlan
from ..errors import DataError, ExecutionError
from ..mapping.design import Container, Design, design_of, role_key_columns
from ..mapping.model import Mapping
from ..model import ErSchema
from ..values import sort_key


def freeze(v: Any) -> Any:
    if isinstance(v, list):
        return tuple(freeze(x) for x in v)
    if isinstance(v, dict):
        return tuple(sorted((k, freeze(x)) for k, x in v.items()))
    return v


class Table:
    """Rows of one container keyed by primary key, with secondary indexes on key prefixes
    (entity and multi-valued containers) and on each participant's columns (relationships)."""

    def __init__(self, c: Container, schema: ErSchema):
        self.container = c
        self.key_columns = list(c.key_columns)
        self.rows: dict[tuple, dict] = {}
        self.indexes: dict[tuple, dict[tuple, set]] = {}
        if c.kind == "relationship":
            r = schema.relationship(c.relationship)
            for p in r.participants:
                self.indexes[tuple(role_key_columns(schema, p.role, p.entity))] = {}
        else:
            for n in range(1, len(self.key_columns)):
                self.indexes[tuple(self.key_columns[:n])] = {}

    def __len__(self) -> int:
        return len(self.rows)

    def pk(self, row: dict) -> tuple:
        return tuple(freeze(row[k]) for k in self.key_columns)

    def _index_add(self, pk: tuple, row: dict) -> None:
        for cols, idx in self.indexes.items():
            idx.setdefault(tuple(freeze(row[c]) for c in cols), set()).add(pk)

    def _index_remove(self, pk: tuple, row: dict) -> None:
        for cols, idx in self.indexes.items():
            k = tuple(freeze(row[c]) for c in cols)
            s = idx.get(k)
            if s is not None:
                s.discard(pk)
                if not s:
                    del idx[k]

    def put(self, row: dict) -> None:
        pk = self.pk(row)
        self.rows[pk] = row
        self._index_add(pk, row)

    def remove(self, pk: tuple) -> dict:
        row = self.rows.pop(pk)
        self._index_remove(pk, row)
        return row

    def get(self, key: tuple) -> dict | None:
        return self.rows.get(tuple(freeze(v) for v in key))

    def lookup(self, pairs) -> list[tuple]:
        """Primary keys of rows whose columns equal the given values."""
        pairs = list(pairs)
        if not pairs:
            return list(self.rows)
        cols = tuple(c for c, _ in pairs)
        vals = tuple(freeze(v) for _, v in pairs)
        if list(cols) == self.key_columns:
            return [vals] if vals in self.rows else []
        n = len(self.key_columns)
        if cols[:n] == tuple(self.key_columns):
            cand = [vals[:n]] if vals[:n] in self.rows else []
        else:
            cand = None
            for icols, idx in self.indexes.items():
                if cols[: len(icols)] == icols:
                    cand = list(idx.get(vals[: len(icols)], ()))
                    break
            if cand is None:
                cand = list(self.rows)
        out = []
        for pk in cand:
            row = self.rows[pk]
            if all(row.get(c) == v and row.get(c) is not None for c, v in pairs):
                out.append(pk)
        return out

    def scan(self) -> Iterator[dict]:
        return iter(self.rows.values())


class Store:
    """Physical contents of a mapping."""

    def __init__(self, schema: ErSchema, mapping: Mapping):
        self.schema = schema
        self.mapping = mapping
        self.design: Design = design_of(schema, mapping)
        self.tables: dict[str, Table] = {c.id: Table(c, schema) for c in self.design.containers}

    def table(self, cid: str) -> Table:
        try:
            return self.tables[cid]
        except KeyError:
            raise ExecutionError(f"unknown container {cid}") from None

    def adjacency(self, fragment: str) -> dict[str, dict[tuple, list[tuple]]]:
        """Adjacency lists of a factorized fragment: per participant role, member key to the
        keys of the edges it takes part in."""
        out: dict[str, dict[tuple, list[tuple]]] = {}
        s = self.schema
        for c in self.design.fragment_containers.get(fragment, []):
            if c.group != "edges":
                continue
            t = self.tables[c.id]
            for p in s.relationship(c.relationship).participants:
                idx = t.indexes[tuple(role_key_columns(s, p.role, p.entity))]
                out[p.role] = {k: sorted(v, key=sort_key) for k, v in idx.items()}
        return out

    def edge_count(self, fragment: str) -> int:
        for c in self.design.fragment_containers.get(fragment, []):
            if c.group == "edges":
                return len(self.tables[c.id])
        return 0

    def sizes(self) -> dict[str, int]:
        return {cid: len(t) for cid, t in self.tables.items()}

    def describe(self) -> str:
        lines = []
        for c in self.design.containers:
            t = self.tables[c.id]
            tag = f" [{c.group}]" if c.group else ""
            lines.append(f"{c.id}{tag}: {len(t)} rows, {c.width} columns")
        return "\n".join(lines)

    def copy(self) -> "Store":
        other = Store.__new__(Store)
        other.schema, other.mapping, other.design = self.schema, self.mapping, self.design
        other.tables = copy.deepcopy(self.tables)
        return other

    # ---- writes -----------------------------------------------------------------------------

    def apply_writes(self, plan: WritePlan | list[WriteAction]) -> int:
        """Apply a write plan atomically; returns the number of rows touched.

        On any error every change made by the plan is rolled back and the error is re-raised."""
        actions = plan.actions if isinstance(plan, WritePlan) else plan
        undo: list[tuple[str, tuple, dict | None]] = []
        touched = 0
        try:
            for a in actions:
                r = self._apply(a, undo)
                if r is None:
                    break
                touched += r
        except Exception:
            for cid, pk, old in reversed(undo):
                t = self.tables[cid]
                if pk in t.rows:
                    t.remove(pk)
                if old is not None:
                    t.put(old)
            raise
        return touched

    def _save(self, undo: list, t: Table, pk: tuple) -> None:
        old = t.rows.get(pk)
        undo.append((t.container.id, pk, old))  # rows are replaced, never mutated in place

    def _exists(self, a: WriteAction) -> bool:
        for cid, classes in a.targets:
            c = self.design.container(cid)
            if c.parent is not None:
                n = len(c.parent.key_columns)
                row = self.tables[c.parent.id].get(a.key[:n]) if a.key is not None else None
                if row is None:
                    continue
                for el in row.get(c.array_column) or []:
                    if all(el[k] == v for k, v in zip(c.key_columns, a.key[n:])) and _matches(el, a.match):
                        return True
                continue
            t = self.tables[cid]
            pairs = list(zip(t.key_columns, a.key)) if a.key is not None else []
            for pk in t.lookup(pairs + list(a.match)):
                row = t.rows[pk]
                if classes is None or row.get("type") in classes:
                    return True
        return False

    def _targets(self, t: Table, a: WriteAction) -> list[tuple]:
        if a.key is not None:
            return t.lookup(zip(t.key_columns, a.key))
        return t.lookup(a.where)

    def _apply(self, a: WriteAction, undo: list) -> int | None:
        act = a.action
        if act in ("assert_exists", "assert_absent"):
            hit = self._exists(a)
            if act == "assert_exists" and not hit:
                if a.guard:
                    return None
                raise DataError(a.message or "instance does not exist")
            if act == "assert_absent" and hit:
                raise DataError(a.message or "instance already exists")
            return 0
        t = self.table(a.container)
        if act == "insert":
            row = copy.deepcopy(a.row or {})
            pk = t.pk(row)
            if pk in t.rows:
                raise DataError(a.message or f"duplicate key in {a.container}")
            self._save(undo, t, pk)
            t.put(row)
            return 1
        if act == "nested_insert":
            pks = self._targets(t, a)
            if not pks:
                raise DataError(a.message or f"no parent row in {a.container}")
            pk = pks[0]
            row = t.rows[pk]
            emb = self._embedded(t, a.column)
            el = copy.deepcopy(a.row or {})
            arr = row.get(a.column) or []
            if any(all(x[k] == el[k] for k in emb.key_columns) for x in arr):
                raise DataError(a.message or f"duplicate nested key in {a.container}")
            self._save(undo, t, pk)
            new = dict(row)
            new[a.column] = sorted(arr + [el], key=lambda x: sort_key([x[k] for k in emb.key_columns]))
            t.remove(pk)
            t.put(new)
            return 1
        if act in ("update", "array_append", "array_remove"):
            pks = self._targets(t, a)
            n = 0
            for pk in pks:
                row = t.rows[pk]
                new = copy.deepcopy(row)
                target = new
                if a.element is not None:
                    col, local = a.element
                    emb = self._embedded(t, col)
                    target = next(
                        (x for x in new.get(col) or [] if all(x[k] == v for k, v in zip(emb.key_columns, local))),
                        None,
                    )
                    if target is None:
                        continue
                if act == "update":
                    if not _matches_loose(target, a.expect):
                        raise DataError(a.message or f"unexpected value in {a.container}")
                    for col, v in a.set:
                        target[col] = copy.deepcopy(v)
                else:
                    arr = list(target.get(a.column) or [])
                    present = any(sort_key(x) == sort_key(a.value) for x in arr)
                    if act == "array_append":
                        if present:
                            raise DataError(a.message or "element already present")
                        arr.append(copy.deepcopy(a.value))
                    else:
                        if not present:
                            raise DataError(a.message or "element not present")
                        arr = [x for x in arr if sort_key(x) != sort_key(a.value)]
                    arr.sort(key=sort_key)
                    target[a.column] = arr
                self._save(undo, t, pk)
                t.remove(pk)
                t.put(new)
                n += 1
            if n == 0 and not a.optional and act == "update":
                raise DataError(a.message or f"no matching row in {a.container}")
            return n
        if act in ("delete", "nested_delete"):
            pks = self._targets(t, a)
            n = 0
            for pk in pks:
                if a.element is not None:
                    col, local = a.element
                    emb = self._embedded(t, col)
                    row = t.rows[pk]
                    arr = row.get(col) or []
                    keep = [x for x in arr if not all(x[k] == v for k, v in zip(emb.key_columns, local))]
                    if len(keep) == len(arr):
                        continue
                    self._save(undo, t, pk)
                    new = dict(row)
                    new[col] = keep
                    t.remove(pk)
                    t.put(new)
                    n += 1
                    continue
                self._save(undo, t, pk)
                row = t.remove(pk)
                n += 1
                if t.container.group in ("left", "right"):
                    n += self._drop_edges(t.container, row, undo)
            if n == 0 and not a.optional:
                raise DataError(a.message or f"no matching row in {a.container}")
            return n
        raise ExecutionError(f"unknown write action {act}")

    def _embedded(self, t: Table, column: str) -> Container:
        for e in t.container.embedded:
            if e.array_column == column:
                return e
        raise ExecutionError(f"{t.container.id} has no nested column {column}")

    def _drop_edges(self, group: Container, row: dict, undo: list) -> int:
        """Remove adjacency entries of a deleted factorized group row."""
        s = self.schema
        edges = next(c for c in self.design.fragment_containers[group.fragment] if c.group == "edges")
        et = self.tables[edges.id]
        r = s.relationship(edges.relationship)
        n = 0
        for p in r.participants:
            if p.entity != group.entity:
                continue
            cols = role_key_columns(s, p.role, p.entity)
            for pk in et.lookup(zip(cols, [row[k] for k in group.key_columns])):
                self._save(undo, et, pk)
                et.remove(pk)
                n += 1
        return n


def _matches(row: dict, pairs) -> bool:
    return all(row.get(c) == v and row.get(c) is not None for c, v in pairs)


def _matches_loose(row: dict, pairs) -> bool:
    return all(row.get(c) == v for c, v in pairs)


def create_store(schema: ErSchema, mapping: Mapping) -> Store:
    """Empty store with one table per container of a valid mapping."""
    return Store(schema, mapping)


def apply_writes(store: Store, plan: WritePlan | list[WriteAction]) -> int:
    return store.apply_writes(plan)
