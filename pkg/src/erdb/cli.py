"""Command-line tool and REPL: schema, mappings, data, queries, migration, SQL, benchmarks."""

from __future__ import annotations

import argparse
import shlex
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .changes import AddAttribute, ChangeCardinality, DropAttribute, MakeMultivalued, SetHierarchyStrategy
from .errors import ErdbError

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2

HELP = """\
\\schema load <file>            load a DDL script (resets mapping and data)
\\schema show                   print the current schema
\\map generate <family> [opts]  normalized | nested [arrays] [fold=W,..] [fold_hierarchy]
                               | hierarchy <root> <strategy> | factorized <relationship>
\\map load <file> | save <file> read or write the mapping document
\\map check                     validate the current mapping
\\map show                      list fragments and containers
\\data load <file> | dump <file> JSON-lines dataset in or out
\\sql <dialect> | off           emit SQL (standard, postgres, duckdb) instead of executing
\\migrate <change> [--dry-run]  alter statement or make_multivalued/change_cardinality/...
\\plan <query>                  physical plan and metrics
\\bench [--scale N --seed S --runs K --report out.csv]
\\help, \\quit
anything else                  query or DML statement"""


@dataclass(frozen=True)
class SessionState:
    schema: object = None
    mapping: object = None
    store: object = None
    dialect: str | None = None  # emit mode when set
    catalog: Path | None = None


class UserError(ErdbError):
    pass


# ---- helpers ---------------------------------------------------------------------------------


def _need_schema(st: SessionState):
    if st.schema is None:
        raise UserError("no schema loaded (use \\schema load <file>)")
    return st.schema


def _need_mapping(st: SessionState):
    _need_schema(st)
    if st.mapping is None:
        raise UserError("no mapping (use \\map generate <family> or \\map load <file>)")
    return st.mapping


def _store(st: SessionState):
    from .engine import create_store

    _need_mapping(st)
    return st.store if st.store is not None else create_store(st.schema, st.mapping)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UserError(f"cannot read {path}: {e.strerror}") from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise UserError(f"cannot write {path}: {e.strerror}") from None


def _relayout(st: SessionState, mapping) -> SessionState:
    """Switch mappings, carrying any stored data over to the new layout."""
    from .engine import materialize, reconstruct_entities

    store = None
    if st.store is not None:
        store = materialize(st.schema, mapping, reconstruct_entities(st.store))
    return replace(st, mapping=mapping, store=store)


def generate_family(schema, args: list[str]):
    from .mapping import generate_factorized, generate_hierarchy_variant, generate_nested, generate_normalized

    if not args:
        raise UserError("\\map generate needs a family: normalized, nested, hierarchy, factorized")
    fam, rest = args[0], args[1:]
    if fam == "normalized" and not rest:
        return generate_normalized(schema)
    if fam == "nested":
        arrays = fold_h = False
        fold: list[str] = []
        for a in rest:
            if a == "arrays":
                arrays = True
            elif a == "fold_hierarchy":
                fold_h = True
            elif a.startswith("fold="):
                fold += [w for w in a[5:].split(",") if w]
            else:
                raise UserError(f"unknown nested option {a}")
        return generate_nested(schema, arrays, fold, fold_h)
    if fam == "hierarchy" and len(rest) == 2:
        return generate_hierarchy_variant(schema, rest[0], rest[1])
    if fam == "factorized" and len(rest) == 1:
        return generate_factorized(schema, rest[0])
    raise UserError(f"cannot generate {' '.join(args)}")


def parse_change(words: list[str]):
    """A schema change from alter-statement text or the functional form."""
    from .erql import AlterStatement, parse_ddl

    if not words:
        raise UserError("\\migrate needs a change")
    if words[0].lower() == "alter":
        stmts = parse_ddl(" ".join(words))
        if len(stmts) != 1 or not isinstance(stmts[0], AlterStatement):
            raise UserError("expected a single alter statement")
        return stmts[0].change
    op, rest = words[0], words[1:]
    if op == "make_multivalued" and len(rest) == 2:
        return MakeMultivalued(rest[0], rest[1])
    if op == "change_cardinality" and len(rest) == 3:
        return ChangeCardinality(rest[0], rest[1], rest[2])
    if op == "set_hierarchy_strategy" and len(rest) == 2:
        return SetHierarchyStrategy(rest[0], rest[1])
    if op == "drop_attribute" and len(rest) == 2:
        return DropAttribute(rest[0], rest[1])
    if op == "add_attribute" and len(rest) >= 2:
        stmts = parse_ddl(f"alter entity {rest[0]} add {' '.join(rest[1:])}")
        change = stmts[0].change
        assert isinstance(change, AddAttribute)
        return change
    raise UserError(f"unknown change {' '.join(words)}")


def bench_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="erdb bench", description="synthetic workload over mappings M1-M6")
    p.add_argument("--scale", type=int, default=50000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--report", default=None, help="CSV report path")
    p.add_argument("--queries", default=None, help="comma-separated workload query names")
    return p


def run_bench(argv: list[str]) -> str:
    from .bench import (
        SYNTHETIC_WORKLOAD,
        SyntheticSpec,
        build_mappings,
        build_synthetic_schema,
        directional_timings,
        generate_dataset,
        run_workload,
        structural_checks,
    )

    try:
        ns = bench_parser().parse_args(argv)
    except SystemExit:
        raise UserError("bad bench arguments (see erdb bench --help)") from None
    if ns.scale <= 0 or ns.runs <= 0:
        raise UserError("--scale and --runs must be positive")
    schema = build_synthetic_schema()
    mappings = build_mappings(schema)
    queries = list(SYNTHETIC_WORKLOAD)
    if ns.queries:
        wanted = ns.queries.split(",")
        unknown = [q for q in wanted if q not in dict(queries)]
        if unknown:
            raise UserError(f"unknown workload queries: {', '.join(unknown)}")
        queries = [q for q in queries if q[0] in wanted]
    ds = generate_dataset(SyntheticSpec(ns.scale, ns.seed), schema)
    report = run_workload(schema, queries, mappings, ds, ns.runs)
    lines = [report.render(), "", "structural checks:"]
    for name, ok, seen in structural_checks(schema, mappings):
        lines.append(f"  {'pass' if ok else 'FAIL'}  {name}  ({seen})")
    names = {q for q, _ in queries}
    if {"q1_mv", "q_key_lookup", "q_mv_group"} <= names:
        lines.append("timing orderings (informational):")
        for name, ok, seen in directional_timings(report):
            lines.append(f"  {'pass' if ok else 'miss'}  {name}  ({seen})")
    if ns.report:
        report.write_csv(ns.report)
        lines.append(f"report written to {ns.report}")
    return "\n".join(lines)


# ---- catalog ---------------------------------------------------------------------------------

CATALOG_FILES = ("schema.erdl", "mapping.json", "data.jsonl")


def load_catalog(path: Path) -> SessionState:
    from .engine import load_dataset, materialize
    from .erql import schema_from_ddl
    from .mapping import deserialize_mapping

    st = SessionState(catalog=path)
    sf, mf, df = (path / f for f in CATALOG_FILES)
    if not sf.exists():
        return st
    schema = schema_from_ddl(sf.read_text(encoding="utf-8"))
    st = replace(st, schema=schema)
    if mf.exists():
        st = replace(st, mapping=deserialize_mapping(mf.read_text(encoding="utf-8"), schema))
        if df.exists():
            st = replace(st, store=materialize(schema, st.mapping, load_dataset(schema, df)))
    return st


def save_catalog(st: SessionState) -> None:
    from .engine import format_dataset, reconstruct_entities
    from .erql import print_schema
    from .mapping import serialize_mapping

    if st.catalog is None:
        return
    st.catalog.mkdir(parents=True, exist_ok=True)
    sf, mf, df = (st.catalog / f for f in CATALOG_FILES)
    if st.schema is not None:
        sf.write_text(print_schema(st.schema), encoding="utf-8")
    for f, present in ((mf, st.mapping is not None), (df, st.store is not None)):
        if not present and f.exists():
            f.unlink()
    if st.mapping is not None:
        mf.write_text(serialize_mapping(st.mapping), encoding="utf-8")
    if st.store is not None:
        df.write_text(format_dataset(st.schema, reconstruct_entities(st.store)), encoding="utf-8")


# ---- dispatch --------------------------------------------------------------------------------


def dispatch(line: str, st: SessionState) -> tuple[str, SessionState]:
    """Run one command; the returned state is the input state unless the command succeeded."""
    text = line.strip()
    if not text or text.startswith("--"):
        return "", st
    if not text.startswith("\\"):
        return _statement(text, st)
    try:
        words = shlex.split(text[1:])
    except ValueError as e:
        raise UserError(f"cannot split command: {e}") from None
    cmd, args = words[0], words[1:]
    handler = COMMANDS.get(cmd)
    if handler is None:
        raise UserError(f"unknown command \\{cmd} (try \\help)")
    return handler(args, st, text)


def _cmd_help(args, st, text):
    return HELP, st


def _cmd_schema(args, st, text):
    from .erql import print_schema, schema_from_ddl

    if args[:1] == ["load"] and len(args) == 2:
        schema = schema_from_ddl(_read(args[1]))
        n = len(schema.entities)
        return f"schema loaded: {n} entities, {len(schema.relationships)} relationships", SessionState(
            schema=schema, dialect=st.dialect, catalog=st.catalog
        )
    if args == ["show"]:
        return print_schema(_need_schema(st)).rstrip(), st
    raise UserError("usage: \\schema load <file> | \\schema show")


def _cmd_map(args, st, text):
    from .mapping import check_cover, design_of, deserialize_mapping, serialize_mapping

    if not args:
        raise UserError("usage: \\map generate|load|save|check|show")
    sub = args[0]
    if sub == "generate":
        m = generate_family(_need_schema(st), args[1:])
        design_of(st.schema, m)
        new = _relayout(st, m)
        return f"mapping {m.name}: {len(m.fragments)} fragments", new
    if sub == "load" and len(args) == 2:
        m = deserialize_mapping(_read(args[1]), _need_schema(st))
        return f"mapping {m.name}: {len(m.fragments)} fragments", _relayout(st, m)
    if sub == "save" and len(args) == 2:
        _write(args[1], serialize_mapping(_need_mapping(st)))
        return f"mapping saved to {args[1]}", st
    if sub == "check" and len(args) == 1:
        rep = check_cover(_need_schema(st), None, _need_mapping(st))
        out = rep.render()
        if rep.warnings:
            out += "\n" + "\n".join(f"warning: {w}" for w in rep.warnings)
        return out, st
    if sub == "show" and len(args) == 1:
        d = design_of(_need_schema(st), _need_mapping(st))
        lines = [f"mapping {st.mapping.name}"]
        for c in d.containers:
            lines.append(f"  {c.id} ({c.kind}, {c.layout}): {', '.join(n for n, _ in c.columns)}")
            for e in c.embedded:
                lines.append(f"    {e.id} in {c.id}.{e.array_column}: {', '.join(n for n, _ in e.columns)}")
        return "\n".join(lines), st
    raise UserError(f"bad \\map arguments: {' '.join(args)}")


def _cmd_data(args, st, text):
    from .engine import dump_dataset, load_dataset, materialize, reconstruct_entities

    if len(args) != 2 or args[0] not in ("load", "dump"):
        raise UserError("usage: \\data load <file> | \\data dump <file>")
    schema, mapping = _need_schema(st), _need_mapping(st)
    if args[0] == "load":
        ds = load_dataset(schema, args[1])
        store = materialize(schema, mapping, ds)
        return f"loaded {ds.count()} records", replace(st, store=store)
    n = dump_dataset(schema, reconstruct_entities(_store(st)), args[1])
    return f"dumped {n} records to {args[1]}", st


def _cmd_sql(args, st, text):
    from .engine import PROFILES, emit_ddl

    if args == ["off"]:
        return "sql emit mode off", replace(st, dialect=None)
    if len(args) != 1 or args[0] not in PROFILES:
        raise UserError(f"usage: \\sql <{'|'.join(PROFILES)}> | \\sql off")
    ddl = emit_ddl(_need_schema(st), _need_mapping(st), args[0])
    return ddl.rstrip(), replace(st, dialect=args[0])


def _cmd_plan(args, st, text):
    from .compiler import compile_query, explain, plan_metrics

    q = text.split(None, 1)[1] if len(text.split(None, 1)) == 2 else ""
    if not q:
        raise UserError("usage: \\plan <query>")
    plan = compile_query(_need_schema(st), _need_mapping(st), q)
    return explain(plan) + "\n" + plan_metrics(plan).render(), st


def _cmd_migrate(args, st, text):
    from .engine import create_store
    from .evolution import apply_change, execute_migration, plan_migration

    dry = "--dry-run" in args
    words = [a for a in args if a != "--dry-run"]
    change = parse_change(words)
    schema, mapping = _need_schema(st), _need_mapping(st)
    new_schema = apply_change(schema, change)
    plan = plan_migration(schema, new_schema, mapping, change=change)
    if dry:
        return plan.render(), st
    store = st.store if st.store is not None else create_store(schema, mapping)
    new_store = execute_migration(store, plan)
    rows = sum(new_store.sizes().values())
    return plan.render() + f"\nmigrated: {rows} rows", replace(
        st, schema=new_schema, mapping=plan.new_mapping, store=new_store if st.store is not None else None
    )


def _cmd_bench(args, st, text):
    return run_bench(args), st


def _cmd_quit(args, st, text):
    raise _Quit()


class _Quit(Exception):
    pass


COMMANDS = {
    "help": _cmd_help,
    "schema": _cmd_schema,
    "map": _cmd_map,
    "data": _cmd_data,
    "sql": _cmd_sql,
    "plan": _cmd_plan,
    "migrate": _cmd_migrate,
    "bench": _cmd_bench,
    "quit": _cmd_quit,
    "q": _cmd_quit,
}


def _statement(text: str, st: SessionState) -> tuple[str, SessionState]:
    from .compiler import compile_crud, compile_query
    from .engine import emit_sql, execute
    from .erql import bind, parse_statement
    from .erql.binder import BoundQuery

    schema, mapping = _need_schema(st), _need_mapping(st)
    bound = bind(schema, parse_statement(text))
    if isinstance(bound, BoundQuery):
        plan = compile_query(schema, mapping, bound)
        if st.dialect is not None:
            return emit_sql(schema, mapping, plan, st.dialect).rstrip(), st
        return execute(_store(st), plan).render(), st
    if st.dialect is not None:
        raise UserError("DML is not emitted as SQL; use \\sql off to execute it")
    store = _store(st)
    n = store.apply_writes(compile_crud(schema, mapping, bound))  # atomic: undone on failure
    return f"ok ({n} rows written)", replace(st, store=store)


# ---- entry point ------------------------------------------------------------------------------


class Console:
    def __init__(self, color: bool, out=None, err=None):
        self.color = color
        self.out = out or sys.stdout
        self.err = err or sys.stderr

    def print(self, text: str) -> None:
        if text:
            print(text, file=self.out)

    def error(self, text: str) -> None:
        if self.color:
            text = f"\033[31m{text}\033[0m"
        print(text, file=self.err)


def run_lines(lines, st: SessionState, console: Console, stop_on_error: bool) -> tuple[int, SessionState]:
    code = EXIT_OK
    for line in lines:
        try:
            out, new = dispatch(line, st)
            if new is not st:
                save_catalog(new)
            st = new
            console.print(out)
        except _Quit:
            break
        except ErdbError as e:
            console.error(f"error: {e}")
            code = EXIT_USER
        except Exception as e:  # noqa: BLE001
            console.error(f"internal error: {type(e).__name__}: {e}")
            code = EXIT_INTERNAL
        if code != EXIT_OK and stop_on_error:
            return code, st
    return code, st


def main(argv: list[str] | None = None) -> int:
    p = argparse.ArgumentParser(prog="erdb", description="entity-relationship database layer")
    p.add_argument("--no-color", action="store_true", help="plain error messages")
    p.add_argument("--catalog", type=Path, default=None, help="directory persisting schema, mapping and data")
    p.add_argument("-e", "--execute", action="append", default=[], metavar="LINE", help="run a command line (repeatable)")
    p.add_argument("script", nargs="?", help="file of command lines, or 'bench' followed by bench options")
    p.add_argument("rest", nargs=argparse.REMAINDER)
    ns = p.parse_args(argv)
    color = not ns.no_color and sys.stderr.isatty()
    console = Console(color)
    if ns.script == "bench":
        try:
            console.print(run_bench(ns.rest))
            return EXIT_OK
        except ErdbError as e:
            console.error(f"error: {e}")
            return EXIT_USER
        except Exception as e:  # noqa: BLE001
            console.error(f"internal error: {type(e).__name__}: {e}")
            return EXIT_INTERNAL
    try:
        st = load_catalog(ns.catalog) if ns.catalog else SessionState()
    except ErdbError as e:
        console.error(f"error: cannot open catalog: {e}")
        return EXIT_USER
    if ns.execute:
        return run_lines(ns.execute, st, console, stop_on_error=True)[0]
    if ns.script:
        try:
            lines = Path(ns.script).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            console.error(f"error: cannot read {ns.script}: {e.strerror}")
            return EXIT_USER
        return run_lines(lines, st, console, stop_on_error=True)[0]
    if not sys.stdin.isatty():
        return run_lines(sys.stdin.read().splitlines(), st, console, stop_on_error=True)[0]
    return _repl(st, console)


def _repl(st: SessionState, console: Console) -> int:
    console.print("erdb: type \\help for commands, \\quit to leave")
    code = EXIT_OK
    while True:
        try:
            line = input("erdb> ")
        except (EOFError, KeyboardInterrupt):
            console.print("")
            return code
        if line.strip() in ("\\quit", "\\q"):
            return code
        code, st = run_lines([line], st, console, stop_on_error=False)


if __name__ == "__main__":
    sys.exit(main())
