"""Line-delimited JSON load and dump of logical datasets.

Each line holds one entity document or one relationship instance:
    {"entity": "Student", "doc": {"ID": 2, ...}}
    {"relationship": "takes", "keys": [[2], ["CS-101", 1, "Fall", 2024]], "attrs": {"grade": "A"}}
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import DataError
from ..model import ErSchema
from ..values import Dataset, RelInstance, normalize_dataset


def parse_dataset(schema: ErSchema, text: str) -> Dataset:
    ents: dict[str, list[dict]] = {}
    rels: dict[str, list[RelInstance]] = {}
    for no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"line {no}: malformed JSON ({e.msg})") from None
        if not isinstance(rec, dict):
            raise DataError(f"line {no}: expected an object")
        if "entity" in rec:
            doc = rec.get("doc")
            if not isinstance(doc, dict):
                raise DataError(f"line {no}: entity record needs a doc object")
            ents.setdefault(rec["entity"], []).append(doc)
        elif "relationship" in rec:
            keys = rec.get("keys")
            if not isinstance(keys, list) or not all(isinstance(k, list) for k in keys):
                raise DataError(f"line {no}: relationship record needs keys as a list of lists")
            attrs = rec.get("attrs") or {}
            if not isinstance(attrs, dict):
                raise DataError(f"line {no}: attrs must be an object")
            rels.setdefault(rec["relationship"], []).append(RelInstance(tuple(tuple(k) for k in keys), attrs))
        else:
            raise DataError(f"line {no}: record has neither entity nor relationship")
    return normalize_dataset(schema, Dataset(ents, rels))


def format_dataset(schema: ErSchema, ds: Dataset) -> str:
    ds = normalize_dataset(schema, ds)
    lines = []
    for cls, docs in ds.entities.items():
        for d in docs:
            lines.append(json.dumps({"entity": cls, "doc": d}, ensure_ascii=False))
    for name, insts in ds.relationships.items():
        for i in insts:
            lines.append(json.dumps({"relationship": name, **i.to_json()}, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def load_dataset(schema: ErSchema, path: str | Path) -> Dataset:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}") from None
    return parse_dataset(schema, text)


def dump_dataset(schema: ErSchema, ds: Dataset, path: str | Path) -> int:
    """Write ``ds`` to ``path``; returns the number of records written."""
    text = format_dataset(schema, ds)
    Path(path).write_text(text, encoding="utf-8")
    return text.count("\n")
