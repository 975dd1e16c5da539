from __future__ import annotations

import json

import pytest

from erdb.datagen import generate
from erdb.engine import dump_dataset, format_dataset, load_dataset, parse_dataset
from erdb.errors import DataError
from erdb.values import datasets_equal


def test_dump_load_round_trip(uni, d0, tmp_path):
    path = tmp_path / "d0.jsonl"
    n = dump_dataset(uni, d0, path)
    assert n == d0.count()
    assert datasets_equal(uni, load_dataset(uni, path), d0)


def test_format_is_canonical(uni):
    ds = generate(uni, 3)
    text = format_dataset(uni, ds)
    assert format_dataset(uni, parse_dataset(uni, text)) == text
    lines = text.splitlines()
    assert all(json.loads(line) for line in lines)


def test_record_shapes(uni, d0):
    recs = [json.loads(line) for line in format_dataset(uni, d0).splitlines()]
    takes = [r for r in recs if r.get("relationship") == "takes"]
    assert takes == [{"relationship": "takes", "keys": [[1], ["CS1", 1, "Fall", 2024]], "attrs": {"grade": "A"}}]
    ann = next(r for r in recs if r.get("entity") == "Student")
    assert ann["doc"]["Ph"] == sorted(ann["doc"]["Ph"])


@pytest.mark.parametrize(
    "text,message",
    [
        ("{not json", "line 1: malformed JSON"),
        ("[1]", "line 1: expected an object"),
        ('{"entity": "Person"}', "line 1: entity record needs a doc object"),
        ('{"relationship": "takes", "keys": 3}', "line 1: relationship record needs keys"),
        ('{"other": 1}', "line 1: record has neither entity nor relationship"),
        ('\n{"entity": "Person", "doc": {"ID": "x"}}', ""),
        ('{"entity": "Nobody", "doc": {"ID": 1}}', ""),
    ],
)
def test_malformed_records(uni, text, message):
    with pytest.raises(DataError) as ei:
        parse_dataset(uni, text)
    assert message in str(ei.value)


def test_missing_file(uni, tmp_path):
    with pytest.raises(DataError, match="cannot read"):
        load_dataset(uni, tmp_path / "absent.jsonl")
