"""Synthetic benchmark schema, its six reference mappings, and a scale-driven data generator."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from ..mapping.generate import Options, build_mapping, multivalued_attributes
from ..mapping.model import Mapping
from ..model import ErSchema
from ..values import Dataset, RelInstance, normalize_dataset

# R is a five-class tree (R1, R2 under R; R3 under R1; R4 under R2), S owns the weak S1 and S2.
SYNTHETIC_DDL = """\
create entity R (id bigint key, a int, b text, mv1 int[], mv2 text[], mv3 int[]);
create entity R1 extends R (c1 int);
create entity R2 extends R (c2 text);
create entity R3 extends R1 (c3 int);
create entity R4 extends R2 (c4 text);
create entity S (sid bigint key, name text);
create entity S1 (k1 int key, v1 int, tag text) weak of S via s_s1;
create entity S2 (k2 int key, v2 int) weak of S via s_s2;
create relationship rs between R2 many, S1 many (w int);
create relationship rr between R1 many, R3 one;
"""

MAPPING_NAMES = ("M1", "M2", "M3", "M4", "M5", "M6")
WORDS = ("ash", "birch", "cedar", "elm", "fir", "oak", "pine", "yew")


@lru_cache(maxsize=None)
def build_synthetic_schema() -> ErSchema:
    from ..erql import schema_from_ddl

    return schema_from_ddl(SYNTHETIC_DDL)


def mapping_options(schema: ErSchema) -> dict[str, Options]:
    return {
        "M1": Options(),
        "M2": Options(arrays=frozenset(m for m in multivalued_attributes(schema) if m[0] == "R")),
        "M3": Options(strategies={"R": "single_table"}),
        "M4": Options(strategies={"R": "disjoint"}),
        "M5": Options(fold_weak=frozenset({"S1", "S2"})),
        "M6": Options(factorize=frozenset({"rs"})),
    }


def build_mappings(schema: ErSchema | None = None) -> dict[str, Mapping]:
    schema = schema or build_synthetic_schema()
    return {name: build_mapping(schema, opts, name) for name, opts in mapping_options(schema).items()}


@dataclass
class SyntheticSpec:
    scale: int  # total logical entries: entity instances plus relationship instances
    seed: int = 0
    fanouts: dict[str, float] = field(default_factory=lambda: {"s1": 3.0, "s2": 2.0, "rs": 2.0, "rr": 0.5})
    array_lengths: dict[str, float] = field(default_factory=lambda: {"mv1": 2.0, "mv2": 1.0, "mv3": 3.0})

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        if any(v < 0 for v in self.fanouts.values()) or any(v < 0 for v in self.array_lengths.values()):
            raise ValueError("fan-outs and array lengths must be non-negative")


R_CLASSES = ("R", "R1", "R2", "R3", "R4")


def allocation(spec: SyntheticSpec) -> dict[str, int]:
    """Instance counts per class and relationship; their sum is the scale up to rounding."""
    f = spec.fanouts
    per_r = 1 + 0.4 * f["rs"] + 0.4 * f["rr"]  # R2/R4 carry rs links, R1/R3 carry rr links
    per_s = 1 + f["s1"] + f["s2"]
    n_r = max(1, round(spec.scale * 5 / 8 / per_r))
    n_s = max(1, round(spec.scale * 3 / 8 / per_s))
    out = {c: n_r // 5 + (1 if i < n_r % 5 else 0) for i, c in enumerate(R_CLASSES)}
    out["S"] = n_s
    out["S1"] = round(n_s * f["s1"])
    out["S2"] = round(n_s * f["s2"])
    out["rs"] = min(round((out["R2"] + out["R4"]) * f["rs"]), (out["R2"] + out["R4"]) * out["S1"])
    out["rr"] = round((out["R1"] + out["R3"]) * f["rr"]) if out["R3"] else 0
    return out


def _array(rng: random.Random, mean: float, make) -> list:
    n = rng.randint(0, int(round(2 * mean)))
    return list(dict.fromkeys(make() for _ in range(n)))


def generate_dataset(spec: SyntheticSpec, schema: ErSchema | None = None) -> Dataset:
    """Deterministic dataset for ``spec``; class membership cycles through the R hierarchy."""
    schema = schema or build_synthetic_schema()
    rng = random.Random(spec.seed)
    n = allocation(spec)
    lens = spec.array_lengths
    ents: dict[str, list[dict]] = {c: [] for c in ("R", "R1", "R2", "R3", "R4", "S", "S1", "S2")}
    classes = [c for c in R_CLASSES for _ in range(n[c])]
    rng.shuffle(classes)
    for i, cls in enumerate(classes, 1):
        doc = {
            "id": i,
            "a": rng.randint(0, 9),
            "b": rng.choice(WORDS),
            "mv1": _array(rng, lens["mv1"], lambda: rng.randint(0, 20)),
            "mv2": _array(rng, lens["mv2"], lambda: rng.choice(WORDS)),
            "mv3": _array(rng, lens["mv3"], lambda: rng.randint(0, 20)),
        }
        if cls in ("R1", "R3"):
            doc["c1"] = rng.randint(0, 99)
        if cls in ("R2", "R4"):
            doc["c2"] = rng.choice(WORDS)
        if cls == "R3":
            doc["c3"] = rng.randint(0, 99)
        if cls == "R4":
            doc["c4"] = rng.choice(WORDS)
        ents[cls].append(doc)
    for sid in range(1, n["S"] + 1):
        ents["S"].append({"sid": sid, "name": rng.choice(WORDS)})
    for weak, key, extra in (("S1", "k1", True), ("S2", "k2", False)):
        counters: dict[int, int] = {}
        for _ in range(n[weak]):
            sid = rng.randint(1, n["S"])
            counters[sid] = counters.get(sid, 0) + 1
            doc = {"sid": sid, key: counters[sid]}
            if extra:
                doc.update(v1=rng.randint(0, 99), tag=rng.choice(WORDS))
            else:
                doc["v2"] = rng.randint(0, 99)
            ents[weak].append(doc)
    rels: dict[str, list[RelInstance]] = {}
    r2 = [d["id"] for c in ("R2", "R4") for d in ents[c]]
    s1 = [(d["sid"], d["k1"]) for d in ents["S1"]]
    seen: set = set()
    while len(seen) < n["rs"] and r2 and s1:
        pair = (rng.choice(r2), rng.choice(s1))
        if pair not in seen:
            seen.add(pair)
            rels.setdefault("rs", []).append(RelInstance(((pair[0],), pair[1]), {"w": rng.randint(1, 9)}))
    r1 = [d["id"] for c in ("R1", "R3") for d in ents[c]]
    r3 = [d["id"] for d in ents["R3"]]
    if r3:
        for rid in rng.sample(r1, min(n["rr"], len(r1))):
            rels.setdefault("rr", []).append(RelInstance(((rid,), (rng.choice(r3),))))
    return normalize_dataset(schema, Dataset({k: v for k, v in ents.items() if v}, rels))
