"""Query results: column header plus rows of possibly nested values."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .values import canonical_json, canonical_value, fingerprint_of, sort_key


@dataclass
class ResultTable:
    columns: list[tuple[str, str]]  # (label, shape)
    rows: list[tuple] = field(default_factory=list)

    @property
    def labels(self) -> list[str]:
        return [c for c, _ in self.columns]

    def normalized(self) -> "ResultTable":
        """Arrays sorted by element value, rows sorted by full-tuple order."""
        rows = [tuple(canonical_value(v) for v in r) for r in self.rows]
        rows.sort(key=lambda r: sort_key(list(r)))
        return ResultTable(list(self.columns), rows)

    def canonical_text(self) -> str:
        n = self.normalized()
        return canonical_json({"columns": [list(c) for c in n.columns], "rows": [list(r) for r in n.rows]})

    def fingerprint(self) -> str:
        return fingerprint_of(json.loads(self.canonical_text()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(self.labels)
        for r in self.rows:
            w.writerow([_csv_cell(v) for v in r])
        return buf.getvalue()

    def to_jsonl(self) -> str:
        return "".join(json.dumps(dict(zip(self.labels, r)), ensure_ascii=False) + "\n" for r in self.rows)

    def render(self, limit: int = 50) -> str:
        lines = [" | ".join(self.labels)]
        for r in self.rows[:limit]:
            lines.append(" | ".join(_csv_cell(v) for v in r))
        if len(self.rows) > limit:
            lines.append(f"... {len(self.rows) - limit} more rows")
        lines.append(f"({len(self.rows)} rows)")
        return "\n".join(lines)


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, dict)):
        return json.dumps(v, ensure_ascii=False, separators=(",", ":"))
    return str(v)
