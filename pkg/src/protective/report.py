"""Report containers and their CSV / JSON serialization.

Numbers are written with 17 significant digits so that files round-trip
exactly; output is deterministic for identical inputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, str)):
        return str(x)
    return format(float(x), ".17g")


def _json_number(x):
    if isinstance(x, (bool, int, str)) or x is None:
        return x
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return str(x)
    return float(fmt_number(x))


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]

    def to_csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(fmt_number(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "columns": list(self.columns),
            "rows": [[_json_number(v) for v in row] for row in self.rows],
        }


@dataclass(frozen=True)
class Verdict:
    claim_id: str
    passed: bool
    value: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.claim_id}: {fmt_number(self.value)}" + (f" ({self.detail})" if self.detail else "")

    def to_json(self) -> dict:
        return {"id": self.claim_id, "passed": bool(self.passed), "value": _json_number(self.value),
                "detail": self.detail}


@dataclass(frozen=True)
class ScenarioReport:
    name: str
    records: tuple[dict, ...] = ()
    tables: tuple[Table, ...] = ()
    verdicts: tuple[Verdict, ...] = ()
    parameters: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, claim_id: str) -> Verdict:
        for v in self.verdicts:
            if v.claim_id == claim_id:
                return v
        raise KeyError(claim_id)

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "parameters": {k: _json_number(v) if not isinstance(v, (list, tuple)) else [_json_number(x) for x in v]
                           for k, v in sorted(self.parameters.items())},
            "verdicts": [v.to_json() for v in self.verdicts],
            "tables": [t.to_json() for t in self.tables],
            "records": [{k: _json_number(v) for k, v in r.items()} for r in self.records],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"

    def records_table(self) -> Table:
        columns: list[str] = []
        for r in self.records:
            columns += [k for k in r if k not in columns]
        return Table("records", tuple(columns), tuple(tuple(r.get(c, "") for c in columns) for r in self.records))

    def to_csv(self) -> str:
        """A lone table as plain CSV; several are each preceded by a ``# name`` line.

        Reports without tables emit their records, one row per record.
        """
        tables = self.tables or (self.records_table(),)
        if len(tables) == 1:
            return tables[0].to_csv()
        return "\n".join(f"# {t.name}\n{t.to_csv()}" for t in tables)
