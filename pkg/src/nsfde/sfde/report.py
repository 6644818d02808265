"""Pass/fail rows and the report that collects them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class CheckRow:
    """One certified inequality ``lhs <= rhs`` (or a boolean check encoded as 0/1).

    ``margin`` is the slack granted on the right-hand side: a relative
    Monte Carlo allowance for sampled quantities, ``rhs - lhs`` for exact ones.
    """

    name: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name}, {_fmt(self.lhs)}, {_fmt(self.rhs)}, {_fmt(self.margin)}, {status}"


def _fmt(x) -> str:
    if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
        return str(x)
    return f"{x:.6g}"


def flag(name: str, ok: bool, note: str = "") -> CheckRow:
    """Boolean check: lhs 0/1 against rhs 1."""
    return CheckRow(name, 1.0 if ok else 0.0, 1.0, 0.0, bool(ok), note)


def exact(name: str, lhs: float, rhs: float, strict: bool = False, note: str = "") -> CheckRow:
    ok = lhs < rhs if strict else lhs <= rhs
    return CheckRow(name, float(lhs), float(rhs), float(rhs - lhs), bool(ok), note)


@dataclass
class DiagnosticsReport:
    rows: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)

    def add(self, row: CheckRow) -> CheckRow:
        self.rows.append(row)
        return row

    def extend(self, rows) -> None:
        self.rows.extend(rows)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def violated(self) -> list:
        return [r.name for r in self.rows if not r.passed]

    def row(self, name: str) -> CheckRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_text(self) -> str:
        lines = ["name, lhs, rhs, margin, status"]
        lines += [r.line() for r in self.rows]
        if self.constants:
            lines.append("")
            lines.append("measured constants")
            lines += [f"{k} = {_fmt(float(v))}" for k, v in self.constants.items()]
        return "\n".join(lines) + "\n"
