"""Byte-stable CSV emission: fixed column order, repr-precision floats."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class CsvTable:
    header: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, *cells):
        if len(cells) != len(self.header):
            raise ValueError(f"row width {len(cells)} != header width {len(self.header)}")
        self.rows.append(list(cells))

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]


def format_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(table: CsvTable, path) -> None:
    """Write the table; identical tables produce identical bytes."""
    path = Path(path)
    try:
        lines = [",".join(table.header)]
        lines.extend(",".join(format_cell(c) for c in row) for row in table.rows)
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path) -> CsvTable:
    lines = Path(path).read_text().splitlines()
    table = CsvTable(header=lines[0].split(","))
    for line in lines[1:]:
        table.rows.append(line.split(","))
    return table
