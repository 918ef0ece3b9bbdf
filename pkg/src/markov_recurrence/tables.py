"""Plain-text tables: comma separated, one header line, floats at full precision."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["format_table", "write_table", "trace_rows", "ruin_rows", "balance_rows", "mc_rows"]


def _cell(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def write_table(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.write_text(format_table(header, rows))
    return path


def trace_rows(classification):
    return (("n", "log_t", "log_partial_sum"),
            [(int(n), float(a), float(b)) for n, a, b in classification.trace])


def ruin_rows(curve):
    return (("L", "h", "one_minus_h"), [(int(L), float(h), float(g)) for L, h, g in curve.rows()])


def balance_rows(reports):
    rows = []
    for rep in reports:
        rows.extend((rep.name, int(n), float(a), float(b), float(r)) for n, a, b, r in rep.rows())
    return ("system", "n", "lhs", "rhs", "residual"), rows


def mc_rows(mc):
    return (("trials", "successes", "lo", "hi", "seed", "horizon"),
            [(mc.trials, mc.successes, float(mc.lo), float(mc.hi), mc.seed, mc.horizon)])
