"""Reading and writing chain-spec documents (JSON).

Layout::

    {
      "head_rows": [[[1, 1, 1]], [[0, 1, 3], [2, 2, 3]]],
      "tail_stencil": [[-1, 7, 12], [1, 3, 12], [2, 2, 12]],
      "params": {"eps": "1/20"}
    }

``head_rows[i]`` lists ``[state, numerator, denominator]`` triples for
row ``i``; ``tail_stencil`` lists ``[offset, numerator, denominator]``
triples, or a list of such lists for a periodic stencil.  A pair
``[key, value]`` with ``value`` a decimal or ``"a/b"`` string is also
accepted.  A row element ``{"geometric": {"direction": "up", "start": 1,
"c": "1/5", "r": "1/2"}}`` declares a geometric tail.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .chain import ChainSpec, GeometricTail, RowPattern, to_fraction

__all__ = ["SpecFormatError", "parse_spec", "load_spec", "dump_spec"]


class SpecFormatError(ValueError):
    """A chain-spec document is malformed; the message names the offending field."""


def _number(value, where: str) -> Fraction:
    try:
        return to_fraction(value)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise SpecFormatError(f"{where}: cannot read {value!r} as a probability ({exc})") from None


def _entry(item, where: str):
    if isinstance(item, dict):
        g = item.get("geometric")
        if not isinstance(g, dict):
            raise SpecFormatError(f"{where}: object entries must hold a 'geometric' tail")
        direction = {"up": 1, "down": -1, 1: 1, -1: -1}.get(g.get("direction", "up"))
        if direction is None:
            raise SpecFormatError(f"{where}: tail direction must be 'up' or 'down'")
        try:
            return GeometricTail(direction, int(g.get("start", 1)),
                                 _number(g["c"], f"{where}.c"), _number(g["r"], f"{where}.r"))
        except KeyError as exc:
            raise SpecFormatError(f"{where}: geometric tail missing {exc}") from None
        except ValueError as exc:
            raise SpecFormatError(f"{where}: {exc}") from None
    if not isinstance(item, (list, tuple)) or len(item) not in (2, 3):
        raise SpecFormatError(f"{where}: expected [key, numerator, denominator], got {item!r}")
    key = item[0]
    if not isinstance(key, int) or isinstance(key, bool):
        raise SpecFormatError(f"{where}: state/offset must be an integer, got {key!r}")
    if len(item) == 2:
        value = _number(item[1], where)
    else:
        num, den = _number(item[1], where), _number(item[2], where)
        if den == 0:
            raise SpecFormatError(f"{where}: zero denominator")
        value = num / den
    return key, value


def _pattern(items, where: str) -> RowPattern:
    if not isinstance(items, list):
        raise SpecFormatError(f"{where}: expected a list of entries")
    entries, tails = [], []
    for k, item in enumerate(items):
        e = _entry(item, f"{where}[{k}]")
        (tails if isinstance(e, GeometricTail) else entries).append(e)
    try:
        return RowPattern(tuple(entries), tuple(tails))
    except ValueError as exc:
        raise SpecFormatError(f"{where}: {exc}") from None


def _is_single_stencil(items) -> bool:
    return all(isinstance(x, dict) or (isinstance(x, list) and x and isinstance(x[0], int)) for x in items)


def parse_spec(doc: dict) -> ChainSpec:
    if not isinstance(doc, dict):
        raise SpecFormatError("document must be a JSON object")
    for key in ("head_rows", "tail_stencil"):
        if key not in doc:
            raise SpecFormatError(f"missing field '{key}'")
    unknown = set(doc) - {"head_rows", "tail_stencil", "params", "name"}
    if unknown:
        raise SpecFormatError(f"unknown fields: {', '.join(sorted(unknown))}")
    heads = tuple(_pattern(r, f"head_rows[{i}]") for i, r in enumerate(doc["head_rows"]))
    stencil = doc["tail_stencil"]
    if not isinstance(stencil, list) or not stencil:
        raise SpecFormatError("tail_stencil: expected a nonempty list")
    if _is_single_stencil(stencil):
        stencils = (_pattern(stencil, "tail_stencil"),)
    else:
        stencils = tuple(_pattern(s, f"tail_stencil[{k}]") for k, s in enumerate(stencil))
    params = {str(k): _number(v, f"params.{k}") for k, v in (doc.get("params") or {}).items()}
    try:
        return ChainSpec(heads, stencils, params, str(doc.get("name", "")))
    except ValueError as exc:
        raise SpecFormatError(str(exc)) from None


def load_spec(path: str | Path) -> ChainSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecFormatError(f"cannot read spec file {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}: invalid JSON ({exc})") from None
    return parse_spec(doc)


def _dump_pattern(pat: RowPattern) -> list:
    out: list = [[k, v.numerator, v.denominator] for k, v in pat.entries]
    for t in pat.tails:
        out.append({"geometric": {"direction": "up" if t.direction > 0 else "down",
                                  "start": t.start, "c": str(t.c), "r": str(t.r)}})
    return out


def dump_spec(spec: ChainSpec) -> dict:
    stencil = [_dump_pattern(s) for s in spec.tail_stencil]
    return {
        "name": spec.name,
        "head_rows": [_dump_pattern(r) for r in spec.head_rows],
        "tail_stencil": stencil[0] if len(stencil) == 1 else stencil,
        "params": {k: str(v) for k, v in spec.params.items()},
    }
