import json
from fractions import Fraction as F

import pytest

from markov_recurrence.chain import row
from markov_recurrence.documents import SpecFormatError, dump_spec, load_spec, parse_spec
from markov_recurrence.families import builtin, builtin_names

BANDED = {
    "head_rows": [[[1, 1, 1]]],
    "tail_stencil": [[-1, 7, 12], [1, 3, 12], [2, 2, 12]],
    "name": "banded",
}


def test_parse_triples():
    spec = parse_spec(BANDED)
    assert spec.name == "banded" and spec.period == 1
    assert row(spec, 3) == [(2, F(7, 12)), (4, F(1, 4)), (5, F(1, 6))]


def test_parse_pairs_and_strings():
    doc = {"head_rows": [[[1, "1"]]], "tail_stencil": [[-1, "1/2"], [1, 0.5]]}
    assert row(parse_spec(doc), 4) == [(3, F(1, 2)), (5, F(1, 2))]


def test_parse_periodic_stencil_and_tail():
    doc = {
        "head_rows": [[[1, 1, 1]]],
        "tail_stencil": [
            [[-1, 1, 2], [1, 1, 2]],
            [[-1, 2, 5], {"geometric": {"direction": "up", "start": 1, "c": "3/5", "r": "1/2"}}],
        ],
    }
    spec = parse_spec(doc)
    assert spec.period == 2 and spec.tail_stencil[1].tail(1).r == F(1, 2)


@pytest.mark.parametrize("name", builtin_names())
def test_round_trip_builtins(name):
    spec = builtin(name)
    back = parse_spec(json.loads(json.dumps(dump_spec(spec))))
    assert back == spec


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"tail_stencil": [[-1, 1, 2], [1, 1, 2]]}, "head_rows"),
        ({"head_rows": [[[1, 1, 1]]], "tail_stencil": [[-1, 1, 2], [1, "x", 2]]}, r"tail_stencil\[1\]"),
        ({"head_rows": [[[1, 1, 1]], [["a", 1, 2]]], "tail_stencil": [[-1, 1, 2], [1, 1, 2]]},
         r"head_rows\[1\]\[0\]"),
        ({"head_rows": [[[1, 1, 0]]], "tail_stencil": [[-1, 1, 2], [1, 1, 2]]}, r"head_rows\[0\]\[0\]"),
        ({"head_rows": [[[1, 1, 1]]], "tail_stencil": [[-1, 1, 2], [1, 1, 2]], "extra": 1}, "extra"),
        ({"head_rows": [[[1, 1, 1]]], "tail_stencil": [[1, 1, 1]]}, "negative and one positive"),
    ],
)
def test_errors_name_the_field(doc, where):
    with pytest.raises(SpecFormatError, match=where):
        parse_spec(doc)


def test_load_spec_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(BANDED))
    assert load_spec(p) == parse_spec(BANDED)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SpecFormatError, match="invalid JSON"):
        load_spec(bad)
    with pytest.raises(SpecFormatError, match="cannot read"):
        load_spec(tmp_path / "missing.json")
