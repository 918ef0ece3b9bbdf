from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def fractions_in(lo, hi, denom=97):
    """Rationals strictly inside ``(lo, hi)`` with a bounded denominator."""
    lo, hi = Fraction(lo), Fraction(hi)
    return st.integers(1, denom - 1).map(lambda k: lo + (hi - lo) * Fraction(k, denom))


@pytest.fixture
def tmp_out(tmp_path):
    d = tmp_path / "out"
    d.mkdir()
    return d


@st.composite
def banded_specs(draw, max_down=3, max_up=3):
    """Random connected-domain chains: contiguous jumps ``-D..-1`` and ``1..U``."""
    from markov_recurrence.chain import ChainSpec, RowPattern

    D = draw(st.integers(1, max_down))
    U = draw(st.integers(1, max_up))
    w = draw(st.lists(st.integers(1, 20), min_size=D + U, max_size=D + U))
    tot = sum(w)
    offs = list(range(-D, 0)) + list(range(1, U + 1))
    stencil = RowPattern(tuple((o, Fraction(x, tot)) for o, x in zip(offs, w)))
    heads = [RowPattern(((1, Fraction(1)),))]
    for i in range(1, D):
        # rows that would overshoot 0 lump the excess on 0
        down = [(i + o, Fraction(x, tot)) for o, x in zip(offs, w) if o < 0]
        lumped = {}
        for j, v in down:
            lumped[max(j, 0)] = lumped.get(max(j, 0), 0) + v
        up = [(i + o, Fraction(x, tot)) for o, x in zip(offs, w) if o > 0]
        heads.append(RowPattern(tuple(lumped.items()) + tuple(up)))
    return ChainSpec(tuple(heads), (stencil,), {}, "random-banded")
