from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from markov_recurrence.chain import (
    ChainSpec,
    GeometricTail,
    RowPattern,
    bd_spec,
    materialize,
    prob,
    reduce_lazy,
    row,
    validate,
)
from markov_recurrence.families import geometric_jumps, lazy_bd, banded_example, alternating_counterexample

from conftest import fractions_in


def test_row_of_banded_example():
    assert row(banded_example(1), 3) == [(2, F(7, 12)), (4, F(3, 12)), (5, F(2, 12))]


def test_row_of_symmetric_walk():
    assert row(bd_spec([F(1, 2)]), 1) == [(0, F(1, 2)), (2, F(1, 2))]


def test_row_of_counterexample_even_state():
    e = F(1, 20)
    assert row(alternating_counterexample("recurrent", e), 2) == [
        (0, F(1, 3) - e), (1, e), (3, e), (4, F(2, 3) - e)]


def test_prob_off_support_is_zero():
    s = banded_example(1)
    assert prob(s, 3, 3) == 0 and prob(s, 3, 7) == 0 and prob(s, 0, 1) == 1


def test_validate_banded_example():
    rep = validate(banded_example(1))
    assert rep.ok and rep.connected_domain and rep.stochastic
    assert rep.e0_plus == 1


def test_validate_counterexample_names_witness():
    rep = validate(alternating_counterexample("recurrent", F(1, 20)))
    assert not rep.connected_domain and not rep.ok
    assert (3, 2) in rep.witnesses
    assert any("connected domain" in f for f in rep.failures())


@given(st.lists(fractions_in(0, 1), min_size=1, max_size=8))
def test_birth_death_rows_are_connected_and_never_lazy(qs):
    rep = validate(bd_spec(qs))
    assert rep.connected_domain and rep.lazy_epsilon == 1.0


def test_lazy_row_reduces_to_underlying_row():
    c1, q1 = F(2, 5), F(1, 3)
    lazy = lazy_bd([q1], [c1])
    assert row(lazy, 1) == [(0, c1 * q1), (1, 1 - c1), (2, c1 * (1 - q1))]
    assert row(reduce_lazy(lazy), 1) == [(0, q1), (2, 1 - q1)]


def test_reduce_lazy_divides_by_leaving_mass():
    head = (RowPattern(((1, F(1)),)), RowPattern(((0, F(3, 10)), (1, F(4, 10)), (2, F(3, 10)))))
    spec = ChainSpec(head, (RowPattern(((-1, F(1, 2)), (1, F(1, 2)))),))
    assert row(reduce_lazy(spec), 1) == [(0, F(1, 2)), (2, F(1, 2))]


def test_reduce_lazy_is_identity_without_diagonal():
    s = banded_example(2)
    assert reduce_lazy(s) is s


def test_reduce_lazy_rejects_absorbing_state():
    head = (RowPattern(((1, F(1)),)), RowPattern(((1, F(1)),)))
    spec = ChainSpec(head, (RowPattern(((-1, F(1, 2)), (1, F(1, 2)))),))
    with pytest.raises(ValueError, match="absorbing"):
        reduce_lazy(spec)


lazy_chains = st.integers(1, 6).flatmap(
    lambda n: st.tuples(st.lists(fractions_in(0, 1), min_size=n, max_size=n),
                        st.lists(fractions_in(F(1, 5), 1), min_size=n, max_size=n)))


@given(lazy_chains)
def test_reduce_lazy_idempotent(qc):
    q, c = qc
    once = reduce_lazy(lazy_bd(q, c))
    twice = reduce_lazy(once)
    for i in range(len(q) + 4):
        assert row(once, i) == row(twice, i)


@given(lazy_chains)
def test_reduce_lazy_keeps_off_diagonal_support_and_connectivity(qc):
    q, c = qc
    spec = lazy_bd(q, c)
    red = reduce_lazy(spec)
    for i in range(len(q) + 4):
        assert {j for j, _ in row(spec, i) if j != i} == {j for j, _ in row(red, i)}
    assert validate(spec).connected_domain == validate(red).connected_domain


@given(lazy_chains, st.integers(0, 30))
def test_rows_sum_to_one(qc, i):
    q, c = qc
    assert abs(float(sum(v for _, v in row(lazy_bd(q, c), i))) - 1) < 1e-12


@given(st.integers(0, 40), st.integers(0, 40))
def test_stencil_rows_are_shifts_of_each_other(a, b):
    spec = alternating_counterexample("transient", F(1, 10))
    i, j = spec.i0 + a, spec.i0 + b
    if (i - j) % spec.period:
        j += 1
    shift = j - i
    assert [(k + shift, v) for k, v in row(spec, i)] == row(spec, j)


def test_geometric_tail_mass_accounting():
    spec = geometric_jumps(s=F(1, 2))
    for i in (1, 2, 5, 40):
        m = materialize(spec, i, tol=1e-12)
        assert abs(float(m.total + m.truncated) - 1) < 1e-15
        assert float(m.truncated) <= 1e-12


def test_tail_weights():
    t = GeometricTail(1, 1, F(1), F(1, 2))
    assert t.mass == 1 and t.weight(3) == F(1, 8)
    assert t.mass_from(2) == F(1, 2)


def test_validators_reject_malformed_stencils():
    with pytest.raises(ValueError, match="negative and one positive"):
        ChainSpec((RowPattern(((1, F(1)),)),), (RowPattern(((1, F(1)),)),))
    with pytest.raises(ValueError, match="i0 too small"):
        ChainSpec((RowPattern(((1, F(1)),)),), (RowPattern(((-2, F(1, 2)), (1, F(1, 2)))),))
    with pytest.raises(ValueError, match="duplicate"):
        RowPattern(((1, F(1, 2)), (1, F(1, 2))))


def test_non_stochastic_row_reported():
    spec = ChainSpec((RowPattern(((1, F(1)),)),), (RowPattern(((-1, F(1, 2)), (1, F(1, 3)))),))
    rep = validate(spec)
    assert not rep.stochastic and not rep.ok
    assert rep.worst_row_deviation == pytest.approx(1 / 6)


def test_lazy_bound_reported():
    spec = lazy_bd([F(1, 2)], [F(1, 100)])
    assert not validate(spec, epsilon=0.05).lazy_ok
    assert validate(spec, epsilon=0.001).lazy_ok
