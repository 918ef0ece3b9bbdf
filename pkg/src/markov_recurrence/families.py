"""Named chain families: the worked examples, the counterexamples, and helpers."""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

from .chain import ChainSpec, GeometricTail, RowPattern, bd_spec, to_fraction

__all__ = [
    "BUILTINS",
    "builtin",
    "builtin_names",
    "banded_example",
    "alternating_counterexample",
    "plain_birth_death",
    "twin_births",
    "one_or_three_births",
    "geometric_jumps",
    "lazy_bd",
    "two_cycle",
]

ONE = Fraction(1)
DEFAULT_COUNTER_EPS = Fraction(1, 20)


def _start() -> RowPattern:
    return RowPattern(((1, ONE),))


def banded_example(which: int = 1) -> ChainSpec:
    """Banded chains with one step down (7/12) and jumps of +1 and +2."""
    up1, up2 = (Fraction(3, 12), Fraction(2, 12)) if which == 1 else (Fraction(2, 12), Fraction(3, 12))
    st = RowPattern(((-1, Fraction(7, 12)), (1, up1), (2, up2)))
    return ChainSpec((_start(),), (st,), {}, f"sec3-ex{which}")


def alternating_counterexample(kind: str = "recurrent", eps=DEFAULT_COUNTER_EPS) -> ChainSpec:
    """Even/odd alternating chains that break the connected-domain property.

    Rows of even states jump by -2, -1, +1, +2; rows of odd states only by
    -2 and +2.  ``kind="recurrent"`` sends even states upward and odd states
    slowly downward; ``kind="transient"`` is the mirror image.
    """
    e = to_fraction(eps)
    if not (0 < e < Fraction(1, 3)):
        raise ValueError("eps must lie in (0, 1/3)")
    third = Fraction(1, 3)
    half = Fraction(1, 2)
    if kind == "recurrent":
        row1 = RowPattern(((0, e), (2, 1 - e)))
        even = RowPattern(((-2, third - e), (-1, e), (1, e), (2, 2 * third - e)))
        odd = RowPattern(((-2, half + e), (2, half - e)))
    elif kind == "transient":
        row1 = RowPattern(((0, 1 - e), (2, e)))
        even = RowPattern(((-2, 2 * third - e), (-1, e), (1, e), (2, third - e)))
        odd = RowPattern(((-2, half - e), (2, half + e)))
    else:
        raise ValueError(f"unknown counterexample kind {kind!r}")
    return ChainSpec((_start(), row1), (even, odd), {"eps": e}, f"sec4-counter-{kind}")


def _rates(lam, mu) -> tuple[Fraction, Fraction]:
    lam, mu = to_fraction(lam), to_fraction(mu)
    if lam <= 0 or mu <= 0:
        raise ValueError("rates must be positive")
    return lam, mu


def plain_birth_death(lam=1, mu=2) -> ChainSpec:
    """Plain birth-death chain with ``p = lam/(lam+mu)``, ``q = mu/(lam+mu)``."""
    lam, mu = _rates(lam, mu)
    spec = bd_spec([mu / (lam + mu)], name="ex1-A")
    return ChainSpec(spec.head_rows, spec.tail_stencil, {"lambda": lam, "mu": mu}, "ex1-A")


def twin_births(lam=1, mu=2) -> ChainSpec:
    """Twin births at rate ``lam/2`` and single deaths at rate ``mu``."""
    lam, mu = _rates(lam, mu)
    down = 2 * mu / (lam + 2 * mu)
    st = RowPattern(((-1, down), (2, lam / (lam + 2 * mu))))
    return ChainSpec((_start(),), (st,), {"lambda": lam, "mu": mu}, "ex1-B")


def one_or_three_births(lam=1, mu=2) -> ChainSpec:
    """Births of one or three individuals (each with probability 1/2) at rate ``lam/2``."""
    lam, mu = _rates(lam, mu)
    down = 2 * mu / (lam + 2 * mu)
    up = lam / (2 * lam + 4 * mu)
    st = RowPattern(((-1, down), (1, up), (3, up)))
    return ChainSpec((_start(),), (st,), {"lambda": lam, "mu": mu}, "ex2-C")


def geometric_jumps(down=Fraction(2, 5), down2=Fraction(1, 5), r=Fraction(1, 2), s=None) -> ChainSpec:
    """Connected-domain chain with an infinite geometric upward tail.

    Each state ``i >= 2`` moves down one step with probability ``down``,
    two steps with ``down2`` and up ``d >= 1`` steps with probability
    proportional to ``r**d``.  With ``s`` given, the two explicit down steps
    are replaced by a geometric downward tail of ratio ``s`` carrying the
    same total mass, clipped at state 0, so every row has full lower support.
    """
    down, down2, r = to_fraction(down), to_fraction(down2), to_fraction(r)
    dn = down + down2
    if not (0 < dn < 1):
        raise ValueError("down mass must lie in (0, 1)")
    up_c = (1 - dn) * (1 - r) / r
    up = GeometricTail(1, 1, up_c, r)
    if s is None:
        row1 = RowPattern(((0, dn),), (up,))
        st = RowPattern(((-2, down2), (-1, down)), (up,))
        heads = (_start(), row1)
        params = {"down": down, "down2": down2, "r": r}
    else:
        s = to_fraction(s)
        dn_tail = GeometricTail(-1, 1, dn * (1 - s) / s, s)
        st = RowPattern((), (dn_tail, up))
        heads = (_start(),)
        params = {"down": dn, "r": r, "s": s}
    return ChainSpec(heads, (st,), params, "ex3-geometric")


def lazy_bd(q: Sequence, c: Sequence, cycle_q=None, cycle_c=None) -> ChainSpec:
    """Birth-death chain slowed down by holding probabilities ``1 - c_i``.

    Row ``i`` is ``(c_i q_i, 1 - c_i, c_i p_i)`` at states ``i-1, i, i+1``.
    ``q`` and ``c`` give states ``1 .. len(q)``; later states repeat
    ``cycle_q``/``cycle_c`` (defaults: last entries).
    """
    q = [to_fraction(x) for x in q]
    c = [to_fraction(x) for x in c]
    if len(q) != len(c) or not q:
        raise ValueError("q and c must be nonempty and of equal length")
    cq = to_fraction(cycle_q) if cycle_q is not None else q[-1]
    cc = to_fraction(cycle_c) if cycle_c is not None else c[-1]
    heads = [_start()]
    for i, (qi, ci) in enumerate(zip(q, c), start=1):
        heads.append(RowPattern(((i - 1, ci * qi), (i, 1 - ci), (i + 1, ci * (1 - qi)))))
    st = RowPattern(((-1, cc * cq), (0, 1 - cc), (1, cc * (1 - cq))))
    return ChainSpec(tuple(heads), (st,), {}, "lazy-bd")


def two_cycle() -> ChainSpec:
    """States 0 and 1 alternate; states >= 2 are a transient walk never entered."""
    heads = (_start(), RowPattern(((0, ONE),)))
    st = RowPattern(((-1, Fraction(1, 2)), (1, Fraction(1, 2))))
    return ChainSpec(heads, (st,), {}, "two-cycle")


def _bd_from_params(q=None, p=None, **_) -> ChainSpec:
    if q is None and p is None:
        q = Fraction(1, 2)
    if q is None:
        q = [1 - to_fraction(x) for x in (p if isinstance(p, (list, tuple)) else [p])]
    qs = q if isinstance(q, (list, tuple)) else [q]
    ps = None
    if p is not None and q is not None:
        ps = p if isinstance(p, (list, tuple)) else [p] * len(qs)
    return bd_spec(qs, ps, name="bd")


BUILTINS: dict[str, Callable[..., ChainSpec]] = {
    "sec3-ex1": lambda **kw: banded_example(1),
    "sec3-ex2": lambda **kw: banded_example(2),
    "sec4-counter-recurrent": lambda eps=DEFAULT_COUNTER_EPS, **kw: alternating_counterexample("recurrent", eps),
    "sec4-counter-transient": lambda eps=DEFAULT_COUNTER_EPS, **kw: alternating_counterexample("transient", eps),
    "ex1-A": lambda lam=1, mu=2, **kw: plain_birth_death(lam, mu),
    "ex1-B": lambda lam=1, mu=2, **kw: twin_births(lam, mu),
    "ex2-C": lambda lam=1, mu=2, **kw: one_or_three_births(lam, mu),
    "ex3-geometric": lambda r=Fraction(1, 2), s=None, **kw: geometric_jumps(r=r, s=s),
    "bd": _bd_from_params,
    "two-cycle": lambda **kw: two_cycle(),
}


def builtin_names() -> list[str]:
    return list(BUILTINS)


def builtin(name: str, **params) -> ChainSpec:
    """Instantiate a builtin family; unknown parameters are ignored."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}") from None
    params = {k: v for k, v in params.items() if v is not None}
    return factory(**params)
