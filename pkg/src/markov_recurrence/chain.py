"""Finite descriptions of infinite transition matrices.

A :class:`ChainSpec` stores explicit rows for states ``0 .. i0-1`` and a
cyclic list of stencils applied at every state ``i >= i0``.  The stencil
used at state ``i`` is ``tail_stencil[(i - i0) % period]`` and its entries
are offsets relative to ``i``.  Rows may carry geometric tails, which give
infinite support above (or below) a state.

All probabilities are kept as :class:`fractions.Fraction`; decimals are
read as exact decimal rationals, so the matrices of the examples in the
literature are represented without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "GeometricTail",
    "RowPattern",
    "ChainSpec",
    "MaterializedRow",
    "ValidationReport",
    "to_fraction",
    "row",
    "materialize",
    "prob",
    "validate",
    "reduce_lazy",
    "bd_spec",
    "DEFAULT_EPSILON",
    "ROW_SUM_TOL",
    "TAIL_TOL",
]

DEFAULT_EPSILON = 1e-6
ROW_SUM_TOL = 1e-12
TAIL_TOL = 1e-14


def to_fraction(x) -> Fraction:
    """Convert a probability-like value to an exact rational.

    Floats are interpreted through their shortest decimal representation,
    so ``0.05`` becomes ``1/20`` rather than the nearest binary fraction.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    # numpy scalars and the like
    return to_fraction(float(x))


@dataclass(frozen=True)
class GeometricTail:
    """Entries ``c * r**d`` at offsets ``direction * d`` for every ``d >= start``.

    A downward tail is clipped at state 0: all mass aimed at negative
    states lands on 0.
    """

    direction: int
    start: int
    c: Fraction
    r: Fraction

    def __post_init__(self):
        object.__setattr__(self, "c", to_fraction(self.c))
        object.__setattr__(self, "r", to_fraction(self.r))
        if self.direction not in (-1, 1):
            raise ValueError("tail direction must be +1 or -1")
        if self.start < 1:
            raise ValueError("tail must start at offset >= 1")
        if not (0 < self.r < 1):
            raise ValueError("tail ratio r must lie in (0, 1)")
        if self.c <= 0:
            raise ValueError("tail scale c must be positive")

    @property
    def mass(self) -> Fraction:
        return self.c * self.r**self.start / (1 - self.r)

    def weight(self, d: int) -> Fraction:
        """Probability carried at offset magnitude ``d`` (before clipping)."""
        if d < self.start:
            return Fraction(0)
        return self.c * self.r**d

    def mass_from(self, d: int) -> Fraction:
        """Total mass at offset magnitudes ``>= d``."""
        d = max(d, self.start)
        return self.c * self.r**d / (1 - self.r)

    def first_moment_from(self, d: int) -> Fraction:
        """``sum_{k >= d} k * c * r**k``."""
        d = max(d, self.start)
        r = self.r
        return self.c * r**d * (d * (1 - r) + r) / (1 - r) ** 2

    def cutoff(self, tol: float = TAIL_TOL) -> int:
        """Smallest ``D`` with mass beyond ``D`` at most ``tol``."""
        c, r = float(self.c), float(self.r)
        # c r^(D+1) / (1-r) <= tol
        need = math.log(tol * (1 - r) / c) / math.log(r) - 1
        d = max(self.start, math.ceil(need))
        while float(self.mass_from(d + 1)) > tol:
            d += 1
        return d

    def scaled(self, factor: Fraction) -> "GeometricTail":
        return GeometricTail(self.direction, self.start, self.c * factor, self.r)


@dataclass(frozen=True)
class RowPattern:
    """Explicit entries plus optional geometric tails.

    ``entries`` holds ``(key, probability)`` pairs where the key is an
    absolute target state for head rows and an offset for stencils.
    """

    entries: tuple[tuple[int, Fraction], ...]
    tails: tuple[GeometricTail, ...] = ()

    def __post_init__(self):
        cleaned = tuple(sorted((int(k), to_fraction(v)) for k, v in self.entries))
        keys = [k for k, _ in cleaned]
        if len(set(keys)) != len(keys):
            raise ValueError(f"duplicate targets in row: {keys}")
        for k, v in cleaned:
            if v < 0 or v > 1:
                raise ValueError(f"probability {v} at {k} outside [0, 1]")
        object.__setattr__(self, "entries", tuple((k, v) for k, v in cleaned if v != 0))
        if len({t.direction for t in self.tails}) != len(self.tails):
            raise ValueError("at most one tail per direction")
        object.__setattr__(self, "tails", tuple(self.tails))

    @classmethod
    def of(cls, entries: Iterable, tails: Iterable[GeometricTail] = ()) -> "RowPattern":
        return cls(tuple(entries), tuple(tails))

    def tail(self, direction: int) -> GeometricTail | None:
        for t in self.tails:
            if t.direction == direction:
                return t
        return None

    @property
    def mass(self) -> Fraction:
        return sum((v for _, v in self.entries), Fraction(0)) + sum(
            (t.mass for t in self.tails), Fraction(0)
        )


@dataclass(frozen=True)
class ChainSpec:
    """Head rows for states ``0 .. i0-1`` followed by a cyclic stencil."""

    head_rows: tuple[RowPattern, ...]
    tail_stencil: tuple[RowPattern, ...]
    params: Mapping[str, Fraction] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "head_rows", tuple(self.head_rows))
        object.__setattr__(self, "tail_stencil", tuple(self.tail_stencil))
        object.__setattr__(self, "params", dict(self.params))
        if not self.tail_stencil:
            raise ValueError("tail_stencil needs at least one stencil")
        for phase, st in enumerate(self.tail_stencil):
            below = any(d < 0 for d, _ in st.entries) or st.tail(-1) is not None
            above = any(d > 0 for d, _ in st.entries) or st.tail(1) is not None
            if not (below and above):
                raise ValueError(
                    f"stencil phase {phase} needs at least one negative and one positive offset"
                )
            for t in st.tails:
                clash = [d for d, _ in st.entries if d * t.direction >= t.start]
                if clash:
                    raise ValueError(f"stencil phase {phase}: explicit offsets {clash} overlap a tail")
            lowest = min((d for d, _ in st.entries), default=0)
            if self.i0 + phase + lowest < 0:
                raise ValueError(
                    f"stencil phase {phase} reaches state {self.i0 + phase + lowest} < 0; "
                    "i0 too small for the largest downward offset"
                )
        for i, hr in enumerate(self.head_rows):
            for j, _ in hr.entries:
                if j < 0:
                    raise ValueError(f"head row {i} targets negative state {j}")
            for t in hr.tails:
                clash = [j for j, _ in hr.entries if (j - i) * t.direction >= t.start]
                if clash:
                    raise ValueError(f"head row {i}: explicit targets {clash} overlap a tail")

    @property
    def i0(self) -> int:
        return len(self.head_rows)

    @property
    def period(self) -> int:
        return len(self.tail_stencil)

    def pattern(self, i: int) -> tuple[RowPattern, bool]:
        """Row pattern of state ``i`` and whether its keys are offsets."""
        if i < 0:
            raise ValueError(f"state {i} < 0")
        if i < self.i0:
            return self.head_rows[i], False
        return self.tail_stencil[(i - self.i0) % self.period], True

    def max_down_jump(self) -> int | None:
        """Largest explicit downward jump length, or ``None`` if unbounded."""
        best = 0
        for i in range(self.i0 + self.period):
            pat, rel = self.pattern(i)
            if pat.tail(-1) is not None:
                if rel:
                    return None
                best = max(best, i)
            for k, _ in pat.entries:
                best = max(best, i - (i + k if rel else k))
        return best

    def max_up_jump(self) -> int | None:
        best = 0
        for i in range(self.i0 + self.period):
            pat, rel = self.pattern(i)
            if pat.tail(1) is not None:
                return None
            for k, _ in pat.entries:
                best = max(best, (i + k if rel else k) - i)
        return best

    def has_tails(self) -> bool:
        return any(p.tails for p in self.head_rows + self.tail_stencil)


@dataclass(frozen=True)
class MaterializedRow:
    state: int
    entries: tuple[tuple[int, Fraction], ...]
    truncated: Fraction

    @property
    def total(self) -> Fraction:
        return sum((v for _, v in self.entries), Fraction(0))


def _absolute(spec: ChainSpec, i: int) -> tuple[dict[int, Fraction], RowPattern]:
    pat, rel = spec.pattern(i)
    out: dict[int, Fraction] = {}
    for k, v in pat.entries:
        j = i + k if rel else k
        if j < 0:
            raise ValueError(
                f"row {i}: offset {k} gives negative target {j} (spec malformed: i0 too small)"
            )
        out[j] = out.get(j, Fraction(0)) + v
    return out, pat


def materialize(spec: ChainSpec, i: int, tol: float = TAIL_TOL) -> MaterializedRow:
    """Row ``i`` with geometric tails expanded until the remaining mass is below ``tol``."""
    out, pat = _absolute(spec, i)
    truncated = Fraction(0)
    for t in pat.tails:
        dmax = t.cutoff(tol)
        if t.direction > 0:
            for d in range(t.start, dmax + 1):
                out[i + d] = out.get(i + d, Fraction(0)) + t.weight(d)
            truncated += t.mass_from(dmax + 1)
        else:
            for d in range(t.start, min(dmax, i - 1) + 1):
                out[i - d] = out.get(i - d, Fraction(0)) + t.weight(d)
            if i <= dmax:
                # everything aimed at or below state 0
                out[0] = out.get(0, Fraction(0)) + t.mass_from(i)
            else:
                truncated += t.mass_from(dmax + 1)
    entries = tuple(sorted((j, v) for j, v in out.items() if v != 0))
    return MaterializedRow(i, entries, truncated)


def row(spec: ChainSpec, i: int, tol: float = TAIL_TOL) -> list[tuple[int, Fraction]]:
    """Materialized row ``i`` as sorted ``(state, probability)`` pairs."""
    return list(materialize(spec, i, tol).entries)


def prob(spec: ChainSpec, i: int, j: int) -> Fraction:
    """Exact transition probability ``p_{i,j}``."""
    if j < 0:
        return Fraction(0)
    out, pat = _absolute(spec, i)
    value = out.get(j, Fraction(0))
    for t in pat.tails:
        if t.direction > 0 and j > i:
            value += t.weight(j - i)
        elif t.direction < 0 and j < i:
            value += t.mass_from(i) if j == 0 else t.weight(i - j)
    return value


def _support_below(spec: ChainSpec, i: int) -> tuple[set[int], tuple[int, int] | None]:
    """Explicit positive targets below ``i`` and the interval covered by a down tail."""
    out, pat = _absolute(spec, i)
    explicit = {j for j, v in out.items() if j < i and v > 0}
    t = pat.tail(-1)
    if t is None:
        return explicit, None
    return explicit, (0, max(0, i - t.start))


def _support_above(spec: ChainSpec, i: int) -> tuple[set[int], int | None]:
    out, pat = _absolute(spec, i)
    explicit = {j for j, v in out.items() if j > i and v > 0}
    t = pat.tail(1)
    return explicit, (None if t is None else i + t.start)


@dataclass
class ValidationReport:
    stochastic: bool
    worst_row_deviation: float
    connected_domain: bool
    witnesses: list[tuple[int, int]]
    j1: dict[int, int | None]
    j2: dict[int, float | None]
    lazy_epsilon: float
    lazy_ok: bool
    epsilon: float
    e0_plus: Fraction
    e0_plus_finite: bool
    checked_range: int
    negative_targets: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (
            self.stochastic
            and self.connected_domain
            and self.lazy_ok
            and self.e0_plus_finite
            and not self.negative_targets
        )

    def failures(self) -> list[str]:
        out = []
        if not self.stochastic:
            out.append(f"rows not stochastic (worst deviation {self.worst_row_deviation:.3g})")
        if not self.connected_domain:
            shown = ", ".join(f"({i}, {k})" for i, k in self.witnesses[:5])
            out.append(f"connected domain violated, zero entries at {shown}")
        if not self.lazy_ok:
            out.append(f"1 - p_ii = {self.lazy_epsilon:.3g} not above epsilon = {self.epsilon:g}")
        if not self.e0_plus_finite:
            out.append("sum_j j p_0j diverges")
        if self.negative_targets:
            out.append(f"rows {self.negative_targets} reach negative states")
        return out


def validate(spec: ChainSpec, epsilon: float = DEFAULT_EPSILON, depth: int | None = None) -> ValidationReport:
    """Check stochasticity, the connected-domain property and the lazy bound.

    Rows beyond the head repeat the stencil, so rows ``0 .. i0 + period``
    certify the whole matrix.  Findings are reported, never raised.
    """
    if depth is None:
        depth = spec.i0 + spec.period
    if depth < spec.i0 + spec.period - 1:
        raise ValueError(f"depth {depth} must cover the head rows and one stencil period")
    worst = 0.0
    lazy = math.inf
    witnesses: list[tuple[int, int]] = []
    negative: list[int] = []
    j1: dict[int, int | None] = {}
    j2: dict[int, float | None] = {}
    for i in range(depth + 1):
        try:
            out, pat = _absolute(spec, i)
        except ValueError:
            negative.append(i)
            continue
        worst = max(worst, abs(float(pat.mass - 1)))
        lazy = min(lazy, float(1 - out.get(i, Fraction(0))))
        if i == 0:
            continue
        below, interval = _support_below(spec, i)
        cover = set(below)
        if interval is not None:
            cover.update(range(interval[0], interval[1] + 1))
        if cover:
            lo = min(cover)
            j1[i] = lo
            witnesses.extend((i, k) for k in range(lo, i) if k not in cover)
        else:
            j1[i] = None
            witnesses.append((i, i - 1))
        above, tail_from = _support_above(spec, i)
        if tail_from is not None:
            gaps = [k for k in range(i + 1, tail_from) if k not in above]
            j2[i] = math.inf
            witnesses.extend((i, k) for k in gaps)
        elif above:
            hi = max(above)
            j2[i] = hi
            witnesses.extend((i, k) for k in range(i + 1, hi) if k not in above)
        else:
            j2[i] = None
            witnesses.append((i, i + 1))
    e0 = Fraction(0)
    if not negative:
        out0, pat0 = _absolute(spec, 0)
        e0 = sum((j * v for j, v in out0.items()), Fraction(0))
        t = pat0.tail(1)
        if t is not None:
            e0 += t.first_moment_from(t.start)
    return ValidationReport(
        stochastic=worst <= ROW_SUM_TOL,
        worst_row_deviation=worst,
        connected_domain=not witnesses and not negative,
        witnesses=sorted(witnesses),
        j1=j1,
        j2=j2,
        lazy_epsilon=lazy,
        lazy_ok=lazy > epsilon,
        epsilon=epsilon,
        e0_plus=e0,
        e0_plus_finite=True,
        checked_range=depth,
        negative_targets=negative,
    )


def _reduce_pattern(pat: RowPattern, diag_key: int, where: str) -> RowPattern:
    stay = dict(pat.entries).get(diag_key, Fraction(0))
    if stay == 0:
        return pat
    if stay == 1:
        raise ValueError(f"{where} is absorbing (p_ii = 1); chain not irreducible")
    scale = 1 / (1 - stay)
    entries = tuple((k, v * scale) for k, v in pat.entries if k != diag_key)
    return RowPattern(entries, tuple(t.scaled(scale) for t in pat.tails))


def reduce_lazy(spec: ChainSpec) -> ChainSpec:
    """Remove the diagonal and renormalize each row by ``1 / (1 - p_ii)``.

    The result is the jump chain: the law of the next distinct state.
    """
    heads = tuple(_reduce_pattern(p, i, f"state {i}") for i, p in enumerate(spec.head_rows))
    stencils = tuple(
        _reduce_pattern(p, 0, f"stencil phase {k}") for k, p in enumerate(spec.tail_stencil)
    )
    if heads == spec.head_rows and stencils == spec.tail_stencil:
        return spec
    return ChainSpec(heads, stencils, spec.params, spec.name)


def bd_spec(q: Sequence, p: Sequence | None = None, *, cycle_q: Sequence | None = None,
            name: str = "bd") -> ChainSpec:
    """Birth-death chain with ``p_{0,1} = 1``; ``q[i-1]`` is the down probability of state ``i``.

    States beyond ``len(q)`` repeat ``cycle_q`` (default: the last value of ``q``).
    """
    q = [to_fraction(x) for x in q]
    if p is not None:
        p = [to_fraction(x) for x in p]
        if any(abs(float(a + b - 1)) > ROW_SUM_TOL for a, b in zip(q, p)):
            raise ValueError("q_i + p_i must equal 1")
    if not q and cycle_q is None:
        raise ValueError("need at least one down probability")
    cyc = [to_fraction(x) for x in (cycle_q if cycle_q is not None else q[-1:])]
    heads = [RowPattern(((1, Fraction(1)),))]
    for i, qi in enumerate(q[: len(q) - (0 if cycle_q is not None else 1)], start=1):
        pi = p[i - 1] if p is not None else 1 - qi
        heads.append(RowPattern(((i - 1, qi), (i + 1, pi))))
    stencils = tuple(RowPattern(((-1, c), (1, 1 - c))) for c in cyc)
    return ChainSpec(tuple(heads), stencils, {}, name)
