"""Drift rates and the associated birth-and-death chain.

For a chain on ``{0, 1, ...}`` the downward rate at state ``i`` weighs
every jump that lands exactly on ``i - 1`` from a state ``k >= i`` by
the number of boundaries it crosses, ``k - i + 1``; the upward rate
does the same for jumps landing on ``i + 1`` from ``k <= i``.  The chain
is recurrent exactly when the birth-death chain with ``q_i : p_i`` in the
proportion of these two rates is, provided rows occupy contiguous blocks
and no state is too lazy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .birth_death import BirthDeathChain
from .chain import (
    DEFAULT_EPSILON,
    TAIL_TOL,
    ChainSpec,
    ValidationReport,
    prob,
    reduce_lazy,
    validate,
)
from .series import Classification, LogRatio, SeriesConfig, Verdict, classify_series

__all__ = [
    "DriftRates",
    "AssociatedChain",
    "associated_rates",
    "drift_rates",
    "associated_birth_death",
    "classify_chain",
    "criterion_log_ratio",
]

ZERO = Fraction(0)


@dataclass(frozen=True)
class DriftRates:
    """Down and up rates at state ``i``; ``trunc_error`` bounds the omitted tail of ``e_minus``."""

    i: int
    e_minus: Fraction
    e_plus: Fraction
    trunc_error: float = 0.0

    @property
    def ratio(self) -> float:
        return float(self.e_minus / self.e_plus)


def _down_tails(spec: ChainSpec):
    return [t for t in (s.tail(-1) for s in spec.tail_stencil) if t is not None]


def drift_rates(spec: ChainSpec, i: int, tol: float = TAIL_TOL,
                spans: tuple[int | None, int | None] | None = None) -> DriftRates:
    """Compute ``e_i^-`` and ``e_i^+``.

    ``e_plus = sum_{k=0}^{i} (i+1-k) p_{k,i+1}`` is a finite sum.
    ``e_minus = sum_{k>=i} (k-i+1) p_{k,i-1}`` runs over all rows that can
    reach ``i - 1``; it is finite when downward jumps are bounded and is
    otherwise summed until the geometric bound on the remainder drops
    below ``tol``.

    Parameters
    ----------
    spec : ChainSpec
        Transition law, normally already reduced (zero diagonal).
    i : int
        State, ``i >= 1``.
    tol : float
        Bound on the omitted part of an infinite ``e_minus`` sum.
    spans : tuple, optional
        Precomputed ``(spec.max_down_jump(), spec.max_up_jump())``.
    """
    if i < 1:
        raise ValueError("drift rates are defined for i >= 1")
    span, up = spans if spans is not None else (spec.max_down_jump(), spec.max_up_jump())
    lo = 0 if up is None else max(0, i + 1 - up)
    e_plus = sum(((i + 1 - k) * prob(spec, k, i + 1) for k in range(lo, i + 1)), ZERO)
    trunc = 0.0
    if span is not None:
        e_minus = sum(((k - i + 1) * prob(spec, k, i - 1) for k in range(i, i + span)), ZERO)
    else:
        tails = _down_tails(spec)
        c = max(float(t.c) for t in tails)
        r = max(float(t.r) for t in tails)
        # rows k >= i0 put at most c r^d on offset -d (d = k - i + 1), or
        # c r^d / (1 - r) when the target is the clipped state 0
        lump = 1.0 / (1.0 - r) if i == 1 else 1.0
        explicit = max((-d for st in spec.tail_stencil for d, _ in st.entries if d < 0), default=0)
        e_minus = ZERO
        k = i
        while True:
            e_minus += (k - i + 1) * prob(spec, k, i - 1)
            k += 1
            d = k - i + 1
            if k >= spec.i0 and d > explicit:
                bound = lump * c * r**d * (d * (1 - r) + r) / (1 - r) ** 2
                if bound <= tol:
                    trunc = bound
                    break
    return DriftRates(i, e_minus, e_plus, trunc)


def _stable_state(spec: ChainSpec) -> int | None:
    """First ``i`` from which the rates only depend on the stencil phase, or None."""
    up = spec.max_up_jump()
    if up is None:
        return None
    top = max((j for r in spec.head_rows for j, _ in r.entries), default=0)
    return max(spec.i0 + up, top + 1, 2)


@dataclass
class AssociatedChain:
    """Drift rates for ``1 .. m`` and one periodic cycle after them."""

    head: list[DriftRates]
    cycle: list[DriftRates]
    approx_error: float = 0.0

    def log_ratio(self, start: int = 1) -> LogRatio:
        """``log(e_i^- / e_i^+)`` for ``i >= start``, reindexed to begin at 1."""
        lg = [_log_ratio(d) for d in self.head]
        cyc = [_log_ratio(d) for d in self.cycle]
        m = len(lg)
        if start > m + 1:
            shift = (start - m - 1) % len(cyc)
            return LogRatio.eventually_periodic([], cyc[shift:] + cyc[:shift])
        return LogRatio.eventually_periodic(lg[start - 1:], cyc)


def _log_ratio(d: DriftRates) -> float:
    if d.e_minus == 0 or d.e_plus == 0:
        return math.inf if d.e_plus == 0 else -math.inf
    return (math.log(d.e_minus.numerator) - math.log(d.e_minus.denominator)
            - math.log(d.e_plus.numerator) + math.log(d.e_plus.denominator))


def associated_rates(spec: ChainSpec, tol: float = TAIL_TOL, max_states: int = 10_000) -> AssociatedChain:
    """Drift rates up to the point where they repeat with the stencil period.

    With an unbounded upward tail the rates only converge to a periodic
    pattern; the iteration stops once a whole period changes by less than
    ``tol`` relative to the previous one and the change is recorded.
    """
    k = spec.period
    stable = _stable_state(spec)
    spans = (spec.max_down_jump(), spec.max_up_jump())
    if stable is not None:
        # align the cycle start with the stencil phase at state `stable`
        rates = [drift_rates(spec, i, tol, spans) for i in range(1, stable + k)]
        return AssociatedChain(rates[: stable - 1], rates[stable - 1:],
                               max((d.trunc_error for d in rates), default=0.0))
    rates = [drift_rates(spec, i, tol, spans) for i in range(1, spec.i0 + 2 * k + 1)]
    while True:
        if len(rates) > max_states:
            raise RuntimeError("drift rates did not settle into a periodic pattern")
        prev, last = rates[-2 * k: -k], rates[-k:]
        change = max(abs(float(a.e_plus - b.e_plus)) + abs(float(a.e_minus - b.e_minus))
                     for a, b in zip(prev, last))
        if change <= tol:
            err = max(max(d.trunc_error for d in rates), change)
            return AssociatedChain(rates[:-k], rates[-k:], err)
        n = len(rates) + 1
        rates.extend(drift_rates(spec, i, tol, spans) for i in range(n, n + k))


def associated_birth_death(spec: ChainSpec, tol: float = TAIL_TOL) -> BirthDeathChain:
    """Birth-death chain with ``q_n = e_n^- / (e_n^- + e_n^+)``.

    The drift rates are computed on the lazy-reduced chain.  Rates are
    kept as exact rationals; ``meta["rates"]`` holds them.
    """
    reduced = reduce_lazy(spec)
    assoc = associated_rates(reduced, tol)

    def q(d: DriftRates) -> Fraction:
        tot = d.e_minus + d.e_plus
        if d.e_minus == 0 or d.e_plus == 0:
            raise ValueError(f"drift rate at state {d.i} vanishes; no associated birth-death chain")
        return d.e_minus / tot

    return BirthDeathChain(
        tuple(q(d) for d in assoc.head),
        tuple(q(d) for d in assoc.cycle),
        assoc.approx_error,
        {"rates": assoc.head + assoc.cycle},
    )


def criterion_log_ratio(spec: ChainSpec, tol: float = TAIL_TOL) -> LogRatio:
    return associated_rates(reduce_lazy(spec), tol).log_ratio()


def _raw_vs_reduced(spec: ChainSpec, reduced: ChainSpec, upto: int, tol: float) -> list[tuple[int, float, float]]:
    out = []
    for i in range(1, upto + 1):
        a, b = drift_rates(spec, i, tol), drift_rates(reduced, i, tol)
        if a.e_plus == 0 or b.e_plus == 0:
            continue
        ra, rb = a.ratio, b.ratio
        if abs(ra - rb) > 1e-9 * max(1.0, abs(rb)):
            out.append((i, ra, rb))
    return out


def classify_chain(
    spec: ChainSpec,
    config: SeriesConfig | None = None,
    *,
    epsilon: float = DEFAULT_EPSILON,
    tol: float = TAIL_TOL,
    enforce_hypotheses: bool = True,
) -> Classification:
    """Validate, reduce, compute drift rates and classify the criterion series.

    Parameters
    ----------
    spec : ChainSpec
        Chain to classify.
    config : SeriesConfig, optional
        Series-test thresholds.
    epsilon : float
        Lower bound required for ``1 - p_ii``.
    tol : float
        Truncation tolerance for infinite drift-rate sums.
    enforce_hypotheses : bool
        When True (default) a failed validation returns
        ``AssumptionViolated``.  When False the series is evaluated
        anyway; a leading stretch of states where an upward rate vanishes
        is skipped, since finitely many leading factors do not affect
        convergence.  The result is then marked ``forced``.

    Returns
    -------
    Classification
    """
    report: ValidationReport = validate(spec, epsilon)
    if not report.ok and enforce_hypotheses:
        return Classification(Verdict.ASSUMPTION_VIOLATED, "validation", _empty_trace(),
                              report, 0, {"failures": report.failures()})
    reduced = reduce_lazy(spec)
    assoc = associated_rates(reduced, tol)
    start = 1
    degenerate = [d.i for d in assoc.head if d.e_plus == 0 or d.e_minus == 0]
    if any(d.e_plus == 0 or d.e_minus == 0 for d in assoc.cycle):
        return Classification(Verdict.INCONCLUSIVE, "degenerate-rates", _empty_trace(), report, 0,
                              {"reason": "a drift rate vanishes periodically"})
    if degenerate:
        start = max(degenerate) + 1
    out = classify_series(assoc.log_ratio(start), config)
    out.validation = report
    out.diagnostics.update(
        {
            "series_start": start,
            "skipped_states": degenerate,
            "approx_error": assoc.approx_error,
            "rates": assoc.head + assoc.cycle,
            "forced": not report.ok,
        }
    )
    if reduced is not spec:
        out.diagnostics["raw_vs_reduced"] = _raw_vs_reduced(spec, reduced, len(assoc.head) + len(assoc.cycle), tol)
    return out


def _empty_trace() -> np.ndarray:
    return np.empty((0, 3))
