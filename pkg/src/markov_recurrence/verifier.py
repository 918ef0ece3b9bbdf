"""Balance-equation checks on truncated chains.

The stationary law of a chain restricted to ``0..N`` (upward overflow
folded into ``N``) is computed by a dense subtraction-free elimination.
Several jump-length weighted balance systems are then evaluated on that
law and reported as residual tables, alongside the plain global balance
``Q = Q P`` which the law satisfies by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .chain import TAIL_TOL, ChainSpec, prob, materialize
from .criterion import drift_rates
from .oracle import walk_tables

__all__ = [
    "TruncatedLaw",
    "BalanceReport",
    "EquivalenceReport",
    "truncated_matrix",
    "gth_stationary",
    "stationary_truncated",
    "associated_stationary_truncated",
    "check_global_balance",
    "check_balance_general",
    "check_balance_bd",
    "check_balance_twins",
    "check_balance_one_or_three",
    "check_summed_equivalence",
    "tightness_agreement",
]


@dataclass(frozen=True)
class TruncatedLaw:
    """Stationary probabilities on ``0..N``.

    ``tail_mass`` is the mass on states above ``N - span``, the region
    the truncation can disturb.
    """

    Q: np.ndarray
    N: int
    span: int
    tail_mass: float

    @property
    def tight(self) -> bool:
        return self.tail_mass < 1e-8


@dataclass
class BalanceReport:
    """Per-equation residuals ``lhs - rhs`` over a range of states."""

    name: str
    n: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    N: int
    tail_mass: float
    notes: list[str] = field(default_factory=list)

    @property
    def residual(self) -> np.ndarray:
        return self.lhs - self.rhs

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residual))) if self.n.size else 0.0

    def rows(self):
        return zip(self.n.tolist(), self.lhs.tolist(), self.rhs.tolist(), self.residual.tolist())


@dataclass
class EquivalenceReport:
    """Both sides of the summed systems and of the two reordering identities."""

    M: int
    summed_original: tuple[float, float]
    summed_associated: tuple[float, float]
    up_reorder: tuple[float, float]
    down_reorder: tuple[float, float]

    @staticmethod
    def _gap(pair):
        return abs(pair[0] - pair[1])

    @property
    def residual_original(self) -> float:
        return self._gap(self.summed_original)

    @property
    def residual_associated(self) -> float:
        return self._gap(self.summed_associated)

    @property
    def residual_up_reorder(self) -> float:
        return self._gap(self.up_reorder)

    @property
    def residual_down_reorder(self) -> float:
        return self._gap(self.down_reorder)


def truncated_matrix(spec: ChainSpec, N: int, tol: float = TAIL_TOL) -> np.ndarray:
    """Dense rows ``0..N``; mass aimed above ``N`` (and truncated tail mass) lands on ``N``."""
    P = np.zeros((N + 1, N + 1))
    for i in range(N + 1):
        m = materialize(spec, i, tol)
        for j, v in m.entries:
            P[i, min(j, N)] += float(v)
        P[i, N] += float(m.truncated)
    return P


def gth_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible stochastic matrix by GTH elimination."""
    A = np.array(P, dtype=float)
    n = A.shape[0]
    for k in range(n - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= 0:
            raise np.linalg.LinAlgError(f"state {k} cannot reach lower states; chain reducible")
        A[:k, k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ A[:k, k]
    return pi / pi.sum()


def _span(spec: ChainSpec, tol: float) -> tuple[int, int]:
    tb = walk_tables(spec, tol)
    return tb.down, tb.up


def stationary_truncated(spec: ChainSpec, N: int, tol: float = TAIL_TOL,
                         residual_tol: float = 1e-13) -> TruncatedLaw:
    """Stationary law of the chain reflected at ``N``.

    Raises
    ------
    RuntimeError
        If the computed vector violates ``Q = Q P`` by more than
        ``residual_tol``.
    """
    down, up = _span(spec, tol)
    span = max(down, up)
    if N < span + 2:
        raise ValueError(f"N must exceed the jump span {span} by at least 2")
    P = truncated_matrix(spec, N, tol)
    Q = gth_stationary(P)
    res = float(np.max(np.abs(Q @ P - Q)))
    if res > residual_tol:
        raise RuntimeError(f"stationary residual {res:.3g} exceeds {residual_tol:g}")
    return TruncatedLaw(Q, N, span, float(Q[N - span + 1:].sum()))


def _rates(spec: ChainSpec, upto: int, tol: float):
    em, ep = np.zeros(upto + 2), np.zeros(upto + 2)
    spans = (spec.max_down_jump(), spec.max_up_jump())
    for n in range(1, upto + 2):
        d = drift_rates(spec, n, tol, spans)
        em[n], ep[n] = float(d.e_minus), float(d.e_plus)
    return em, ep


def associated_stationary_truncated(spec: ChainSpec, N: int, span: int | None = None,
                                    tol: float = TAIL_TOL) -> TruncatedLaw:
    """Stationary law on ``0..N`` of the birth-death process with rates ``e_n^+`` up and ``e_n^-`` down.

    The rate out of 0 is 1, so ``P_0 = P_1 e_1^-``.  Detailed balance gives
    the law directly.
    """
    em, ep = _rates(spec, N, tol)
    up = np.concatenate(([1.0], ep[1:N]))
    with np.errstate(divide="ignore"):
        # a vanishing upward rate cuts the law off above that state
        logw = np.concatenate(([0.0], np.cumsum(np.log(up) - np.log(em[1: N + 1]))))
    w = np.exp(logw - logw.max())
    P = w / w.sum()
    if span is None:
        span = max(_span(spec, tol))
    return TruncatedLaw(P, N, span, float(P[N - span + 1:].sum()))


def _default_range(law: TruncatedLaw) -> range:
    return range(0, law.N - law.span + 1)


def _check_range(n_range: Iterable[int], law: TruncatedLaw) -> np.ndarray:
    n = np.asarray(list(n_range), dtype=int)
    if n.size and (n.min() < 0 or n.max() > law.N - law.span):
        raise ValueError(f"range must avoid the truncation boundary: n <= {law.N - law.span}")
    return n


def check_global_balance(spec: ChainSpec, law: TruncatedLaw, n_range: Iterable[int] | None = None,
                         tol: float = TAIL_TOL) -> BalanceReport:
    """Plain balance ``Q_n (1 - p_nn) = sum_{i != n} Q_i p_{i,n}``."""
    n = _check_range(_default_range(law) if n_range is None else n_range, law)
    P = truncated_matrix(spec, law.N, tol)
    Q = law.Q
    lhs = Q[n] * (1.0 - P[n, n])
    rhs = Q @ P[:, n] - Q[n] * P[n, n]
    return BalanceReport("global", n, lhs, rhs, law.N, law.tail_mass)


def check_balance_general(spec: ChainSpec, law: TruncatedLaw, n_range: Iterable[int] | None = None,
                          tol: float = TAIL_TOL) -> BalanceReport:
    """Jump-length weighted balance system.

    For ``n >= 1``::

        Q_n (e_n^- + e_n^+) = sum_{i != n} |i - n| p_{i,n} Q_i

    and at ``n = 0``: ``Q_0 = Q_1 e_1^-``.  The boundary equation is only
    meaningful when ``p_{0,1} = 1``; otherwise it is reported with a note.
    """
    n = _check_range(_default_range(law) if n_range is None else n_range, law)
    N, Q = law.N, law.Q
    em, ep = _rates(spec, int(n.max(initial=1)) + 1, tol)
    notes = []
    if prob(spec, 0, 1) != 1:
        notes.append("p_01 != 1: boundary equation shape not established")
    lhs, rhs = np.zeros(n.size), np.zeros(n.size)
    for k, s in enumerate(n.tolist()):
        if s == 0:
            lhs[k] = Q[0]
            rhs[k] = Q[1] * em[1]
            continue
        lhs[k] = Q[s] * (em[s] + ep[s])
        rhs[k] = sum(abs(i - s) * float(prob(spec, i, s)) * Q[i] for i in range(N + 1) if i != s)
    return BalanceReport("general", n, lhs, rhs, N, law.tail_mass, notes)


def _rates_params(spec: ChainSpec, lam0):
    try:
        lam, mu = float(spec.params["lambda"]), float(spec.params["mu"])
    except KeyError:
        raise ValueError("spec lacks 'lambda'/'mu' parameters") from None
    return lam, mu, lam0


def check_balance_bd(spec: ChainSpec, law: TruncatedLaw, n_range: Iterable[int] | None = None,
                     lam0: float | None = None) -> BalanceReport:
    """Birth-death system with constant rates: ``P_n(lam+mu) = mu P_{n+1} + lam P_{n-1}``.

    ``lam0`` defaults to ``lam + mu``, the total event rate at every other
    state, which makes the embedded law and the continuous-time law agree.
    """
    lam, mu, lam0 = _rates_params(spec, lam0)
    lam0 = lam + mu if lam0 is None else lam0
    n = _check_range(_default_range(law) if n_range is None else n_range, law)
    Q = law.Q
    lhs = np.where(n == 0, lam0 * Q[n], (lam + mu) * Q[n])
    rhs = np.array([mu * Q[1] if s == 0 else
                    mu * Q[s + 1] + (lam0 if s == 1 else lam) * Q[s - 1] for s in n.tolist()])
    return BalanceReport("bd", n, lhs, rhs, law.N, law.tail_mass)


def check_balance_twins(spec: ChainSpec, law: TruncatedLaw, n_range: Iterable[int] | None = None,
                        lam0: float | None = None) -> BalanceReport:
    """System for single deaths and twin births at constant rates.

    ``n >= 2``: ``Q_n(lam+mu) = mu Q_{n+1} + lam Q_{n-2}``;
    ``n = 1``: ``Q_1(lam+mu) = mu Q_2``; ``n = 0``: ``lam0 Q_0 = mu Q_1``.
    ``lam0`` defaults to ``lam + 2 mu`` (the idle-state rate ``lam0/2``
    then equals the event rate ``lam/2 + mu`` of every other state).
    """
    lam, mu, lam0 = _rates_params(spec, lam0)
    lam0 = lam + 2 * mu if lam0 is None else lam0
    n = _check_range(_default_range(law) if n_range is None else n_range, law)
    Q = law.Q
    lhs, rhs = np.zeros(n.size), np.zeros(n.size)
    for k, s in enumerate(n.tolist()):
        if s == 0:
            lhs[k], rhs[k] = lam0 * Q[0], mu * Q[1]
        elif s == 1:
            lhs[k], rhs[k] = (lam + mu) * Q[1], mu * Q[2]
        else:
            lhs[k], rhs[k] = (lam + mu) * Q[s], mu * Q[s + 1] + (lam0 if s == 2 else lam) * Q[s - 2]
    return BalanceReport("twins", n, lhs, rhs, law.N, law.tail_mass)


def check_balance_one_or_three(spec: ChainSpec, law: TruncatedLaw, n_range: Iterable[int] | None = None,
                               lam0: float | None = None) -> BalanceReport:
    """System for single deaths and births of one or three individuals.

    ``n >= 3``: ``Q_n(lam+mu) = mu Q_{n+1} + lam/4 Q_{n-1} + 3 lam/4 Q_{n-3}``;
    ``n = 2``: ``Q_2(lam+mu) = mu Q_3 + lam/4 Q_1``;
    ``n = 1``: ``Q_1(lam+mu) = mu Q_2 + lam0/4 Q_0``;
    ``n = 0``: ``lam0 Q_0 = mu Q_1``.  ``lam0`` defaults as for twins.
    """
    lam, mu, lam0 = _rates_params(spec, lam0)
    lam0 = lam + 2 * mu if lam0 is None else lam0
    n = _check_range(_default_range(law) if n_range is None else n_range, law)
    Q = law.Q
    lhs, rhs = np.zeros(n.size), np.zeros(n.size)
    for k, s in enumerate(n.tolist()):
        if s == 0:
            lhs[k], rhs[k] = lam0 * Q[0], mu * Q[1]
            continue
        lhs[k] = (lam + mu) * Q[s]
        if s == 1:
            rhs[k] = mu * Q[2] + lam0 / 4 * Q[0]
        elif s == 2:
            rhs[k] = mu * Q[3] + lam / 4 * Q[1]
        else:
            rhs[k] = (mu * Q[s + 1] + lam / 4 * Q[s - 1]
                          + 3 * (lam0 if s == 3 else lam) / 4 * Q[s - 3])
    return BalanceReport("one-or-three", n, lhs, rhs, law.N, law.tail_mass)


def check_summed_equivalence(spec: ChainSpec, Q: TruncatedLaw, P_assoc: TruncatedLaw,
                             M: int | None = None, tol: float = TAIL_TOL) -> EquivalenceReport:
    """Summed balance systems and the two reorderings of their double sums.

    With ``up(i, n) = (n - i) p_{i,n}`` for ``i < n`` and
    ``dn(i, n) = (i - n) p_{i,n}`` for ``i > n``, sums run over
    ``1 <= n <= M`` and over all states ``0..N`` of the truncation:

    * original: ``Q_0 + sum_n Q_n (e_n^- + e_n^+)`` against
      ``Q_1 e_1^- + sum_n sum_i (up(i, n) + dn(i, n)) Q_i``;
    * associated: the same left side for ``P`` against
      ``P_1 e_1^- + sum_n (P_{n-1} sum_i up(i, n) + P_{n+1} sum_i dn(i, n))``;
    * upward reordering: ``sum_n sum_i up(i, n) Q_i`` against
      ``sum_n Q_{n-1} sum_i up(i, n)``;
    * downward reordering: ``sum_n sum_i dn(i, n) Q_i`` against
      ``sum_n Q_{n+1} sum_i dn(i, n)``.
    """
    N = Q.N
    if M is None:
        M = N - Q.span
    if not (1 <= M <= N - Q.span) or P_assoc.N < M + 1:
        raise ValueError("M must satisfy 1 <= M <= N - span")
    Qv, Pv = Q.Q, P_assoc.Q
    em, ep = _rates(spec, M, tol)
    pm = np.array([[float(prob(spec, i, n)) for n in range(M + 1)] for i in range(N + 1)])
    idx = np.arange(N + 1)
    up_sum = np.zeros(M + 1)  # sum_i up(i, n)
    dn_sum = np.zeros(M + 1)
    up_q = np.zeros(M + 1)    # sum_i up(i, n) Q_i
    dn_q = np.zeros(M + 1)
    for n in range(1, M + 1):
        below = idx < n
        above = idx > n
        wu = (n - idx[below]) * pm[below, n]
        wd = (idx[above] - n) * pm[above, n]
        up_sum[n], dn_sum[n] = wu.sum(), wd.sum()
        up_q[n], dn_q[n] = wu @ Qv[below], wd @ Qv[above]
    ns = np.arange(1, M + 1)
    rate = em[1: M + 1] + ep[1: M + 1]
    orig = (Qv[0] + Qv[ns] @ rate, Qv[1] * em[1] + (up_q[1:] + dn_q[1:]).sum())
    assoc = (Pv[0] + Pv[ns] @ rate,
             Pv[1] * em[1] + Pv[ns - 1] @ up_sum[1:] + Pv[ns + 1] @ dn_sum[1:])
    up_re = (up_q[1:].sum(), Qv[ns - 1] @ up_sum[1:])
    dn_re = (dn_q[1:].sum(), Qv[ns + 1] @ dn_sum[1:])
    return EquivalenceReport(M, tuple(map(float, orig)), tuple(map(float, assoc)),
                             tuple(map(float, up_re)), tuple(map(float, dn_re)))


@dataclass(frozen=True)
class TightnessRecord:
    params: dict
    tail_original: float
    tail_associated: float
    threshold: float

    @property
    def agree(self) -> bool:
        return (self.tail_original < self.threshold) == (self.tail_associated < self.threshold)


def tightness_agreement(make_spec, params: Sequence[dict], N: int, reference=None,
                        threshold: float = 1e-8, tol: float = TAIL_TOL) -> list[TightnessRecord]:
    """For each parameter set, compare the tail masses of two truncated laws.

    ``reference(spec, N, span, **kw)`` returns the law compared with the
    stationary law of ``make_spec(**kw)``; by default it is the law of the
    birth-death process driven by the drift rates.
    """
    out = []
    for kw in params:
        spec = make_spec(**kw)
        q = stationary_truncated(spec, N, tol)
        if reference is None:
            p = associated_stationary_truncated(spec, N, q.span, tol)
        else:
            p = reference(spec, N, q.span, **kw)
        out.append(TightnessRecord(dict(kw), q.tail_mass, p.tail_mass, threshold))
    return out
