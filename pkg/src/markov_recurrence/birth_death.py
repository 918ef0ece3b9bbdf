"""Birth-and-death chains on ``{0, 1, 2, ...}`` with ``p_{0,1} = 1``.

A chain is given by its down probabilities ``q_i`` for ``i >= 1``: an
explicit head followed by a cycle repeated forever.  The classical
results used here are the recurrence test ``sum_n prod q_i/p_i = inf``,
the gambler's-ruin formula and the detailed-balance stationary law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .chain import ChainSpec, bd_spec, to_fraction
from .series import Classification, LogRatio, SeriesConfig, classify_series

__all__ = [
    "BirthDeathChain",
    "RuinCurve",
    "TruncatedStationary",
    "bd_classify",
    "bd_ruin",
    "bd_escape",
    "bd_ruin_curve",
    "bd_stationary_truncated",
]


@dataclass(frozen=True)
class BirthDeathChain:
    """Down probabilities ``q_1 .. q_m`` then ``cycle`` repeated.

    Values are exact rationals when built from rational input.
    ``approx_error`` bounds the error of the stored values when they come
    from an infinite sum that had to be truncated.
    """

    q_head: tuple
    q_cycle: tuple
    approx_error: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "q_head", tuple(to_fraction(x) for x in self.q_head))
        object.__setattr__(self, "q_cycle", tuple(to_fraction(x) for x in self.q_cycle))
        if not self.q_cycle:
            raise ValueError("q_cycle must be nonempty")
        for x in self.q_head + self.q_cycle:
            if not (0 < x < 1):
                raise ValueError(f"down probability {x} outside (0, 1)")

    @classmethod
    def constant(cls, q) -> "BirthDeathChain":
        return cls((), (q,))

    @property
    def period(self) -> int:
        return len(self.q_cycle)

    def q(self, i: int) -> Fraction:
        if i < 1:
            raise ValueError("q_i is defined for i >= 1")
        m = len(self.q_head)
        return self.q_head[i - 1] if i <= m else self.q_cycle[(i - m - 1) % self.period]

    def p(self, i: int) -> Fraction:
        return Fraction(1) if i == 0 else 1 - self.q(i)

    def q_array(self, n: int) -> np.ndarray:
        """``q_1 .. q_n`` as floats."""
        m = len(self.q_head)
        head = np.array([float(x) for x in self.q_head[:n]])
        if n <= m:
            return head
        cyc = np.array([float(x) for x in self.q_cycle])
        return np.concatenate([head, np.resize(cyc, n - m)])

    def log_ratio(self) -> LogRatio:
        """Sequence ``log(q_i / p_i)``, computed from exact values."""
        def lg(x: Fraction) -> float:
            return _log_fraction(x) - _log_fraction(1 - x)

        return LogRatio.eventually_periodic([lg(x) for x in self.q_head],
                                            [lg(x) for x in self.q_cycle])

    def to_spec(self, name: str = "bd") -> ChainSpec:
        """The transition matrix of this chain as a :class:`ChainSpec`."""
        return bd_spec(self.q_head, cycle_q=self.q_cycle, name=name)


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def bd_classify(chain: BirthDeathChain, config: SeriesConfig | None = None) -> Classification:
    """Recurrence test ``sum_n prod_{i<=n} q_i/p_i = inf``."""
    out = classify_series(chain.log_ratio(), config)
    out.diagnostics["period"] = chain.period
    return out


def _log_weights(chain: BirthDeathChain, n: int) -> np.ndarray:
    """``log pi_k`` for ``k = 0 .. n`` with ``pi_k = prod_{i<=k} q_i/p_i``."""
    q = chain.q_array(n)
    return np.concatenate(([0.0], np.cumsum(np.log(q) - np.log1p(-q))))


def bd_ruin(chain: BirthDeathChain, L: int) -> float:
    """Probability that the walk started at 1 hits 0 before any state ``>= L``.

    Uses ``h(L) = sum_{1<=n<L} pi_n / sum_{0<=n<L} pi_n``, evaluated in log
    space so that large or tiny products neither overflow nor underflow.
    """
    if L < 2:
        raise ValueError("level L must be at least 2")
    lw = _log_weights(chain, L - 1)
    return float(np.exp(logsumexp(lw[1:]) - logsumexp(lw)))


def bd_escape(chain: BirthDeathChain, L: int) -> float:
    """``1 - bd_ruin(chain, L)`` without cancellation."""
    if L < 2:
        raise ValueError("level L must be at least 2")
    lw = _log_weights(chain, L - 1)
    return float(np.exp(-logsumexp(lw)))


@dataclass(frozen=True)
class RuinCurve:
    """Ruin probabilities ``h(L)`` and escape probabilities ``g(L) = 1 - h(L)``."""

    levels: np.ndarray
    h: np.ndarray
    escape: np.ndarray

    def rows(self):
        return zip(self.levels.tolist(), self.h.tolist(), self.escape.tolist())

    def is_monotone(self, tol: float = 1e-12) -> bool:
        return bool(np.all(np.diff(self.h) >= -tol))


def bd_ruin_curve(chain: BirthDeathChain, levels: Sequence[int]) -> RuinCurve:
    levels = np.asarray(sorted(int(L) for L in levels))
    lw = _log_weights(chain, int(levels[-1]) - 1)
    h, g = [], []
    for L in levels:
        tot = logsumexp(lw[:L])
        h.append(np.exp(logsumexp(lw[1:L]) - tot))
        g.append(np.exp(-tot))
    return RuinCurve(levels, np.array(h), np.array(g))


@dataclass(frozen=True)
class TruncatedStationary:
    """Stationary weights on ``0..N`` and the mass missing beyond ``N``.

    ``tail_mass`` estimates the probability above ``N`` under the
    untruncated law; it is ``inf`` when the weights are not summable.
    """

    P: np.ndarray
    tail_mass: float

    @property
    def positive_recurrent(self) -> bool:
        return math.isfinite(self.tail_mass)


def bd_stationary_truncated(chain: BirthDeathChain, N: int) -> TruncatedStationary:
    """Detailed-balance law ``P_n ~ prod_{i<=n} p_{i-1}/q_i`` restricted to ``0..N``.

    The tail estimate sums the geometric continuation of the eventually
    periodic product beyond ``N``; a product over one cycle that is not
    below 1 makes the tail infinite (the chain is not positive recurrent),
    and the truncated distribution is still returned.
    """
    if N < 1:
        raise ValueError("N must be at least 1")
    m, k = len(chain.q_head), chain.period
    horizon = max(N, m + 1) + k
    q = chain.q_array(horizon)
    p_prev = np.concatenate(([1.0], 1.0 - q[:-1]))
    logw = np.concatenate(([0.0], np.cumsum(np.log(p_prev) - np.log(q))))
    top = logsumexp(logw[: N + 1])
    P = np.exp(logw[: N + 1] - top)

    # beyond the head every cycle multiplies the weights by the same factor
    cyc = np.array([float(x) for x in chain.q_cycle])
    log_cycle = float(np.log1p(-cyc).sum() - np.log(cyc).sum())
    if log_cycle >= 0:
        tail = math.inf
    else:
        exact = np.exp(logw[N + 1:] - top).sum()
        last = np.exp(logw[-k:] - top).sum()
        tail = float(exact + last * math.exp(log_cycle) / -math.expm1(log_cycle))
    return TruncatedStationary(P, tail)
