"""Divergence test for series of partial products.

Given ratios ``r_1, r_2, ...`` the series ``sum_n t_n`` with
``t_n = r_1 r_2 ... r_n`` is classified as divergent (the chain is
recurrent) or convergent (transient).  Everything runs on ``log r_i`` so
products of a million terms neither overflow nor underflow.

The decision is taken at checkpoints ``n = W, 2W, 4W, ...`` and at
``n_max``; at each checkpoint the trailing window ``(n - W, n]`` is
examined by the following rules, first match wins:

geometric
    every ratio in the window is at most ``1 - ratio_margin`` and the
    window maximum is not creeping upward; the tail is dominated by a
    geometric series, so the sum is finite.
bounded-below
    ``t_n`` stays above ``delta`` and decays slower than ``1/n``.
Raabe
    the log-log slope ``s`` of ``t_n`` over the window estimates
    ``t_n ~ n**s``; ``-s < 1 - margin`` means divergence and
    ``-s > 1 + margin`` convergence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

__all__ = [
    "Verdict",
    "SeriesConfig",
    "Classification",
    "LogRatio",
    "as_log_ratio",
    "classify_series",
]


class Verdict(str, enum.Enum):
    RECURRENT = "Recurrent"
    TRANSIENT = "Transient"
    INCONCLUSIVE = "Inconclusive"
    ASSUMPTION_VIOLATED = "AssumptionViolated"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SeriesConfig:
    """Tuning knobs of the divergence test.

    Attributes
    ----------
    n_max : int
        Largest number of terms examined.
    window : int
        Length of the trailing window each rule inspects.
    delta : float
        Lower bound used by the bounded-below rule.
    ratio_margin : float
        A window counts as geometric when every ratio is at most
        ``1 - ratio_margin``.
    raabe_margin : float
        Dead zone around the critical exponent 1.
    """

    n_max: int = 1_000_000
    window: int = 1000
    delta: float = 1e-9
    ratio_margin: float = 1e-6
    raabe_margin: float = 0.05

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be at least 2")
        if self.n_max < 2 * self.window:
            raise ValueError("n_max must be at least twice the window")
        if not (0 < self.delta < 1):
            raise ValueError("delta must lie in (0, 1)")
        if not (0 < self.ratio_margin < 1):
            raise ValueError("ratio_margin must lie in (0, 1)")
        if not (0 < self.raabe_margin < 1):
            raise ValueError("raabe_margin must lie in (0, 1)")


@dataclass
class Classification:
    """Outcome of a recurrence test.

    ``trace`` rows are ``(n, log t_n, log sum_{k<=n} t_k)`` sampled at
    ``n = 1, 2, 4, ...`` and at the last examined term.
    """

    verdict: Verdict
    test_fired: str
    trace: np.ndarray
    validation: Any = None
    n_examined: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __str__(self) -> str:
        return f"{self.verdict.value} ({self.test_fired})"


class LogRatio:
    """Lazily materialized sequence ``log r_i`` for ``i = 1, 2, ...``.

    ``block(lo, hi)`` returns the values for ``lo <= i < hi``.
    """

    def __init__(self, block: Callable[[int, int], np.ndarray], period: int = 1,
                 length: int | None = None):
        self._block = block
        self.period = max(1, int(period))
        self.length = length

    def block(self, lo: int, hi: int) -> np.ndarray:
        out = np.asarray(self._block(lo, hi), dtype=float)
        if out.shape != (hi - lo,):
            raise ValueError("ratio block has the wrong length")
        return out

    @classmethod
    def eventually_periodic(cls, head: Sequence[float], cycle: Sequence[float]) -> "LogRatio":
        """``head`` covers ``i = 1 .. len(head)``; ``cycle`` repeats afterwards."""
        head = np.asarray(head, dtype=float)
        cycle = np.asarray(cycle, dtype=float)
        if cycle.size == 0:
            raise ValueError("cycle must be nonempty")
        m, k = head.size, cycle.size

        def block(lo: int, hi: int) -> np.ndarray:
            idx = np.arange(lo, hi)
            out = np.empty(idx.size)
            in_head = idx <= m
            out[in_head] = head[idx[in_head] - 1]
            out[~in_head] = cycle[(idx[~in_head] - m - 1) % k]
            return out

        return cls(block, period=k)


def _from_callable(f: Callable) -> LogRatio:
    def block(lo: int, hi: int) -> np.ndarray:
        idx = np.arange(lo, hi)
        try:
            vals = np.asarray(f(idx), dtype=float)
            vals = np.broadcast_to(vals, idx.shape)
        except (TypeError, ValueError):
            vals = np.fromiter((float(f(int(i))) for i in idx), float, idx.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(vals)

    return LogRatio(block)


def as_log_ratio(ratio) -> LogRatio:
    """Coerce a ratio description into a :class:`LogRatio`.

    Accepts a :class:`LogRatio`, a callable ``i -> r_i`` (vectorized or
    scalar), or a finite sequence ``(r_1, r_2, ...)``.
    """
    if isinstance(ratio, LogRatio):
        return ratio
    if hasattr(ratio, "log_ratio") and callable(ratio.log_ratio):
        return ratio.log_ratio()
    if callable(ratio):
        return _from_callable(ratio)
    arr = np.asarray(ratio, dtype=float)
    if arr.ndim != 1:
        raise ValueError("ratio sequence must be one-dimensional")
    with np.errstate(divide="ignore"):
        logs = np.log(arr)
    return LogRatio(lambda lo, hi: logs[lo - 1: hi - 1], length=arr.size)


def _checkpoints(n_max: int, window: int) -> list[int]:
    pts = []
    n = 2 * window
    while n < n_max:
        pts.append(n)
        n *= 2
    pts.append(n_max)
    return pts


def _trace(log_t: np.ndarray, log_s: np.ndarray) -> np.ndarray:
    n = log_t.size
    if n == 0:
        return np.empty((0, 3))
    idx = [1]
    while idx[-1] * 2 <= n:
        idx.append(idx[-1] * 2)
    if idx[-1] != n:
        idx.append(n)
    idx = np.asarray(idx)
    return np.column_stack([idx.astype(float), log_t[idx - 1], log_s[idx - 1]])


def classify_series(ratio, config: SeriesConfig | None = None) -> Classification:
    """Decide whether ``sum_n prod_{i<=n} r_i`` diverges.

    Parameters
    ----------
    ratio
        Positive ratios ``r_i``, ``i >= 1``; see :func:`as_log_ratio`.
    config : SeriesConfig, optional
        Decision thresholds; defaults are used when omitted.

    Returns
    -------
    Classification
        ``Recurrent`` for a divergent series, ``Transient`` for a
        convergent one, ``Inconclusive`` when no rule fires by ``n_max``.
    """
    cfg = config or SeriesConfig()
    seq = as_log_ratio(ratio)
    window = cfg.window
    if seq.period > 1:
        # whole periods only, otherwise the slope estimate oscillates
        window = max(window, seq.period) // seq.period * seq.period
    n_max = cfg.n_max if seq.length is None else min(cfg.n_max, seq.length)
    if n_max < 2 * window:
        raise ValueError(f"need at least {2 * window} ratios, got {n_max}")

    log_ratio_cap = math.log1p(-cfg.ratio_margin) + 1e-15
    log_delta = math.log(cfg.delta)
    half = window // 2

    logs = np.empty(0)
    log_t = np.empty(0)
    log_s = np.empty(0)
    done = 0
    verdict, rule, diag = Verdict.INCONCLUSIVE, "none", {}

    for n in _checkpoints(n_max, window):
        new = seq.block(done + 1, n + 1)
        if np.any(np.isnan(new)) or np.any(new == np.inf) or np.any(new == -np.inf):
            raise ValueError("ratios must be finite and positive")
        t_new = np.cumsum(new) + (log_t[-1] if done else 0.0)
        if done:
            s_new = np.logaddexp.accumulate(np.concatenate(([log_s[-1]], t_new)))[1:]
        else:
            s_new = np.logaddexp.accumulate(t_new)
        logs = np.concatenate((logs, new))
        log_t = np.concatenate((log_t, t_new))
        log_s = np.concatenate((log_s, s_new))
        done = n

        w_logs = logs[n - window: n]
        w_t = log_t[n - window: n]
        slope = (log_t[n - 1] - log_t[n - window - 1]) / math.log(n / (n - window))
        diag = {"n": n, "slope": slope, "rho": -slope, "max_log_ratio": float(w_logs.max()),
                "min_log_t": float(w_t.min())}

        first, second = w_logs[:half].max(), w_logs[half:].max()
        if w_logs.max() <= log_ratio_cap and second <= first + 1e-12:
            verdict, rule = Verdict.TRANSIENT, "geometric-ratio"
            break
        if w_t.min() >= log_delta and slope > -1 + cfg.raabe_margin:
            verdict, rule = Verdict.RECURRENT, "bounded-below"
            break
        if -slope < 1 - cfg.raabe_margin:
            verdict, rule = Verdict.RECURRENT, "Raabe"
            break
        if -slope > 1 + cfg.raabe_margin:
            verdict, rule = Verdict.TRANSIENT, "Raabe"
            break

    return Classification(verdict, rule, _trace(log_t, log_s), None, done, diag)
