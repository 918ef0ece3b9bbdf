"""Criterion-free numerical verdicts.

Two independent routes: exact first-passage probabilities from a banded
linear solve (the chain killed at 0 and at a level ``L``), and Monte
Carlo simulation of the chain itself.  Neither uses drift rates, so both
also apply to chains whose rows are not contiguous.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import _kernels
from .birth_death import RuinCurve
from .chain import TAIL_TOL, ChainSpec, materialize
from .series import Verdict

__all__ = [
    "DEFAULT_LEVELS",
    "WalkTables",
    "walk_tables",
    "first_passage",
    "first_passage_solve",
    "escape_probability",
    "ruin_curve",
    "OracleReport",
    "oracle_classify",
    "MCSummary",
    "mc_return",
    "finite_horizon_return",
    "Occupancy",
    "ctmc_simulate",
]

DEFAULT_LEVELS = (100, 1000, 10_000, 30_000)


@dataclass(frozen=True)
class WalkTables:
    """Float transition tables shared by the solver and the simulators."""

    S: int
    i0: int
    period: int
    ex_ptr: np.ndarray
    ex_tgt: np.ndarray
    ex_p: np.ndarray
    ex_cdf: np.ndarray
    ex_tr: np.ndarray
    ph_ptr: np.ndarray
    ph_off: np.ndarray
    ph_p: np.ndarray
    ph_cdf: np.ndarray
    ph_tr: np.ndarray
    down: int
    up: int

    @property
    def step_args(self):
        return (self.S, self.i0, self.period, self.ex_ptr, self.ex_tgt, self.ex_cdf,
                self.ph_ptr, self.ph_off, self.ph_cdf)

    @property
    def prob_args(self):
        return (self.S, self.i0, self.period, self.ex_ptr, self.ex_tgt, self.ex_p,
                self.ph_ptr, self.ph_off, self.ph_p)


def _csr(rows):
    ptr = np.zeros(len(rows) + 1, dtype=np.int64)
    keys, probs, cdfs = [], [], []
    for r, (k, p) in enumerate(rows):
        ptr[r + 1] = ptr[r] + len(k)
        keys.extend(k)
        probs.extend(p)
        cs = np.cumsum(p)
        cdfs.extend(cs / cs[-1])
    return (ptr, np.asarray(keys, dtype=np.int64), np.asarray(probs, dtype=float),
            np.asarray(cdfs, dtype=float))


def walk_tables(spec: ChainSpec, tol: float = TAIL_TOL) -> WalkTables:
    """Materialize explicit rows and stencil templates as float arrays."""
    S = spec.i0
    for st in spec.tail_stencil:
        t = st.tail(-1)
        if t is not None:
            # rows below the cutoff send clipped mass to 0 and differ from the template
            S = max(S, t.cutoff(tol) + 1)
    ex_rows, ex_tr, down, up = [], [], 0, 0
    for x in range(S):
        m = materialize(spec, x, tol)
        ex_rows.append(([j for j, _ in m.entries], [float(v) for _, v in m.entries]))
        ex_tr.append(float(m.truncated))
        for j, _ in m.entries:
            if j >= 1:
                down = max(down, x - j)
            up = max(up, j - x)
    ph_rows, ph_tr = [], []
    for ph in range(spec.period):
        x = S + (ph - (S - spec.i0)) % spec.period
        m = materialize(spec, x, tol)
        offs = [j - x for j, _ in m.entries]
        ph_rows.append((offs, [float(v) for _, v in m.entries]))
        ph_tr.append(float(m.truncated))
        down = max(down, max(-o for o in offs))
        up = max(up, max(offs))
    ex_ptr, ex_tgt, ex_p, ex_cdf = _csr(ex_rows)
    ph_ptr, ph_off, ph_p, ph_cdf = _csr(ph_rows)
    return WalkTables(S, spec.i0, spec.period, ex_ptr, ex_tgt, ex_p, ex_cdf, np.asarray(ex_tr),
                      ph_ptr, ph_off, ph_p, ph_cdf, np.asarray(ph_tr), max(down, 0), max(up, 0))


@dataclass(frozen=True)
class FirstPassage:
    """Ruin ``h`` (0 before ``L``) and escape ``g`` (``L`` before 0) from the start law."""

    L: int
    h: float
    g: float
    h_states: np.ndarray
    g_states: np.ndarray


def first_passage(spec: ChainSpec, L: int, tol: float = TAIL_TOL,
                  tables: WalkTables | None = None) -> FirstPassage:
    """Solve the killed chain on ``1 .. L-1``.

    The start law is row 0 conditioned on leaving 0, which is the point
    mass at 1 whenever ``p_{0,1} = 1``.
    """
    if L < 2:
        raise ValueError("level L must be at least 2")
    tb = tables or walk_tables(spec, tol)
    n = L - 1
    T, b, c, tr = _kernels.fill_band(n, L, tb.down, tb.up, tb.S, tb.i0, tb.period, tb.ex_ptr,
                                     tb.ex_tgt, tb.ex_p, tb.ex_tr, tb.ph_ptr, tb.ph_off, tb.ph_p,
                                     tb.ph_tr)
    h, g, bad = _kernels.gth_band_solve(T, tb.down, tb.up, b, c, tr)
    if bad >= 0:
        raise np.linalg.LinAlgError(f"state {bad + 1} cannot leave the interior; system singular")
    row0 = materialize(spec, 0, tol)
    leave = [(j, float(v)) for j, v in row0.entries if j != 0]
    tot = sum(v for _, v in leave)
    H = sum(v * h[j - 1] for j, v in leave if j < L) / tot
    G = sum(v * (g[j - 1] if j < L else 1.0) for j, v in leave) / tot
    return FirstPassage(L, H, G, h, g)


def first_passage_solve(spec: ChainSpec, L: int, tol: float = TAIL_TOL) -> float:
    """Probability of reaching 0 before any state ``>= L`` after leaving 0."""
    return first_passage(spec, L, tol).h


def escape_probability(spec: ChainSpec, L: int, tol: float = TAIL_TOL) -> float:
    """Probability of reaching a state ``>= L`` before returning to 0."""
    return first_passage(spec, L, tol).g


def ruin_curve(spec: ChainSpec, levels: Sequence[int] = DEFAULT_LEVELS,
               tol: float = TAIL_TOL) -> RuinCurve:
    levels = [int(L) for L in levels]
    if sorted(levels) != levels or len(set(levels)) != len(levels):
        raise ValueError("levels must be strictly increasing")
    tb = walk_tables(spec, tol)
    fp = [first_passage(spec, L, tol, tb) for L in levels]
    return RuinCurve(np.asarray(levels), np.array([f.h for f in fp]), np.array([f.g for f in fp]))


@dataclass
class MCSummary:
    trials: int
    successes: int
    horizon: int
    seed: int
    lo: float
    hi: float

    @property
    def frequency(self) -> float:
        return self.successes / self.trials

    def contains(self, p: float) -> bool:
        return self.lo <= p <= self.hi


@dataclass
class OracleReport:
    ruin_curve: RuinCurve
    verdict: Verdict
    rule: str
    mc: MCSummary | None = None
    notes: dict = field(default_factory=dict)


def oracle_classify(
    spec: ChainSpec,
    grid: Sequence[int] = DEFAULT_LEVELS,
    theta_rec: float = 1e-2,
    theta_stab: float = 1e-4,
    transient_gap: float = 1e-3,
    tol: float = TAIL_TOL,
) -> OracleReport:
    """Read a verdict off the escape probabilities ``g(L) = 1 - h(L)``.

    Recurrent: ``g(L_max) < theta_rec`` and ``g`` falls along the grid by
    at least a factor 2 per decade.  Transient: ``h`` moves by less than
    ``theta_stab`` over the last two grid steps and stays below
    ``1 - transient_gap``.
    """
    if len(grid) < 3:
        raise ValueError("grid needs at least three levels")
    curve = ruin_curve(spec, grid, tol)
    h, lv = curve.h, curve.levels.astype(float)
    # subnormal escape values carry no digits; treat them as zero
    g = np.where(curve.escape < np.finfo(float).tiny, 0.0, curve.escape)
    decay_ok = True
    for k in range(1, len(lv)):
        need = 2.0 ** math.log10(lv[k] / lv[k - 1])
        if g[k - 1] == 0.0:
            decay_ok &= g[k] == 0.0
        else:
            decay_ok &= g[k] * need <= g[k - 1]
    notes = {"decay_ok": bool(decay_ok)}
    if g[-1] < theta_rec and decay_ok:
        return OracleReport(curve, Verdict.RECURRENT, "escape-decay", notes=notes)
    steps = np.abs(np.diff(h))[-2:]
    if np.all(steps < theta_stab) and h[-1] < 1 - transient_gap:
        return OracleReport(curve, Verdict.TRANSIENT, "ruin-plateau", notes=notes)
    return OracleReport(curve, Verdict.INCONCLUSIVE, "none", notes=notes)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed << 64) | trial))


def _run_trial(tb: WalkTables, seed: int, trial: int, horizon: int) -> bool:
    rng = _trial_rng(seed, trial)
    x, steps, block = 0, 0, 256
    while True:
        u = rng.random(min(block, horizon - steps))
        x, steps, status = _kernels.walk_until_return(x, steps, horizon, u, *tb.step_args)
        if status >= 0:
            return status == 1
        block = min(2 * block, 1 << 20)


def mc_return(spec: ChainSpec, trials: int, horizon: int, seed: int = 0, workers: int = 1,
              tol: float = TAIL_TOL) -> MCSummary:
    """Fraction of trials started at 0 that revisit 0 within ``horizon`` steps.

    Trial ``k`` uses its own Philox stream keyed by ``(seed, k)``, so the
    outcome of each trial, and hence the summary, does not depend on how
    trials are spread over workers.  The interval is the Wilson 95% score
    interval.
    """
    if trials < 1 or horizon < 1:
        raise ValueError("trials and horizon must be positive")
    if not (0 <= seed < 2**64):
        raise ValueError("seed must lie in [0, 2**64)")
    tb = walk_tables(spec, tol)
    outcome = np.zeros(trials, dtype=bool)

    def run(chunk):
        for k in chunk:
            outcome[k] = _run_trial(tb, seed, int(k), horizon)

    chunks = np.array_split(np.arange(trials), max(1, workers) * 4)
    if workers <= 1:
        for ch in chunks:
            run(ch)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    k = int(outcome.sum())
    ci = binomtest(k, trials).proportion_ci(confidence_level=0.95, method="wilson")
    return MCSummary(trials, k, horizon, seed, float(ci.low), float(ci.high))


def finite_horizon_return(spec: ChainSpec, horizon: int, trim: float = 1e-18,
                          tol: float = TAIL_TOL) -> tuple[float, float]:
    """Exact probability of revisiting 0 within ``horizon`` steps from 0.

    Propagates the law of the chain killed at 0.  Returns the probability
    and the total mass trimmed from the top of the support, which bounds
    the error from above.
    """
    if horizon < 1:
        raise ValueError("horizon must be positive")
    tb = walk_tables(spec, tol)
    row0 = materialize(spec, 0, tol)
    top = max(j for j, _ in row0.entries)
    v0 = np.zeros(top + 1)
    ret0 = 0.0
    for j, v in row0.entries:
        if j == 0:
            ret0 += float(v)
        else:
            v0[j] = float(v)
    if horizon == 1:
        return ret0, 0.0
    ret, dropped = _kernels.taboo_propagate(v0, horizon, trim, *tb.prob_args, max(tb.up, 1),
                                            max(tb.down, 1))
    return ret0 + ret, dropped


@dataclass
class Occupancy:
    """Time-average occupation of states ``0 .. cap``; ``above`` is the share beyond ``cap``."""

    fractions: np.ndarray
    stderr: np.ndarray
    above: float
    t_end: float
    seed: int


def ctmc_simulate(spec: ChainSpec, t_end: float, seed: int = 0, cap: int = 50,
                  batches: int = 20, tol: float = TAIL_TOL) -> Occupancy:
    """Continuous-time version with exponential holding times of mean 1/2.

    Standard errors come from batch means over ``batches`` equal time
    slices.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    tb = walk_tables(spec, tol)
    rng = np.random.Generator(np.random.Philox(key=seed))
    occ = np.zeros((batches, cap + 2))
    batch_len = t_end / batches
    x, t = 0, 0.0
    block = int(2 * t_end + 10 * math.sqrt(2 * t_end) + 100)
    while True:
        hold = rng.exponential(0.5, block)
        u = rng.random(block)
        x, t, finished = _kernels.ctmc_advance(x, t, t_end, occ, batch_len, hold, u, *tb.step_args)
        if finished:
            break
        block = max(1024, block // 4)
    frac = occ / batch_len
    total = occ.sum(axis=0) / t_end
    se = frac.std(axis=0, ddof=1) / math.sqrt(batches) if batches > 1 else np.full(cap + 2, np.nan)
    return Occupancy(total[: cap + 1], se[: cap + 1], float(total[cap + 1]), float(t_end), seed)
