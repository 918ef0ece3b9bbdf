"""Compiled inner loops (numba).

Rows are passed as two tables: explicit rows ``0 .. S-1`` in CSR form with
absolute targets, and one template per stencil phase with relative
offsets used for every state ``x >= S``.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _row_bounds(x, S, i0, period, ex_ptr, ph_ptr):
    if x < S:
        return True, ex_ptr[x], ex_ptr[x + 1], 0
    ph = (x - i0) % period
    return False, ph_ptr[ph], ph_ptr[ph + 1], ph


@njit(cache=True)
def fill_band(n, L, D, U, S, i0, period, ex_ptr, ex_tgt, ex_p, ex_tr, ph_ptr, ph_off, ph_p, ph_tr):
    """Interior rows ``1 .. L-1`` of the killed chain as a band matrix.

    Returns ``T`` (off-diagonal interior transitions, ``T[r, j - x + D]``
    for row ``x = r + 1``), mass absorbed at 0, mass leaving to ``>= L``,
    and the mass lost to tail truncation.
    """
    T = np.zeros((n, D + U + 1))
    b = np.zeros(n)
    c = np.zeros(n)
    tr = np.zeros(n)
    for r in range(n):
        x = r + 1
        explicit, lo, hi, ph = _row_bounds(x, S, i0, period, ex_ptr, ph_ptr)
        tr[r] = ex_tr[x] if explicit else ph_tr[ph]
        for e in range(lo, hi):
            if explicit:
                j = ex_tgt[e]
                p = ex_p[e]
            else:
                j = x + ph_off[e]
                p = ph_p[e]
            if j == x:
                continue
            if j <= 0:
                b[r] += p
            elif j >= L:
                c[r] += p
            else:
                T[r, j - x + D] += p
    return T, b, c, tr


@njit(cache=True)
def gth_band_solve(T, D, U, b, c, tr):
    """Solve for ruin and escape probabilities by subtraction-free elimination.

    Each pivot is recomputed as (mass leaving the remaining states) +
    (remaining off-diagonal mass) and all updates add nonnegative terms,
    so both solutions carry small componentwise relative error even when
    one of them is tiny.  Truncated mass counts as leaving the system.
    """
    n = T.shape[0]
    T = T.copy()
    b = b.copy()
    c = c.copy()
    tr = tr.copy()
    piv = np.zeros(n)
    for k in range(n):
        s = b[k] + c[k] + tr[k]
        for j in range(k + 1, min(n, k + U + 1)):
            s += T[k, j - k + D]
        if s <= 0.0:
            return np.full(n, np.nan), np.full(n, np.nan), k
        piv[k] = s
        for i in range(k + 1, min(n, k + D + 1)):
            a = T[i, k - i + D]
            if a == 0.0:
                continue
            f = a / s
            T[i, k - i + D] = 0.0
            for j in range(k + 1, min(n, k + U + 1)):
                if j != i:
                    T[i, j - i + D] += f * T[k, j - k + D]
            b[i] += f * b[k]
            c[i] += f * c[k]
            tr[i] += f * tr[k]
    h = np.zeros(n)
    g = np.zeros(n)
    for k in range(n - 1, -1, -1):
        sh = b[k]
        sg = c[k]
        for j in range(k + 1, min(n, k + U + 1)):
            t = T[k, j - k + D]
            sh += t * h[j]
            sg += t * g[j]
        h[k] = sh / piv[k]
        g[k] = sg / piv[k]
    return h, g, -1


@njit(cache=True)
def _step(x, u, S, i0, period, ex_ptr, ex_tgt, ex_cdf, ph_ptr, ph_off, ph_cdf):
    explicit, lo, hi, ph = _row_bounds(x, S, i0, period, ex_ptr, ph_ptr)
    if explicit:
        k = lo + np.searchsorted(ex_cdf[lo:hi], u, side="right")
        if k >= hi:
            k = hi - 1
        return ex_tgt[k]
    k = lo + np.searchsorted(ph_cdf[lo:hi], u, side="right")
    if k >= hi:
        k = hi - 1
    return x + ph_off[k]


@njit(cache=True, nogil=True)
def walk_until_return(x, steps, horizon, u, S, i0, period, ex_ptr, ex_tgt, ex_cdf, ph_ptr, ph_off, ph_cdf):
    """Advance a trial; status 1 = returned to 0, 0 = horizon reached, -1 = uniforms used up."""
    for k in range(u.size):
        if steps >= horizon:
            return x, steps, 0
        x = _step(x, u[k], S, i0, period, ex_ptr, ex_tgt, ex_cdf, ph_ptr, ph_off, ph_cdf)
        steps += 1
        if x == 0:
            return x, steps, 1
    if steps >= horizon:
        return x, steps, 0
    return x, steps, -1


@njit(cache=True, nogil=True)
def ctmc_advance(x, t, t_end, occ, batch_len, hold, u, S, i0, period,
                 ex_ptr, ex_tgt, ex_cdf, ph_ptr, ph_off, ph_cdf):
    """Accumulate occupation time per batch; returns (state, time, finished)."""
    cap = occ.shape[1] - 1
    nb = occ.shape[0]
    for k in range(hold.size):
        t_next = min(t + hold[k], t_end)
        col = x if x < cap else cap
        # spread [t, t_next) over the batches it touches
        a = t
        while a < t_next:
            bi = min(int(a / batch_len), nb - 1)
            edge = (bi + 1) * batch_len if bi < nb - 1 else t_end
            seg = min(edge, t_next) - a
            occ[bi, col] += seg
            a += seg
            if seg <= 0.0:
                break
        t = t_next
        if t >= t_end:
            return x, t, True
        x = _step(x, u[k], S, i0, period, ex_ptr, ex_tgt, ex_cdf, ph_ptr, ph_off, ph_cdf)
    return x, t, False


@njit(cache=True, fastmath=True)
def _axpy_shift(w, v, p, off, lo, hi):
    dst = w[lo + off: hi + off]
    src = v[lo:hi]
    for k in range(hi - lo):
        dst[k] += p * src[k]


@njit(cache=True)
def taboo_propagate(v0, horizon, trim, S, i0, period, ex_ptr, ex_tgt, ex_p, ph_ptr, ph_off, ph_p,
                    max_up, max_down):
    """Probability mass absorbed at 0 within ``horizon - 1`` further steps.

    ``v0`` is the law after the first step restricted to states ``>= 1``.
    Mass above the current top that falls below ``trim`` is dropped and
    its total returned as a bound on the error.  Mass too high to reach 0
    in the remaining steps is discarded without error.
    """
    size = v0.size + (horizon + 1) * max_up + 1
    v = np.zeros(size)
    w = np.zeros(size)
    v[: v0.size] = v0
    top = v0.size - 1
    ret = 0.0
    dropped = 0.0
    for step in range(horizon - 1):
        hi = top
        # explicit rows
        for x in range(1, min(S, top + 1)):
            m = v[x]
            if m == 0.0:
                continue
            for e in range(ex_ptr[x], ex_ptr[x + 1]):
                j = ex_tgt[e]
                if j == 0:
                    ret += m * ex_p[e]
                else:
                    w[j] += m * ex_p[e]
                    if j > hi:
                        hi = j
        # stencil rows, one phase and one offset at a time
        for ph in range(period):
            x0 = S + (ph - (S - i0)) % period
            if x0 > top:
                continue
            for e in range(ph_ptr[ph], ph_ptr[ph + 1]):
                off = ph_off[e]
                p = ph_p[e]
                x = x0
                if x + off == 0:
                    ret += v[x] * p
                    x += period
                if period == 1:
                    _axpy_shift(w, v, p, off, x, top + 1)
                else:
                    for y in range(x, top + 1, period):
                        w[y + off] += v[y] * p
                if top + off > hi:
                    hi = top + off
        for x in range(top + 1):
            v[x] = 0.0
        remaining = horizon - 2 - step
        reach = remaining * max_down
        if hi > reach:
            for x in range(reach + 1, hi + 1):
                w[x] = 0.0
            hi = reach
        while hi > 0 and w[hi] < trim:
            dropped += w[hi]
            w[hi] = 0.0
            hi -= 1
        v, w = w, v
        top = hi
        if top == 0:
            break
    return ret, dropped
