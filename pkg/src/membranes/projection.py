"""Weighted projection onto the ordered cone u_1 >= u_2 >= ... >= u_N.

Pool-adjacent-violators on the chain order.  This is the inner loop of every
grid sweep and of the game exchange step, so there is a scalar version for
single vectors and a vectorized version that projects many rows at once.
The brute-force block-partition oracle is kept alongside as the test
reference.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidWeight, TooLarge


def isotonic_project(values, weights):
    """Weighted least-squares projection of ``values`` onto v_1 >= ... >= v_N.

    Returns the minimizer of sum w_i (u_i - v_i)^2 subject to the chain
    constraint; pooled blocks carry their weighted average.
    """
    v = [float(x) for x in values]
    w = [float(x) for x in weights]
    if any(x <= 0.0 for x in w):
        raise InvalidWeight(f"weights must be strictly positive, got {w}")
    if len(v) != len(w):
        raise InvalidWeight("values and weights must have equal length")
    # Block stack: (pooled value, pooled weight, length).
    vals, wts, lens = [], [], []
    for x, wx in zip(v, w):
        vals.append(x)
        wts.append(wx)
        lens.append(1)
        # Non-increasing target: merge while the new block exceeds the previous.
        while len(vals) >= 2 and vals[-2] < vals[-1]:
            wv = wts[-2] + wts[-1]
            vals[-2] = (wts[-2] * vals[-2] + wts[-1] * vals[-1]) / wv
            wts[-2] = wv
            lens[-2] += lens[-1]
            del vals[-1], wts[-1], lens[-1]
    out = []
    for val, length in zip(vals, lens):
        out.extend([val] * length)
    return np.asarray(out)


def isotonic_project_batch(values, weights):
    """Row-wise weighted isotonic projection of an (M, N) array.

    Same result as ``isotonic_project`` applied per row; the stack algorithm
    runs in lockstep across rows with masked merges.
    """
    v = np.ascontiguousarray(values, dtype=float)
    if v.ndim == 1:
        return isotonic_project(v, weights)
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0.0):
        raise InvalidWeight("weights must be strictly positive")
    m, n = v.shape
    if n != w.shape[0]:
        raise InvalidWeight("values and weights must have equal length")
    if n == 1:
        return v.copy()
    if n == 2:
        # Single possible pooling; worth special-casing for the solver loop.
        out = v.copy()
        bad = v[:, 0] < v[:, 1]
        pooled = (w[0] * v[bad, 0] + w[1] * v[bad, 1]) / (w[0] + w[1])
        out[bad, 0] = pooled
        out[bad, 1] = pooled
        return out

    sv = np.empty((n + 1, m))  # stacked block values (+1 row for the sentinel)
    sw = np.empty((n + 1, m))  # stacked block weights
    sl = np.zeros((n + 1, m), dtype=np.intp)  # stacked block lengths
    sp = np.zeros(m, dtype=np.intp)  # per-row stack size
    rows = np.arange(m)
    for i in range(n):
        sv[sp, rows] = v[:, i]
        sw[sp, rows] = w[i]
        sl[sp, rows] = 1
        sp += 1
        for _ in range(i):
            can = sp >= 2
            top = sv[sp - 1, rows]
            sec = sv[sp - 2, rows]
            viol = can & (sec < top)
            if not viol.any():
                break
            r = rows[viol]
            s = sp[viol]
            wv = sw[s - 2, r] + sw[s - 1, r]
            sv[s - 2, r] = (sw[s - 2, r] * sv[s - 2, r] + sw[s - 1, r] * sv[s - 1, r]) / wv
            sw[s - 2, r] = wv
            sl[s - 2, r] += sl[s - 1, r]
            sp[viol] -= 1
    # Expand block values back to positions.
    sl[sp, rows] = n + 1  # sentinel keeps cumulative lengths beyond the stack large
    cum = np.cumsum(sl, axis=0)[:n]
    out = np.empty_like(v)
    for i in range(n):
        block = (cum <= i).sum(axis=0)
        out[:, i] = sv[block, rows]
    return out


def qp_oracle_project(values, weights):
    """Exhaustive block-partition reference for ``isotonic_project``.

    Enumerates all compositions of N into contiguous blocks, pools each block
    to its weighted mean, and returns the feasible minimizer.  A float pass
    screens the compositions; near-ties (objective gaps below float
    resolution of the total) are resolved in exact rational arithmetic, so
    the reference is exact even for adversarial inputs.  Exponential in N,
    hence the size guard.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0.0):
        raise InvalidWeight("weights must be strictly positive")
    n = v.shape[0]
    if n > 12:
        raise TooLarge(f"oracle limited to N <= 12, got {n}")
    scale = max(1.0, float(np.abs(v).max()))
    candidates = []  # (obj, cuts, pooled)
    for mask in range(1 << (n - 1)):
        # Bit k set means a block boundary between positions k and k+1.
        cuts = [0] + [k + 1 for k in range(n - 1) if mask >> k & 1] + [n]
        u = np.empty(n)
        feasible = True
        prev = np.inf
        for a, b in zip(cuts[:-1], cuts[1:]):
            mean = float(w[a:b] @ v[a:b] / w[a:b].sum())
            # Loose screen: the exact optimum is never within 1e-9 of violating.
            if mean > prev + 1e-9 * scale:
                feasible = False
                break
            prev = mean
            u[a:b] = mean
        if feasible:
            candidates.append((float(w @ (u - v) ** 2), cuts, u))
    best_obj = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= best_obj * (1.0 + 1e-10) + 1e-30]
    if len(near) == 1:
        return near[0][2]
    return _resolve_exact(near, v, w)


def _resolve_exact(candidates, v, w):
    """Exact-rational comparison of near-tied compositions."""
    from fractions import Fraction

    v_f = [Fraction(float(x)) for x in v]
    w_f = [Fraction(float(x)) for x in w]
    best = None
    best_obj = None
    for _, cuts, pooled in candidates:
        means = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            num = sum(w_f[i] * v_f[i] for i in range(a, b))
            den = sum(w_f[i] for i in range(a, b))
            means.append(num / den)
        if any(means[i] < means[i + 1] for i in range(len(means) - 1)):
            continue
        obj = Fraction(0)
        for (a, b), m in zip(zip(cuts[:-1], cuts[1:]), means):
            for i in range(a, b):
                obj += w_f[i] * (m - v_f[i]) ** 2
        if best_obj is None or obj < best_obj:
            best_obj = obj
            best = pooled
    return best
