"""Pure-Python/numpy implementations of the numerical kernels.

Same call signatures as the compiled ``_kernels`` module; used when the
extension is unavailable or ``ISOMEST_PURE=1`` is set.
"""

from __future__ import annotations

import numpy as np

from .psi import HUBER, L1, L2, SHUBER, SL1, ScoreFamily, psi

_MAX_BISECT = 2100
_HULL_RTOL = 1e-12


def _family(code, k, m):
    if code == L2:
        return ScoreFamily.l2()
    if code == HUBER:
        return ScoreFamily.huber(k)
    if code == SL1:
        return ScoreFamily.smoothed_l1(m)
    if code == SHUBER:
        return ScoreFamily.smoothed_huber(k, m)
    return ScoreFamily.l1()


def _corner(code, k, m):
    """Smallest |u| from which psi is saturated."""
    return 1.0 / m if code == SL1 else k


def _median(values):
    s = np.sort(values)
    n = len(s)
    if n % 2:
        return float(s[n // 2])
    return 0.5 * (s[n // 2 - 1] + s[n // 2])


def _mean(values):
    total = 0.0
    for v in values:
        total += v
    return total / len(values)


def block_solve(code, k, m, values, sigma):
    """Zero of ``S(mu) = sum psi((values - mu)/sigma)``.

    Returns the midpoint of the zero set when it is an interval.  L2 and L1
    use the mean and median directly.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise ValueError("empty block")
    if code == L2:
        return _mean(values)
    if code == L1:
        return _median(values)
    lo0, hi0 = float(values.min()), float(values.max())
    if lo0 == hi0:
        return lo0
    if n % 2 == 0:
        # flat zero set: every residual saturated, so S vanishes between the
        # two central order statistics shrunk by the corner
        s = np.sort(values)
        a, b = s[n // 2 - 1], s[n // 2]
        if b - a >= 2.0 * _corner(code, k, m) * sigma:
            return 0.5 * (a + b)
    fam = _family(code, k, m)

    def score(mu):
        return float(np.sum(psi(fam, (values - mu) / sigma)))

    # left end of the zero set: S > 0 below it, S <= 0 from it on
    if score(lo0) <= 0.0:
        left, lo_pos = lo0, None
    else:
        lo, hi = lo0, hi0
        for _ in range(_MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if score(mid) > 0.0:
                lo = mid
            else:
                hi = mid
        left, lo_pos = hi, lo
    s_left = score(left)
    if s_left < 0.0:
        # strict crossing: the zero set is a single point inside [lo_pos, left]
        right = lo_pos if lo_pos is not None else left
    elif score(hi0) >= 0.0:
        right = hi0
    else:
        lo, hi = left, hi0
        for _ in range(_MAX_BISECT):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if score(mid) >= 0.0:
                lo = mid
            else:
                hi = mid
        right = lo
    return 0.5 * (left + right)


def pava(code, k, m, x, group_starts, sigma):
    """Pool adjacent violators with a per-block M-step.

    ``group_starts`` gives the first index of each run of tied design points;
    tied observations start out pooled.  Returns ``(block_starts, levels)``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    bounds = list(group_starts) + [n]
    starts: list[int] = []
    levels: list[float] = []
    for g in range(len(bounds) - 1):
        start, stop = bounds[g], bounds[g + 1]
        starts.append(start)
        levels.append(block_solve(code, k, m, x[start:stop], sigma))
        while len(levels) > 1 and levels[-2] >= levels[-1]:
            starts.pop()
            levels.pop()
            levels[-1] = block_solve(code, k, m, x[starts[-1]:stop], sigma)
    return np.asarray(starts, dtype=np.int64), np.asarray(levels, dtype=float)


def lower_hull(v, z):
    """Indices of the lower convex hull vertices of ``(v, z)``, v increasing.

    Interior points on a chord, up to a relative tolerance on the
    orientation test, are dropped.
    """
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    hull: list[int] = []
    for i in range(len(v)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            lhs = (z[b] - z[a]) * (v[i] - v[b])
            rhs = (z[i] - z[b]) * (v[b] - v[a])
            if lhs >= rhs - _HULL_RTOL * (abs(lhs) + abs(rhs)):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.asarray(hull, dtype=np.int64)


def hull_slope_at(v, z, hull, v0):
    """Slope of the hull segment containing ``v0`` (left one at a vertex)."""
    hv = v[hull]
    if len(hull) < 2:
        return 0.0
    j = int(np.searchsorted(hv, v0, side="left"))
    j = min(max(j, 1), len(hull) - 1)
    a, b = hull[j - 1], hull[j]
    return float((z[b] - z[a]) / (v[b] - v[a]))


def _slope_at_zero(v, z, hull):
    """Slope at 0, averaging the two adjacent slopes when 0 is a vertex.

    The average keeps the simulated law symmetric under ``v -> -v``.
    """
    hv = v[hull]
    j = int(np.searchsorted(hv, 0.0, side="left"))
    j = min(max(j, 1), len(hull) - 1)
    a, b = hull[j - 1], hull[j]
    slope = (z[b] - z[a]) / (v[b] - v[a])
    if v[b] == 0.0 and j + 1 < len(hull):
        c = hull[j + 1]
        slope = 0.5 * (slope + (z[c] - z[b]) / (v[c] - v[b]))
    return float(slope)


def chernoff_batch(noise, n_side, step):
    """Slopes at 0 of the GCM of ``W(v) + v**2`` for each row of ``noise``.

    Row layout: the first ``n_side`` entries drive the left half of the
    two-sided walk (moving away from 0), the rest the right half; each entry
    is a standard normal scaled by ``sqrt(step)``.
    """
    noise = np.asarray(noise, dtype=float)
    reps = noise.shape[0]
    scale = np.sqrt(step)
    v = (np.arange(2 * n_side + 1) - n_side) * step
    drift = v * v
    out = np.empty(reps)
    for r in range(reps):
        left = np.cumsum(noise[r, :n_side]) * scale
        right = np.cumsum(noise[r, n_side:]) * scale
        w = np.concatenate((left[::-1], [0.0], right))
        z = w + drift
        hull = lower_hull(v, z)
        out[r] = _slope_at_zero(v, z, hull)
    return out
