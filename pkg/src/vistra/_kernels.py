"""JIT-compiled scan kernels. Internal; the public API lives in visibility.py.

All kernels run under numba's default strict IEEE semantics (no fastmath),
so results are reproducible across runs and identical to an interpreted
evaluation of the same expressions in the same order.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def arc_x(ta, xa, tb, xb, alpha, tc):
    # Height at tc of the minor arc of the circle through (ta, xa), (tb, xb)
    # picked from the one-parameter family indexed by alpha. The circle is
    #   (t - t0c)^2 + (x - x0)^2 = r^2,  x0 = (xa + xb)/2 + alpha*(tb - ta)/2
    # and the quadratic in x at fixed tc is x^2 - 2*x0*x + c = 0. The root
    # pair is computed in the numerically stable order (large root first,
    # small root via c / big) because for large alpha the two roots differ
    # by many orders of magnitude.
    dt = tb - ta
    dx = xb - xa
    x0 = 0.5 * (xa + xb) + 0.5 * alpha * dt
    c = (tc - ta) * (tc - tb) + xa * xb + alpha * ((tc - ta) * dx + xa * dt)
    disc = x0 * x0 - c
    if disc < 0.0:
        disc = 0.0  # tangency; tiny negatives are rounding noise
    sq = np.sqrt(disc)
    if x0 >= 0.0:
        r1 = x0 + sq
    else:
        r1 = x0 - sq
    if r1 != 0.0:
        r2 = c / r1
    else:
        r2 = 0.0  # double root at the origin
    # Minor-arc side: the chord-side function s(x) has sign(s) = sign(alpha)
    # on the minor arc (the center sits at s = -alpha*L^2/2).
    sgn = 1.0 if alpha > 0.0 else -1.0
    s1 = ((tc - ta) * dx - (r1 - xa) * dt) * sgn
    s2 = ((tc - ta) * dx - (r2 - xa) * dt) * sgn
    ok1 = s1 > 0.0
    ok2 = s2 > 0.0
    if ok1 and ok2:
        # the arc overhangs vertically; the lower crossing is the
        # conservative choice (more samples count as penetrating)
        return r1 if r1 < r2 else r2
    if ok1:
        return r1
    if ok2:
        return r2
    # Neither root is strictly on the minor-arc side: tc is at a tangency or
    # rounding pushed both s values to <= 0. Take the closer side.
    return r1 if s1 >= s2 else r2


@njit(cache=True)
def lpvg_edges(t, x, m):
    # Straight-line scan. Pair (a, b) is an edge iff at most m intermediates
    # sit on or above the chord; consecutive samples always connect. The
    # per-intermediate expression divides last so it rounds identically to
    # the plain closed form.
    n = t.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    for a in range(n - 1):
        ta = t[a]
        xa = x[a]
        for b in range(a + 1, n):
            if b == a + 1:
                out[k, 0] = a
                out[k, 1] = b
                k += 1
                continue
            tb = t[b]
            xb = x[b]
            cnt = 0
            visible = True
            for c in range(a + 1, b):
                line = xa + (xb - xa) * (t[c] - ta) / (tb - ta)
                if x[c] >= line:
                    cnt += 1
                    if cnt > m:
                        visible = False
                        break
            if visible:
                out[k, 0] = a
                out[k, 1] = b
                k += 1
    return out[:k]


@njit(cache=True)
def clpvg_edges(t, x, m, alpha):
    # Arc scan: same structure as lpvg_edges but the sight line is the minor
    # arc, and only strict crossings (x_c above the arc) count.
    n = t.shape[0]
    out = np.empty((n * (n - 1) // 2, 2), dtype=np.int64)
    k = 0
    for a in range(n - 1):
        ta = t[a]
        xa = x[a]
        for b in range(a + 1, n):
            if b == a + 1:
                out[k, 0] = a
                out[k, 1] = b
                k += 1
                continue
            tb = t[b]
            xb = x[b]
            cnt = 0
            visible = True
            for c in range(a + 1, b):
                if x[c] > arc_x(ta, xa, tb, xb, alpha, t[c]):
                    cnt += 1
                    if cnt > m:
                        visible = False
                        break
            if visible:
                out[k, 0] = a
                out[k, 1] = b
                k += 1
    return out[:k]


def warmup() -> None:
    """Force JIT compilation with a tiny input (results discarded)."""
    t = np.array([0.0, 1.0, 2.0, 3.0])
    x = np.array([0.0, 1.0, 0.5, 2.0])
    lpvg_edges(t, x, 0)
    clpvg_edges(t, x, 0, 10.0)
    arc_x(0.0, 0.0, 2.0, 0.0, 1.0, 1.0)
