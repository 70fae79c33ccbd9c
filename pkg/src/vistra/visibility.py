"""Visibility-graph constructions over sampled series.

Three constructions share one geometric idea: samples (t_a, x_a) and
(t_b, x_b) are linked when the sight line between them is not blocked by
too many intermediate samples.

- build_vg:    straight sight line, zero tolerance. An edge requires every
               intermediate strictly below the chord; a sample exactly on
               the chord blocks it.
- build_lpvg:  straight sight line with tolerance m: at most m intermediates
               may sit on or above the chord. m=0 is exactly build_vg.
- build_clpvg: the sight line is the minor arc (under 180 degrees) of a
               circle through the two endpoints, chosen from the pencil of
               circles indexed by a curvature parameter alpha. At most m
               intermediates may sit strictly above the arc; a sample
               exactly on the arc is benign.

The sign of alpha picks the side of the chord the arc bulges toward
(positive bulges below in the usual orientation); its magnitude flattens
the arc toward the chord, so for very large alpha the arc construction
degenerates to the straight-line one. alpha = 0 would degenerate the arc
to a half circle on either side and is rejected.

Consecutive samples are always mutually visible, so every construction
yields a connected graph containing the path 0-1-...-(n-1). Time enters
through real timestamps: shifting t0 changes nothing, while rescaling time
changes arc geometry (the straight-line constructions are scale-free).
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _kernels
from .graphs import Graph
from .signals import TimeSeries

__all__ = [
    "VgParams",
    "ChordCircle",
    "chord_circle",
    "arc_height",
    "build_vg",
    "build_lpvg",
    "build_clpvg",
]

METHODS = ("vg", "lpvg", "clpvg")


@dataclass(frozen=True)
class VgParams:
    """Construction selector used by the pipeline and CLI.

    method: one of 'vg', 'lpvg', 'clpvg'
    m:      penetration tolerance (ignored for 'vg')
    alpha:  arc curvature (used by 'clpvg' only)
    """

    method: str = "clpvg"
    m: int = 1
    alpha: float = 10.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if not isinstance(self.m, int) or self.m < 0:
            raise ValueError(f"m must be a non-negative integer, got {self.m}")
        if self.method == "clpvg":
            _check_alpha(self.alpha)

    def build(self, series: TimeSeries) -> Graph:
        if self.method == "vg":
            return build_vg(series)
        if self.method == "lpvg":
            return build_lpvg(series, self.m)
        return build_clpvg(series, self.m, self.alpha)


@dataclass(frozen=True)
class ChordCircle:
    """Circle through two samples: center (t, x), radius, and the endpoints."""

    center: tuple[float, float]
    radius: float
    a: tuple[float, float]
    b: tuple[float, float]


def chord_circle(a: tuple[float, float], b: tuple[float, float], alpha: float) -> ChordCircle:
    """The member of the circle pencil through a and b selected by alpha.

    Closed form: with a = (t_a, x_a), b = (t_b, x_b), the center is

        ( (t_a + t_b)/2 - alpha*(x_b - x_a)/2,
          (x_a + x_b)/2 + alpha*(t_b - t_a)/2 )

    and the radius is (L/2) * sqrt(1 + alpha^2) for chord length L. Both
    endpoints are verified to lie on the circle to 1e-9 relative tolerance.
    """
    ta, xa = float(a[0]), float(a[1])
    tb, xb = float(b[0]), float(b[1])
    if not all(map(math.isfinite, (ta, xa, tb, xb))):
        raise ValueError("endpoints must be finite")
    if not ta < tb:
        raise ValueError(f"need t_a < t_b, got {ta} >= {tb}")
    _check_alpha(alpha)
    ct = 0.5 * (ta + tb) - 0.5 * alpha * (xb - xa)
    cx = 0.5 * (xa + xb) + 0.5 * alpha * (tb - ta)
    radius = math.hypot(ta - ct, xa - cx)
    rb = math.hypot(tb - ct, xb - cx)
    if abs(rb - radius) > 1e-9 * max(radius, 1.0):
        raise ValueError("degenerate chord circle: endpoints disagree on the radius")
    return ChordCircle(center=(ct, cx), radius=radius, a=(ta, xa), b=(tb, xb))


def arc_height(a: tuple[float, float], b: tuple[float, float], alpha: float, t_c: float) -> float:
    """Height of the minor arc at t_c, for t_c strictly between the endpoints.

    Solves the circle's quadratic in x at fixed t_c with the numerically
    stable root ordering, clamps tiny negative discriminants from rounding
    to zero, and picks the root on the minor-arc side of the chord. If the
    arc overhangs vertically and both crossings qualify, the smaller height
    is returned (the conservative choice: more samples count as above).
    """
    ta, xa = float(a[0]), float(a[1])
    tb, xb = float(b[0]), float(b[1])
    if not ta < tb:
        raise ValueError(f"need t_a < t_b, got {ta} >= {tb}")
    _check_alpha(alpha)
    if not (ta < t_c < tb):
        raise ValueError(f"t_c={t_c} must lie strictly inside ({ta}, {tb})")
    return float(_kernels.arc_x(ta, xa, tb, xb, float(alpha), float(t_c)))


def build_vg(series: TimeSeries) -> Graph:
    """Natural visibility graph: chord unobstructed by any intermediate."""
    t, x = _series_arrays(series)
    edges = _kernels.lpvg_edges(t, x, 0)
    return Graph(n=len(series), edges=_as_edge_tuple(edges))


def build_lpvg(series: TimeSeries, m: int) -> Graph:
    """Straight-line visibility that tolerates up to m penetrations."""
    if not isinstance(m, int) or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    t, x = _series_arrays(series)
    edges = _kernels.lpvg_edges(t, x, m)
    return Graph(n=len(series), edges=_as_edge_tuple(edges))


def build_clpvg(series: TimeSeries, m: int, alpha: float) -> Graph:
    """Arc visibility with tolerance m and curvature alpha."""
    if not isinstance(m, int) or m < 0:
        raise ValueError(f"m must be a non-negative integer, got {m}")
    _check_alpha(alpha)
    t, x = _series_arrays(series)
    edges = _kernels.clpvg_edges(t, x, m, float(alpha))
    return Graph(n=len(series), edges=_as_edge_tuple(edges))


def _series_arrays(series: TimeSeries) -> tuple[np.ndarray, np.ndarray]:
    if len(series) < 2:
        raise ValueError("visibility needs at least two samples")
    t = np.ascontiguousarray(series.timestamps(), dtype=np.float64)
    x = np.ascontiguousarray(series.values, dtype=np.float64)
    return t, x


def _as_edge_tuple(edges: np.ndarray) -> tuple[tuple[int, int], ...]:
    # kernels emit pairs already sorted by (a, b) with a < b
    return tuple((int(u), int(v)) for u, v in edges)


def _check_alpha(alpha: float) -> None:
    if not math.isfinite(alpha) or alpha == 0.0:
        raise ValueError(f"alpha must be finite and non-zero, got {alpha}")
