"""Periodic microstructure of the unit cell and its auxiliary sets.

The unit cell Q = (-1/2, 1/2)^2 carries a closed soft set D: the central
square of side 1/4 plus the four corner squares of side 1/8 centered at
(+-7/16, +-7/16).  Under integer translation the corner squares of four
neighboring cells merge into one square block of side 1/4 centered at each
half-integer point, so the periodic soft set is a chessboard of side-1/4
squares sitting at the integer and half-integer lattice sites.  The stiff
matrix P is the complement of the periodic soft set.

Membership therefore reduces to two closed box tests on wrapped coordinates
x^ = x - round(x) in [-1/2, 1/2]:

    central square   |x^| <= 1/8  and |y^| <= 1/8
    corner block     |x^| >= 3/8  and |y^| >= 3/8

Auxiliary sets used by the crack diagnostics:

* R^1 is the diagonal segment from (1/8, 1/8) to (3/8, 3/8); R^2..R^4 are
  its images under the reflections (x, y) -> (-x, y), (-x, -y), (x, -y).
* The butterfly T^h(rho) around R^h is the union of two isosceles
  trapezoids that share R^h as their short base and open away from it by
  rho at the far ends; the butterflies pinch to the segments as rho -> 0.
* The columns U(rho) are the open vertical bands
  x^ in (-1/2 + rho, -1/8 - rho) union (1/8 + rho, 1/2 - rho).
* The zig-zag trapezoid has vertices (1/8, 1/8), (3/8, 3/8), (5/8, 3/8),
  (7/8, 1/8); its slant sides are exactly R^1 and the translate of R^2 by
  (1, 0).  The upper zig-zag set Z is the band y >= 1/8 minus the
  1-periodic row of these trapezoids, and the boundary polyline of Z
  (bridges on the soft-square faces, 45-degree diagonals across the
  matrix) is the deflected crack path this package is built around.

All tests are closed with tolerance ``TOL``; ties on region boundaries
count as soft material (the soft set is closed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

# ----------------------------------------------------------------------
# conventions
# ----------------------------------------------------------------------

TOL = 1e-9

#: admissible half-width range for the butterfly neighborhoods
RHO_MAX = 1.0 / 7.0

#: area of the soft set per unit cell: (1/4)^2 + 4 * (1/8)^2
INCLUSION_AREA_FRACTION = 0.125

#: matrix length of one period of the zig-zag crack polyline: 2 * sqrt(2)/4
ZIGZAG_MATRIX_DENSITY = 1.0 / np.sqrt(2.0)

#: matrix length of the horizontal line y = 0 per period
HORIZONTAL_MATRIX_DENSITY = 0.75


def wrap(a):
    """Map coordinates to the centered period [-1/2, 1/2]."""
    a = np.asarray(a, dtype=float)
    return a - np.round(a)


def _check_rho(rho, upper=RHO_MAX):
    if not (0.0 < rho < upper):
        raise ConfigError(f"rho must lie in (0, {upper:.6g}), got {rho}")


# ----------------------------------------------------------------------
# membership predicates
# ----------------------------------------------------------------------

def in_inclusion(x, y):
    """True where (x, y) lies in the closed periodic soft set."""
    xa = np.abs(wrap(x))
    ya = np.abs(wrap(y))
    central = (xa <= 0.125 + TOL) & (ya <= 0.125 + TOL)
    corner = (xa >= 0.375 - TOL) & (ya >= 0.375 - TOL)
    return central | corner


def in_matrix(x, y):
    """True where (x, y) lies in the stiff matrix (open complement)."""
    return ~in_inclusion(x, y)


def _butterfly_quads(rho):
    """The two convex quadrilaterals of T^1(rho), counterclockwise."""
    a = 0.125
    b = 0.375
    lower = np.array(
        [[a, a], [a, a - rho], [b + rho, b], [b, b]], dtype=float)
    upper = np.array(
        [[a, a], [b, b], [b, b + rho], [a - rho, a]], dtype=float)
    return [lower, upper]


def _in_convex(px, py, quad):
    """Half-plane test against a counterclockwise convex polygon."""
    inside = np.ones(np.broadcast(px, py).shape, dtype=bool)
    m = len(quad)
    for i in range(m):
        x0, y0 = quad[i]
        x1, y1 = quad[(i + 1) % m]
        cross = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        inside &= cross >= -TOL
    return inside


def in_butterfly(x, y, rho):
    """True where (x, y) lies in the periodic butterfly union T(rho).

    The four butterflies per cell are the (+-x, +-y) images of T^1, so
    periodic membership folds onto T^1 through |wrap(.)|.
    """
    _check_rho(rho)
    xa = np.abs(wrap(x))
    ya = np.abs(wrap(y))
    hit = np.zeros(np.broadcast(xa, ya).shape, dtype=bool)
    for quad in _butterfly_quads(rho):
        hit |= _in_convex(xa, ya, quad)
    return hit


def in_column(x, y, rho):
    """True where x lies in the open vertical bands U(rho); y is unused."""
    _check_rho(rho, upper=0.125)
    xa = np.abs(wrap(x))
    return (xa > 0.125 + rho) & (xa < 0.5 - rho)


def in_trapezoid(x, y):
    """True inside the closed zig-zag trapezoid row (1-periodic in x).

    Per period the trapezoid has vertices (1/8, 1/8), (3/8, 3/8),
    (5/8, 3/8), (7/8, 1/8): the band 1/8 <= y <= 3/8 cut by the two
    45-degree lines y = x and y = 1 - x through the fractional abscissa.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xf = x - np.floor(x)
    return (
        (y >= 0.125 - TOL)
        & (y <= 0.375 + TOL)
        & (y <= xf + TOL)
        & (y <= 1.0 - xf + TOL)
    )


def in_upper_zigzag(x, y):
    """True in Z: the half-plane y >= 1/8 minus the trapezoid row."""
    y = np.asarray(y, dtype=float)
    return (y >= 0.125 - TOL) & ~in_trapezoid(x, y)


# ----------------------------------------------------------------------
# reference polygons and polylines
# ----------------------------------------------------------------------

def diagonal_segments():
    """The four diagonal segments R^1..R^4 of one cell, shape (4, 2, 2)."""
    base = np.array([[0.125, 0.125], [0.375, 0.375]])
    segs = []
    for sx in (1.0, -1.0):
        for sy in (1.0, -1.0):
            segs.append(base * np.array([sx, sy]))
    return np.array(segs)


def zigzag_polyline(periods=1):
    """Vertices of the zig-zag crack path over ``periods`` cells.

    One period, centered on a soft square at the origin with corner
    blocks at x = +-1/2, reads

        (-1/2, 3/8) - (-3/8, 3/8) - (-1/8, 1/8) - (1/8, 1/8)
                    - (3/8, 3/8) - (1/2, 3/8);

    the horizontal bridges lie on closed soft faces and the diagonals
    cross the matrix, so the matrix length per period is sqrt(2)/2.
    """
    if periods < 1:
        raise ConfigError("periods must be >= 1")
    one = np.array([
        [-0.5, 0.375],
        [-0.375, 0.375],
        [-0.125, 0.125],
        [0.125, 0.125],
        [0.375, 0.375],
        [0.5, 0.375],
    ])
    parts = [one + np.array([i, 0.0]) for i in range(periods)]
    verts = [parts[0]]
    for p in parts[1:]:
        verts.append(p[1:])
    return np.vstack(verts)


def unit_cell_polygons(rho=None):
    """Closed polygons of the cell sets, for rendering and cross-checks.

    Returns a dict with vertex arrays (counterclockwise) for the soft
    squares visible in Q, and, when ``rho`` is given, the eight butterfly
    quadrilaterals and the two column bands clipped to Q.
    """
    c = 0.125
    central = np.array([[-c, -c], [c, -c], [c, c], [-c, c]])
    corners = []
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            x0, x1 = sorted([sx * 0.375, sx * 0.5])
            y0, y1 = sorted([sy * 0.375, sy * 0.5])
            corners.append(np.array(
                [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]))
    out = {
        "inclusion": [central] + corners,
        "trapezoid": np.array(
            [[0.125, 0.125], [0.375, 0.375], [0.625, 0.375], [0.875, 0.125]]),
    }
    if rho is not None:
        _check_rho(rho)
        quads = []
        for quad in _butterfly_quads(rho):
            for sx in (1.0, -1.0):
                for sy in (1.0, -1.0):
                    q = quad * np.array([sx, sy])
                    if sx * sy < 0:
                        q = q[::-1]
                    quads.append(q)
        out["butterfly"] = quads
        bands = []
        for lo, hi in ((-0.5 + rho, -0.125 - rho), (0.125 + rho, 0.5 - rho)):
            bands.append(np.array(
                [[lo, -0.5], [hi, -0.5], [hi, 0.5], [lo, 0.5]]))
        out["column"] = bands
    return out


# ----------------------------------------------------------------------
# exact segment clipping
# ----------------------------------------------------------------------

def _line_crossings(a0, a1, levels):
    """Parameters s in (0, 1) where a0 + s (a1 - a0) crosses the levels."""
    da = a1 - a0
    if da == 0.0:
        return []
    lo, hi = (a0, a1) if a0 < a1 else (a1, a0)
    out = []
    for base in levels:
        m0 = int(np.floor(lo - base))
        m1 = int(np.ceil(hi - base))
        for m in range(m0, m1 + 1):
            s = (base + m - a0) / da
            if 0.0 < s < 1.0:
                out.append(s)
    return out


def _clip_convex_interval(p0, p1, quad):
    """Parameter interval of a segment inside a convex polygon, or None."""
    d = p1 - p0
    s_lo, s_hi = 0.0, 1.0
    m = len(quad)
    for i in range(m):
        x0, y0 = quad[i]
        x1, y1 = quad[(i + 1) % m]
        ex, ey = x1 - x0, y1 - y0
        # inward normal of a counterclockwise edge is (-ey, ex)
        num = -ey * (p0[0] - x0) + ex * (p0[1] - y0)
        den = -ey * d[0] + ex * d[1]
        if abs(den) < 1e-300:
            if num < -TOL:
                return None
            continue
        s = -num / den
        if den > 0.0:
            s_lo = max(s_lo, s)
        else:
            s_hi = min(s_hi, s)
        if s_lo >= s_hi:
            return None
    return (s_lo, s_hi)


def _merged_length(intervals):
    """Total length of a union of parameter intervals."""
    if not intervals:
        return 0.0
    intervals = sorted(intervals)
    total = 0.0
    cur_lo, cur_hi = intervals[0]
    for lo, hi in intervals[1:]:
        if lo > cur_hi:
            total += cur_hi - cur_lo
            cur_lo, cur_hi = lo, hi
        else:
            cur_hi = max(cur_hi, hi)
    total += cur_hi - cur_lo
    return total


def clip_segment_length(p0, p1, region, rho=None, scale=1.0):
    """Exact length of a segment inside a periodic region.

    Parameters
    ----------
    p0, p1 : array-like, shape (2,)
        Segment endpoints in domain coordinates.
    region : {"matrix", "inclusion", "butterfly", "column", \
"butterfly_and_column"}
        Region to clip against.
    rho : float, optional
        Butterfly or column half-width; required by those regions.
    scale : float
        Cell size of the region's periodic pattern; the geometry is
        evaluated at (x / scale, y / scale).

    The regions are bounded by finitely many lines of the periodic
    families, so the clip is exact: breakpoints are collected where the
    segment crosses a boundary line and each sub-interval is classified
    at its midpoint.  Butterfly clipping intersects against each convex
    quadrilateral and merges the parameter intervals, so the shared base
    segments are not double counted.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.hypot(*(p1 - p0)))
    if length == 0.0:
        return 0.0
    q0 = p0 / scale
    q1 = p1 / scale

    if region in ("matrix", "inclusion"):
        levels = [-0.375, -0.125, 0.125, 0.375]
        s_pts = sorted(
            [0.0, 1.0]
            + _line_crossings(q0[0], q1[0], levels)
            + _line_crossings(q0[1], q1[1], levels)
        )
        inside = 0.0
        for a, b in zip(s_pts[:-1], s_pts[1:]):
            if b - a <= 0.0:
                continue
            sm = 0.5 * (a + b)
            mx = q0[0] + sm * (q1[0] - q0[0])
            my = q0[1] + sm * (q1[1] - q0[1])
            if bool(in_inclusion(mx, my)):
                inside += b - a
        frac = inside if region == "inclusion" else 1.0 - inside
        return length * frac

    if region == "column":
        return length * _merged_length(_column_intervals(q0, q1, rho))

    if region == "butterfly":
        return length * _merged_length(_butterfly_intervals(q0, q1, rho))

    if region == "butterfly_and_column":
        return length * _intersection_length(
            _butterfly_intervals(q0, q1, rho),
            _column_intervals(q0, q1, rho))

    raise ConfigError(f"unknown region {region!r}")


def _column_intervals(q0, q1, rho):
    """Parameter intervals of a segment inside the columns U(rho)."""
    if rho is None:
        raise ConfigError("region 'column' requires rho")
    _check_rho(rho, upper=0.125)
    levels = [
        -0.5 + rho, -0.125 - rho, 0.125 + rho, 0.5 - rho,
    ]
    s_pts = sorted([0.0, 1.0] + _line_crossings(q0[0], q1[0], levels))
    out = []
    for a, b in zip(s_pts[:-1], s_pts[1:]):
        if b - a <= 0.0:
            continue
        sm = 0.5 * (a + b)
        mx = q0[0] + sm * (q1[0] - q0[0])
        if bool(in_column(mx, 0.0, rho)):
            out.append((a, b))
    return out


def _butterfly_intervals(q0, q1, rho):
    """Parameter intervals of a segment inside the butterflies T(rho)."""
    if rho is None:
        raise ConfigError("region 'butterfly' requires rho")
    _check_rho(rho)
    quads = []
    for quad in _butterfly_quads(rho):
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                q = quad * np.array([sx, sy])
                if sx * sy < 0:
                    q = q[::-1]
                quads.append(q)
    mlo = int(np.floor(min(q0[0], q1[0]))) - 1
    mhi = int(np.ceil(max(q0[0], q1[0]))) + 1
    nlo = int(np.floor(min(q0[1], q1[1]))) - 1
    nhi = int(np.ceil(max(q0[1], q1[1]))) + 1
    intervals = []
    for mx in range(mlo, mhi + 1):
        for my in range(nlo, nhi + 1):
            shift = np.array([mx, my], dtype=float)
            for quad in quads:
                iv = _clip_convex_interval(q0 - shift, q1 - shift, quad)
                if iv is not None and iv[1] > iv[0]:
                    intervals.append(iv)
    return intervals


def _intersection_length(a, b):
    """Length of the intersection of two unions of parameter intervals."""
    def merged(ivs):
        if not ivs:
            return []
        ivs = sorted(ivs)
        out = [list(ivs[0])]
        for lo, hi in ivs[1:]:
            if lo > out[-1][1]:
                out.append([lo, hi])
            else:
                out[-1][1] = max(out[-1][1], hi)
        return out

    a = merged(a)
    b = merged(b)
    i = j = 0
    total = 0.0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            total += hi - lo
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return total


def polyline_region_length(vertices, region, rho=None, scale=1.0):
    """Sum of clip_segment_length over consecutive vertex pairs."""
    vertices = np.asarray(vertices, dtype=float)
    total = 0.0
    for a, b in zip(vertices[:-1], vertices[1:]):
        total += clip_segment_length(a, b, region, rho=rho, scale=scale)
    return total


# ----------------------------------------------------------------------
# vectorized clips for short lattice segments
# ----------------------------------------------------------------------

def clip_segments_inclusion_batch(P0, P1, scale=1.0):
    """Soft-set length of many short segments at once.

    Each segment must span less than ~0.3 periods in either coordinate so
    that recentering about the rounded midpoint keeps it away from the
    wrap seam; lattice dual segments (length <= sqrt(2) h) qualify.
    Returns the per-segment length inside the closed soft set.
    """
    P0 = np.asarray(P0, dtype=float) / scale
    P1 = np.asarray(P1, dtype=float) / scale
    mid = 0.5 * (P0 + P1)
    ref = np.round(mid)
    A = P0 - ref
    B = P1 - ref
    d = B - A
    seg_len = np.hypot(d[..., 0], d[..., 1])

    levels = np.array([-0.375, -0.125, 0.125, 0.375])
    n = A.shape[0]
    cand = np.full((n, 10), np.nan)
    cand[:, 0] = 0.0
    cand[:, 1] = 1.0
    for axis in range(2):
        a = A[:, axis]
        da = d[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (levels[None, :] - a[:, None]) / da[:, None]
        s[(s <= 0.0) | (s >= 1.0) | ~np.isfinite(s)] = np.nan
        cand[:, 2 + 4 * axis: 6 + 4 * axis] = s
    cand = np.where(np.isnan(cand), 2.0, cand)
    cand.sort(axis=1)

    lo = cand[:, :-1]
    hi = cand[:, 1:]
    width = np.clip(hi, 0.0, 1.0) - np.clip(lo, 0.0, 1.0)
    sm = 0.5 * (np.clip(lo, 0.0, 1.0) + np.clip(hi, 0.0, 1.0))
    mx = A[:, 0][:, None] + sm * d[:, 0][:, None]
    my = A[:, 1][:, None] + sm * d[:, 1][:, None]
    central = (np.abs(mx) <= 0.125 + TOL) & (np.abs(my) <= 0.125 + TOL)
    corner = (np.abs(mx) >= 0.375 - TOL) & (np.abs(my) >= 0.375 - TOL)
    inside = central | corner
    frac = np.sum(np.where(inside, width, 0.0), axis=1)
    return seg_len * frac * scale


# ----------------------------------------------------------------------
# geometry description record
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class MicroGeometry:
    """Parameters of the periodic microstructure.

    The soft-set layout is fixed (side-1/4 squares on the integer and
    half-integer lattices); ``rho`` only sizes the butterfly
    neighborhoods T(rho) and the vertical columns U(rho) used for
    localization diagnostics, so it must stay below the pinch bound 1/7.
    """

    rho: float = 0.05
    period: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.rho < RHO_MAX):
            raise ConfigError(
                f"rho must lie in (0, 1/7), got {self.rho}")
        if self.period <= 0.0:
            raise ConfigError(f"period must be positive, got {self.period}")
