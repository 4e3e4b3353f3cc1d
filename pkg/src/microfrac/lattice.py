"""Finite-difference lattice over Q = (-1/2, 1/2)^2 at microstructure scale.

The domain is divided into N x N pixels, N = k * n_per_period, with grid
step h = 1/N and nodes at (xs[ix], ys[iy]), both axes from -1/2 to 1/2.
The microstructure has period eps = 1/k, so each period is resolved by
n_per_period grid cells.  Node numbering is row-major:
``node_id = iy * (N + 1) + ix``.

Four element families carry the discrete energy:

* vertical edges   V[jy, ix], shape (N, N+1): node (jy, ix) -- (jy+1, ix);
* horizontal edges H[jy, ix], shape (N+1, N): node (jy, ix) -- (jy, ix+1);
* diagonal interface elements NE[cy, cx] and SE[cy, cx], shape
  (N-1, N-1), crack carriers without conductance (see below).

Axis edges carry conductance 1 where the edge midpoint lies in the stiff
matrix and eps inside the soft set (ties resolve to soft, which is
closed).  The bulk energy is sum w * c * (du)^2 with w = 1 on interior
dual cells and 1/2 where the edge's dual segment is halved by the domain
boundary; this reproduces the Dirichlet integral of the bilinear
interpolant exactly for fields that are affine per grid line.

A crack is a set of broken elements.  Its geometric length is the length
of the dual polyline: every element owns the dual segment that crosses
it, clipped to the domain, and ``break_cost`` is that segment's length
(h, or h/2 on the outermost rows/columns; h * sqrt(2) for diagonals).
The dual segment of NE[cy, cx] runs at 45 degrees from the center of
pixel (cx, cy) to the center of pixel (cx+1, cy+1), passing through node
(cx+1, cy+1); breaking it severs the two axis edges the thickened
interface crosses, V[cy, cx+1] and H[cy+1, cx+1] (the node on the line
attaches to the upper-left side).  SE[cy, cx] runs from the center of
pixel (cx, cy+1) to the center of pixel (cx+1, cy) and severs
H[cy+1, cx] and V[cy, cx+1] (the node attaches to the upper-right side).
Severed ("shadowed") edges lose their conductance but contribute no
length of their own; only explicitly broken elements are scored.

Per-family flat ids are row-major; global element ids stack the families
in the order V, H, NE, SE.
"""

from __future__ import annotations

import csv
import gzip
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import ConfigError

SQRT2 = float(np.sqrt(2.0))


def perforation_value(axis_num, diag_num, denom):
    """Exact-rational cut value ``axis/denom + sqrt(2) * diag/denom``.

    Matrix-clipped lengths are rationals over one lattice-wide
    denominator (axis elements) plus sqrt(2) times such a rational
    (diagonal elements).  Keeping the integer numerators and converting
    once makes equal cuts compare bit-identically and grid-aligned
    values exact: a dual row crossing the squares head-on sums to
    3/4 * denom, which floats to exactly 0.75.

    Accepts scalars or numpy integer arrays.
    """
    if isinstance(axis_num, np.ndarray) or isinstance(diag_num, np.ndarray):
        a = np.asarray(axis_num, dtype=np.float64)
        b = np.asarray(diag_num, dtype=np.float64)
        return a / denom + SQRT2 * (b / denom)
    return float(axis_num) / denom + SQRT2 * (float(diag_num) / denom)


# ----------------------------------------------------------------------
# model types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeModel:
    """Immutable discretization of the heterogeneous cell problem."""

    k: int
    n_per_period: int
    N: int
    h: float
    eps: float
    xs: np.ndarray          # node abscissas, (N+1,)
    ys: np.ndarray          # node ordinates, (N+1,)
    cond_v: np.ndarray      # (N, N+1) conductance of vertical edges
    cond_h: np.ndarray      # (N+1, N) conductance of horizontal edges
    soft_v: np.ndarray      # (N, N+1) True where the edge midpoint is soft
    soft_h: np.ndarray      # (N+1, N)
    cost_v: np.ndarray      # (N, N+1) break cost = dual segment length
    cost_h: np.ndarray      # (N+1, N)
    cost_ne: np.ndarray     # (N-1, N-1)
    cost_se: np.ndarray     # (N-1, N-1)
    weight_v: np.ndarray    # (N, N+1) bulk quadrature weight
    weight_h: np.ndarray    # (N+1, N)
    matlen_v: np.ndarray    # (N, N+1) dual-segment length inside the matrix
    matlen_h: np.ndarray    # (N+1, N)
    matlen_ne: np.ndarray   # (N-1, N-1)
    matlen_se: np.ndarray   # (N-1, N-1)
    matnum_v: np.ndarray    # integer numerators behind matlen (see
    matnum_h: np.ndarray    # perforation_value); diagonals carry the
    matnum_ne: np.ndarray   # sqrt(2) factor implicitly
    matnum_se: np.ndarray
    mat_denom: int = 1
    rho: float = 0.05

    @property
    def n_nodes(self):
        return (self.N + 1) * (self.N + 1)

    def counts(self):
        """Element counts per family (V, H, NE, SE)."""
        N = self.N
        return (N * (N + 1), (N + 1) * N, (N - 1) ** 2, (N - 1) ** 2)

    def offsets(self):
        """Global id offsets of the four families."""
        cv, ch, cne, _ = self.counts()
        return (0, cv, cv + ch, cv + ch + cne)


@dataclass(frozen=True)
class BoundaryCondition:
    """Strip boundary data: 0 below, t above, free middle band.

    ``delta`` is the total clamped height fraction: nodes with
    |y| >= (1 - delta) / 2 are prescribed, so the free band has height
    1 - delta and the crack-free homogeneous bulk energy is
    t^2 / (1 - delta).
    """

    t: float
    delta: float = 0.25

    def __post_init__(self):
        if self.t < 0.0:
            raise ConfigError(f"load t must be >= 0, got {self.t}")
        if not (0.0 < self.delta < 1.0):
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class BoundaryMasks:
    """Clamp layout derived from a BoundaryCondition on a lattice."""

    bc: BoundaryCondition
    row_side: np.ndarray        # (N+1,) -1 lower clamp, +1 upper, 0 free
    row_value: np.ndarray       # (N+1,) prescribed value where clamped
    unbreakable_v: np.ndarray   # (N, N+1)
    unbreakable_h: np.ndarray   # (N+1, N)
    unbreakable_ne: np.ndarray  # (N-1, N-1)
    unbreakable_se: np.ndarray  # (N-1, N-1)

    @property
    def clamped_rows(self):
        return self.row_side != 0

    def node_values(self, N):
        """Full nodal field holding clamp values (free rows left at 0)."""
        u = np.zeros((N + 1, N + 1))
        u[:, :] = self.row_value[:, None]
        return u


# ----------------------------------------------------------------------
# construction
# ----------------------------------------------------------------------

def build_lattice(geom, k, n_per_period):
    """Build the lattice for microstructure scale eps = 1/k.

    Parameters
    ----------
    geom : geometry.MicroGeometry or None
        Carries the butterfly half-width rho used by diagnostics.
    k : int
        Inverse microstructure scale; odd positive integer.
    n_per_period : int
        Grid cells per microstructure period; at least 8 so the 1/8-wide
        corner blocks are resolved.
    """
    if k < 1 or k % 2 == 0:
        raise ConfigError(f"k must be an odd positive integer, got {k}")
    if n_per_period < 8:
        raise ConfigError(
            "n_per_period must be >= 8 to resolve the corner inclusions, "
            f"got {n_per_period}")
    rho = 0.05 if geom is None else float(geom.rho)

    N = k * n_per_period
    h = 1.0 / N
    eps = 1.0 / k
    xs = np.linspace(-0.5, 0.5, N + 1)
    ys = np.linspace(-0.5, 0.5, N + 1)

    # conductance from the soft-set membership of edge midpoints,
    # evaluated in microstructure coordinates (x/eps, y/eps)
    mx_v, my_v = np.meshgrid(xs, ys[:-1] + 0.5 * h)
    soft_v = geometry.in_inclusion(mx_v / eps, my_v / eps)
    mx_h, my_h = np.meshgrid(xs[:-1] + 0.5 * h, ys)
    soft_h = geometry.in_inclusion(mx_h / eps, my_h / eps)
    cond_v = np.where(soft_v, eps, 1.0)
    cond_h = np.where(soft_h, eps, 1.0)

    # break cost = dual segment length clipped to the domain
    cost_v = np.full((N, N + 1), h)
    cost_v[:, 0] = 0.5 * h
    cost_v[:, N] = 0.5 * h
    cost_h = np.full((N + 1, N), h)
    cost_h[0, :] = 0.5 * h
    cost_h[N, :] = 0.5 * h
    cost_ne = np.full((N - 1, N - 1), h * SQRT2)
    cost_se = np.full((N - 1, N - 1), h * SQRT2)

    weight_v = cost_v / h
    weight_h = cost_h / h

    nums, denom = _matrix_numerators(k, n_per_period)
    matlen_v = nums["v"] / denom
    matlen_h = nums["h"] / denom
    matlen_ne = SQRT2 * (nums["ne"] / denom)
    matlen_se = SQRT2 * (nums["se"] / denom)

    return LatticeModel(
        k=k, n_per_period=n_per_period, N=N, h=h, eps=eps, xs=xs, ys=ys,
        cond_v=cond_v, cond_h=cond_h, soft_v=soft_v, soft_h=soft_h,
        cost_v=cost_v, cost_h=cost_h, cost_ne=cost_ne, cost_se=cost_se,
        weight_v=weight_v, weight_h=weight_h,
        matlen_v=matlen_v, matlen_h=matlen_h,
        matlen_ne=matlen_ne, matlen_se=matlen_se,
        matnum_v=nums["v"], matnum_h=nums["h"],
        matnum_ne=nums["ne"], matnum_se=nums["se"],
        mat_denom=denom, rho=rho)


def _matrix_numerators(k, n):
    """Integer matrix lengths of all dual segments.

    Every relevant coordinate is a multiple of 1/D with
    D = 2 k lcm(n, 4): dual endpoints sit on the half-step grid and the
    soft-set boundaries on the (1/8)-of-a-period grid.  A dual segment
    crosses boundaries only at whole D-units, so classifying each unit
    subinterval at its (never-on-boundary) midpoint measures the clip
    exactly in integers.  Diagonal numerators count units of horizontal
    extent; their geometric length carries the sqrt(2) factor.
    """
    N = k * n
    L4 = math.lcm(n, 4)
    D = 2 * k * L4
    P = D // k           # microstructure period
    hu = D // N          # grid step
    half = hu // 2
    c2 = P // 4          # inclusion half-width 1/8 of a period, doubled
    b2 = 3 * P // 4      # corner-band threshold 3/8 of a period, doubled
    P2 = 2 * P

    def inside2(px, py):
        # membership of (px, py) given in doubled D-units; midpoints are
        # odd so they never land on the (even) boundaries
        vx = px % P2
        wx = np.minimum(vx, P2 - vx)
        vy = py % P2
        wy = np.minimum(vy, P2 - vy)
        central = (wx <= c2) & (wy <= c2)
        corner = (wx >= b2) & (wy >= b2)
        return central | corner

    node = -D // 2 + hu * np.arange(N + 1, dtype=np.int64)

    def clip_num(X0, Y0, dX, dY, L):
        num = np.zeros(X0.shape, dtype=np.int64)
        for j in range(int(L.max())):
            px = 2 * X0 + dX * (2 * j + 1)
            py = 2 * Y0 + dY * (2 * j + 1)
            num += (j < L) & inside2(px, py)
        return L - num

    out = {}
    # vertical edges: horizontal dual segments at y = node + half
    X0 = np.maximum(node - half, -D // 2)
    X1 = np.minimum(node + half, D // 2)
    L = np.broadcast_to((X1 - X0)[None, :], (N, N + 1))
    X0 = np.broadcast_to(X0[None, :], (N, N + 1))
    Y0 = np.broadcast_to((node[:-1] + half)[:, None], (N, N + 1))
    out["v"] = clip_num(X0, Y0, 1, 0, L)

    # horizontal edges: vertical dual segments at x = node + half
    Y0v = np.maximum(node - half, -D // 2)
    Y1v = np.minimum(node + half, D // 2)
    L = np.broadcast_to((Y1v - Y0v)[:, None], (N + 1, N))
    Y0 = np.broadcast_to(Y0v[:, None], (N + 1, N))
    X0 = np.broadcast_to((node[:-1] + half)[None, :], (N + 1, N))
    out["h"] = clip_num(X0, Y0, 0, 1, L)

    ctr = node[:-2] + half
    X0 = np.broadcast_to(ctr[None, :], (N - 1, N - 1))
    L = np.full((N - 1, N - 1), hu, dtype=np.int64)
    Y0 = np.broadcast_to(ctr[:, None], (N - 1, N - 1))
    out["ne"] = clip_num(X0, Y0, 1, 1, L)
    Y0 = np.broadcast_to((node[1:-1] + half)[:, None], (N - 1, N - 1))
    out["se"] = clip_num(X0, Y0, 1, -1, L)
    return out, D


def dual_segments(lattice, kind):
    """Dual segments of one element family, domain-clipped.

    Returns (P0, P1), each shaped (count, 2), in row-major element order.
    """
    N, h = lattice.N, lattice.h
    xs, ys = lattice.xs, lattice.ys
    if kind == "v":
        x0 = np.maximum(xs - 0.5 * h, -0.5)
        x1 = np.minimum(xs + 0.5 * h, 0.5)
        yc = ys[:-1] + 0.5 * h
        X0, Y = np.meshgrid(x0, yc)
        X1, _ = np.meshgrid(x1, yc)
        P0 = np.stack([X0.ravel(), Y.ravel()], axis=1)
        P1 = np.stack([X1.ravel(), Y.ravel()], axis=1)
    elif kind == "h":
        y0 = np.maximum(ys - 0.5 * h, -0.5)
        y1 = np.minimum(ys + 0.5 * h, 0.5)
        xc = xs[:-1] + 0.5 * h
        X, Y0 = np.meshgrid(xc, y0)
        _, Y1 = np.meshgrid(xc, y1)
        P0 = np.stack([X.ravel(), Y0.ravel()], axis=1)
        P1 = np.stack([X.ravel(), Y1.ravel()], axis=1)
    elif kind == "ne":
        cx = xs[:-2] + 0.5 * h
        cy = ys[:-2] + 0.5 * h
        X, Y = np.meshgrid(cx, cy)
        P0 = np.stack([X.ravel(), Y.ravel()], axis=1)
        P1 = P0 + h
    elif kind == "se":
        cx = xs[:-2] + 0.5 * h
        cy = ys[1:-1] + 0.5 * h
        X, Y = np.meshgrid(cx, cy)
        P0 = np.stack([X.ravel(), Y.ravel()], axis=1)
        P1 = P0 + np.array([h, -h])
    else:
        raise ConfigError(f"unknown element kind {kind!r}")
    return P0, P1


# ----------------------------------------------------------------------
# boundary conditions
# ----------------------------------------------------------------------

def apply_bc(lattice, bc):
    """Clamp layout for strip boundary data.

    Rows with y <= -(1 - delta)/2 hold 0, rows with y >= (1 - delta)/2
    hold t.  Edges joining two prescribed nodes are unbreakable: the
    minimum problem fixes the field there, so no admissible competitor
    jumps strictly inside a clamp.  A diagonal element is unbreakable
    when either axis edge it would sever is.
    """
    N = lattice.N
    ys = lattice.ys
    half = 0.5 * (1.0 - bc.delta)
    row_side = np.zeros(N + 1, dtype=np.int8)
    row_side[ys <= -half + 1e-12] = -1
    row_side[ys >= half - 1e-12] = 1

    n_lo = int(np.sum(row_side == -1))
    n_hi = int(np.sum(row_side == 1))
    n_free = int(np.sum(row_side == 0))
    if n_lo < 2 or n_hi < 2:
        raise ConfigError(
            f"delta={bc.delta} clamps fewer than 2 node rows per strip "
            f"(lower {n_lo}, upper {n_hi}) at N={N}")
    if n_free < 1:
        raise ConfigError(
            f"delta={bc.delta} leaves no free node rows at N={N}")

    row_value = np.where(row_side > 0, bc.t, 0.0)

    clamped = row_side != 0
    same_side_v = clamped[:-1] & clamped[1:] & (row_side[:-1] == row_side[1:])
    unbreakable_v = np.repeat(same_side_v[:, None], N + 1, axis=1)
    unbreakable_h = np.repeat(clamped[:, None], N, axis=1)
    # NE[cy, cx] severs V[cy, cx+1] and H[cy+1, cx+1];
    # SE[cy, cx] severs H[cy+1, cx] and V[cy, cx+1]
    unbreakable_ne = (
        unbreakable_v[: N - 1, 1:N] | unbreakable_h[1:N, 1:N])
    unbreakable_se = (
        unbreakable_v[: N - 1, 1:N] | unbreakable_h[1:N, : N - 1])
    return BoundaryMasks(
        bc=bc, row_side=row_side, row_value=row_value,
        unbreakable_v=unbreakable_v, unbreakable_h=unbreakable_h,
        unbreakable_ne=unbreakable_ne, unbreakable_se=unbreakable_se)


# ----------------------------------------------------------------------
# external inspection
# ----------------------------------------------------------------------

def dump_edges(lattice, path, rho=None):
    """Write the element list as a gzip-compressed CSV.

    Columns: kind, id (global), row, col, x0, y0, x1, y1, conductance,
    break_cost, soft, butterfly, column.  Axis edges report their primal
    node endpoints; diagonal elements report their dual segment.  Region
    flags are evaluated at the element midpoint in microstructure
    coordinates; butterfly and column columns are empty unless ``rho``
    is given.
    """
    if rho is None:
        rho = lattice.rho
    N = lattice.N
    xs, ys = lattice.xs, lattice.ys
    off = lattice.offsets()
    rows_out = []

    def flags(mx, my):
        soft = bool(geometry.in_inclusion(mx / lattice.eps,
                                          my / lattice.eps))
        bf = bool(geometry.in_butterfly(mx / lattice.eps,
                                        my / lattice.eps, rho))
        col = bool(geometry.in_column(mx / lattice.eps,
                                      my / lattice.eps, rho))
        return int(soft), int(bf), int(col)

    for jy in range(N):
        for ix in range(N + 1):
            gid = off[0] + jy * (N + 1) + ix
            mx, my = xs[ix], ys[jy] + 0.5 * lattice.h
            s, bf, col = flags(mx, my)
            rows_out.append((
                "v", gid, jy, ix, xs[ix], ys[jy], xs[ix], ys[jy + 1],
                lattice.cond_v[jy, ix], lattice.cost_v[jy, ix], s, bf, col))
    for jy in range(N + 1):
        for ix in range(N):
            gid = off[1] + jy * N + ix
            mx, my = xs[ix] + 0.5 * lattice.h, ys[jy]
            s, bf, col = flags(mx, my)
            rows_out.append((
                "h", gid, jy, ix, xs[ix], ys[jy], xs[ix + 1], ys[jy],
                lattice.cond_h[jy, ix], lattice.cost_h[jy, ix], s, bf, col))
    for kind, off_i in (("ne", off[2]), ("se", off[3])):
        P0, P1 = dual_segments(lattice, kind)
        cost = getattr(lattice, f"cost_{kind}").reshape(-1)
        mids = 0.5 * (P0 + P1)
        for i in range(P0.shape[0]):
            cy, cx = divmod(i, N - 1)
            s, bf, col = flags(mids[i, 0], mids[i, 1])
            rows_out.append((
                kind, off_i + i, cy, cx, P0[i, 0], P0[i, 1],
                P1[i, 0], P1[i, 1], 0.0, cost[i], s, bf, col))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([
        "kind", "id", "row", "col", "x0", "y0", "x1", "y1",
        "conductance", "break_cost", "soft", "butterfly", "column"])
    for row in rows_out:
        writer.writerow([
            row[0], row[1], row[2], row[3],
            *(f"{v:.12g}" for v in row[4:10]),
            row[10], row[11], row[12]])
    # filename="" keeps the gzip header free of the output path, so the
    # bytes depend only on the lattice
    with open(path, "wb") as raw:
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw,
                           mtime=0) as fh:
            fh.write(buf.getvalue().encode("ascii"))
