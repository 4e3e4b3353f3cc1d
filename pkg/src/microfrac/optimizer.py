"""Low-energy crack search: exact cuts, constructions, local descent.

Three complementary strategies, plus an exhaustive oracle for tiny
instances:

* shortest-path minimum cuts in the dual lattice (exact for the
  perforation cell problem, where crossing the soft squares is free);
* the explicit competitor fields: a straight horizontal crack and the
  deflected zig-zag crack that bridges across soft inclusions;
* alternating minimization of the full energy (solve, then break
  overloaded edges, with an occasional completion move that tests a
  minimum-cost finishing cut).

A crack's dual path runs between pixel centers; moving from one pixel
to a neighbor crosses exactly one element (the shared axis edge, or a
diagonal interface element for corner moves).  Shortest paths therefore
cost exactly the length of the crack they trace.
"""

from __future__ import annotations

import heapq
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import CapacityError, ConfigError
from .lattice import BoundaryCondition, apply_bc, perforation_value
from .solver import (CrackState, DisplacementField, EnergyBreakdown, energy,
                     solve_displacement)

# largest load for which the deflected construction keeps its ramp
# rectangles inside the quarter-cell around each diagonal
T_MAX_BRIDGING = (math.sqrt(2.0) - 1.0) / 4.0

# a straight crack counts as having reached the plateau when it comes
# within this margin of the best competitor
T0_TOL = 0.02

SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# query and result records
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class CutQuery:
    """A minimum-cut request against one lattice.

    ``mode`` selects the weighting: "perforation" scores only matrix
    length (soft sets are free to cross), "full" scores every element's
    break cost and treats a constraint crack's elements as already paid.
    """

    mode: str = "perforation"
    constraint: Optional[CrackState] = None
    restrict_horizontal: bool = False
    y_level: float = 0.0

    def __post_init__(self):
        if self.mode not in ("perforation", "full"):
            raise ConfigError(f"unknown cut mode {self.mode!r}")


class ConstructionResult(NamedTuple):
    u: DisplacementField
    crack: CrackState
    energy: EnergyBreakdown


@dataclass
class AlternateResult:
    """Fixpoint of the alternating scheme (or best iterate at the cap)."""

    u: DisplacementField
    crack: CrackState
    energy: EnergyBreakdown
    converged: bool
    iterations: int
    history: list


@dataclass
class OracleResult:
    crack: CrackState
    energy: float
    breakdown: Optional[EnergyBreakdown]
    candidates: int
    weights: str


@dataclass
class DensityEstimate:
    """Best competitor energy at one load of a sweep."""

    t: float
    g_upper: float
    construction: str
    t0_estimate: float
    bulk_matrix: float
    bulk_soft: float
    surface: float
    crack: CrackState = field(repr=False, default=None)


# ----------------------------------------------------------------------
# dual-graph shortest path
# ----------------------------------------------------------------------

def _dual_shortest_path(N, wv, wh, wne, wse, rows=None):
    """Minimum-cost left-to-right path between pixel centers.

    Weights are per-element arrays (np.inf forbids an element).  ``rows``
    optionally restricts the pixel rows the path may visit.  Ties break
    lexicographically by (cost, edge count, vertex id) so outputs are
    deterministic.  Returns (elements, cost) with elements a list of
    (kind, row, col) element indices in path order, or (None, inf) when
    no path exists.
    """
    source = N * N
    sink = N * N + 1
    if rows is None:
        allowed = np.ones(N, dtype=bool)
    else:
        allowed = np.zeros(N, dtype=bool)
        allowed[list(rows)] = True
        if not allowed.any():
            raise ConfigError("row restriction excludes every pixel row")

    dist = np.full(N * N + 2, np.inf)
    nedg = np.full(N * N + 2, np.iinfo(np.int64).max)
    pred = {}
    dist[source] = 0.0
    nedg[source] = 0
    heap = [(0.0, 0, source)]

    def relax(d, ne, vid, nvid, w, elem):
        if not np.isfinite(w):
            return
        nd = d + w
        nne = ne + 1
        if nd < dist[nvid] or (nd == dist[nvid] and nne < nedg[nvid]):
            dist[nvid] = nd
            nedg[nvid] = nne
            pred[nvid] = (vid, elem)
            heapq.heappush(heap, (nd, nne, nvid))

    while heap:
        d, ne, vid = heapq.heappop(heap)
        if d > dist[vid] or (d == dist[vid] and ne > nedg[vid]):
            continue
        if vid == sink:
            break
        if vid == source:
            for cy in range(N):
                if allowed[cy]:
                    relax(d, ne, vid, cy * N, wv[cy, 0], ("v", cy, 0))
            continue
        cy, cx = divmod(vid, N)
        if cx + 1 < N:
            relax(d, ne, vid, vid + 1, wv[cy, cx + 1], ("v", cy, cx + 1))
        if cx > 0:
            relax(d, ne, vid, vid - 1, wv[cy, cx], ("v", cy, cx))
        if cy + 1 < N and allowed[cy + 1]:
            relax(d, ne, vid, vid + N, wh[cy + 1, cx], ("h", cy + 1, cx))
        if cy > 0 and allowed[cy - 1]:
            relax(d, ne, vid, vid - N, wh[cy, cx], ("h", cy, cx))
        if cx <= N - 2 and cy <= N - 2 and allowed[cy + 1]:
            relax(d, ne, vid, vid + N + 1, wne[cy, cx], ("ne", cy, cx))
        if cx > 0 and cy > 0 and allowed[cy - 1]:
            relax(d, ne, vid, vid - N - 1, wne[cy - 1, cx - 1],
                  ("ne", cy - 1, cx - 1))
        if cy > 0 and cx <= N - 2 and allowed[cy - 1]:
            relax(d, ne, vid, vid - N + 1, wse[cy - 1, cx], ("se", cy - 1, cx))
        if cx > 0 and cy + 1 < N and allowed[cy + 1]:
            relax(d, ne, vid, vid + N - 1, wse[cy, cx - 1],
                  ("se", cy, cx - 1))
        if cx == N - 1:
            relax(d, ne, vid, sink, wv[cy, N], ("v", cy, N))

    if not np.isfinite(dist[sink]):
        return None, float("inf")
    elements = []
    vid = sink
    while vid != source:
        vid, elem = pred[vid]
        elements.append(elem)
    elements.reverse()
    return elements, float(dist[sink])


def _canonical_cost(elements, wv, wh, wne, wse, N):
    """Re-sum a path's weights in fixed (family, id) order.

    Summation order is independent of how the path was found, so two
    searches returning the same element set report bit-identical costs.
    """
    per = {"v": [], "h": [], "ne": [], "se": []}
    cols = {"v": N + 1, "h": N, "ne": N - 1, "se": N - 1}
    for kind, r, c in elements:
        per[kind].append(r * cols[kind] + c)
    arrays = {"v": wv, "h": wh, "ne": wne, "se": wse}
    parts = []
    for kind in ("v", "h", "ne", "se"):
        if per[kind]:
            ids = np.sort(np.asarray(per[kind], dtype=np.int64))
            parts.append(arrays[kind].ravel()[ids])
    if not parts:
        return 0.0
    return float(np.sum(np.concatenate(parts)))


def _elements_to_crack(N, elements):
    crack = CrackState.empty(N)
    masks = {"v": crack.bv, "h": crack.bh, "ne": crack.bne, "se": crack.bse}
    for kind, r, c in elements:
        masks[kind][r, c] = True
    return crack


def _perforation_cost(lattice, elements):
    """Exact-rational matrix length of an element set.

    Sums the integer numerators per family and converts once, so equal
    cuts get bit-identical values regardless of path order.
    """
    axis = 0
    diag = 0
    nums = {"v": lattice.matnum_v, "h": lattice.matnum_h,
            "ne": lattice.matnum_ne, "se": lattice.matnum_se}
    for kind, r, c in elements:
        if kind in ("v", "h"):
            axis += int(nums[kind][r, c])
        else:
            diag += int(nums[kind][r, c])
    return perforation_value(axis, diag, lattice.mat_denom)


# ----------------------------------------------------------------------
# minimum cuts
# ----------------------------------------------------------------------

def min_cut_perforation(lattice, *, restrict_horizontal=False, y_level=0.0,
                        rows=None):
    """Minimum matrix-length separating cut (perforation weighting).

    Crossing the soft squares costs nothing; matrix crossings cost the
    exact matrix-clipped length of each dual segment, so a straight dual
    row reproduces the continuum line measure of the matrix on that
    height.  With ``restrict_horizontal`` the path is confined to the
    dual row whose height is closest to ``y_level`` (ties resolve to the
    lower row).

    Returns
    -------
    (length, CrackState)
        Canonically re-summed cut length and the cut's element set.
    """
    N = lattice.N
    if restrict_horizontal:
        if rows is not None:
            raise ConfigError("pass either rows or restrict_horizontal")
        if not (-0.5 <= y_level <= 0.5):
            raise ConfigError(f"y_level {y_level} outside the domain")
        jy_float = (y_level + 0.5) / lattice.h - 0.5
        jy = int(np.ceil(jy_float - 0.5))
        jy = min(max(jy, 0), N - 1)
        rows = [jy]
    elements, _ = _dual_shortest_path(
        N, lattice.matlen_v, lattice.matlen_h,
        lattice.matlen_ne, lattice.matlen_se, rows=rows)
    if elements is None:
        raise ConfigError("no separating path exists")
    return _perforation_cost(lattice, elements), \
        _elements_to_crack(N, elements)


def _completion_weights(lattice, crack, masks):
    """Full break-cost weights with paid and forbidden elements marked."""
    dead_v, dead_h = crack.dead_axis_masks()
    wv = np.where(dead_v, 0.0, lattice.cost_v)
    wh = np.where(dead_h, 0.0, lattice.cost_h)
    wne = np.where(crack.bne, 0.0, lattice.cost_ne)
    wse = np.where(crack.bse, 0.0, lattice.cost_se)
    if masks is not None:
        wv = np.where(masks.unbreakable_v & ~dead_v, np.inf, wv)
        wh = np.where(masks.unbreakable_h & ~dead_h, np.inf, wh)
        wne = np.where(masks.unbreakable_ne & ~crack.bne, np.inf, wne)
        wse = np.where(masks.unbreakable_se & ~crack.bse, np.inf, wse)
    return wv, wh, wne, wse


def _completion_elements(lattice, crack, masks):
    """New elements of the cheapest finishing cut, or None.

    Elements already broken, or severed as diagonal shadows, cost zero
    and are not re-marked; only genuinely new elements are returned.
    """
    N = lattice.N
    wv, wh, wne, wse = _completion_weights(lattice, crack, masks)
    elements, _ = _dual_shortest_path(N, wv, wh, wne, wse)
    if elements is None:
        return None
    dead_v, dead_h = crack.dead_axis_masks()
    dead = {"v": dead_v, "h": dead_h, "ne": crack.bne, "se": crack.bse}
    new = [(kind, r, c) for kind, r, c in elements if not dead[kind][r, c]]
    return new or None


def run_cut_query(lattice, query, masks=None):
    """Dispatch a CutQuery; returns (length, CrackState).

    In full mode the length counts only new elements (the constraint's
    are already paid) and the returned crack includes the constraint.
    """
    if query.mode == "perforation":
        return min_cut_perforation(
            lattice, restrict_horizontal=query.restrict_horizontal,
            y_level=query.y_level)
    constraint = query.constraint or CrackState.empty(lattice.N)
    new = _completion_elements(lattice, constraint, masks)
    if new is None:
        raise ConfigError("no admissible separating path exists")
    cost = _canonical_cost(new, lattice.cost_v, lattice.cost_h,
                           lattice.cost_ne, lattice.cost_se, lattice.N)
    crack = constraint.union(_elements_to_crack(lattice.N, new))
    return cost, crack


# ----------------------------------------------------------------------
# explicit competitor constructions
# ----------------------------------------------------------------------

def _zigzag_layout(lattice):
    """Grid indices of the deflected crack path.

    Per period the path descends from a corner-block corner to the
    nearest square corner, runs along the square's top face, and climbs
    to the next block.  q = n/8 is the quarter-width of a square in
    cells; iy_sq is the node row of square top faces, iy_cl the node row
    of block bottom faces.
    """
    n = lattice.n_per_period
    if n % 8 != 0:
        raise ConfigError(
            "the deflected construction needs n_per_period divisible by 8, "
            f"got {n}")
    N, k = lattice.N, lattice.k
    q = n // 8
    iy_sq = N // 2 + q
    iy_cl = N // 2 + 3 * q
    se_chains = []
    ne_chains = []
    for c in range(k):
        cx0 = n * c + q
        se_chains.append([(cx0 + j, iy_cl - j) for j in range(2 * q + 1)])
        sx1 = n * c + 5 * q
        ne_chains.append([(sx1 + j, iy_sq + j) for j in range(2 * q + 1)])
    return {"q": q, "iy_sq": iy_sq, "iy_cl": iy_cl,
            "se_chains": se_chains, "ne_chains": ne_chains}


def zigzag_crack(lattice, style="corner"):
    """Crack state of the deflected path, without a field.

    style "corner" breaks the diagonal element through every chain node
    including the inclusion corners; style "axis" stops one node short
    at each end and instead breaks the single hard horizontal edge
    across the interface next to each corner, trading 2 sqrt(2) h of
    diagonal length per end for h of axis length.
    """
    if style not in ("corner", "axis"):
        raise ConfigError(f"unknown zig-zag style {style!r}")
    lay = _zigzag_layout(lattice)
    N = lattice.N
    crack = CrackState.empty(N)
    rng = range(len(lay["se_chains"][0])) if style == "corner" \
        else range(1, len(lay["se_chains"][0]) - 1)
    for nodes in lay["se_chains"]:
        for j in rng:
            a, b = nodes[j]
            crack.bse[b - 1, a - 1] = True
    for nodes in lay["ne_chains"]:
        for j in rng:
            a, b = nodes[j]
            crack.bne[b - 1, a - 1] = True
    if style == "axis":
        iy_sq, iy_cl = lay["iy_sq"], lay["iy_cl"]
        for nodes in lay["se_chains"]:
            cx0 = nodes[0][0]
            sx = nodes[-1][0]
            crack.bh[iy_cl, cx0] = True        # right of the block corner
            crack.bh[iy_sq, sx - 1] = True     # left of the square corner
        for nodes in lay["ne_chains"]:
            sx = nodes[0][0]
            ex = nodes[-1][0]
            crack.bh[iy_sq, sx] = True         # right of the square corner
            crack.bh[iy_cl, ex - 1] = True     # left of the block corner
    return crack


def _zigzag_field(lattice, t, style, m, lay):
    """Explicit bridging field: 0 below the path, t above, soft ramps.

    Each column is 0 up to row_0, t from row_t on, affine between.
    Square columns ramp down into the square over m rows; block columns
    ramp upward into the block; chain columns jump across the dead
    vertical edge under the path.
    """
    N = lattice.N
    q, iy_sq, iy_cl = lay["q"], lay["iy_sq"], lay["iy_cl"]
    n, k = lattice.n_per_period, lattice.k
    row_t = np.empty(N + 1, dtype=np.int64)
    row_0 = np.empty(N + 1, dtype=np.int64)

    for c in range(k + 1):
        lo = max(n * c - q, 0)
        hi = min(n * c + q, N)
        row_0[lo:hi + 1] = iy_cl
        row_t[lo:hi + 1] = iy_cl + m
    for c in range(k):
        lo = n * c + 3 * q
        hi = n * c + 5 * q
        row_t[lo:hi + 1] = iy_sq
        row_0[lo:hi + 1] = iy_sq - m
    for nodes in lay["se_chains"]:
        for j in range(1, 2 * q):
            a, b = nodes[j]
            row_t[a] = b
            row_0[a] = b - 1
    for nodes in lay["ne_chains"]:
        for j in range(1, 2 * q):
            a, b = nodes[j]
            row_t[a] = b
            row_0[a] = b - 1

    iy = np.arange(N + 1)[:, None]
    span = np.maximum(row_t - row_0, 1)[None, :]
    u = np.clip((iy - row_0[None, :]) / span, 0.0, 1.0) * t
    if style == "corner":
        # block corners are path nodes and sit on the t side even though
        # the rest of the block face holds 0
        for nodes in lay["se_chains"]:
            u[iy_cl, nodes[0][0]] = t
        for nodes in lay["ne_chains"]:
            u[iy_cl, nodes[-1][0]] = t
    return u


def zigzag_construction(lattice, t, *, style="auto", m=None, bc=None):
    """Deflected-crack competitor with soft bridging ramps.

    Parameters
    ----------
    lattice : LatticeModel
    t : float
        Load; admissible while the ramp rectangles fit the quarter cell,
        0 <= t <= (sqrt(2) - 1)/4.
    style : {"auto", "corner", "axis"}
        Crack detail at the inclusion corners; "auto" evaluates both and
        keeps the lower-energy one (ties prefer "corner").
    m : int, optional
        Ramp height in rows; by default every m up to min(n/4, 8) is
        scored exactly and the argmin kept.
    bc : BoundaryCondition, optional
        When given, the chosen field is checked to vary only on free
        rows, so the result is admissible for those clamps.

    Returns
    -------
    ConstructionResult
        (DisplacementField, CrackState, EnergyBreakdown); the field is
        explicit, not solved, so its residual is reported as 0.
    """
    if not (0.0 <= t <= T_MAX_BRIDGING + 1e-12):
        raise ConfigError(
            f"load t={t} outside the bridging-admissible range "
            f"[0, {T_MAX_BRIDGING:.6f}]")
    lay = _zigzag_layout(lattice)
    masks = apply_bc(lattice, bc) if bc is not None else None

    if style == "auto":
        styles = ("corner", "axis")
    elif style in ("corner", "axis"):
        styles = (style,)
    else:
        raise ConfigError(f"unknown zig-zag style {style!r}")

    if m is None:
        m_candidates = list(range(1, min(2 * lay["q"], 8) + 1))
    else:
        if not (1 <= m <= 2 * lay["q"]):
            raise ConfigError(
                f"ramp height m={m} outside [1, {2 * lay['q']}]")
        m_candidates = [m]
    if masks is not None:
        free = masks.row_side == 0
        m_candidates = [
            mm for mm in m_candidates
            if free[lay["iy_sq"] - mm: lay["iy_cl"] + mm + 1].all()]
        if not m_candidates:
            raise ConfigError(
                "free band too narrow for the deflected construction")

    best = None
    for sty in styles:
        crack = zigzag_crack(lattice, sty)
        for mm in m_candidates:
            u = _zigzag_field(lattice, t, sty, mm, lay)
            eb = energy(lattice, crack, u)
            if best is None or eb.total < best[0]:
                best = (eb.total, sty, mm, u, crack, eb)
    _, _, _, u, crack, eb = best
    return ConstructionResult(
        u=DisplacementField(values=u, residual_norm=0.0, iterations=0),
        crack=crack, energy=eb)


def straight_crack_construction(lattice, t, y_level=0.0):
    """Full horizontal cut with the rigid two-plate field.

    The cut runs along the dual row closest to ``y_level`` (ties to the
    lower row); u is 0 below it and t above, so the bulk term vanishes
    and the energy equals the cut length, 1 per unit width.
    """
    N = lattice.N
    if not (-0.5 < y_level < 0.5):
        raise ConfigError(f"y_level {y_level} outside the open domain")
    jy_float = (y_level + 0.5) / lattice.h - 0.5
    jy = int(np.ceil(jy_float - 0.5))
    jy = min(max(jy, 0), N - 1)
    crack = CrackState.empty(N)
    crack.bv[jy, :] = True
    iy = np.arange(N + 1)
    u = np.where(iy[:, None] >= jy + 1, t, 0.0) * np.ones((1, N + 1))
    eb = energy(lattice, crack, u)
    return ConstructionResult(
        u=DisplacementField(values=u, residual_norm=0.0, iterations=0),
        crack=crack, energy=eb)


# ----------------------------------------------------------------------
# alternating minimization
# ----------------------------------------------------------------------

def _greedy_break(lattice, crack, masks, u):
    """Break every live element whose bulk term exceeds its cost.

    Families are processed in the order V, H, NE, SE with liveness
    refreshed in between, because a diagonal's gain is the bulk of its
    still-live shadows; within one family no two elements share a
    shadow, so the vectorized decision is order-independent.
    """
    thresh = 1e-15
    duv = u[1:, :] - u[:-1, :]
    duh = u[:, 1:] - u[:, :-1]
    ev = lattice.weight_v * lattice.cond_v * duv * duv
    eh = lattice.weight_h * lattice.cond_h * duh * duh

    broke = False
    dead_v, dead_h = crack.dead_axis_masks()
    cand = (ev > lattice.cost_v + thresh) & ~dead_v & ~masks.unbreakable_v
    if cand.any():
        crack.bv |= cand
        broke = True
    cand = (eh > lattice.cost_h + thresh) & ~dead_h & ~masks.unbreakable_h
    if cand.any():
        crack.bh |= cand
        broke = True

    N = lattice.N
    dead_v, dead_h = crack.dead_axis_masks()
    ev_live = np.where(dead_v, 0.0, ev)
    eh_live = np.where(dead_h, 0.0, eh)
    gain = ev_live[: N - 1, 1:N] + eh_live[1:N, 1:N]
    cand = (gain > lattice.cost_ne + thresh) & ~crack.bne \
        & ~masks.unbreakable_ne
    if cand.any():
        crack.bne |= cand
        broke = True

    dead_v, dead_h = crack.dead_axis_masks()
    ev_live = np.where(dead_v, 0.0, ev)
    eh_live = np.where(dead_h, 0.0, eh)
    gain = ev_live[: N - 1, 1:N] + eh_live[1:N, : N - 1]
    cand = (gain > lattice.cost_se + thresh) & ~crack.bse \
        & ~masks.unbreakable_se
    if cand.any():
        crack.bse |= cand
        broke = True
    return broke


def alternate_minimize(lattice, bc, init=None, constraint=None, *,
                       tol=1e-10, max_iters=200, init_field=None):
    """Alternating solve / break descent of the full energy.

    Each round solves the displacement at the current crack, then breaks
    every element whose bulk term exceeds its break cost.  When the
    greedy pass is idle, a completion move tests the cheapest finishing
    cut (new elements only) and keeps it iff the re-solved total energy
    strictly decreases; the scheme stops at the first round where both
    moves fail.  Energy is nonincreasing and the crack only grows, so
    constraint elements never heal.

    Parameters
    ----------
    lattice : LatticeModel
    bc : BoundaryCondition
    init : CrackState, optional
        Starting crack (empty if omitted); the result contains it.
    constraint : CrackState, optional
        Irreversibility floor; must be a subset of init when both given.
    tol, max_iters :
        Solver tolerance and the round cap; hitting the cap returns the
        best iterate with ``converged=False``.
    init_field : ndarray or DisplacementField, optional
        Warm start for the first solve.

    Returns
    -------
    AlternateResult
    """
    masks = apply_bc(lattice, bc)
    N = lattice.N
    if init is None:
        crack = (constraint or CrackState.empty(N)).copy()
    else:
        crack = init.copy()
    if constraint is not None and not crack.issuperset(constraint):
        raise ConfigError("constraint crack is not contained in init")

    u = solve_displacement(lattice, crack, bc, tol=tol, init=init_field,
                           masks=masks)
    eb = energy(lattice, crack, u)
    history = [eb.total]
    converged = False
    iterations = 0

    for _ in range(max_iters):
        iterations += 1
        if _greedy_break(lattice, crack, masks, u.values):
            u = solve_displacement(lattice, crack, bc, tol=tol,
                                   init=u.values, masks=masks)
            eb = energy(lattice, crack, u)
            history.append(eb.total)
            continue
        # greedy idle: a finishing cut is the only remaining move; it
        # cannot pay off unless the bulk exceeds the cheapest element
        if eb.bulk <= 0.5 * lattice.h + 1e-15:
            converged = True
            break
        new = _completion_elements(lattice, crack, masks)
        if new is None:
            converged = True
            break
        trial = crack.copy()
        tmasks = {"v": trial.bv, "h": trial.bh,
                  "ne": trial.bne, "se": trial.bse}
        for kind, r, c in new:
            tmasks[kind][r, c] = True
        u2 = solve_displacement(lattice, trial, bc, tol=tol, init=u.values,
                                masks=masks)
        eb2 = energy(lattice, trial, u2)
        if eb2.total < eb.total - 1e-12:
            crack, u, eb = trial, u2, eb2
            history.append(eb.total)
            continue
        converged = True
        break

    return AlternateResult(u=u, crack=crack, energy=eb, converged=converged,
                           iterations=iterations, history=history)


# ----------------------------------------------------------------------
# brute-force oracle
# ----------------------------------------------------------------------

def _admissible_rows(lattice, masks):
    rows = [cy for cy in range(lattice.N)
            if not masks.unbreakable_v[cy, :].any()]
    if not rows:
        raise ConfigError("no fully breakable dual row for the oracle")
    if rows != list(range(rows[0], rows[-1] + 1)):
        raise ConfigError("oracle rows are not contiguous")
    return rows


def _enumerate_staircases(rows, N, cap):
    """All row sequences r_0..r_{N-1} with |dr| <= 1 inside the band."""
    lo, hi = rows[0], rows[-1]
    width = hi - lo + 1
    counts = np.ones(width, dtype=np.int64)
    total = width
    for _ in range(N - 1):
        nxt = counts.copy()
        nxt[:-1] += counts[1:]
        nxt[1:] += counts[:-1]
        counts = nxt
        total = int(counts.sum())
        if total > cap:
            raise CapacityError(
                f"staircase family exceeds the {cap} candidate cap")
    paths = np.arange(lo, hi + 1, dtype=np.int16)[:, None]
    for _ in range(N - 1):
        blocks = []
        for dr in (-1, 0, 1):
            nxt = paths[:, -1] + dr
            ok = (nxt >= lo) & (nxt <= hi)
            if ok.any():
                blocks.append(
                    np.concatenate([paths[ok], nxt[ok, None]], axis=1))
        paths = np.concatenate(blocks, axis=0)
    return paths


def _staircase_costs(paths, wv, wne, wse, N):
    """Vectorized cut cost of every staircase under the given weights."""
    cost = wv[paths[:, 0], 0] + wv[paths[:, -1], N]
    for i in range(N - 1):
        r = paths[:, i].astype(np.int64)
        r2 = paths[:, i + 1].astype(np.int64)
        dr = r2 - r
        flat = wv[r, i + 1]
        # clip the diagonal gathers; np.where keeps only the valid lane
        up = wne[np.minimum(r, N - 2), i]
        down = wse[np.minimum(r2, N - 2), i]
        cost = cost + np.where(dr == 0, flat, np.where(dr == 1, up, down))
    return cost


def _staircase_numerators(paths, numv, numne, numse, N):
    """Integer (axis, diagonal) matrix-length numerators per staircase."""
    zero = np.zeros(paths.shape[0], dtype=np.int64)
    axis = numv[paths[:, 0], 0] + numv[paths[:, -1], N]
    diag = zero.copy()
    for i in range(N - 1):
        r = paths[:, i].astype(np.int64)
        r2 = paths[:, i + 1].astype(np.int64)
        dr = r2 - r
        axis = axis + np.where(dr == 0, numv[r, i + 1], zero)
        up = numne[np.minimum(r, N - 2), i]
        down = numse[np.minimum(r2, N - 2), i]
        diag = diag + np.where(dr == 1, up, np.where(dr == -1, down, zero))
    return axis, diag


def _staircase_elements(path, N):
    elements = [("v", int(path[0]), 0)]
    for i in range(N - 1):
        r, r2 = int(path[i]), int(path[i + 1])
        if r2 == r:
            elements.append(("v", r, i + 1))
        elif r2 == r + 1:
            elements.append(("ne", r, i))
        else:
            elements.append(("se", r2, i))
    elements.append(("v", int(path[-1]), N))
    return elements


def brute_force_oracle(lattice, bc, *, weights="full", rows=None,
                       cap=10 ** 6):
    """Exhaustive minimum over monotone staircase cuts (tiny grids only).

    The candidate family is every left-to-right dual staircase through
    the rows the clamps leave fully breakable, plus the empty crack in
    full mode.  Staircase competitors fully separate the strip, so their
    bulk term vanishes for the two-plate field and the energy reduces to
    a surface sum, evaluated in batch; the winner is re-solved to attach
    a verified displacement.  With weights="perforation" the same family
    is scored by matrix-clipped length and the empty crack is excluded
    (the cell problem requires separation).

    Raises CapacityError beyond ``cap`` candidates and ConfigError off
    the supported instance sizes (k = 1, n_per_period <= 16).
    """
    if lattice.k != 1 or lattice.n_per_period > 16:
        raise ConfigError(
            "the oracle supports k=1 and n_per_period <= 16, got "
            f"k={lattice.k}, n={lattice.n_per_period}")
    if weights not in ("full", "perforation"):
        raise ConfigError(f"unknown oracle weighting {weights!r}")
    N = lattice.N
    masks = apply_bc(lattice, bc)
    if rows is None:
        rows = _admissible_rows(lattice, masks)
    rows = list(rows)

    paths = _enumerate_staircases(rows, N, cap)
    for kind, r, c in _staircase_elements(paths[0], N):
        arr = {"v": masks.unbreakable_v, "ne": masks.unbreakable_ne,
               "se": masks.unbreakable_se}[kind]
        if arr[r, c]:
            raise ConfigError("oracle band contains unbreakable elements")

    if weights == "perforation":
        axis, diag = _staircase_numerators(
            paths, lattice.matnum_v, lattice.matnum_ne, lattice.matnum_se, N)
        costs = perforation_value(axis, diag, lattice.mat_denom)
        best = int(np.argmin(costs))
        crack = _elements_to_crack(N, _staircase_elements(paths[best], N))
        return OracleResult(crack=crack, energy=float(costs[best]),
                            breakdown=None, candidates=paths.shape[0],
                            weights=weights)

    costs = _staircase_costs(paths, lattice.cost_v, lattice.cost_ne,
                             lattice.cost_se, N)
    best = int(np.argmin(costs))
    crack = _elements_to_crack(N, _staircase_elements(paths[best], N))

    u = solve_displacement(lattice, crack, bc, masks=masks)
    eb = energy(lattice, crack, u)
    empty = CrackState.empty(N)
    u0 = solve_displacement(lattice, empty, bc, masks=masks)
    eb0 = energy(lattice, empty, u0)
    if eb0.total < eb.total:
        return OracleResult(crack=empty, energy=eb0.total, breakdown=eb0,
                            candidates=paths.shape[0] + 1, weights=weights)
    return OracleResult(crack=crack, energy=eb.total, breakdown=eb,
                        candidates=paths.shape[0] + 1, weights=weights)


# ----------------------------------------------------------------------
# load sweep
# ----------------------------------------------------------------------

def default_t_grid():
    """Standard sweep grid: 0.01, then 0.05 to 0.50 in steps of 0.05."""
    return [0.01] + [round(0.05 * i, 10) for i in range(1, 11)]


def sweep_density(lattice, t_grid, *, delta=0.25, workers=None):
    """Best-competitor energy per load over an increasing grid.

    Candidates per load: the deflected construction (while admissible),
    the straight crack, and alternating minimization seeded from each of
    the two crack shapes.  ``g_upper`` is the minimum total energy; the
    first load where the straight crack comes within 0.02 of that
    minimum is reported as ``t0_estimate`` on every entry (inf if the
    grid never reaches it).  Set MICROFRAC_WORKERS (or ``workers``) to
    evaluate loads in parallel threads; results are reduced in grid
    order either way.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise ConfigError("sweep needs a nonempty t_grid")
    if any(t < 0 for t in t_grid):
        raise ConfigError("sweep loads must be nonnegative")
    if any(b <= a for a, b in zip(t_grid[:-1], t_grid[1:])):
        raise ConfigError("t_grid must be strictly increasing")

    zz_seed = zigzag_crack(lattice, "corner") \
        if lattice.n_per_period % 8 == 0 else None

    def one(t):
        bc = BoundaryCondition(t=t, delta=delta)
        cands = []
        if zz_seed is not None and t <= T_MAX_BRIDGING:
            try:
                con = zigzag_construction(lattice, t, bc=bc)
                cands.append(("zigzag", con.energy, con.crack))
            except ConfigError:
                pass
        st = straight_crack_construction(lattice, t)
        cands.append(("straight", st.energy, st.crack))
        if zz_seed is not None:
            alt = alternate_minimize(lattice, bc, init=zz_seed)
            cands.append(("alternate_zigzag", alt.energy, alt.crack))
        alt = alternate_minimize(lattice, bc, init=st.crack)
        cands.append(("alternate_straight", alt.energy, alt.crack))
        tag, eb, crack = min(cands, key=lambda c: c[1].total)
        straight_total = st.energy.total
        return t, tag, eb, crack, straight_total

    if workers is None:
        workers = int(os.environ.get("MICROFRAC_WORKERS", "1"))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, t_grid))
    else:
        rows = [one(t) for t in t_grid]

    t0 = float("inf")
    for t, tag, eb, crack, straight_total in rows:
        if straight_total <= eb.total + T0_TOL:
            t0 = t
            break
    return [
        DensityEstimate(
            t=t, g_upper=eb.total, construction=tag, t0_estimate=t0,
            bulk_matrix=eb.bulk_matrix, bulk_soft=eb.bulk_soft,
            surface=eb.surface, crack=crack)
        for t, tag, eb, crack, straight_total in rows
    ]
