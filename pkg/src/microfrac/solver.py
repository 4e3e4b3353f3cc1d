"""Displacement solves and energy evaluation on a cracked lattice.

The discrete state is a scalar anti-plane displacement u on the nodes
and a crack, i.e. a set of broken elements.  Broken vertical and
horizontal edges lose their conductance; a broken diagonal element
additionally severs the two axis edges it shadows (see
:mod:`microfrac.lattice`).  The total energy is

    E(u, K) = sum_live w * c * (du)^2  +  sum_broken break_cost,

and ``solve_displacement`` minimizes the first term at fixed crack under
strip boundary data using a Jacobi-preconditioned conjugate gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import geometry
from .errors import ConfigError, ConvergenceError
from .lattice import BoundaryMasks, apply_bc

# ----------------------------------------------------------------------
# crack state
# ----------------------------------------------------------------------


@dataclass
class CrackState:
    """Broken-element indicator arrays for the four families.

    ``bv``/``bh`` mark vertical/horizontal edges, ``bne``/``bse`` the
    diagonal interface elements.  Only explicitly broken elements carry
    surface energy; edges severed as diagonal shadows are accounted by
    the diagonal's own cost.
    """

    bv: np.ndarray
    bh: np.ndarray
    bne: np.ndarray
    bse: np.ndarray

    @classmethod
    def empty(cls, N):
        return cls(
            bv=np.zeros((N, N + 1), dtype=bool),
            bh=np.zeros((N + 1, N), dtype=bool),
            bne=np.zeros((N - 1, N - 1), dtype=bool),
            bse=np.zeros((N - 1, N - 1), dtype=bool))

    @property
    def N(self):
        return self.bv.shape[0]

    def copy(self):
        return CrackState(self.bv.copy(), self.bh.copy(),
                          self.bne.copy(), self.bse.copy())

    def union(self, other):
        return CrackState(self.bv | other.bv, self.bh | other.bh,
                          self.bne | other.bne, self.bse | other.bse)

    def issuperset(self, other):
        return (not (other.bv & ~self.bv).any()
                and not (other.bh & ~self.bh).any()
                and not (other.bne & ~self.bne).any()
                and not (other.bse & ~self.bse).any())

    def equals(self, other):
        return (np.array_equal(self.bv, other.bv)
                and np.array_equal(self.bh, other.bh)
                and np.array_equal(self.bne, other.bne)
                and np.array_equal(self.bse, other.bse))

    def count_broken(self):
        return int(self.bv.sum() + self.bh.sum()
                   + self.bne.sum() + self.bse.sum())

    def mirror_x(self):
        """Image of the crack under reflection about the x = 0 axis.

        Column order reverses in every family and the two diagonal
        orientations swap.
        """
        return CrackState(bv=self.bv[:, ::-1].copy(),
                          bh=self.bh[:, ::-1].copy(),
                          bne=self.bse[:, ::-1].copy(),
                          bse=self.bne[:, ::-1].copy())

    def broken_ids(self):
        """Global element ids of the broken set, ascending."""
        N = self.N
        nv = N * (N + 1)
        nh = (N + 1) * N
        nne = (N - 1) ** 2
        ids = [
            np.flatnonzero(self.bv.ravel()),
            np.flatnonzero(self.bh.ravel()) + nv,
            np.flatnonzero(self.bne.ravel()) + nv + nh,
            np.flatnonzero(self.bse.ravel()) + nv + nh + nne,
        ]
        return np.concatenate(ids)

    def dead_axis_masks(self):
        """Axis edges with no conductance: broken or diagonal shadows."""
        N = self.N
        dead_v = self.bv.copy()
        dead_h = self.bh.copy()
        diag = self.bne | self.bse
        dead_v[: N - 1, 1:N] |= diag
        dead_h[1:N, 1:N] |= self.bne
        dead_h[1:N, : N - 1] |= self.bse
        return dead_v, dead_h


def live_conductance(lattice, crack):
    """Per-edge conductance with broken and shadowed edges removed."""
    dead_v, dead_h = crack.dead_axis_masks()
    cv = np.where(dead_v, 0.0, lattice.cond_v)
    ch = np.where(dead_h, 0.0, lattice.cond_h)
    return cv, ch


def crack_region_lengths(lattice, crack, rho=None):
    """Crack length decomposed over microstructure regions.

    Lengths are measured on the broken elements' dual segments via exact
    clipping.  Returns a dict with keys total, matrix, inclusion,
    butterfly, column, butterfly_and_column.
    """
    if rho is None:
        rho = lattice.rho
    total = 0.0
    matrix = 0.0
    out = {"butterfly": 0.0, "column": 0.0, "butterfly_and_column": 0.0}
    from .lattice import dual_segments
    for kind, mask in (("v", crack.bv), ("h", crack.bh),
                       ("ne", crack.bne), ("se", crack.bse)):
        idx = np.flatnonzero(mask.ravel())
        if idx.size == 0:
            continue
        total += float(np.sum(getattr(lattice, f"cost_{kind}").ravel()[idx]))
        matrix += float(
            np.sum(getattr(lattice, f"matlen_{kind}").ravel()[idx]))
        P0, P1 = dual_segments(lattice, kind)
        for i in idx:
            for region in out:
                out[region] += geometry.clip_segment_length(
                    P0[i], P1[i], region, rho=rho, scale=lattice.eps)
    out["total"] = total
    out["matrix"] = matrix
    out["inclusion"] = total - matrix
    return out


# ----------------------------------------------------------------------
# energy
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBreakdown:
    """Bulk and surface parts of the discrete energy."""

    bulk_matrix: float
    bulk_soft: float
    surface: float

    @property
    def bulk(self):
        return self.bulk_matrix + self.bulk_soft

    @property
    def total(self):
        return self.bulk_matrix + self.bulk_soft + self.surface


def energy(lattice, crack, u):
    """Evaluate the energy of a displacement field at a fixed crack.

    ``u`` may be a DisplacementField or a bare (N+1, N+1) array; any
    field is admissible, not only solved ones, so constructions can be
    scored exactly.
    """
    if isinstance(u, DisplacementField):
        u = u.values
    cv, ch = live_conductance(lattice, crack)
    duv = u[1:, :] - u[:-1, :]
    duh = u[:, 1:] - u[:, :-1]
    ev = lattice.weight_v * cv * duv * duv
    eh = lattice.weight_h * ch * duh * duh
    bulk_soft = (float(np.sum(ev[lattice.soft_v]))
                 + float(np.sum(eh[lattice.soft_h])))
    bulk_matrix = (float(np.sum(ev[~lattice.soft_v]))
                   + float(np.sum(eh[~lattice.soft_h])))
    surface = (float(np.sum(lattice.cost_v[crack.bv]))
               + float(np.sum(lattice.cost_h[crack.bh]))
               + float(np.sum(lattice.cost_ne[crack.bne]))
               + float(np.sum(lattice.cost_se[crack.bse])))
    return EnergyBreakdown(bulk_matrix=bulk_matrix, bulk_soft=bulk_soft,
                           surface=surface)


def jump_profile(lattice, crack, u):
    """Displacement jumps across broken elements.

    Returns a list of (global_id, jump) pairs in ascending id order.
    Axis edges report the difference in their positive direction (+y for
    vertical edges, +x for horizontal); diagonal elements report the
    jump across their dual segment, i.e. the difference over the
    vertical edge they shadow.
    """
    if isinstance(u, DisplacementField):
        u = u.values
    N = lattice.N
    off = lattice.offsets()
    out = []
    for jy, ix in zip(*np.nonzero(crack.bv)):
        out.append((off[0] + jy * (N + 1) + ix,
                    float(u[jy + 1, ix] - u[jy, ix])))
    for jy, ix in zip(*np.nonzero(crack.bh)):
        out.append((off[1] + jy * N + ix,
                    float(u[jy, ix + 1] - u[jy, ix])))
    for cy, cx in zip(*np.nonzero(crack.bne)):
        out.append((off[2] + cy * (N - 1) + cx,
                    float(u[cy + 1, cx + 1] - u[cy, cx + 1])))
    for cy, cx in zip(*np.nonzero(crack.bse)):
        out.append((off[3] + cy * (N - 1) + cx,
                    float(u[cy + 1, cx + 1] - u[cy, cx + 1])))
    out.sort(key=lambda t: t[0])
    return out


# ----------------------------------------------------------------------
# displacement solve
# ----------------------------------------------------------------------


@dataclass
class DisplacementField:
    """Nodal displacement with solver diagnostics."""

    values: np.ndarray
    residual_norm: float = 0.0
    iterations: int = 0


def solve_displacement(lattice, crack, bc, tol=1e-10, *, init=None,
                       masks=None, max_iter=None):
    """Minimize the bulk energy at a fixed crack under strip data.

    Parameters
    ----------
    lattice : LatticeModel
    crack : CrackState
    bc : BoundaryCondition
    tol : float
        Relative residual target, ||b - A x|| <= tol * ref with ref the
        right-hand-side norm (or the initial residual when b = 0).
    init : ndarray or DisplacementField, optional
        Warm-start field; free nodes isolated from every clamp by the
        crack keep their initial value.
    masks : BoundaryMasks, optional
        Precomputed clamp layout, recomputed from ``bc`` if omitted.
    max_iter : int, optional
        Iteration cap, default 20 * sqrt(n_free) + 500.

    Raises
    ------
    ConvergenceError
        If the residual target is not met within the iteration cap.
    """
    if masks is None:
        masks = apply_bc(lattice, bc)
    N = lattice.N
    if isinstance(init, DisplacementField):
        init = init.values

    cv, ch = live_conductance(lattice, crack)
    coef_v = (lattice.weight_v * cv).ravel()
    coef_h = (lattice.weight_h * ch).ravel()

    ids = np.arange((N + 1) * (N + 1)).reshape(N + 1, N + 1)
    free_row = masks.row_side == 0
    free2d = np.repeat(free_row[:, None], N + 1, axis=1)
    nf = int(free2d.sum())
    fidx = np.full((N + 1) * (N + 1), -1, dtype=np.int64)
    fidx[ids[free2d].ravel()] = np.arange(nf)

    a_v = ids[:-1, :].ravel()
    b_v = ids[1:, :].ravel()
    a_h = ids[:, :-1].ravel()
    b_h = ids[:, 1:].ravel()
    a_all = np.concatenate([a_v, a_h])
    b_all = np.concatenate([b_v, b_h])
    coef = np.concatenate([coef_v, coef_h])
    keep = coef > 0.0
    a_all, b_all, coef = a_all[keep], b_all[keep], coef[keep]

    uc = np.where(masks.row_side > 0, bc.t, 0.0)
    uc_nodes = np.repeat(uc, N + 1)

    fa = fidx[a_all]
    fb = fidx[b_all]
    diag = np.zeros(nf)
    np.add.at(diag, fa[fa >= 0], coef[fa >= 0])
    np.add.at(diag, fb[fb >= 0], coef[fb >= 0])

    both = (fa >= 0) & (fb >= 0)
    rows = np.concatenate([fa[both], fb[both]])
    cols = np.concatenate([fb[both], fa[both]])
    vals = np.concatenate([-coef[both], -coef[both]])

    rhs = np.zeros(nf)
    half_a = (fa >= 0) & (fb < 0)
    np.add.at(rhs, fa[half_a], coef[half_a] * uc_nodes[b_all[half_a]])
    half_b = (fb >= 0) & (fa < 0)
    np.add.at(rhs, fb[half_b], coef[half_b] * uc_nodes[a_all[half_b]])

    if init is None:
        x0 = np.zeros(nf)
    else:
        x0 = np.asarray(init, dtype=float).ravel()[ids[free2d].ravel()]

    # nodes isolated by the crack have an empty row; pin them to their
    # initial value so the solve stays well posed and deterministic
    isolated = diag == 0.0
    if isolated.any():
        diag = diag.copy()
        diag[isolated] = 1.0
        rhs = rhs.copy()
        rhs[isolated] = x0[isolated]

    A_off = sp.csr_matrix((vals, (rows, cols)), shape=(nf, nf))

    def matvec(x):
        return diag * x + A_off.dot(x)

    if max_iter is None:
        max_iter = int(20.0 * np.sqrt(nf)) + 500

    x, res, iters = _pcg(matvec, diag, rhs, x0, tol, max_iter)

    values = uc_nodes.copy()
    values[ids[free2d].ravel()] = x
    return DisplacementField(values=values.reshape(N + 1, N + 1),
                             residual_norm=res, iterations=iters)


def _pcg(matvec, diag, b, x0, tol, max_iter):
    """Jacobi-preconditioned conjugate gradient.

    Returns (x, final_residual_norm, iterations); raises
    ConvergenceError when the cap is hit first.
    """
    bnorm = float(np.linalg.norm(b))
    x = x0.copy()
    r = b - matvec(x)
    rnorm = float(np.linalg.norm(r))
    ref = bnorm if bnorm > 0.0 else rnorm
    if ref == 0.0 or rnorm <= tol * ref:
        return x, rnorm, 0
    minv = 1.0 / diag
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rnorm = float(np.linalg.norm(r))
        if rnorm <= tol * ref:
            return x, rnorm, it
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError(
        f"conjugate gradient stalled at residual {rnorm:.3e} "
        f"(target {tol * ref:.3e}) after {max_iter} iterations")
