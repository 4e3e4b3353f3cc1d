"""Quasistatic crack evolution with irreversibility.

A loading program drives the clamped boundary displacement through an
increasing sequence of loads.  Each step minimizes the energy over
cracks that contain the previous step's crack (broken elements never
heal), so a crack that localized along the stiff-matrix diagonals at
small load must complete from there at large load rather than re-route
to the straight horizontal cut.  The terminal energy of the constrained
run therefore exceeds the unconstrained optimum; the difference is the
toughening produced by crack-path deflection, and ``toughening_gap``
reports it.

``localize`` measures how much of a crack lies inside the diagonal
butterfly region T(rho) and inside the vertical bands U(rho), together
with the closed-form lower bounds those lengths must satisfy for
small-load minimizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import ConfigError
from .lattice import BoundaryCondition
from .optimizer import (T_MAX_BRIDGING, alternate_minimize,
                        straight_crack_construction, zigzag_construction)
from .solver import (CrackState, EnergyBreakdown, crack_region_lengths,
                     live_conductance)

SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# loading programs
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LoadProgram:
    """Strictly increasing sequence of boundary loads.

    The first load must lie in the bridging range so the zig-zag
    construction is admissible as the step-0 seed; the last load is the
    terminal one against which the unconstrained comparison runs.
    """

    steps: tuple

    def __post_init__(self):
        steps = tuple(float(t) for t in self.steps)
        object.__setattr__(self, "steps", steps)
        if not steps:
            raise ConfigError("load program needs at least one step")
        if any(not math.isfinite(t) or t < 0.0 for t in steps):
            raise ConfigError("loads must be finite and nonnegative")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ConfigError("loads must be strictly increasing")
        if steps[0] > T_MAX_BRIDGING:
            raise ConfigError(
                f"first load {steps[0]:g} exceeds the bridging range "
                f"(max {T_MAX_BRIDGING:.6g})")

    @property
    def small_load(self):
        return self.steps[0]

    @property
    def large_load(self):
        return self.steps[-1]


def default_program():
    """Two-step program: localize at small load, complete at large."""
    return LoadProgram(steps=(0.04, 1.2))


# ----------------------------------------------------------------------
# localization diagnostics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class LocalizationReport:
    """Measured crack lengths in the diagnostic regions and their bounds.

    Attributes
    ----------
    length_in_T, length_in_T_and_U : float
        Crack length inside the butterfly region and inside its
        intersection with the vertical bands.
    bound_T, bound_TU : float
        Lower bounds ``1/sqrt(2) - eta/(4 rho)`` and the same minus
        ``4 sqrt(2) rho`` that small-load minimizers must meet.
    outside_U_energy : float
        Bulk plus surface energy carried outside the vertical bands;
        NaN when no displacement field was supplied.
    """

    rho: float
    eta: float
    length_in_T: float
    length_in_T_and_U: float
    bound_T: float
    bound_TU: float
    outside_U_energy: float
    total_length: float


def _column_cover(x0, x1, rho):
    """Measure of the vertical bands inside [x0, x1] (unit-cell coords).

    Per period the bands are (a, b) and (1-b, 1-a) with a = 1/8 + rho,
    b = 1/2 - rho; the cumulative measure is piecewise linear, so the
    cover of an interval is a difference of two evaluations.
    """
    a = 0.125 + rho
    b = 0.5 - rho
    w = b - a

    def cum(x):
        base = np.floor(x)
        f = x - base
        return base * (2.0 * w) + np.clip(f - a, 0.0, w) \
            + np.clip(f - (1.0 - b), 0.0, w)

    return cum(np.asarray(x1, dtype=float)) - cum(np.asarray(x0, dtype=float))


def _bulk_outside_columns(lattice, crack, u, rho):
    """Live bulk energy carried by edges outside the vertical bands.

    Vertical edges sit at a single abscissa and are in or out as a
    whole; horizontal edges are split by the exact covered fraction of
    their span.
    """
    if hasattr(u, "values"):
        u = u.values
    cv, ch = live_conductance(lattice, crack)
    duv = u[1:, :] - u[:-1, :]
    duh = u[:, 1:] - u[:, :-1]
    ev = lattice.weight_v * cv * duv * duv
    eh = lattice.weight_h * ch * duh * duh
    xs = lattice.xs / lattice.eps
    in_col = geometry.in_column(xs, 0.0, rho)
    out_v = float(np.sum(ev[:, ~in_col]))
    frac_h = _column_cover(xs[:-1], xs[1:], rho) * lattice.eps / lattice.h
    out_h = float(np.sum(eh * (1.0 - frac_h)[None, :]))
    return out_v + out_h


def localize(lattice, crack, rho=None, eta=None, *, u=None):
    """Measure a crack against the localization bounds.

    Parameters
    ----------
    lattice : LatticeModel
    crack : CrackState
    rho : float, optional
        Butterfly half-width; defaults to the lattice's stored value.
    eta : float, optional
        Energy slack in the bounds; defaults to ``4 rho**2``, the choice
        under which the bound in T becomes ``1/sqrt(2) - rho``.
    u : ndarray or DisplacementField, optional
        Displacement at the crack; required for ``outside_U_energy``.

    Returns
    -------
    LocalizationReport
    """
    if rho is None:
        rho = lattice.rho
    if eta is None:
        eta = 4.0 * rho * rho
    lengths = crack_region_lengths(lattice, crack, rho)
    bound_t = 1.0 / SQRT2 - eta / (4.0 * rho)
    bound_tu = bound_t - 4.0 * SQRT2 * rho
    surface_out = lengths["total"] - lengths["column"]
    if u is None:
        outside = float("nan")
    else:
        outside = surface_out + _bulk_outside_columns(lattice, crack, u, rho)
    return LocalizationReport(
        rho=rho, eta=eta,
        length_in_T=lengths["butterfly"],
        length_in_T_and_U=lengths["butterfly_and_column"],
        bound_T=bound_t, bound_TU=bound_tu,
        outside_U_energy=outside,
        total_length=lengths["total"])


# ----------------------------------------------------------------------
# evolution driver
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class EvolutionStep:
    """State after one load step of the constrained evolution."""

    load: float
    energy: EnergyBreakdown
    crack: CrackState = field(repr=False)
    lengths: dict = field(repr=False)
    g_eff_estimate: float = 0.0
    localization: LocalizationReport | None = None
    converged: bool = True
    iterations: int = 0


@dataclass(frozen=True)
class EvolutionTrace:
    """Constrained evolution plus the unconstrained terminal comparison."""

    steps: tuple
    rho: float
    eta: float
    outside_U_bound: float
    unconstrained_energy: EnergyBreakdown | None = None
    unconstrained_crack: CrackState | None = field(default=None, repr=False)
    unconstrained_lengths: dict | None = field(default=None, repr=False)
    unconstrained_seed: str | None = None
    flags: tuple = ()

    @property
    def terminal(self):
        return self.steps[-1]

    @property
    def loads(self):
        return tuple(s.load for s in self.steps)


def run_evolution(lattice, program, rho=None, *, delta=0.25, tol=1e-10,
                  seed_style="corner"):
    """Drive the crack through the loading program under irreversibility.

    Step 0 descends from the zig-zag construction at the first load (the
    seed whose crack lies on the diagonal segments, so the small-load
    minimizer localizes in the butterfly region).  Every later step
    re-minimizes with the previous crack as both starting point and
    irreversibility floor, warm-starting the solver from the previous
    displacement scaled by the load ratio.  When the program has at
    least two loads, the terminal state is also compared against an
    unconstrained minimization at the last load seeded from scratch and
    from the straight cut, whichever ends lower.

    Parameters
    ----------
    lattice : LatticeModel
        Must resolve the zig-zag (periods divisible by 8).
    program : LoadProgram
    rho : float, optional
        Butterfly half-width for the diagnostics; defaults to the
        lattice's stored value.
    delta : float, optional
        Clamped fraction of the top and bottom boundary.
    tol : float, optional
        Relative solver tolerance.
    seed_style : str, optional
        Zig-zag variant for the step-0 seed.  The corner-anchored style
        keeps the broken diagonals through the pinch points, which is
        what the localization bounds measure.

    Returns
    -------
    EvolutionTrace

    Raises
    ------
    ConfigError
        Invalid program or a lattice too coarse for the seed.
    ConvergenceError
        Propagated from the displacement solver.
    """
    if rho is None:
        rho = lattice.rho
    eta = 4.0 * rho * rho
    steps = []
    prev = None
    prev_u = None
    for i, t in enumerate(program.steps):
        bc = BoundaryCondition(t=t, delta=delta)
        if i == 0:
            seed = zigzag_construction(lattice, t, style=seed_style, bc=bc)
            res = alternate_minimize(lattice, bc, init=seed.crack,
                                     init_field=seed.u, tol=tol)
        else:
            scale = t / prev.load if prev.load > 0.0 else 1.0
            res = alternate_minimize(lattice, bc, init=prev.crack,
                                     constraint=prev.crack,
                                     init_field=prev_u * scale, tol=tol)
        if prev is not None:
            assert res.crack.issuperset(prev.crack), \
                "irreversibility violated: crack not nested"
            assert res.energy.surface >= prev.energy.surface, \
                "surface term decreased along the trace"
        lengths = crack_region_lengths(lattice, res.crack, rho)
        loc = localize(lattice, res.crack, rho, eta, u=res.u)
        step = EvolutionStep(load=t, energy=res.energy, crack=res.crack,
                             lengths=lengths,
                             g_eff_estimate=res.energy.total,
                             localization=loc,
                             converged=res.converged,
                             iterations=res.iterations)
        steps.append(step)
        prev = step
        prev_u = res.u.values

    unc_energy = None
    unc_crack = None
    unc_lengths = None
    unc_seed = None
    if len(program.steps) >= 2:
        bc = BoundaryCondition(t=program.large_load, delta=delta)
        best = None
        for name in ("empty", "straight"):
            if name == "empty":
                run = alternate_minimize(lattice, bc, tol=tol)
            else:
                st = straight_crack_construction(lattice, program.large_load)
                run = alternate_minimize(lattice, bc, init=st.crack,
                                         init_field=st.u, tol=tol)
            if best is None or run.energy.total < best[1].energy.total:
                best = (name, run)
        unc_seed, run = best
        unc_energy = run.energy
        unc_crack = run.crack
        unc_lengths = crack_region_lengths(lattice, run.crack, rho)

    outside_bound = 0.5 + 4.0 * rho
    flags = []
    if len(steps) >= 2:
        outside = steps[-1].localization.outside_U_energy
        if outside < outside_bound:
            flags.append("outside_U_energy_below_bound")

    return EvolutionTrace(steps=tuple(steps), rho=rho, eta=eta,
                          outside_U_bound=outside_bound,
                          unconstrained_energy=unc_energy,
                          unconstrained_crack=unc_crack,
                          unconstrained_lengths=unc_lengths,
                          unconstrained_seed=unc_seed,
                          flags=tuple(flags))


def toughening_gap(trace):
    """Terminal constrained energy minus the unconstrained comparison.

    Zero by definition for programs with fewer than two loads; always
    nonnegative otherwise, since the constrained feasible set is
    smaller.
    """
    if len(trace.steps) < 2 or trace.unconstrained_energy is None:
        return 0.0
    return trace.terminal.energy.total - trace.unconstrained_energy.total
