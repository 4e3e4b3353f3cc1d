"""Quasistatic evolution, irreversibility, and crack localization."""

import math

import numpy as np
import pytest

from conftest import make_lattice
from microfrac.errors import ConfigError
from microfrac.evolution import (LoadProgram, default_program, localize,
                                 run_evolution, toughening_gap,
                                 _column_cover)
from microfrac.lattice import BoundaryCondition
from microfrac.optimizer import (straight_crack_construction,
                                 zigzag_construction, zigzag_crack)

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="module")
def trace_k3(lattice_k3_n32):
    return run_evolution(lattice_k3_n32, default_program(), rho=0.05)


# ----------------------------------------------------------------------
# load programs
# ----------------------------------------------------------------------


def test_default_program_two_stage():
    prog = default_program()
    assert prog.steps == (0.04, 1.2)
    assert prog.small_load == 0.04
    assert prog.large_load == 1.2


def test_load_program_validations():
    with pytest.raises(ConfigError):
        LoadProgram(steps=())
    with pytest.raises(ConfigError):
        LoadProgram(steps=(-0.1, 1.0))
    with pytest.raises(ConfigError):
        LoadProgram(steps=(0.5, 0.5))
    with pytest.raises(ConfigError):
        LoadProgram(steps=(0.2, 1.0))  # first load must admit bridging
    with pytest.raises(ConfigError):
        LoadProgram(steps=(float("nan"),))


# ----------------------------------------------------------------------
# evolution
# ----------------------------------------------------------------------


def test_cracks_are_nested_and_surface_grows(trace_k3, lattice_k3_n32):
    first, last = trace_k3.steps
    assert last.crack.issuperset(first.crack)
    assert last.lengths["total"] >= first.lengths["total"] - 1e-12
    assert last.load > first.load


def test_constrained_energy_dominates_unconstrained(trace_k3):
    assert trace_k3.unconstrained_energy is not None
    unconstrained = trace_k3.unconstrained_energy.total
    assert trace_k3.terminal.energy.total >= unconstrained
    gap = toughening_gap(trace_k3)
    assert gap >= 0.0
    assert abs(gap - (trace_k3.terminal.energy.total
                      - unconstrained)) < 1e-15


def test_effective_toughness_estimate_is_the_total(trace_k3):
    for step in trace_k3.steps:
        assert step.g_eff_estimate == step.energy.total
        assert step.converged


def test_localization_report_is_attached(trace_k3):
    for step in trace_k3.steps:
        loc = step.localization
        assert 0.0 <= loc.length_in_T_and_U <= loc.length_in_T + 1e-12
        assert loc.length_in_T <= loc.total_length + 1e-12
        assert loc.rho == 0.05 and loc.eta == 4 * 0.05 ** 2


def test_deep_load_flags_energy_outside_columns(trace_k3):
    assert "outside_U_energy_below_bound" in trace_k3.flags
    loc = trace_k3.terminal.localization
    assert 0.0 <= loc.outside_U_energy <= trace_k3.terminal.energy.total


def test_single_step_program_has_no_comparison(lattice_k3_n32):
    trace = run_evolution(lattice_k3_n32, LoadProgram(steps=(0.04,)),
                          rho=0.05)
    assert len(trace.steps) == 1
    assert trace.unconstrained_energy is None
    assert trace.unconstrained_crack is None
    assert toughening_gap(trace) == 0.0


# ----------------------------------------------------------------------
# localization
# ----------------------------------------------------------------------


def test_zigzag_crack_lies_inside_the_trapezoids(lattice_k3_n32):
    crack = zigzag_crack(lattice_k3_n32, "corner")
    loc = localize(lattice_k3_n32, crack, rho=0.05)
    assert abs(loc.length_in_T - SQRT2 / 2.0) < 1e-12
    assert loc.length_in_T_and_U > 0.0
    assert math.isnan(loc.outside_U_energy)


def test_straight_crack_misses_the_trapezoids(lattice_k3_n32):
    res = straight_crack_construction(lattice_k3_n32, 0.5)
    loc = localize(lattice_k3_n32, res.crack, rho=0.05, u=res.u)
    assert loc.length_in_T == 0.0
    assert not math.isnan(loc.outside_U_energy)


def test_column_cover_of_the_unit_interval():
    assert abs(_column_cover(0.0, 1.0, 0.05) - 0.55) < 1e-12
    assert _column_cover(0.3, 0.3, 0.05) == 0.0
    total = _column_cover(-2.0, 3.0, 0.05)
    assert abs(total - 5 * 0.55) < 1e-12


def test_localization_bounds_match_the_radius(lattice_k3_n32):
    crack = zigzag_crack(lattice_k3_n32, "corner")
    loc = localize(lattice_k3_n32, crack, rho=0.05, eta=4 * 0.05 ** 2)
    assert abs(loc.bound_T - (1 / SQRT2 - 0.05)) < 1e-12
    assert abs(loc.bound_TU - (1 / SQRT2 - 0.05 - 4 * SQRT2 * 0.05)) < 1e-12


# ----------------------------------------------------------------------
# refinement
# ----------------------------------------------------------------------


def test_fine_grid_construction_approaches_the_cell_value():
    coarse = zigzag_construction(make_lattice(k=3, n=32), 0.003,
                                 style="corner")
    fine = zigzag_construction(make_lattice(k=3, n=512), 0.003,
                               style="corner")
    # the corner detail costs 2*sqrt(2)/n per period, vanishing under
    # refinement; the bulk term is tiny at this load
    assert abs(fine.energy.surface - (1 / SQRT2 + 2 * SQRT2 / 512)) < 1e-12
    assert fine.energy.bulk < 1e-3
    assert fine.energy.total < coarse.energy.total
    assert fine.energy.total < 1 / SQRT2 + 4 * 0.05 ** 2
