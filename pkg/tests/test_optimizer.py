"""Minimum cuts, explicit competitors, descent, and the tiny-grid oracle."""

import dataclasses
import math

import numpy as np
import pytest

from conftest import make_lattice
from microfrac.errors import CapacityError, ConfigError
from microfrac.lattice import BoundaryCondition
from microfrac.optimizer import (CutQuery, T_MAX_BRIDGING, alternate_minimize,
                                 brute_force_oracle, default_t_grid,
                                 min_cut_perforation, run_cut_query,
                                 straight_crack_construction, sweep_density,
                                 zigzag_construction, zigzag_crack)
from microfrac.solver import CrackState, energy

SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# minimum cuts
# ----------------------------------------------------------------------


def test_min_cut_density_exact(lattice_k5_n32, lattice_k3_n32):
    for lat in (lattice_k5_n32, lattice_k3_n32):
        length, crack = min_cut_perforation(lat)
        assert length == SQRT2 / 2.0
        assert crack.count_broken() > 0


def test_restricted_row_density_exact(lattice_k5_n32):
    lat = lattice_k5_n32
    length, crack = min_cut_perforation(lat, restrict_horizontal=True)
    assert length == 0.75
    jy = lat.N // 2 - 1
    assert crack.bv[jy, :].all()
    assert not crack.bv[np.arange(lat.N) != jy, :].any()
    assert not (crack.bh.any() or crack.bne.any() or crack.bse.any())


def test_restricted_row_ties_resolve_downward(lattice_k3_n32):
    lat = lattice_k3_n32
    at_axis, _ = min_cut_perforation(lat, restrict_horizontal=True,
                                     y_level=0.0)
    explicit, _ = min_cut_perforation(lat, rows=[lat.N // 2 - 1])
    assert at_axis == explicit


def test_min_cut_validations(lattice_k3_n32):
    with pytest.raises(ConfigError):
        min_cut_perforation(lattice_k3_n32, restrict_horizontal=True,
                            y_level=0.7)
    with pytest.raises(ConfigError):
        min_cut_perforation(lattice_k3_n32, restrict_horizontal=True,
                            rows=[3])


def test_zero_matrix_weights_give_zero_cut():
    lat = make_lattice(k=1, n=8)
    hollow = dataclasses.replace(
        lat,
        matlen_v=np.zeros_like(lat.matlen_v),
        matlen_h=np.zeros_like(lat.matlen_h),
        matlen_ne=np.zeros_like(lat.matlen_ne),
        matlen_se=np.zeros_like(lat.matlen_se),
        matnum_v=np.zeros_like(lat.matnum_v),
        matnum_h=np.zeros_like(lat.matnum_h),
        matnum_ne=np.zeros_like(lat.matnum_ne),
        matnum_se=np.zeros_like(lat.matnum_se))
    length, _ = min_cut_perforation(hollow)
    assert length == 0.0


def test_full_weight_cut_is_the_straight_line():
    lat = make_lattice(k=1, n=8)
    length, crack = run_cut_query(lat, CutQuery(mode="full"))
    assert abs(length - 1.0) < 1e-12
    assert crack.count_broken() == lat.N + 1


def test_full_cut_query_pays_only_new_elements():
    lat = make_lattice(k=1, n=8)
    N = lat.N
    constraint = CrackState.empty(N)
    constraint.bv[N // 2, : N // 2 + 1] = True
    length, crack = run_cut_query(
        lat, CutQuery(mode="full", constraint=constraint))
    assert 0.0 < length < 1.0 - 1e-12
    assert crack.issuperset(constraint)


def test_cut_query_mode_validation():
    with pytest.raises(ConfigError):
        CutQuery(mode="sideways")


# ----------------------------------------------------------------------
# explicit competitors
# ----------------------------------------------------------------------


def test_zigzag_surface_costs_exact():
    for k in (1, 3):
        lat = make_lattice(k=k, n=32)
        zeros = np.zeros((lat.N + 1, lat.N + 1))
        corner = energy(lat, zigzag_crack(lat, "corner"), zeros).surface
        axis = energy(lat, zigzag_crack(lat, "axis"), zeros).surface
        assert abs(corner - (1 / SQRT2 + 2 * SQRT2 / 32)) < 1e-12
        assert abs(axis - (1 / SQRT2 + (4 - 2 * SQRT2) / 32)) < 1e-12


def test_zigzag_auto_keeps_the_cheaper_style(lattice_k3_n32):
    lat = lattice_k3_n32
    t = 0.05
    auto = zigzag_construction(lat, t, style="auto").energy.total
    corner = zigzag_construction(lat, t, style="corner").energy.total
    axis = zigzag_construction(lat, t, style="axis").energy.total
    assert auto == min(corner, axis)


def test_zigzag_ramps_load_the_soft_squares(lattice_k3_n32):
    eb = zigzag_construction(lattice_k3_n32, 0.05, style="corner").energy
    assert eb.bulk_soft > eb.bulk_matrix
    assert eb.bulk > 0.0


def test_zigzag_validations():
    lat = make_lattice(k=1, n=16)
    with pytest.raises(ConfigError):
        zigzag_construction(lat, T_MAX_BRIDGING + 0.01)
    with pytest.raises(ConfigError):
        zigzag_construction(lat, -0.01)
    with pytest.raises(ConfigError):
        zigzag_construction(lat, 0.05, style="diagonal")
    with pytest.raises(ConfigError):
        zigzag_construction(lat, 0.05, m=0)
    with pytest.raises(ConfigError):
        zigzag_construction(make_lattice(k=1, n=12), 0.05)
    narrow = BoundaryCondition(t=0.05, delta=1.0 - 2.0 * lat.h)
    with pytest.raises(ConfigError):
        zigzag_construction(lat, 0.05, bc=narrow)


def test_straight_construction_separates_exactly(lattice_k3_n32):
    res = straight_crack_construction(lattice_k3_n32, 0.7)
    assert res.energy.bulk == 0.0
    assert abs(res.energy.surface - 1.0) < 1e-12


# ----------------------------------------------------------------------
# alternating descent
# ----------------------------------------------------------------------


def test_alternate_zero_load_keeps_the_intact_state():
    lat = make_lattice(k=1, n=8)
    res = alternate_minimize(lat, BoundaryCondition(t=0.0, delta=0.25))
    assert res.converged
    assert res.crack.count_broken() == 0
    assert res.energy.total == 0.0


def test_alternate_history_nonincreasing(lattice_k3_n32):
    bc = BoundaryCondition(t=1.2, delta=0.25)
    res = alternate_minimize(lattice_k3_n32, bc)
    assert res.converged
    assert all(b <= a + 1e-9 for a, b in zip(res.history, res.history[1:]))


def test_alternate_completion_finishes_a_pinned_zigzag(lattice_k3_n32):
    lat = lattice_k3_n32
    seed = zigzag_crack(lat, "corner")
    bc = BoundaryCondition(t=1.2, delta=0.25)
    res = alternate_minimize(lat, bc, init=seed, constraint=seed)
    assert res.converged
    assert res.crack.issuperset(seed)
    expected = 1 / SQRT2 + 2 * SQRT2 / 32 + 0.5 - 2.0 / 32
    assert abs(res.energy.total - expected) < 1e-6


def test_alternate_constraint_must_be_inside_init(lattice_k3_n32):
    lat = lattice_k3_n32
    seed = zigzag_crack(lat, "corner")
    bc = BoundaryCondition(t=0.5, delta=0.25)
    with pytest.raises(ConfigError):
        alternate_minimize(lat, bc, init=CrackState.empty(lat.N),
                           constraint=seed)
    # omitting init starts from the constraint itself
    res = alternate_minimize(lat, bc, constraint=seed, max_iters=1)
    assert res.crack.issuperset(seed)


# ----------------------------------------------------------------------
# tiny-grid oracle
# ----------------------------------------------------------------------


def test_oracle_zero_load_prefers_no_crack():
    lat = make_lattice(k=1, n=8)
    bc = BoundaryCondition(t=0.0, delta=1.0 - 2.0 * lat.h)
    res = brute_force_oracle(lat, bc)
    assert res.energy == 0.0
    assert res.crack.count_broken() == 0
    assert res.breakdown is not None
    assert res.candidates == 257


def test_oracle_perforation_matches_direct_min_cut():
    lat = make_lattice(k=1, n=8)
    bc = BoundaryCondition(t=0.5, delta=1.0 - 2.0 * lat.h)
    res = brute_force_oracle(lat, bc, weights="perforation")
    N = lat.N
    direct, _ = min_cut_perforation(lat, rows=[N // 2 - 1, N // 2])
    assert res.energy == direct == 0.75
    assert res.breakdown is None


def test_oracle_capacity_and_instance_guards():
    lat = make_lattice(k=1, n=8)
    bc = BoundaryCondition(t=0.1, delta=1.0 - 2.0 * lat.h)
    with pytest.raises(CapacityError):
        brute_force_oracle(lat, bc, cap=10)
    with pytest.raises(ConfigError):
        brute_force_oracle(make_lattice(k=3, n=8),
                           BoundaryCondition(t=0.1, delta=0.25))
    with pytest.raises(ConfigError):
        brute_force_oracle(make_lattice(k=1, n=24),
                           BoundaryCondition(t=0.1, delta=0.25))
    with pytest.raises(ConfigError):
        brute_force_oracle(lat, bc, weights="matrix")


# ----------------------------------------------------------------------
# load sweeps
# ----------------------------------------------------------------------


def test_default_t_grid_shape():
    grid = default_t_grid()
    assert grid[0] == 0.01 and grid[-1] == 0.5
    assert len(grid) == 11
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_sweep_validations(lattice_k3_n32):
    with pytest.raises(ConfigError):
        sweep_density(lattice_k3_n32, [])
    with pytest.raises(ConfigError):
        sweep_density(lattice_k3_n32, [-0.1, 0.2])
    with pytest.raises(ConfigError):
        sweep_density(lattice_k3_n32, [0.2, 0.2])


def test_sweep_before_the_plateau_reports_no_crossover():
    lat = make_lattice(k=1, n=16)
    estimates = sweep_density(lat, [0.01, 0.02])
    assert all(math.isinf(e.t0_estimate) for e in estimates)
    assert all(e.g_upper < 1.0 for e in estimates)
    assert all(b.g_upper >= a.g_upper - 1e-12
               for a, b in zip(estimates, estimates[1:]))
