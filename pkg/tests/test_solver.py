"""Displacement solves, energy accounting, and crack-state algebra."""

import math

import numpy as np
import pytest

from conftest import make_lattice
from microfrac.errors import ConvergenceError
from microfrac.lattice import BoundaryCondition, apply_bc
from microfrac.solver import (CrackState, DisplacementField, EnergyBreakdown,
                              crack_region_lengths, energy, jump_profile,
                              solve_displacement)

SQRT2 = math.sqrt(2.0)


def _random_crack(N, rng, p=0.12):
    crack = CrackState.empty(N)
    crack.bv[:] = rng.random((N, N + 1)) < p
    crack.bh[:] = rng.random((N + 1, N)) < p
    crack.bne[:] = rng.random((N - 1, N - 1)) < p / 2
    crack.bse[:] = rng.random((N - 1, N - 1)) < p / 2
    return crack


# ----------------------------------------------------------------------
# solves
# ----------------------------------------------------------------------


def test_crack_free_ramp_matches_analytic_energy():
    lat = make_lattice(k=1, n=16)
    bc = BoundaryCondition(t=0.3, delta=0.25)
    u = solve_displacement(lat, CrackState.empty(lat.N), bc)
    eb = energy(lat, CrackState.empty(lat.N), u)
    exact = bc.t ** 2 / (1.0 - bc.delta)
    assert abs(eb.total - exact) < 1e-12
    assert eb.surface == 0.0


def test_energy_scales_exactly_quadratically():
    lat = make_lattice(k=3, n=8)
    rng = np.random.default_rng(3)
    crack = _random_crack(lat.N, rng)
    results = []
    for t in (0.25, 0.5):
        bc = BoundaryCondition(t=t, delta=0.25)
        u = solve_displacement(lat, crack, bc)
        results.append(energy(lat, crack, u))
    e1, e2 = results
    assert e2.bulk_matrix == 4.0 * e1.bulk_matrix
    assert e2.bulk_soft == 4.0 * e1.bulk_soft
    assert e2.surface == e1.surface


def test_maximum_principle_over_random_cracks():
    lat = make_lattice(k=1, n=8)
    rng = np.random.default_rng(20240824)
    bc = BoundaryCondition(t=0.7, delta=0.25)
    masks = apply_bc(lat, bc)
    for _ in range(100):
        crack = _random_crack(lat.N, rng, p=0.15)
        u = solve_displacement(lat, crack, bc, masks=masks)
        assert float(np.min(u.values)) >= -1e-10
        assert float(np.max(u.values)) <= bc.t + 1e-10


def test_full_cut_kills_bulk_and_opens_jump():
    lat = make_lattice(k=1, n=8)
    N = lat.N
    bc = BoundaryCondition(t=0.4, delta=0.25)
    crack = CrackState.empty(N)
    crack.bv[N // 2, :] = True
    u = solve_displacement(lat, crack, bc)
    eb = energy(lat, crack, u)
    assert eb.bulk <= 1e-16
    assert abs(eb.surface - 1.0) < 1e-12
    jumps = [j for _, j in jump_profile(lat, crack, u)]
    assert np.allclose(jumps, bc.t, atol=1e-10)


def test_solution_beats_perturbed_competitors():
    lat = make_lattice(k=3, n=8)
    bc = BoundaryCondition(t=0.5, delta=0.25)
    masks = apply_bc(lat, bc)
    rng = np.random.default_rng(5)
    crack = _random_crack(lat.N, rng, p=0.08)
    u = solve_displacement(lat, crack, bc, masks=masks)
    base = energy(lat, crack, u).total
    free = masks.row_side == 0
    for _ in range(20):
        bump = rng.normal(scale=0.02, size=u.values.shape)
        bump[~free, :] = 0.0
        trial = energy(lat, crack, u.values + bump).total
        assert trial >= base - 1e-12


def test_tighter_tolerance_reduces_residual():
    lat = make_lattice(k=3, n=16)
    bc = BoundaryCondition(t=0.5, delta=0.25)
    crack = _random_crack(lat.N, np.random.default_rng(9), p=0.05)
    loose = solve_displacement(lat, crack, bc, tol=1e-4)
    tight = solve_displacement(lat, crack, bc, tol=1e-12)
    assert tight.residual_norm <= loose.residual_norm
    assert tight.iterations >= loose.iterations


def test_iteration_cap_raises():
    lat = make_lattice(k=3, n=16)
    bc = BoundaryCondition(t=0.5, delta=0.25)
    with pytest.raises(ConvergenceError):
        solve_displacement(lat, CrackState.empty(lat.N), bc, max_iter=1)


def test_warm_start_agrees_with_cold_start():
    lat = make_lattice(k=3, n=8)
    bc = BoundaryCondition(t=0.3, delta=0.25)
    crack = _random_crack(lat.N, np.random.default_rng(2), p=0.1)
    cold = solve_displacement(lat, crack, bc, tol=1e-12)
    warm = solve_displacement(lat, crack, bc, tol=1e-12,
                              init=cold.values * 0.9)
    assert abs(energy(lat, crack, cold).total
               - energy(lat, crack, warm).total) < 1e-10


def test_mirror_symmetry_energy_equality():
    lat = make_lattice(k=3, n=8)
    bc = BoundaryCondition(t=0.6, delta=0.25)
    rng = np.random.default_rng(13)
    for _ in range(10):
        crack = _random_crack(lat.N, rng, p=0.1)
        mirrored = crack.mirror_x()
        e1 = energy(lat, crack, solve_displacement(lat, crack, bc)).total
        e2 = energy(lat, mirrored,
                    solve_displacement(lat, mirrored, bc)).total
        assert abs(e1 - e2) < 1e-9


def test_energy_accepts_field_and_array():
    lat = make_lattice(k=1, n=8)
    bc = BoundaryCondition(t=0.2, delta=0.25)
    crack = CrackState.empty(lat.N)
    u = solve_displacement(lat, crack, bc)
    assert energy(lat, crack, u) == energy(lat, crack, u.values)


# ----------------------------------------------------------------------
# crack state
# ----------------------------------------------------------------------


def test_crack_state_set_algebra():
    rng = np.random.default_rng(31)
    a = _random_crack(8, rng)
    b = _random_crack(8, rng)
    u = a.union(b)
    assert u.issuperset(a) and u.issuperset(b)
    assert u.count_broken() <= a.count_broken() + b.count_broken()
    c = a.copy()
    c.bv[0, 0] = not c.bv[0, 0]
    assert not c.equals(a)
    assert a.equals(a.copy())


def test_crack_mirror_is_an_involution():
    rng = np.random.default_rng(37)
    crack = _random_crack(10, rng)
    twice = crack.mirror_x().mirror_x()
    assert crack.equals(twice)
    assert crack.mirror_x().count_broken() == crack.count_broken()


def test_dead_axis_masks_shadow_conventions():
    crack = CrackState.empty(4)
    crack.bne[1, 1] = True
    dead_v, dead_h = crack.dead_axis_masks()
    assert dead_v[1, 2] and dead_h[2, 2]
    assert int(dead_v.sum()) == 1 and int(dead_h.sum()) == 1
    crack = CrackState.empty(4)
    crack.bse[1, 1] = True
    dead_v, dead_h = crack.dead_axis_masks()
    assert dead_v[1, 2] and dead_h[2, 1]


def test_broken_ids_ascending_and_complete():
    rng = np.random.default_rng(41)
    crack = _random_crack(6, rng)
    ids = crack.broken_ids()
    assert len(ids) == crack.count_broken()
    assert np.all(np.diff(ids) > 0)


def test_jump_profile_ids_ascending():
    lat = make_lattice(k=1, n=8)
    bc = BoundaryCondition(t=0.4, delta=0.25)
    crack = _random_crack(lat.N, np.random.default_rng(43), p=0.1)
    u = solve_displacement(lat, crack, bc)
    ids = [gid for gid, _ in jump_profile(lat, crack, u)]
    assert ids == sorted(ids)
    assert len(ids) == crack.count_broken()


def test_crack_region_lengths_partition(lattice_k3_n32):
    lat = lattice_k3_n32
    crack = _random_crack(lat.N, np.random.default_rng(47), p=0.05)
    lengths = crack_region_lengths(lat, crack)
    assert abs(lengths["matrix"] + lengths["inclusion"]
               - lengths["total"]) < 1e-12
    for key in ("butterfly", "column", "butterfly_and_column"):
        assert 0.0 <= lengths[key] <= lengths["total"] + 1e-12
    assert lengths["butterfly_and_column"] <= lengths["butterfly"] + 1e-12


def test_energy_breakdown_properties():
    eb = EnergyBreakdown(bulk_matrix=0.25, bulk_soft=0.5, surface=1.0)
    assert eb.bulk == 0.75
    assert eb.total == 1.75


def test_displacement_field_record():
    vals = np.zeros((3, 3))
    f = DisplacementField(values=vals, residual_norm=1e-12, iterations=7)
    assert f.values is vals
    assert f.iterations == 7
