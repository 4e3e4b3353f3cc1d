"""Geometry membership, clipping, and the closed-form constants."""

import math

import numpy as np
import pytest
import shapely.affinity
import shapely.geometry as sg
import shapely.ops

from microfrac import geometry
from microfrac.errors import ConfigError
from microfrac.geometry import (MicroGeometry, clip_segment_length,
                                clip_segments_inclusion_batch, in_butterfly,
                                in_column, in_inclusion, in_matrix,
                                in_trapezoid, polyline_region_length,
                                unit_cell_polygons, wrap, zigzag_polyline)

SQRT2 = math.sqrt(2.0)
RHO = 0.05


# ----------------------------------------------------------------------
# membership predicates
# ----------------------------------------------------------------------


def test_matrix_membership_points():
    assert not in_matrix(0.0, 0.0)
    assert not in_matrix(0.5, 0.5)
    assert in_matrix(0.25, 0.0)


def test_inclusion_boundary_ties_are_closed():
    # the central square is |x| <= 1/8, |y| <= 1/8: edges and corners in
    assert in_inclusion(0.125, 0.0)
    assert in_inclusion(0.125, 0.125)
    assert in_inclusion(0.375, 0.375)
    assert not in_inclusion(0.125 + 1e-6, 0.0)
    assert not in_inclusion(0.25, 0.25)


def test_butterfly_membership_points():
    assert in_butterfly(0.25, 0.25, RHO)
    assert not in_butterfly(0.0, 0.0, RHO)
    assert in_butterfly(0.125, 0.125 - RHO / 2.0, RHO)


def test_column_membership_points():
    assert in_column(0.3, 0.123, RHO)
    assert not in_column(0.0, 7.0, RHO)
    assert not in_column(0.13, 0.0, RHO)


def test_trapezoid_contains_centroid_and_not_outside():
    assert in_trapezoid(0.5, 0.25)
    assert not in_trapezoid(0.5, 0.5)
    assert not in_trapezoid(0.0, 0.0)


def test_periodicity_of_membership():
    rng = np.random.default_rng(20240817)
    pts = rng.uniform(-0.5, 0.5, size=(10_000, 2))
    shifts = rng.integers(-3, 4, size=(10_000, 2)).astype(float)
    x, y = pts[:, 0], pts[:, 1]
    assert np.array_equal(in_matrix(x, y),
                          in_matrix(x + shifts[:, 0], y + shifts[:, 1]))
    assert np.array_equal(in_butterfly(x, y, RHO),
                          in_butterfly(x + shifts[:, 0], y + shifts[:, 1],
                                       RHO))
    assert np.array_equal(in_column(x, y, RHO),
                          in_column(x + shifts[:, 0], y, RHO))


def test_reflection_symmetry_of_inclusions():
    rng = np.random.default_rng(7)
    x, y = rng.uniform(-1.0, 1.0, size=(2, 5000))
    assert np.array_equal(in_inclusion(x, y), in_inclusion(-x, y))
    assert np.array_equal(in_inclusion(x, y), in_inclusion(x, -y))
    assert np.array_equal(in_butterfly(x, y, RHO), in_butterfly(-x, y, RHO))
    assert np.array_equal(in_butterfly(x, y, RHO), in_butterfly(x, -y, RHO))


def test_butterfly_monotone_in_rho():
    rng = np.random.default_rng(11)
    x, y = rng.uniform(-0.5, 0.5, size=(2, 5000))
    small = in_butterfly(x, y, 0.02)
    large = in_butterfly(x, y, 0.06)
    assert not np.any(small & ~large)


def test_columns_shrink_with_rho():
    rng = np.random.default_rng(12)
    x = rng.uniform(-0.5, 0.5, size=5000)
    wide = in_column(x, 0.0, 0.01)
    narrow = in_column(x, 0.0, 0.1)
    assert not np.any(narrow & ~wide)


def test_rho_validation():
    with pytest.raises(ConfigError):
        in_butterfly(0.25, 0.25, 0.0)
    with pytest.raises(ConfigError):
        in_butterfly(0.25, 0.25, 1.0 / 7.0)
    with pytest.raises(ConfigError):
        in_column(0.3, 0.0, 0.125)
    with pytest.raises(ConfigError):
        MicroGeometry(rho=0.2)
    with pytest.raises(ConfigError):
        MicroGeometry(rho=0.05, period=0.0)


# ----------------------------------------------------------------------
# areas
# ----------------------------------------------------------------------


def test_inclusion_area_exact_midpoint_grid():
    # cell boundaries at multiples of 1/400 never hit the inclusion
    # boundaries (multiples of 1/8) at midpoints, so the count is exact
    n = 400
    mids = (np.arange(n) + 0.5) / n - 0.5
    X, Y = np.meshgrid(mids, mids)
    frac = float(np.count_nonzero(in_inclusion(X, Y))) / (n * n)
    assert frac == 0.125


def test_inclusion_area_monte_carlo():
    rng = np.random.default_rng(20240818)
    pts = rng.uniform(-0.5, 0.5, size=(20_000, 2))
    frac = float(np.count_nonzero(in_inclusion(pts[:, 0], pts[:, 1]))) \
        / len(pts)
    assert abs(frac - 0.125) < 0.01


def test_butterfly_area_pinches_to_zero():
    areas = []
    for rho in (1e-4, 0.02, 0.06):
        polys = [sg.Polygon(q) for q in unit_cell_polygons(rho)["butterfly"]]
        areas.append(shapely.ops.unary_union(polys).area)
    assert areas[0] < 1e-3
    assert areas[0] < areas[1] < areas[2]


# ----------------------------------------------------------------------
# clipping
# ----------------------------------------------------------------------


def test_clip_horizontal_midline_matrix_is_three_quarters():
    val = clip_segment_length((-0.5, 0.0), (0.5, 0.0), "matrix")
    assert val == 0.75


def test_zigzag_matrix_length_is_inverse_sqrt2():
    val = polyline_region_length(zigzag_polyline(1), "matrix")
    assert abs(val - SQRT2 / 2.0) < 1e-14


def test_clip_partition_matrix_plus_inclusion():
    rng = np.random.default_rng(20240819)
    for _ in range(200):
        p0 = rng.uniform(-1.0, 1.0, size=2)
        p1 = rng.uniform(-1.0, 1.0, size=2)
        total = float(np.hypot(*(p1 - p0)))
        a = clip_segment_length(p0, p1, "matrix")
        b = clip_segment_length(p0, p1, "inclusion")
        assert abs(a + b - total) < 1e-12


def _shapely_region(region, rho):
    """Region polygons tiled over [-2, 2]^2 for cross-checking clips."""
    base = [sg.Polygon(p) for p in unit_cell_polygons(rho)[region]]
    tiles = [shapely.affinity.translate(poly, ix, iy)
             for ix in range(-2, 3)
             for iy in range(-2, 3)
             for poly in base]
    return shapely.ops.unary_union(tiles)


def test_clip_against_shapely_cross_check():
    rng = np.random.default_rng(20240820)
    regions = {
        "inclusion": _shapely_region("inclusion", RHO),
        "butterfly": _shapely_region("butterfly", RHO),
    }
    for _ in range(120):
        p0 = rng.uniform(-1.2, 1.2, size=2)
        p1 = rng.uniform(-1.2, 1.2, size=2)
        seg = sg.LineString([tuple(p0), tuple(p1)])
        for region, poly in regions.items():
            ours = clip_segment_length(p0, p1, region, rho=RHO)
            ref = seg.intersection(poly).length
            assert abs(ours - ref) < 1e-9, (region, p0, p1)


def test_clip_column_against_shapely():
    rng = np.random.default_rng(20240821)
    bands = []
    for ix in range(-3, 4):
        for lo, hi in ((-0.5 + RHO, -0.125 - RHO), (0.125 + RHO, 0.5 - RHO)):
            bands.append(sg.Polygon([(lo + ix, -5.0), (hi + ix, -5.0),
                                     (hi + ix, 5.0), (lo + ix, 5.0)]))
    columns = shapely.ops.unary_union(bands)
    for _ in range(120):
        p0 = rng.uniform(-1.2, 1.2, size=2)
        p1 = rng.uniform(-1.2, 1.2, size=2)
        ours = clip_segment_length(p0, p1, "column", rho=RHO)
        ref = sg.LineString([tuple(p0), tuple(p1)]).intersection(
            columns).length
        assert abs(ours - ref) < 1e-9


def test_clip_butterfly_and_column_is_intersection_bound():
    rng = np.random.default_rng(20240822)
    for _ in range(100):
        p0 = rng.uniform(-0.6, 0.6, size=2)
        p1 = rng.uniform(-0.6, 0.6, size=2)
        both = clip_segment_length(p0, p1, "butterfly_and_column", rho=RHO)
        bf = clip_segment_length(p0, p1, "butterfly", rho=RHO)
        col = clip_segment_length(p0, p1, "column", rho=RHO)
        assert both <= min(bf, col) + 1e-12
        assert both >= bf + col - np.hypot(*(np.asarray(p1) - p0)) - 1e-12


def test_clip_scale_parameter():
    # clipping at scale eps measures the eps-periodic structure
    val = clip_segment_length((-0.5, 0.0), (0.5, 0.0), "matrix", scale=0.2)
    assert abs(val - 0.75) < 1e-12


def test_batch_inclusion_clipper_matches_scalar():
    # contract: short segments (well under half a period across)
    rng = np.random.default_rng(20240823)
    P0 = rng.uniform(-1.0, 1.0, size=(300, 2))
    P1 = P0 + rng.uniform(-0.1, 0.1, size=(300, 2))
    batch = clip_segments_inclusion_batch(P0, P1)
    for i in range(len(P0)):
        ref = clip_segment_length(P0[i], P1[i], "inclusion")
        assert abs(batch[i] - ref) < 1e-11


def test_wrap_maps_to_centered_interval():
    vals = wrap(np.array([0.0, 0.5, -0.5, 0.75, 1.25, -3.1]))
    assert np.all(vals >= -0.5) and np.all(vals <= 0.5)
    assert abs(float(wrap(0.75)) + 0.25) < 1e-15


def test_zigzag_polyline_periods_extend():
    one = zigzag_polyline(1)
    three = zigzag_polyline(3)
    assert three.shape[0] == one.shape[0] + 2 * (one.shape[0] - 1)
    assert abs(three[-1, 0] - (one[-1, 0] + 2.0)) < 1e-15
    total = polyline_region_length(three, "matrix")
    assert abs(total - 3.0 * SQRT2 / 2.0) < 1e-13
