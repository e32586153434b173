"""Visual-angle arithmetic, field embedding, and eccentricity maps."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gazeopt.errors import DomainError
from gazeopt.geometry import (
    DEFAULT_FIELD,
    FieldGeometry,
    FixationPoint,
    Placement,
    combined_eccentricity,
    eccentricity_map,
    embed_in_field,
    pixels_per_degree,
)


class TestPixelsPerDegree:
    def test_desktop_viewing_setup(self):
        assert pixels_per_degree(75.0, 0.0293) == 44

    def test_close_viewing_setup(self):
        assert pixels_per_degree(39.3, 0.0293) == 23

    def test_scale_invariance_of_the_ratio(self):
        assert pixels_per_degree(150.0, 0.0586) == 44

    def test_floor_semantics(self):
        # 75 * tan(1 deg) / 0.0293 = 44.67...; the fraction is dropped
        exact = 75.0 * math.tan(math.radians(1.0)) / 0.0293
        assert 44 < exact < 45
        assert pixels_per_degree(75.0, 0.0293) == math.floor(exact)

    @pytest.mark.parametrize("dist,pitch", [(0.0, 0.0293), (-1.0, 0.0293), (75.0, 0.0)])
    def test_non_positive_inputs_rejected(self, dist, pitch):
        with pytest.raises(DomainError):
            pixels_per_degree(dist, pitch)

    def test_sub_degree_resolution_rejected(self):
        # a pitch so coarse that under one pixel covers a degree
        with pytest.raises(DomainError):
            pixels_per_degree(1.0, 10.0)

    @given(
        d1=st.floats(10.0, 200.0),
        d2=st.floats(10.0, 200.0),
        pitch=st.floats(0.005, 0.1),
    )
    def test_monotone_in_distance(self, d1, d2, pitch):
        lo, hi = sorted((d1, d2))
        assert pixels_per_degree(lo, pitch) <= pixels_per_degree(hi, pitch)


class TestFieldGeometry:
    def test_default_field(self):
        assert DEFAULT_FIELD.width == 1280
        assert DEFAULT_FIELD.height == 1280
        assert DEFAULT_FIELD.ppd == 44

    def test_angular_size(self):
        assert DEFAULT_FIELD.width_deg == pytest.approx(1280 / 44)

    def test_contains_is_inclusive_of_edges(self):
        f = FieldGeometry(100, 50)
        assert f.contains(0.0, 0.0)
        assert f.contains(99.0, 49.0)
        assert not f.contains(99.5, 10.0)
        assert not f.contains(10.0, -0.1)

    def test_dict_round_trip(self):
        f = FieldGeometry(640, 480, observer_distance_cm=39.3)
        assert FieldGeometry.from_dict(f.to_dict()) == f

    def test_degenerate_field_rejected(self):
        with pytest.raises(DomainError):
            FieldGeometry(0, 100)


class TestFixationPoint:
    def test_fractional_coordinates_allowed(self):
        p = FixationPoint(31.5, 64.25, index=2)
        assert (p.x, p.y, p.index) == (31.5, 64.25, 2)

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            FixationPoint(float("nan"), 0.0)
        with pytest.raises(DomainError):
            FixationPoint(0.0, float("inf"))


class TestEmbedInField:
    def test_landscape_image_centers_vertically(self):
        p = embed_in_field(1280, 1024, DEFAULT_FIELD)
        assert (p.offset_x, p.offset_y, p.width, p.height) == (0, 128, 1280, 1024)

    def test_exact_fit(self):
        p = embed_in_field(1280, 1280, DEFAULT_FIELD)
        assert (p.offset_x, p.offset_y) == (0, 0)

    def test_small_image_centers_both_axes(self):
        p = embed_in_field(1000, 750, DEFAULT_FIELD)
        assert (p.offset_x, p.offset_y) == (140, 265)

    def test_scale_to_width_rescales_before_centering(self):
        p = embed_in_field(2560, 2048, DEFAULT_FIELD, scale_to_width=True)
        assert (p.width, p.height) == (1280, 1024)
        assert (p.offset_x, p.offset_y) == (0, 128)

    def test_height_overflow_is_an_error_not_a_crop(self):
        with pytest.raises(DomainError):
            embed_in_field(1280, 2000, DEFAULT_FIELD)

    def test_zero_area_rejected(self):
        with pytest.raises(DomainError):
            embed_in_field(0, 100, DEFAULT_FIELD)

    @given(w=st.integers(1, 1280), h=st.integers(1, 1280))
    def test_placement_always_inside_field(self, w, h):
        p = embed_in_field(w, h, DEFAULT_FIELD)
        assert p.offset_x >= 0 and p.offset_y >= 0
        assert p.offset_x + p.width <= 1280
        assert p.offset_y + p.height <= 1280


class TestEccentricityMap:
    def test_zero_at_fixation_pixel(self):
        f = FieldGeometry(64, 64)
        theta = eccentricity_map(f, FixationPoint(10.0, 20.0))
        assert theta[20, 10] == 0.0
        assert theta.min() == 0.0

    def test_one_degree_at_ppd_pixels(self):
        theta = eccentricity_map(DEFAULT_FIELD, FixationPoint(0.0, 0.0))
        assert theta[0, 44] == pytest.approx(1.0, abs=1e-12)

    def test_pythagorean_offset(self):
        # 3-4-5 right triangle in pixels
        theta = eccentricity_map(DEFAULT_FIELD, FixationPoint(0.0, 0.0))
        assert theta[4, 3] == pytest.approx(5.0 / 44.0, abs=1e-15)

    def test_radial_symmetry_around_fixation(self):
        f = FieldGeometry(41, 41)
        theta = eccentricity_map(f, FixationPoint(20.0, 20.0))
        assert np.allclose(theta, theta[::-1, :])
        assert np.allclose(theta, theta[:, ::-1])

    def test_window_restricts_extent_but_measures_in_field_coords(self):
        f = FieldGeometry(100, 100)
        window = Placement(10, 20, 30, 40)
        theta = eccentricity_map(f, FixationPoint(10.0, 20.0), window=window)
        assert theta.shape == (40, 30)
        assert theta[0, 0] == 0.0  # window origin coincides with the fixation

    def test_fixation_outside_field_rejected(self):
        with pytest.raises(DomainError):
            eccentricity_map(FieldGeometry(10, 10), FixationPoint(10.0, 0.0))

    @given(
        fx=st.floats(0.0, 39.0),
        fy=st.floats(0.0, 29.0),
    )
    def test_non_negative_everywhere(self, fx, fy):
        theta = eccentricity_map(FieldGeometry(40, 30), FixationPoint(fx, fy))
        assert np.all(theta >= 0.0)


class TestCombinedEccentricity:
    def test_elementwise_minimum(self):
        f = FieldGeometry(32, 32)
        a = eccentricity_map(f, FixationPoint(0.0, 0.0))
        b = eccentricity_map(f, FixationPoint(31.0, 31.0))
        combined = combined_eccentricity([a, b])
        assert np.array_equal(combined, np.minimum(a, b))

    def test_identical_fixations_change_nothing(self):
        f = FieldGeometry(16, 16)
        a = eccentricity_map(f, FixationPoint(8.0, 8.0))
        assert np.array_equal(combined_eccentricity([a, a]), a)

    def test_empty_list_rejected(self):
        with pytest.raises(DomainError):
            combined_eccentricity([])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            combined_eccentricity([np.zeros((4, 4)), np.zeros((4, 5))])
