"""Scanpath generation: IOR argmax walks, random baseline, prediction maps."""

import numpy as np
import pytest

from gazeopt.errors import DataFormatError, DomainError
from gazeopt.geometry import FieldGeometry, FixationPoint, Placement
from gazeopt.imageio import write_image
from gazeopt.oracle import RegionMask, Scene, SemanticRegion
from gazeopt.policy import (
    ActionDistribution,
    TrainingConfig,
    train_policy_chain,
)
from gazeopt.scanpath import (
    DEEPGAZE_IOR_DVA,
    GBVS_IOR_DVA,
    ITTI_KOCH_IOR_DVA,
    RANDOM_IOR_DVA,
    FixationSequence,
    PriorityMap,
    load_priority_map,
    map_scanpath,
    policy_scanpath,
    prediction_heatmap,
    random_scanpath,
    smooth_priority_map,
)

# 115 cm at 1 cm pixels: 115 * tan(1 deg) = 2.007 -> 2 px per degree
FIELD8 = FieldGeometry(8, 8, observer_distance_cm=115.0, pixel_pitch_cm=1.0)
FIELD4 = FieldGeometry(4, 4, observer_distance_cm=115.0, pixel_pitch_cm=1.0)


def unit(dim, axis):
    v = np.zeros(dim)
    v[axis] = 1.0
    return v


def test_probe_field_has_two_pixels_per_degree():
    assert FIELD8.ppd == 2


class TestFixationSequence:
    def test_requires_a_fixation(self):
        with pytest.raises(DomainError):
            FixationSequence(source="s", scene_id="x", fixations=())

    def test_list_coerced_to_tuple(self):
        seq = FixationSequence("s", "x", [FixationPoint(1.0, 2.0)])
        assert isinstance(seq.fixations, tuple)
        assert seq.flagged is False
        assert seq.subject_id is None


class TestPriorityMap:
    def test_stores_float64(self):
        pm = PriorityMap(values=np.ones((4, 4), dtype=np.float32), source="m")
        assert pm.values.dtype == np.float64

    def test_one_dimensional_rejected(self):
        with pytest.raises(DomainError):
            PriorityMap(values=np.ones(4), source="m")

    def test_negative_rejected(self):
        v = np.ones((3, 3))
        v[1, 1] = -0.1
        with pytest.raises(DomainError):
            PriorityMap(values=v, source="m")

    def test_nan_rejected(self):
        v = np.ones((3, 3))
        v[0, 0] = np.nan
        with pytest.raises(DomainError):
            PriorityMap(values=v, source="m")

    def test_all_zero_rejected(self):
        with pytest.raises(DomainError):
            PriorityMap(values=np.zeros((3, 3)), source="m")


class TestLoadPriorityMap:
    def test_csv_grid_normalized_to_peak_one(self, tmp_path):
        p = tmp_path / "salience.csv"
        p.write_text("0.0,2.0\n1.0,4.0\n")
        pm = load_priority_map(p)
        assert pm.source == "salience"
        np.testing.assert_allclose(pm.values, [[0.0, 0.5], [0.25, 1.0]])

    def test_grayscale_image(self, tmp_path):
        p = tmp_path / "grad.pgm"
        write_image(p, np.array([[0, 128], [64, 255]], dtype=np.uint8))
        pm = load_priority_map(p)
        assert pm.values[1, 1] == 1.0
        assert pm.values[0, 1] == pytest.approx(128 / 255)

    def test_rgb_image_averaged(self, tmp_path):
        p = tmp_path / "rgb.png"
        px = np.zeros((2, 2, 3), dtype=np.uint8)
        px[0, 0] = (255, 0, 0)  # channel mean 85
        px[1, 1] = (255, 255, 255)
        write_image(p, px)
        pm = load_priority_map(p)
        assert pm.values[1, 1] == 1.0
        assert pm.values[0, 0] == pytest.approx(85 / 255)

    def test_all_zero_rejected(self, tmp_path):
        p = tmp_path / "zero.csv"
        p.write_text("0,0\n0,0\n")
        with pytest.raises(DataFormatError):
            load_priority_map(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_priority_map(tmp_path / "nope.csv")

    def test_malformed_csv_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\nthree,4\n")
        with pytest.raises(DataFormatError):
            load_priority_map(p)


class TestSmoothPriorityMap:
    def test_constant_map_unchanged(self):
        pm = PriorityMap(np.full((16, 16), 0.4), "c")
        out = smooth_priority_map(pm, 2.0, FieldGeometry(16, 16, 115.0, 1.0))
        np.testing.assert_allclose(out.values, 0.4, atol=1e-9)

    def test_interior_impulse_becomes_uniform_disc(self):
        field = FieldGeometry(16, 16, 115.0, 1.0)  # ppd 2
        v = np.zeros((16, 16))
        v[8, 8] = 1.0
        out = smooth_priority_map(PriorityMap(v, "i"), 1.0, field).values
        # radius 1 px -> 5-point cross, each 1/5
        hits = np.argwhere(out > 1e-12)
        assert len(hits) == 5
        np.testing.assert_allclose(out[out > 1e-12], 0.2, atol=1e-9)
        assert out.sum() == pytest.approx(1.0, abs=1e-9)

    def test_mass_preserved_within_one_percent(self):
        rng = np.random.default_rng(11)
        v = rng.uniform(0.1, 1.0, size=(64, 64))
        field = FieldGeometry(64, 64, 115.0, 1.0)
        out = smooth_priority_map(PriorityMap(v, "r"), 2.0, field).values
        assert abs(out.sum() - v.sum()) / v.sum() < 0.01

    def test_nonpositive_diameter_rejected(self):
        pm = PriorityMap(np.ones((4, 4)), "c")
        with pytest.raises(DomainError):
            smooth_priority_map(pm, 0.0, FIELD4)

    def test_published_ior_diameters(self):
        assert DEEPGAZE_IOR_DVA == 2.6
        assert GBVS_IOR_DVA == 2.8
        assert ITTI_KOCH_IOR_DVA == 2.0
        assert RANDOM_IOR_DVA == 2.0


def three_peak_map():
    v = np.zeros((8, 8))
    v[2, 3] = 1.0
    v[6, 6] = 0.8
    v[1, 7] = 0.6
    return PriorityMap(v, "peaks")


class TestMapScanpath:
    def test_picks_peaks_in_value_order(self):
        seq = map_scanpath(three_peak_map(), 3, 2.0, 0.0, FIELD8, scene_id="sc")
        assert seq.scene_id == "sc"
        assert seq.source == "peaks"
        assert seq.flagged is False
        pts = [(f.x, f.y) for f in seq.fixations]
        assert pts == [(3.0, 2.0), (6.0, 6.0), (7.0, 1.0)]

    def test_later_fixations_outside_earlier_ior_discs(self):
        seq = map_scanpath(three_peak_map(), 3, 2.0, 0.0, FIELD8)
        radius = 2.0 / 2.0 * FIELD8.ppd
        pts = seq.fixations
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                d = np.hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y)
                assert d >= radius

    def test_tie_break_is_lowest_row_major(self):
        pm = PriorityMap(np.ones((8, 8)), "flat")
        seq = map_scanpath(pm, 2, 2.0, 0.0, FIELD8)
        assert (seq.fixations[0].x, seq.fixations[0].y) == (0.0, 0.0)
        # strict disc of radius 2: (0,2) at distance exactly 2 survives
        assert (seq.fixations[1].x, seq.fixations[1].y) == (2.0, 0.0)

    def test_initial_fixation_prepended_and_inhibited(self):
        seq = map_scanpath(
            three_peak_map(), 2, 2.0, 0.0, FIELD8,
            initial=FixationPoint(3.0, 2.0),
        )
        assert len(seq.fixations) == 3
        assert (seq.fixations[0].x, seq.fixations[0].y) == (3.0, 2.0)
        # top peak sits inside the initial IOR disc, so the next pick skips it
        assert (seq.fixations[1].x, seq.fixations[1].y) == (6.0, 6.0)

    def test_smoothing_favors_extended_plateau_over_lone_pixel(self):
        field = FieldGeometry(8, 8, 115.0, 1.0)
        v = np.zeros((8, 8))
        v[1, 1] = 1.0
        v[4:7, 4:7] = 0.5
        pm = PriorityMap(v, "mix")
        sharp = map_scanpath(pm, 1, 2.0, 0.0, field)
        assert (sharp.fixations[0].x, sharp.fixations[0].y) == (1.0, 1.0)
        blurred = map_scanpath(pm, 1, 2.0, 1.0, field)
        assert (blurred.fixations[0].x, blurred.fixations[0].y) == (5.0, 5.0)

    def test_nearby_second_peak_suppressed_by_ior(self):
        # peaks 1 DVA apart with a 2.6 DVA IOR: second peak is inhibited
        v = np.zeros((8, 8))
        v[1, 1] = 1.0
        v[1, 3] = 0.9
        v[6, 6] = 0.5
        seq = map_scanpath(PriorityMap(v, "close"), 2, 2.6, 0.0, FIELD8)
        assert (seq.fixations[0].x, seq.fixations[0].y) == (1.0, 1.0)
        assert (seq.fixations[1].x, seq.fixations[1].y) == (6.0, 6.0)

    def test_exhausted_map_falls_back_to_random_unvisited(self):
        pm = PriorityMap(np.ones((4, 4)), "tiny")
        seq = map_scanpath(pm, 3, 20.0, 0.0, FIELD4, rng=np.random.default_rng(5))
        assert seq.flagged is True
        pts = [(f.x, f.y) for f in seq.fixations]
        assert len(set(pts)) == 3  # no revisits
        assert pts[0] == (0.0, 0.0)

    def test_exhaustion_fallback_deterministic_given_rng_seed(self):
        pm = PriorityMap(np.ones((4, 4)), "tiny")
        a = map_scanpath(pm, 3, 20.0, 0.0, FIELD4, rng=np.random.default_rng(9))
        b = map_scanpath(pm, 3, 20.0, 0.0, FIELD4, rng=np.random.default_rng(9))
        assert [(f.x, f.y) for f in a.fixations] == [(f.x, f.y) for f in b.fixations]

    def test_deterministic_without_exhaustion(self):
        a = map_scanpath(three_peak_map(), 3, 2.0, 0.5, FIELD8)
        b = map_scanpath(three_peak_map(), 3, 2.0, 0.5, FIELD8)
        assert [(f.x, f.y) for f in a.fixations] == [(f.x, f.y) for f in b.fixations]

    def test_zero_fixations_rejected(self):
        with pytest.raises(DomainError):
            map_scanpath(three_peak_map(), 0, 2.0, 0.0, FIELD8)

    def test_nonpositive_ior_rejected(self):
        with pytest.raises(DomainError):
            map_scanpath(three_peak_map(), 1, 0.0, 0.0, FIELD8)

    def test_field_shape_mismatch_rejected(self):
        with pytest.raises(DomainError):
            map_scanpath(three_peak_map(), 1, 2.0, 0.0, FIELD4)


class TestRandomScanpath:
    def test_single_point_inside_rectangle(self):
        seq = random_scanpath(FIELD8, 1, rng=0)
        f = seq.fixations[0]
        assert 0.0 <= f.x <= 8.0 and 0.0 <= f.y <= 8.0
        assert seq.source == "random"

    def test_pairwise_distances_respect_ior(self):
        field = FieldGeometry(320, 320, 115.0, 1.0)  # ppd 2
        seq = random_scanpath(field, 10, ior_diameter_dva=2.0, rng=4)
        min_px = 2.0 * field.ppd
        pts = seq.fixations
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                assert np.hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y) >= min_px

    def test_deterministic_per_seed(self):
        field = FieldGeometry(320, 320, 115.0, 1.0)
        a = random_scanpath(field, 5, rng=3)
        b = random_scanpath(field, 5, rng=3)
        c = random_scanpath(field, 5, rng=4)
        assert [(f.x, f.y) for f in a.fixations] == [(f.x, f.y) for f in b.fixations]
        assert [(f.x, f.y) for f in a.fixations] != [(f.x, f.y) for f in c.fixations]

    def test_region_restricts_draws(self):
        field = FieldGeometry(320, 320, 115.0, 1.0)
        region = Placement(100, 50, 40, 30)
        seq = random_scanpath(field, 4, ior_diameter_dva=1.0, rng=2, region=region)
        for f in seq.fixations:
            assert 100.0 <= f.x <= 140.0
            assert 50.0 <= f.y <= 80.0

    def test_infeasible_spacing_raises(self):
        with pytest.raises(DomainError):
            random_scanpath(FIELD8, 2, ior_diameter_dva=100.0, rng=0)

    def test_zero_fixations_rejected(self):
        with pytest.raises(DomainError):
            random_scanpath(FIELD8, 0, rng=0)


class TestPredictionHeatmap:
    def test_single_map_upsampled_by_nearest_cell(self):
        d = ActionDistribution(np.array([[0.1, 0.2], [0.3, 0.4]]), 3.0)
        pm = prediction_heatmap([d], FIELD4)
        assert pm.values.shape == (4, 4)
        np.testing.assert_allclose(pm.values[:2, :2], 0.1)
        np.testing.assert_allclose(pm.values[:2, 2:], 0.2)
        np.testing.assert_allclose(pm.values[2:, :2], 0.3)
        np.testing.assert_allclose(pm.values[2:, 2:], 0.4)

    def test_elementwise_max_keeps_both_peaks(self):
        d1 = ActionDistribution(np.array([[0.7, 0.1], [0.1, 0.1]]), 3.0)
        d2 = ActionDistribution(np.array([[0.1, 0.1], [0.1, 0.7]]), 3.0)
        pm = prediction_heatmap([d1, d2], FIELD4)
        assert pm.values[0, 0] == 0.7
        assert pm.values[3, 3] == 0.7
        assert pm.values[0, 3] == pytest.approx(0.1)
        # max of distributions each summing to 1 sums to at least 1 per cell grid
        assert pm.values[::2, ::2].sum() >= 1.0

    def test_empty_input_rejected(self):
        with pytest.raises(DomainError):
            prediction_heatmap([], FIELD4)

    def test_shape_mismatch_rejected(self):
        d1 = ActionDistribution(np.full((2, 2), 0.25), 3.0)
        d2 = ActionDistribution(np.full((1, 4), 0.25), 3.0)
        with pytest.raises(DomainError):
            prediction_heatmap([d1, d2], FIELD4)

    def test_uneven_field_division_rejected(self):
        d = ActionDistribution(np.full((2, 2), 0.25), 3.0)
        with pytest.raises(DomainError):
            prediction_heatmap([d], FieldGeometry(5, 5, 115.0, 1.0))


def small_scene():
    return Scene(
        id="tiny",
        placement=Placement(0, 0, 64, 64),
        regions=(
            SemanticRegion(
                mask=RegionMask("rect", (8, 8, 16, 16)),
                weight=1.0,
                concept=unit(3, 1),
                category="su_r_object",
            ),
        ),
        base_concept=unit(3, 0),
    )


@pytest.fixture(scope="module")
def chain():
    field = FieldGeometry(64, 64, 115.0, 1.0)
    config = TrainingConfig(
        n_fixations=2, batch_size=2, iterations=1, learning_rate=1e-3
    )
    return train_policy_chain(
        [small_scene()], config, seed=0, fieldgeom=field,
        grid=(4, 4), channels=8, describe_samples=2,
    )


class TestPolicyScanpath:
    def test_sequence_shape_and_metadata(self, chain):
        seq = policy_scanpath(
            chain, small_scene(), FixationPoint(0.0, 0.0), describe_samples=2
        )
        assert len(seq.fixations) == 3  # initial + one per step network
        assert (seq.fixations[0].x, seq.fixations[0].y) == (0.0, 0.0)
        assert seq.scene_id == "tiny"
        assert seq.source == "model"

    def test_fixations_land_on_cell_centers(self, chain):
        seq = policy_scanpath(
            chain, small_scene(), FixationPoint(0.0, 0.0), describe_samples=2
        )
        for f in seq.fixations[1:]:
            assert (f.x - 8.0) % 16.0 == 0.0
            assert (f.y - 8.0) % 16.0 == 0.0

    def test_deterministic(self, chain):
        a = policy_scanpath(
            chain, small_scene(), FixationPoint(32.0, 63.0), describe_samples=2
        )
        b = policy_scanpath(
            chain, small_scene(), FixationPoint(32.0, 63.0), describe_samples=2
        )
        assert [(f.x, f.y) for f in a.fixations] == [(f.x, f.y) for f in b.fixations]
