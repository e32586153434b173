"""Synthetic corpora, scene JSON round-trips, and fixation CSV ingest."""

import io
import json

import numpy as np
import pytest

from gazeopt.corpus import (
    CorpusSpec,
    aligned_single_region_corpus,
    distractor_pair_corpus,
    generate_corpus,
    load_category_masks,
    load_fixations,
    load_scenes,
    quadrant_corpus,
    save_fixations,
    save_scenes,
)
from gazeopt.errors import DataFormatError, DomainError
from gazeopt.geometry import FieldGeometry, FixationPoint
from gazeopt.imageio import write_image
from gazeopt.scanpath import FixationSequence

FIELD320 = FieldGeometry(320, 320, observer_distance_cm=115.0, pixel_pitch_cm=1.0)
FIELD16 = FieldGeometry(16, 16, observer_distance_cm=115.0, pixel_pitch_cm=1.0)


def small_spec(**overrides):
    base = dict(
        n_scenes=10,
        fieldgeom=FIELD320,
        region_counts=((1, 0.5), (2, 0.5)),
        category_mix=(("person", 0.5), ("text", 0.3), ("other", 0.2)),
        concept_dim=5,
        seed=7,
        region_size_range=(20, 60),
    )
    base.update(overrides)
    return CorpusSpec(**base)


class TestCorpusSpec:
    def test_valid_spec_accepted(self):
        small_spec()

    def test_zero_scenes_rejected(self):
        with pytest.raises(DomainError):
            small_spec(n_scenes=0)

    def test_count_proportions_must_sum_to_one(self):
        with pytest.raises(DomainError):
            small_spec(region_counts=((1, 0.5), (2, 0.4)))

    def test_mix_proportions_must_sum_to_one(self):
        with pytest.raises(DomainError):
            small_spec(category_mix=(("person", 0.5), ("text", 0.3)))

    def test_unknown_category_rejected(self):
        with pytest.raises(DomainError):
            small_spec(category_mix=(("aliens", 1.0),))

    def test_concept_dim_must_hold_all_regions(self):
        with pytest.raises(DomainError):
            small_spec(region_counts=((6, 1.0),), concept_dim=5)

    def test_oversized_regions_rejected(self):
        with pytest.raises(DomainError):
            small_spec(region_size_range=(20, 500))


class TestGenerateCorpus:
    def test_single_region_scenes_are_relevant_objects(self):
        spec = small_spec(region_counts=((1, 1.0),))
        scenes = generate_corpus(spec)
        assert len(scenes) == 10
        for sc in scenes:
            assert len(sc.regions) == 1
            assert sc.regions[0].category == "su_r_object"
            assert sc.regions[0].importance >= 0.95
            assert sc.regions[0].weight == 1.0

    def test_exactly_one_relevant_region_per_scene(self):
        scenes = generate_corpus(small_spec(region_counts=((3, 1.0),)))
        for sc in scenes:
            assert sum(r.importance >= 0.95 for r in sc.regions) == 1

    def test_opt_out_produces_no_relevant_regions(self):
        scenes = generate_corpus(small_spec(ensure_relevant=False))
        for sc in scenes:
            assert all(r.importance < 0.95 for r in sc.regions)
            assert max(r.weight for r in sc.regions) == 1.0

    def test_regions_do_not_overlap(self):
        scenes = generate_corpus(small_spec(region_counts=((3, 1.0),)))
        for sc in scenes:
            boxes = [r.mask.bounding_box() for r in sc.regions]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    ax0, ay0, ax1, ay1 = boxes[i]
                    bx0, by0, bx1, by1 = boxes[j]
                    disjoint = ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0
                    assert disjoint

    def test_same_seed_gives_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_scenes(generate_corpus(small_spec()), a)
        save_scenes(generate_corpus(small_spec()), b)
        assert a.read_bytes() == b.read_bytes()
        save_scenes(generate_corpus(small_spec(seed=8)), b)
        assert a.read_bytes() != b.read_bytes()

    def test_category_mix_within_five_percent_at_hundred_scenes(self):
        spec = small_spec(
            n_scenes=100, region_counts=((2, 1.0),),
            category_mix=(("person", 0.5), ("text", 0.3), ("other", 0.2)),
        )
        scenes = generate_corpus(spec)
        counts = {"person": 0, "text": 0, "other": 0}
        total = 0
        for sc in scenes:
            for reg in sc.regions[1:]:  # slot 0 is the guaranteed relevant one
                counts[reg.category] += 1
                total += 1
        assert total == 100
        for cat, target in (("person", 0.5), ("text", 0.3), ("other", 0.2)):
            assert abs(counts[cat] / total - target) <= 0.05

    def test_salient_regions_keep_their_distance(self):
        spec = small_spec(
            region_counts=((2, 1.0),), category_mix=(("salient", 1.0),),
            salient_min_dva=50.0, region_size_range=(20, 40),
        )
        min_px = 50.0 * FIELD320.ppd
        for sc in generate_corpus(spec):
            (cx0, cy0), (cx1, cy1) = [
                ((b[0] + b[2] - 1) / 2.0, (b[1] + b[3] - 1) / 2.0)
                for b in (r.mask.bounding_box() for r in sc.regions)
            ]
            assert np.hypot(cx1 - cx0, cy1 - cy0) >= min_px - 1.0

    def test_infeasible_packing_raises(self):
        spec = small_spec(
            fieldgeom=FieldGeometry(64, 64, 115.0, 1.0),
            region_counts=((3, 1.0),), region_size_range=(60, 60),
        )
        with pytest.raises(DomainError):
            generate_corpus(spec)


class TestControlledLayouts:
    def test_aligned_regions_stay_inside_one_cell(self):
        scenes = aligned_single_region_corpus(20, FIELD320, (5, 5), seed=3)
        for sc in scenes:
            x0, y0, x1, y1 = sc.regions[0].mask.bounding_box()
            assert x0 // 64 == (x1 - 1) // 64
            assert y0 // 64 == (y1 - 1) // 64
            assert sc.regions[0].importance == 1.0
            assert sc.regions[0].weight == 1.0
            assert sc.regions[0].category == "su_r_object"

    def test_aligned_corpus_deterministic(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_scenes(aligned_single_region_corpus(5, FIELD320, seed=1), a)
        save_scenes(aligned_single_region_corpus(5, FIELD320, seed=1), b)
        assert a.read_bytes() == b.read_bytes()

    def test_quadrant_scenes_cover_all_quadrants(self):
        for sc in quadrant_corpus(10, FIELD320, seed=2):
            assert len(sc.regions) == 4
            assert sorted(r.weight for r in sc.regions) == [0.7, 0.8, 0.9, 1.0]
            quads = set()
            for reg in sc.regions:
                x0, y0, x1, y1 = reg.mask.bounding_box()
                cx, cy = (x0 + x1) / 2.0, (y0 + y1) / 2.0
                quads.add((cy > 160.0, cx > 160.0))
            assert len(quads) == 4

    def test_quadrant_relevant_region_unique(self):
        for sc in quadrant_corpus(5, FIELD320, seed=4):
            assert sum(r.importance >= 0.95 for r in sc.regions) == 1
            top = [r for r in sc.regions if r.importance >= 0.95][0]
            assert top.weight == 1.0
            assert top.category == "su_r_object"

    def test_distractor_pairs_separate_cells(self):
        for sc in distractor_pair_corpus(15, FIELD320, seed=5):
            rel, amb = sc.regions
            assert rel.category == "su_r_object" and rel.importance == 1.0
            assert amb.category == "su_i_object" and amb.importance == 0.3
            assert amb.weight < rel.weight
            rb = rel.mask.bounding_box()
            ab = amb.mask.bounding_box()
            cell_r = ((rb[1] + 24) // 64, (rb[0] + 24) // 64)
            cell_a = ((ab[1] + 24) // 64, (ab[0] + 24) // 64)
            assert cell_r != cell_a


class TestSceneJson:
    def test_save_load_save_is_byte_stable(self, tmp_path):
        p1, p2 = tmp_path / "c1.json", tmp_path / "c2.json"
        save_scenes(generate_corpus(small_spec()), p1)
        save_scenes(load_scenes(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_unknown_fields_survive_round_trip(self, tmp_path):
        p = tmp_path / "c.json"
        save_scenes(generate_corpus(small_spec(n_scenes=1)), p)
        payload = json.loads(p.read_text())
        payload["scenes"][0]["annotator"] = "alice"
        payload["scenes"][0]["regions"][0]["confidence"] = 0.8
        p.write_text(json.dumps(payload))
        scenes = load_scenes(p)
        assert scenes[0].extra == {"annotator": "alice"}
        assert scenes[0].regions[0].extra == {"confidence": 0.8}
        save_scenes(scenes, p)
        again = json.loads(p.read_text())
        assert again["scenes"][0]["annotator"] == "alice"
        assert again["scenes"][0]["regions"][0]["confidence"] == 0.8

    def test_wrong_format_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"format": "other", "version": 1, "scenes": []}')
        with pytest.raises(DataFormatError):
            load_scenes(p)

    def test_wrong_version_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text('{"format": "gazeopt-scenes", "version": 99, "scenes": []}')
        with pytest.raises(DataFormatError):
            load_scenes(p)

    def test_malformed_json_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{nope")
        with pytest.raises(DataFormatError):
            load_scenes(p)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_scenes(tmp_path / "absent.json")

    def test_invalid_scene_content_rejected(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(
            '{"format": "gazeopt-scenes", "version": 1, "scenes": [{"id": "x"}]}'
        )
        with pytest.raises(DataFormatError):
            load_scenes(p)


def make_sequences():
    def seq(scene, subject, pts):
        return FixationSequence(
            source="human", scene_id=scene,
            fixations=tuple(
                FixationPoint(float(x), float(y), index=i)
                for i, (x, y) in enumerate(pts)
            ),
            subject_id=subject,
        )

    return [
        seq("s1", "p1", [(10, 20), (30, 40), (50.5, 60.25)]),
        seq("s2", "p1", [(5, 5), (100, 200)]),
        seq("s1", "p2", [(7, 7)]),
    ]


class TestFixationCsv:
    def test_round_trip_is_identity(self, tmp_path):
        p = tmp_path / "fix.csv"
        original = make_sequences()
        save_fixations(original, p)
        assert load_fixations(p, FIELD320) == original

    def test_rows_group_and_sort_by_index(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,1,30.0,40.0\n"
            "s2,human,p1,0,5.0,5.0\n"
            "s1,human,p1,0,10.0,20.0\n"
        )
        seqs = load_fixations(p, FIELD320)
        assert len(seqs) == 2
        first = next(s for s in seqs if s.scene_id == "s1")
        assert [(f.x, f.y) for f in first.fixations] == [(10.0, 20.0), (30.0, 40.0)]

    def test_empty_file_gives_empty_list(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text("")
        assert load_fixations(p, FIELD320) == []
        p.write_text("scene_id,source,subject_id,index,x_px,y_px\n")
        assert load_fixations(p, FIELD320) == []

    def test_malformed_row_reports_line_number(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,0,10.0,20.0\n"
            "s1,human,p1,1,oops,20.0\n"
        )
        with pytest.raises(DataFormatError, match=":3:"):
            load_fixations(p, FIELD320)

    def test_wrong_column_count_reports_line_number(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,0\n"
        )
        with pytest.raises(DataFormatError, match=":2:"):
            load_fixations(p, FIELD320)

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text("a,b,c\n")
        with pytest.raises(DataFormatError, match=":1:"):
            load_fixations(p, FIELD320)

    def test_duplicate_index_rejected(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,0,10.0,20.0\n"
            "s1,human,p1,0,11.0,21.0\n"
        )
        with pytest.raises(DataFormatError, match="duplicate index"):
            load_fixations(p, FIELD320)

    def test_empty_scene_id_rejected(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            ",human,p1,0,10.0,20.0\n"
        )
        with pytest.raises(DataFormatError, match=":2:"):
            load_fixations(p, FIELD320)

    def test_out_of_bounds_clamped_with_warning(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,0,5000.0,-3.0\n"
        )
        with pytest.warns(UserWarning, match="clamped"):
            seqs = load_fixations(p, FIELD320, oob="clamp")
        assert (seqs[0].fixations[0].x, seqs[0].fixations[0].y) == (319.0, 0.0)

    def test_out_of_bounds_dropped_with_warning(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text(
            "scene_id,source,subject_id,index,x_px,y_px\n"
            "s1,human,p1,0,10.0,20.0\n"
            "s1,human,p1,1,5000.0,20.0\n"
        )
        with pytest.warns(UserWarning, match="dropped"):
            seqs = load_fixations(p, FIELD320, oob="drop")
        assert len(seqs[0].fixations) == 1

    def test_invalid_oob_flag_rejected(self, tmp_path):
        p = tmp_path / "fix.csv"
        p.write_text("scene_id,source,subject_id,index,x_px,y_px\n")
        with pytest.raises(DomainError):
            load_fixations(p, FIELD320, oob="ignore")

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(DataFormatError):
            load_fixations(tmp_path / "absent.csv", FIELD320)

    def test_study_scale_grouping(self, tmp_path):
        p = tmp_path / "study.csv"
        buf = io.StringIO()
        buf.write("scene_id,source,subject_id,index,x_px,y_px\n")
        for subj in range(50):
            for scene in range(147):
                for idx in range(2):
                    buf.write(f"s{scene:03d},human,p{subj:02d},{idx},10.0,10.0\n")
        p.write_text(buf.getvalue())
        seqs = load_fixations(p, FIELD320)
        assert len(seqs) == 7350
        assert all(len(s.fixations) == 2 for s in seqs)


class TestLoadCategoryMasks:
    def test_masks_and_component_count(self, tmp_path):
        people = np.zeros((16, 16), dtype=np.uint8)
        people[2:6, 2:6] = 255
        write_image(tmp_path / "sc1__people.png", people)
        su_i = np.zeros((16, 16), dtype=np.uint8)
        su_i[1:3, 10:12] = 255
        su_i[12:14, 1:3] = 255
        write_image(tmp_path / "sc1__su_i.png", su_i)
        ms = load_category_masks(tmp_path, "sc1", FIELD16)
        assert ms.masks["people"].sum() == 16
        assert ms.applicable["people"]
        assert ms.su_i_count == 2
        assert not ms.applicable["text"]
        assert ms.applicable["center_bias"]
        assert ms.masks["center_bias"][8, 8]

    def test_wrong_shape_rejected(self, tmp_path):
        write_image(tmp_path / "sc2__text.png", np.full((4, 4), 255, dtype=np.uint8))
        with pytest.raises(DataFormatError):
            load_category_masks(tmp_path, "sc2", FIELD16)
