import hashlib
import math
from pathlib import Path

import numpy as np
import pytest

from mgvton import data_model as dm
from mgvton import synthetic as syn


def specs(seed=3, resolution=(64, 48)):
    return syn.sample_triplet_specs(seed, resolution)


def tree_digest(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def brute_force_cover(prim, H, W):
    """Pixel-centre coverage of one primitive, evaluated point by point."""
    out = np.zeros((H, W), bool)
    if prim.kind == "capsule":
        x0, y0, x1, y1, r = prim.geometry
        dx, dy = x1 - x0, y1 - y0
        L2 = dx * dx + dy * dy
        for v in range(H):
            for u in range(W):
                t = 0.0 if L2 == 0 else min(max(((u - x0) * dx + (v - y0) * dy) / L2, 0.0), 1.0)
                out[v, u] = (u - x0 - t * dx) ** 2 + (v - y0 - t * dy) ** 2 <= r * r
    else:
        pts = syn._ccw(prim.geometry)
        for v in range(H):
            for u in range(W):
                ok = True
                for k in range(len(pts)):
                    (ax, ay), (bx, by) = pts[k], pts[(k + 1) % len(pts)]
                    ok &= (bx - ax) * (v - ay) - (by - ay) * (u - ax) >= 0
                out[v, u] = ok
    return out


class TestSpecs:
    def test_same_seed_same_spec(self):
        assert specs(5) == specs(5)

    def test_pose_angles_within_limits(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = np.array(syn.PoseSpec.sample(rng).angles)
            assert np.all(a >= syn.JOINT_LIMITS[:, 0]) and np.all(a <= syn.JOINT_LIMITS[:, 1])

    def test_out_of_limit_pose_rejected(self):
        with pytest.raises(ValueError):
            syn.PoseSpec(tuple([0.0] * 2 + [5.0] + [0.3] * 7))

    def test_unknown_pattern_rejected(self):
        with pytest.raises(ValueError):
            syn.ClothesSpec((0.5, 0.5, 0.5), pattern="plaid")

    def test_triplet_poses_are_distinct(self):
        for seed in range(10):
            _, _, a, b = specs(seed)
            assert a.distance(b) >= syn.MIN_POSE_DISTANCE


class TestRenderPerson:
    def test_deterministic(self):
        person, clothes, pose, _ = specs()
        a = syn.render_person(person, clothes, pose, (64, 48))
        b = syn.render_person(person, clothes, pose, (64, 48))
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)

    def test_parsing_matches_painter_oracle(self):
        person, clothes, pose, _ = specs(7)
        r = syn.render_person_layers(person, clothes, pose, (64, 48))
        oracle = np.zeros((64, 48), np.uint8)
        for prim in r.primitives:
            oracle[brute_force_cover(prim, 64, 48)] = prim.label
        np.testing.assert_array_equal(r.parsing, oracle)

    def test_hair_region_is_hair_primitive_coverage(self):
        person, clothes, pose, _ = specs(9)
        r = syn.render_person_layers(person, clothes, pose, (64, 48))
        hair_parts = [i + 1 for i, p in enumerate(r.primitives) if p.label == dm.HAIR]
        np.testing.assert_array_equal(r.parsing == dm.HAIR, np.isin(r.parts, hair_parts))

    def test_clothes_mask_equals_internal_coverage(self):
        for seed in range(5):
            person, clothes, pose, _ = specs(seed)
            r = syn.render_person_layers(person, clothes, pose, (64, 48))
            garment = [i + 1 for i, p in enumerate(r.primitives) if p.label == dm.UPPER_CLOTHES]
            np.testing.assert_array_equal(dm.clothes_mask_from_parsing(r.parsing), np.isin(r.parts, garment))

    def test_right_wrist_forward_kinematics(self):
        person, clothes, pose, _ = specs(4, (256, 192))
        _, _, kp = syn.render_person(person, clothes, pose, (256, 192))
        # recompute from the angles: shoulder -> elbow -> wrist on the image-left side
        lean, _, rs, re = pose.angles[:4]
        s = pose.scale
        pelvis = np.array(pose.center)
        up = np.array([math.sin(lean), -math.cos(lean)])
        perp = np.array([math.cos(lean), math.sin(lean)])
        neck = pelvis + person.torso_length * s * up
        shoulder = neck - 5.0 * s * up - person.shoulder_half * s * perp
        a1, a2 = rs + lean, rs + re + lean
        elbow = shoulder + person.upper_arm * s * np.array([-math.sin(a1), math.cos(a1)])
        wrist = elbow + person.forearm * s * np.array([-math.sin(a2), math.cos(a2)])
        idx = dm.KEYPOINT_NAMES.index("right_wrist")
        assert np.hypot(*(kp[idx, :2] - wrist)) < 0.5

    def test_keypoints_fit_heatmap_without_clipping(self):
        for seed in range(10):
            t = syn.make_triplet(seed, (64, 48))
            for kp in (t.source_keypoints, t.target_keypoints):
                heat = dm.encode_pose_heatmap(kp, 64, 48)
                for k, (x, y, _) in enumerate(kp):
                    # lattice points of the disc on an unbounded canvas
                    v, u = np.mgrid[math.floor(y) - 5:math.floor(y) + 6, math.floor(x) - 5:math.floor(x) + 6]
                    assert heat[k].sum() == np.sum((u - x) ** 2 + (v - y) ** 2 <= 16)

    def test_pose_off_canvas_rejected(self):
        person, clothes, pose, _ = specs()
        far = syn.PoseSpec(pose.angles, (500.0, 150.0), pose.scale)
        with pytest.raises(ValueError):
            syn.render_person(person, clothes, far, (64, 48))

    def test_values_in_range(self):
        person, clothes, pose, _ = specs()
        img, parsing, _ = syn.render_person(person, clothes, pose, (64, 48))
        assert img.min() >= 0 and img.max() <= 1 and parsing.max() < dm.NUM_LABELS


class TestClothesProduct:
    def test_solid_foreground_is_base_color(self):
        c = syn.ClothesSpec((0.2, 0.4, 0.6), "solid", "long")
        img, mask = syn.render_clothes_product(c, (64, 48))
        np.testing.assert_array_equal(img[mask > 0], np.tile([0.2, 0.4, 0.6], (int(mask.sum()), 1)))

    @pytest.mark.parametrize("pattern", syn.PATTERNS)
    def test_mask_is_non_white_support(self, pattern):
        c = syn.ClothesSpec((0.9, 0.9, 0.1), pattern, "short")
        img, mask = syn.render_clothes_product(c, (64, 48))
        np.testing.assert_array_equal(mask > 0, np.any(img < 1.0, axis=-1))

    def test_patterns_differ(self):
        a, _ = syn.render_clothes_product(syn.ClothesSpec((0.3, 0.3, 0.3), "solid"), (64, 48))
        b, _ = syn.render_clothes_product(syn.ClothesSpec((0.3, 0.3, 0.3), "stripes"), (64, 48))
        assert np.any(a != b)


class TestDataset:
    def test_single_triplet_tree(self, tmp_path):
        entries = syn.make_dataset(1, 0, (64, 48), tmp_path)
        assert len(entries) == 1
        d = tmp_path / entries[0].path
        files = sorted(p.name for p in d.iterdir())
        assert files == sorted(syn.TRIPLET_FILES)
        assert sum(f.endswith(".png") for f in files) == 6
        assert sum(f.endswith(".txt") for f in files) == 2

    def test_split_arithmetic(self):
        assert syn.split_counts(60) == (50, 10)
        assert syn.split_counts(5) == (5, 0)
        assert syn.split_counts(13) == (11, 2)

    def test_manifest(self, tmp_path):
        syn.make_dataset(12, 3, (64, 48), tmp_path)
        entries = syn.read_manifest(tmp_path)
        assert [e.split for e in entries].count("test") == 2
        assert syn.manifest_resolution(tmp_path) == (64, 48)
        assert "n_test=floor(count/6)=2" in (tmp_path / "manifest.tsv").read_text()

    def test_byte_identical_trees(self, tmp_path):
        syn.make_dataset(3, 9, (64, 48), tmp_path / "a")
        syn.make_dataset(3, 9, (64, 48), tmp_path / "b")
        assert tree_digest(tmp_path / "a") == tree_digest(tmp_path / "b")

    def test_load_round_trip(self, tmp_path):
        syn.make_dataset(2, 1, (64, 48), tmp_path)
        entry = syn.read_manifest(tmp_path)[0]
        loaded = syn.load_triplet(tmp_path / entry.path)
        fresh = syn.make_triplet(entry.seed, (64, 48))
        np.testing.assert_array_equal(loaded.source_parsing, fresh.source_parsing)
        np.testing.assert_array_equal(loaded.clothes_mask, fresh.clothes_mask)
        np.testing.assert_allclose(loaded.source_image, fresh.source_image, atol=0.5 / 255 + 1e-12)
        np.testing.assert_allclose(loaded.target_keypoints, fresh.target_keypoints, atol=5e-4)

    def test_triplet_shares_identity_and_clothes(self):
        t = syn.make_triplet(2, (64, 48))
        src_colors = {tuple(c) for c in t.source_image[t.source_parsing == dm.FACE]}
        tgt_colors = {tuple(c) for c in t.target_image[t.target_parsing == dm.FACE]}
        assert src_colors == tgt_colors
        assert not np.array_equal(t.source_keypoints, t.target_keypoints)

    def test_zero_count_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            syn.make_dataset(0, 0, (64, 48), tmp_path)

    def test_recombined_target_wears_donor_clothes(self):
        seeds = syn.triplet_seeds(3, 4)
        t = syn.recombined_triplet(*seeds, (64, 48))
        donor = syn.make_triplet(seeds[1], (64, 48))
        np.testing.assert_array_equal(t.clothes_image, donor.clothes_image)
        own = syn.make_triplet(seeds[0], (64, 48))
        np.testing.assert_array_equal(t.source_image, own.source_image)
