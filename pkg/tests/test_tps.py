import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from mgvton import tps
from mgvton.tps import TPSParams, TPSSolveError


def oracle_tps(params, pts):
    """Direct per-point evaluation of A [x, y, 1] + sum_k w_k r^2 log r^2."""
    out = []
    for x, y in pts:
        v = params.affine @ np.array([x, y, 1.0])
        for (cx, cy), wx, wy in zip(params.control_points, params.weights[0], params.weights[1]):
            r2 = (x - cx) ** 2 + (y - cy) ** 2
            u = r2 * np.log(r2) if r2 > 0 else 0.0
            v = v + u * np.array([wx, wy])
        out.append(v)
    return np.array(out)


class TestSolver:
    def test_identity_targets_give_identity(self):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src)
        np.testing.assert_allclose(p.affine, tps.IDENTITY_AFFINE, atol=1e-12)
        np.testing.assert_allclose(p.weights, 0.0, atol=1e-12)

    def test_translation_is_affine(self):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + [0.3, -0.2])
        np.testing.assert_allclose(p.affine, [[1, 0, 0.3], [0, 1, -0.2]], atol=1e-12)
        np.testing.assert_allclose(p.weights, 0.0, atol=1e-12)

    def test_random_targets_interpolated(self, rng):
        worst = 0.0
        for _ in range(20):
            src = tps.canonical_grid(5)
            dst = src + rng.normal(0, 0.2, src.shape)
            p = tps.solve_tps(src, dst)
            worst = max(worst, np.abs(oracle_tps(p, src) - dst).max())
        assert worst < 1e-6

    def test_scattered_sources(self, rng):
        src = rng.uniform(-1, 1, (12, 2))
        dst = rng.uniform(-1, 1, (12, 2))
        p = tps.solve_tps(src, dst)
        np.testing.assert_allclose(p(src), dst, atol=1e-6)

    def test_side_conditions(self, rng):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + rng.normal(0, 0.2, src.shape))
        assert p.side_condition_residual() < 1e-8

    def test_vectorised_matches_oracle(self, rng):
        src = tps.canonical_grid(4)
        p = tps.solve_tps(src, src + rng.normal(0, 0.1, src.shape))
        pts = rng.uniform(-1, 1, (30, 2))
        np.testing.assert_allclose(p(pts), oracle_tps(p, pts), atol=1e-12)

    def test_regularization_smooths(self, rng):
        src = tps.canonical_grid(5)
        dst = src + rng.normal(0, 0.2, src.shape)
        exact = tps.solve_tps(src, dst, 0.0)
        smooth = tps.solve_tps(src, dst, 10.0)
        assert np.abs(smooth.weights).sum() < np.abs(exact.weights).sum()
        assert np.abs(smooth(src) - dst).max() > 1e-3

    def test_collinear_rejected(self):
        src = np.column_stack([np.linspace(-1, 1, 5), np.zeros(5)])
        with pytest.raises(TPSSolveError):
            tps.solve_tps(src, src)

    def test_duplicates_rejected(self):
        src = tps.canonical_grid(3)
        src[1] = src[0]
        with pytest.raises(TPSSolveError):
            tps.solve_tps(src, src)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            tps.solve_tps(tps.canonical_grid(3), tps.canonical_grid(2))

    def test_too_few_points(self):
        with pytest.raises(TPSSolveError):
            tps.solve_tps([[0, 0], [1, 1]], [[0, 0], [1, 1]])

    def test_kernel_at_zero(self):
        assert tps.tps_kernel(0.0) == 0.0
        assert tps.tps_kernel(np.e) == pytest.approx(np.e)


class TestWarp:
    def test_identity_is_bit_exact(self, rng):
        img = rng.random((64, 48, 3))
        np.testing.assert_array_equal(tps.warp_image(img, TPSParams.identity()), img)

    @pytest.mark.parametrize("du,dv", [(1, 0), (0, 2), (-3, 1), (2, -2)])
    def test_integer_translation_matches_shift(self, rng, du, dv):
        H, W = 64, 48
        img = rng.random((H, W))
        p = TPSParams.translation(2.0 * du / (W - 1), 2.0 * dv / (H - 1))
        out = tps.warp_image(img, p)
        # output(v, u) = img(v + dv, u + du) where the source exists
        oracle = np.zeros_like(img)
        ys = slice(max(0, -dv), min(H, H - dv))
        xs = slice(max(0, -du), min(W, W - du))
        oracle[ys, xs] = img[ys.start + dv:ys.stop + dv, xs.start + du:xs.stop + du]
        np.testing.assert_array_equal(out[ys, xs], oracle[ys, xs])
        outside = np.ones_like(img, bool)
        outside[ys, xs] = False
        assert not out[outside].any()

    def test_outside_reads_zero(self):
        img = np.ones((16, 12))
        out = tps.warp_image(img, TPSParams.translation(5.0, 0.0))
        assert not out.any()

    def test_zero_input(self, rng):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + rng.normal(0, 0.1, src.shape))
        assert not tps.warp_image(np.zeros((32, 24, 3)), p).any()

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, a, b):
        r = np.random.default_rng(seed)
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + r.normal(0, 0.1, src.shape))
        X, Y = r.random((16, 12, 3)), r.random((16, 12, 3))
        lhs = tps.warp_image(a * X + b * Y, p)
        rhs = a * tps.warp_image(X, p) + b * tps.warp_image(Y, p)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)

    def test_numpy_and_torch_paths_agree(self, rng):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + rng.normal(0, 0.1, src.shape))
        img = rng.random((32, 24, 3))
        ours = tps.warp_image(img, p)
        grid = tps.torch_sampling_grid(*tps.params_to_torch(p), 32, 24)
        theirs = tps.torch_warp(torch.from_numpy(np.moveaxis(img, -1, 0))[None], grid)[0]
        np.testing.assert_allclose(ours, np.moveaxis(theirs.numpy(), 0, -1), atol=1e-9)

    def test_torch_grid_matches_numpy_grid(self, rng):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + rng.normal(0, 0.1, src.shape))
        sx, sy = tps.sampling_grid(p, 16, 12)
        g = tps.torch_sampling_grid(*tps.params_to_torch(p), 16, 12)[0].numpy()
        px, py = tps.normalized_to_pixel(g[..., 0], g[..., 1], 16, 12)
        np.testing.assert_allclose(px, sx, atol=1e-10)
        np.testing.assert_allclose(py, sy, atol=1e-10)


class TestProjector:
    def test_projected_weights_satisfy_side_conditions(self, rng):
        proj = tps.side_condition_projector(5)
        w = rng.normal(size=(2, 25)) @ proj
        assert TPSParams(tps.IDENTITY_AFFINE, w).side_condition_residual() < 1e-12

    def test_projector_idempotent(self):
        proj = tps.side_condition_projector(5)
        np.testing.assert_allclose(proj @ proj, proj, atol=1e-12)


class TestSerialization:
    def test_round_trip(self, rng):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + rng.normal(0, 0.1, src.shape))
        blob = tps.to_bytes(p)
        assert len(blob) == 16 + 4 * (6 + 50)
        assert blob[:4] == b"TPSP"
        q = tps.from_bytes(blob)
        np.testing.assert_array_equal(q.flat(), p.flat().astype(np.float32).astype(np.float64))
        assert q.grid_size == 5

    def test_little_endian_layout(self):
        blob = tps.to_bytes(TPSParams.identity(3))
        assert np.frombuffer(blob[16:20], "<f4")[0] == 1.0
        assert int.from_bytes(blob[8:12], "little") == 3

    @pytest.mark.parametrize("blob", [b"", b"XXXX" + bytes(12), b"TPSP" + bytes(12)])
    def test_bad_records_rejected(self, blob):
        with pytest.raises(ValueError):
            tps.from_bytes(blob)

    def test_truncated_rejected(self):
        with pytest.raises(ValueError):
            tps.from_bytes(tps.to_bytes(TPSParams.identity())[:-4])

    def test_flat_layout(self):
        p = TPSParams.translation(0.1, 0.2)
        assert p.flat().shape == (56,)
        np.testing.assert_array_equal(TPSParams.from_flat(p.flat()).flat(), p.flat())
