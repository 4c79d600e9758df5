import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from mgvton import tps
from mgvton.matcher import (MatcherModel, correlate, geometric_matching_loss, geometric_matching_loss_torch,
                            predict_tps, to_params)


def brute_force_correlation(a, b):
    _, c, h, w = a.shape
    out = torch.zeros(a.shape[0], h, w, h * w, dtype=a.dtype)
    for n in range(a.shape[0]):
        for i in range(h):
            for j in range(w):
                va = a[n, :, i, j] / max(float(a[n, :, i, j].norm()), 1e-8)
                for k in range(h * w):
                    vb = b[n, :, k // w, k % w]
                    vb = vb / max(float(vb.norm()), 1e-8)
                    out[n, i, j, k] = va @ vb
    return out


class TestCorrelate:
    def test_orthonormal_cells(self):
        # four cells, each a distinct basis vector
        f = torch.eye(4, dtype=torch.float64).reshape(4, 2, 2)[None]
        corr = correlate(f, f)
        np.testing.assert_allclose(corr[0].reshape(4, 4).numpy(), np.eye(4), atol=1e-15)

    def test_zero_features(self):
        a = torch.randn(1, 3, 2, 2, dtype=torch.float64)
        corr = correlate(a, torch.zeros_like(a))
        assert torch.all(corr == 0)

    def test_matches_brute_force(self):
        g = torch.Generator().manual_seed(0)
        a = torch.randn(2, 5, 2, 2, generator=g, dtype=torch.float64)
        b = torch.randn(2, 5, 2, 2, generator=g, dtype=torch.float64)
        torch.testing.assert_close(correlate(a, b), brute_force_correlation(a, b), atol=1e-12, rtol=0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 31), st.integers(1, 3), st.integers(1, 3))
    def test_symmetry_and_bounds(self, seed, h, w):
        g = torch.Generator().manual_seed(seed)
        a = torch.randn(1, 4, h, w, generator=g, dtype=torch.float64)
        b = torch.randn(1, 4, h, w, generator=g, dtype=torch.float64)
        ab = correlate(a, b)[0].reshape(h * w, h * w)
        ba = correlate(b, a)[0].reshape(h * w, h * w)
        torch.testing.assert_close(ab, ba.T, atol=1e-12, rtol=0)
        assert ab.abs().max() <= 1 + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            correlate(torch.zeros(1, 2, 2, 2), torch.zeros(1, 2, 2, 3))


class TestMatcherModel:
    def test_parameter_count(self):
        m = MatcherModel(64, 48, width_factor=8)
        assert m.num_params == 6 + 2 * 25
        assert m.fc.out_features == 56

    def test_initialised_to_identity(self):
        torch.manual_seed(0)
        m = MatcherModel(64, 48, width_factor=8).eval()
        a, w = predict_tps(m, torch.rand(2, 1, 64, 48), torch.rand(2, 1, 64, 48))
        torch.testing.assert_close(a, torch.as_tensor(tps.IDENTITY_AFFINE, dtype=a.dtype).expand(2, 2, 3))
        assert torch.all(w == 0)
        x = torch.rand(2, 1, 64, 48)
        assert torch.allclose(tps.torch_warp(x, m.grid(a, w)), x, atol=1e-5)

    def test_batch_order(self):
        torch.manual_seed(1)
        m = MatcherModel(32, 24, width_factor=8).eval()
        with torch.no_grad():
            m.fc.weight.normal_(0, 0.05)
        s, t = torch.rand(2, 1, 32, 24), torch.rand(2, 1, 32, 24)
        a, w = m(s, t)
        a1, w1 = m(s[1:], t[1:])
        torch.testing.assert_close(a[1:], a1, atol=1e-6, rtol=0)
        torch.testing.assert_close(w[1:], w1, atol=1e-6, rtol=0)

    def test_outputs_satisfy_side_conditions(self):
        torch.manual_seed(2)
        m = MatcherModel(32, 24, width_factor=8).double().eval()
        with torch.no_grad():
            m.fc.weight.normal_(0, 0.1)
        a, w = m(torch.rand(3, 1, 32, 24, dtype=torch.float64), torch.rand(3, 1, 32, 24, dtype=torch.float64))
        for p in to_params(a, w):
            assert p.side_condition_residual() < 1e-8

    def test_gradients_reach_every_parameter(self):
        torch.manual_seed(3)
        m = MatcherModel(32, 24, width_factor=8)
        with torch.no_grad():
            m.fc.weight.normal_(0, 0.05)
        src, tgt = (torch.rand(2, 1, 32, 24) > 0.5).float(), (torch.rand(2, 1, 32, 24) > 0.5).float()
        a, w = m(src, tgt)
        geometric_matching_loss_torch(m, a, w, src, tgt).backward()
        for name, p in m.named_parameters():
            assert p.grad is not None and p.grad.abs().sum() > 0, name

    def test_resolution_checked(self):
        m = MatcherModel(32, 24, width_factor=8)
        with pytest.raises(ValueError):
            m(torch.rand(1, 1, 16, 12), torch.rand(1, 1, 16, 12))

    def test_multi_channel_inputs(self):
        m = MatcherModel(32, 24, 20, 20, width_factor=8).eval()
        a, w = m(torch.rand(1, 20, 32, 24), torch.rand(1, 20, 32, 24))
        assert a.shape == (1, 2, 3) and w.shape == (1, 2, 25)


class TestMatchingLoss:
    def mask(self):
        m = np.zeros((32, 24))
        m[8:20, 6:18] = 1.0
        return m

    def test_identity_same_mask_is_zero(self):
        assert geometric_matching_loss(tps.TPSParams.identity(), self.mask(), self.mask()) == 0.0

    def test_identity_complement_is_one(self):
        m = self.mask()
        assert geometric_matching_loss(tps.TPSParams.identity(), m, 1 - m) == 1.0

    def test_translation_vs_shifted_target(self):
        m = self.mask()
        shifted = np.roll(m, (2, -3), axis=(0, 1))    # content moves down 2, left 3
        p = tps.TPSParams.translation(2.0 * 3 / 23, 2.0 * -2 / 31)
        assert geometric_matching_loss(p, m, shifted) == 0.0

    def test_torch_and_numpy_agree(self):
        m = self.mask()
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + np.random.default_rng(0).normal(0, 0.05, src.shape))
        a, w, c = tps.params_to_torch(p)
        model = MatcherModel(32, 24, width_factor=8).double()
        t = torch.from_numpy(m)[None, None]
        tgt = torch.from_numpy(np.roll(m, 1, axis=0))[None, None]
        ours = float(geometric_matching_loss_torch(model, a, w, t, tgt))
        assert ours == pytest.approx(geometric_matching_loss(p, m, np.roll(m, 1, axis=0)), abs=1e-9)
