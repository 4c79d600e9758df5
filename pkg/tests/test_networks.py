import numpy as np
import pytest
import torch

from mgvton.networks import MultiScaleDiscriminator, PerceptualExtractor, ResnetGenerator
from mgvton.parsing_gan import INPUT_CHANNELS, generate_parsing, make_parsing_discriminator, make_parsing_generator
from mgvton.render import RenderGenerator
from mgvton.warp_gan import (INPUT_CHANNELS as WARP_CHANNELS, WarpGenerator, make_warp_discriminator,
                             synthesize_coarse, warp_bottleneck)
from mgvton import tps


class TestResnetGenerator:
    def test_paper_filter_schedule(self):
        g = ResnetGenerator(24, 20, width_factor=1)
        assert g.down_filters == [64, 128, 256]
        assert g.trunk_filters == 512
        assert len(g.trunk) == 9
        assert [m[0].out_channels for m in g.up] == [256, 128, 64]

    def test_desk_schedule(self):
        g = ResnetGenerator(24, 20, width_factor=8)
        assert g.down_filters == [8, 16, 32] and g.trunk_filters == 64

    @pytest.mark.parametrize("skips", [False, True])
    @pytest.mark.parametrize("hw", [(64, 48), (16, 12), (30, 22)])
    def test_output_size_matches_input(self, skips, hw):
        g = ResnetGenerator(5, 2, width_factor=8, n_blocks=2, skips=skips)
        assert g(torch.rand(2, 5, *hw)).shape == (2, 2, *hw)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ResnetGenerator(24, 20, width_factor=8)(torch.rand(1, 23, 16, 12))

    def test_unknown_norm(self):
        with pytest.raises(ValueError):
            ResnetGenerator(3, 3, norm="group")


class TestParsingGenerator:
    def test_softmax_sums_to_one(self):
        torch.manual_seed(0)
        g = make_parsing_generator(8).eval()
        _, probs = generate_parsing(g, torch.rand(2, 3, 64, 48), torch.rand(2, 3, 64, 48), torch.rand(2, 18, 64, 48))
        assert probs.shape == (2, 20, 64, 48)
        assert torch.allclose(probs.sum(1), torch.ones(2, 64, 48), atol=1e-5)

    def test_identical_batch_entries(self):
        g = make_parsing_generator(8).eval()
        m, c, p = torch.rand(1, 3, 32, 24), torch.rand(1, 3, 32, 24), torch.rand(1, 18, 32, 24)
        logits, _ = generate_parsing(g, m.repeat(2, 1, 1, 1), c.repeat(2, 1, 1, 1), p.repeat(2, 1, 1, 1))
        assert torch.equal(logits[0], logits[1])

    def test_channel_mismatch(self):
        g = make_parsing_generator(8)
        with pytest.raises(ValueError):
            generate_parsing(g, torch.rand(1, 2, 32, 24), torch.rand(1, 3, 32, 24), torch.rand(1, 18, 32, 24))
        assert INPUT_CHANNELS == 24


class TestDiscriminator:
    def test_two_scales_four_features(self):
        d = make_parsing_discriminator(8)
        out = d(torch.rand(2, 44, 64, 48))
        assert len(out) == 2
        for logits, feats in out:
            assert len(feats) == 4
            assert logits.shape[1] == 1

    def test_feature_sizes_strictly_decrease(self):
        d = MultiScaleDiscriminator(3, 8)
        for _, feats in d(torch.rand(1, 3, 64, 48)):
            hs = [f.shape[2] for f in feats]
            assert all(a > b for a, b in zip(hs, hs[1:]))

    def test_second_scale_is_downsampled(self):
        d = MultiScaleDiscriminator(3, 8)
        (_, f0), (_, f1) = d(torch.rand(1, 3, 64, 48))
        assert f1[0].shape[2] < f0[0].shape[2]

    def test_runs_at_gradient_check_size(self):
        d = make_warp_discriminator(8)
        out = d(torch.rand(1, 41, 16, 12))
        assert all(torch.isfinite(l).all() for l, _ in out)


class TestWarpGenerator:
    def inputs(self, b=2, hw=(32, 24)):
        g = torch.Generator().manual_seed(0)
        return [torch.rand(b, c, *hw, generator=g) for c in (3, 3, 18, 20)]

    def test_output_bounded(self):
        g = WarpGenerator(8, n_blocks=2).eval()
        cw, dc, p, s = self.inputs()
        out = synthesize_coarse(g, cw, dc, p, s, dc)
        assert out.shape == (2, 3, 32, 24)
        assert out.min() >= 0 and out.max() <= 1

    def test_batch_permutation(self):
        g = WarpGenerator(8, n_blocks=2).eval()
        cw, dc, p, s = self.inputs(3)
        perm = torch.tensor([2, 0, 1])
        a = synthesize_coarse(g, cw, dc, p, s, dc)
        b = synthesize_coarse(g, cw[perm], dc[perm], p[perm], s[perm], dc[perm])
        torch.testing.assert_close(a[perm], b, atol=1e-6, rtol=0)

    def test_channel_count(self):
        assert WARP_CHANNELS == 44
        g = WarpGenerator(8, n_blocks=1)
        cw, dc, p, _ = self.inputs()
        with pytest.raises(ValueError):
            synthesize_coarse(g, cw, dc, p, torch.rand(2, 19, 32, 24))

    def test_identity_transform_matches_unwarped_reference(self):
        g = WarpGenerator(8, n_blocks=1).eval()
        cw, dc, p, s = self.inputs()
        ident = tps.params_to_torch(tps.TPSParams.identity(), torch.float32)
        a = synthesize_coarse(g, cw, dc, p, s, dc, (ident[0].repeat(2, 1, 1), ident[1].repeat(2, 1, 1), ident[2]))
        b = synthesize_coarse(g, cw, dc, p, s, dc, None)
        torch.testing.assert_close(a, b, atol=1e-5, rtol=0)


class TestWarpBottleneck:
    def params(self, p, b=1):
        a, w, c = tps.params_to_torch(p)
        return a.repeat(b, 1, 1), w.repeat(b, 1, 1), c

    def test_identity(self):
        f = torch.rand(2, 8, 8, 6, dtype=torch.float64)
        out = warp_bottleneck(f, *self.params(tps.TPSParams.identity(), 2))
        torch.testing.assert_close(out, f, atol=1e-12, rtol=0)

    def test_integer_translation(self):
        f = torch.rand(1, 4, 8, 6, dtype=torch.float64)
        out = warp_bottleneck(f, *self.params(tps.TPSParams.translation(2.0 / 5, 0.0)))
        torch.testing.assert_close(out[..., :5], f[..., 1:], atol=1e-12, rtol=0)

    def test_zero_features(self):
        src = tps.canonical_grid(5)
        p = tps.solve_tps(src, src + np.random.default_rng(0).normal(0, 0.1, src.shape))
        out = warp_bottleneck(torch.zeros(1, 4, 8, 6, dtype=torch.float64), *self.params(p))
        assert torch.all(out == 0)

    def test_commutes_with_channel_slicing(self):
        src = tps.canonical_grid(5)
        p = self.params(tps.solve_tps(src, src + np.random.default_rng(1).normal(0, 0.1, src.shape)))
        f = torch.rand(1, 6, 8, 6, dtype=torch.float64)
        torch.testing.assert_close(warp_bottleneck(f, *p)[:, 2:4], warp_bottleneck(f[:, 2:4], *p))


class TestRenderGenerator:
    def test_mask_strictly_inside_unit_interval(self):
        g = RenderGenerator(8)
        with torch.no_grad():
            g.body.head.bias.fill_(1e4)
        m = g(torch.rand(1, 3, 16, 12), torch.rand(1, 3, 16, 12), torch.rand(1, 18, 16, 12))
        assert m.shape == (1, 1, 16, 12)
        assert m.max() < 1 and m.min() > 0

    def test_shallow_defaults(self):
        g = RenderGenerator(8)
        assert len(g.body.down) == 2 and len(g.body.trunk) == 4


class TestPerceptualExtractor:
    def test_frozen_and_deterministic(self):
        a = PerceptualExtractor.random(7, 8)
        b = PerceptualExtractor.random(7, 8)
        x = torch.rand(1, 3, 32, 24)
        for fa, fb in zip(a(x), b(x)):
            assert torch.equal(fa, fb)
        assert not any(p.requires_grad for p in a.parameters())
        a.train()
        assert not a.training

    def test_five_taps(self):
        feats = PerceptualExtractor.random(0, 8)(torch.rand(1, 3, 32, 24))
        assert [f.shape[1] for f in feats] == [8, 16, 32, 64, 64]
