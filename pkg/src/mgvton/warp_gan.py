"""Stage II: Warp-GAN coarse synthesis with bottleneck feature warping."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from . import tps
from .data_model import NUM_KEYPOINTS, NUM_LABELS
from .networks import MultiScaleDiscriminator, PerceptualExtractor, ResnetGenerator, conv_block
from .parsing_gan import adversarial_terms

INPUT_CHANNELS = 3 + 3 + NUM_KEYPOINTS + NUM_LABELS      # C_w, I w/o clothes, P, S'_t -> 44
DISC_CONDITION_CHANNELS = NUM_KEYPOINTS + NUM_LABELS     # pose + parsing
DEFAULT_ALPHAS = tuple(1.0 / 2 ** (4 - i) for i in range(5))
DEFAULT_GAMMAS = (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class WarpGANLossWeights:
    adversarial: float = 1.0
    perceptual: float = 10.0
    feature: float = 10.0
    l1: float = 10.0

    def __post_init__(self):
        vals = (self.adversarial, self.perceptual, self.feature, self.l1)
        if any(v < 0 or v != v or v == float("inf") for v in vals):
            raise ValueError("loss weights must be finite and non-negative")


def warp_bottleneck(features: torch.Tensor, affine: torch.Tensor, weights: torch.Tensor,
                    control_points: torch.Tensor) -> torch.Tensor:
    """Warp every channel of a (B, C, h, w) grid with the transform resampled at h x w."""
    grid = tps.torch_sampling_grid(affine, weights, control_points, *features.shape[2:])
    return tps.torch_warp(features, grid)


class WarpGenerator(nn.Module):
    """Encoder-resnet-decoder over the 44-channel stack.

    A second encoder reads the de-clothed reference in its own frame; its
    bottleneck is warped into the target frame and added to the main
    bottleneck before the residual trunk.
    """

    def __init__(self, width_factor: int = 1, norm: str = "batch", skips: bool = False,
                 n_blocks: int = 9, feature_warp: bool = True):
        super().__init__()
        self.body = ResnetGenerator(INPUT_CHANNELS, 3, width_factor, n_down=3, n_blocks=n_blocks,
                                    norm=norm, skips=skips)
        self.feature_warp = feature_warp
        if feature_warp:
            layers, cin = [], 3
            for c in self.body.down_filters:
                layers.append(conv_block(cin, c, stride=2, norm=norm))
                cin = c
            self.reference_encoder = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor, reference: torch.Tensor | None = None, transform=None):
        bottleneck, feats = self.body.encode(x)
        if self.feature_warp and reference is not None:
            ref = self.reference_encoder(reference)
            if transform is not None:
                ref = warp_bottleneck(ref, *transform)
            bottleneck = bottleneck + ref
        return torch.sigmoid(self.body.decode(bottleneck, feats))


def make_warp_discriminator(width_factor: int = 1) -> MultiScaleDiscriminator:
    return MultiScaleDiscriminator(3 + DISC_CONDITION_CHANNELS, width_factor, num_scales=2)


def synthesize_coarse(generator: WarpGenerator, warped_clothes, declothed, pose, parsing,
                      reference=None, transform=None) -> torch.Tensor:
    """Coarse result in [0, 1]^(B, 3, H, W) from the 44-channel stack."""
    x = torch.cat([warped_clothes, declothed, pose, parsing], dim=1)
    if x.shape[1] != INPUT_CHANNELS:
        raise ValueError(f"expected {INPUT_CHANNELS} input channels, got {x.shape[1]}")
    return generator(x, reference, transform)


def perceptual_loss(extractor: PerceptualExtractor, candidate: torch.Tensor, reference: torch.Tensor,
                    alphas=DEFAULT_ALPHAS) -> torch.Tensor:
    """sum_i alpha_i * mean |phi_i(candidate) - phi_i(reference)| over the five taps."""
    if candidate.shape != reference.shape:
        raise ValueError("candidate and reference shapes differ")
    total = candidate.new_zeros(())
    for a, fc, fr in zip(alphas, extractor(candidate), extractor(reference)):
        if a:
            total = total + a * (fc - fr).abs().mean()
    return total


def feature_matching_loss(discriminator: MultiScaleDiscriminator, candidate: torch.Tensor,
                          reference: torch.Tensor, conditioning: torch.Tensor,
                          gammas=DEFAULT_GAMMAS) -> torch.Tensor:
    """sum_i gamma_i * mean |F_i(candidate) - F_i(reference)|, averaged over scales.

    Reference features are treated as constants.
    """
    fake = discriminator(torch.cat([candidate, conditioning], dim=1))
    with torch.no_grad():
        real = discriminator(torch.cat([reference, conditioning], dim=1))
    total = candidate.new_zeros(())
    for (_, ff), (_, fr) in zip(fake, real):
        for g, a, b in zip(gammas, ff, fr):
            if g:
                total = total + g * (a - b.detach()).abs().mean()
    return total / len(fake)


def warp_gan_generator_loss(components: dict, weights: WarpGANLossWeights = WarpGANLossWeights()):
    """Weighted sum of the adversarial, perceptual, feature and L1 terms."""
    return (weights.adversarial * components["adv"] + weights.perceptual * components["perceptual"]
            + weights.feature * components["feature"] + weights.l1 * components["l1"])


def warp_gan_losses(coarse: torch.Tensor, target: torch.Tensor, conditioning: torch.Tensor,
                    discriminator: MultiScaleDiscriminator, extractor: PerceptualExtractor,
                    weights: WarpGANLossWeights = WarpGANLossWeights(), mode: str = "lsgan",
                    alphas=DEFAULT_ALPHAS, gammas=DEFAULT_GAMMAS):
    """Returns (generator_loss, discriminator_loss, components) for one batch."""
    components = {
        "adv": adversarial_terms(discriminator(torch.cat([coarse, conditioning], 1)), True, mode),
        "perceptual": perceptual_loss(extractor, coarse, target, alphas),
        "feature": feature_matching_loss(discriminator, coarse, target, conditioning, gammas),
        "l1": (coarse - target).abs().mean(),
    }
    g_loss = warp_gan_generator_loss(components, weights)
    d_real = adversarial_terms(discriminator(torch.cat([target, conditioning], 1)), True, mode)
    d_fake = adversarial_terms(discriminator(torch.cat([coarse.detach(), conditioning], 1)), False, mode)
    d_loss = 0.5 * (d_real + d_fake)
    components.update(d_real=d_real, d_fake=d_fake)
    return g_loss, d_loss, components
