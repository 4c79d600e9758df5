"""Stage III: composition-mask refinement."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .data_model import NUM_KEYPOINTS, save_mask
from .networks import PerceptualExtractor, ResnetGenerator
from .warp_gan import DEFAULT_ALPHAS, perceptual_loss

INPUT_CHANNELS = 3 + 3 + NUM_KEYPOINTS   # C_w, coarse result, P -> 24
MASK_FLOOR = 1e-4
INIT_MASK_LOGIT = -4.0   # start near mask 0: the output begins as the coarse result


@dataclass(frozen=True)
class RenderLossWeights:
    perceptual: float = 1.0
    mask: float = 0.1
    toward: float = 1.0   # value the mask regularizer pulls toward (1 favours warped clothes)


class RenderGenerator(nn.Module):
    """Shallow encoder-decoder producing a single-channel mask in (0, 1)."""

    def __init__(self, width_factor: int = 1, norm: str = "batch", skips: bool = False,
                 n_down: int = 2, n_blocks: int = 4, init_logit: float = INIT_MASK_LOGIT):
        super().__init__()
        self.body = ResnetGenerator(INPUT_CHANNELS, 1, width_factor, n_down=n_down,
                                    n_blocks=n_blocks, norm=norm, skips=skips)
        with torch.no_grad():
            self.body.head.bias.fill_(init_logit)

    def forward(self, warped_clothes, coarse, pose):
        x = torch.cat([warped_clothes, coarse, pose], dim=1)
        if x.shape[1] != INPUT_CHANNELS:
            raise ValueError(f"expected {INPUT_CHANNELS} input channels, got {x.shape[1]}")
        return MASK_FLOOR + (1.0 - 2.0 * MASK_FLOOR) * torch.sigmoid(self.body(x))


def compose(warped_clothes, coarse, mask):
    """mask * warped_clothes + (1 - mask) * coarse, broadcasting a single-channel mask.

    Works on torch tensors (B, C, H, W) with (B, 1, H, W) masks, or numpy
    images (H, W, 3) with (H, W) masks.
    """
    if not isinstance(mask, torch.Tensor) and mask.ndim == 2:
        mask = mask[..., None]
    return mask * warped_clothes + (1 - mask) * coarse


def mask_regularizer(mask: torch.Tensor, toward: float = 1.0) -> torch.Tensor:
    return (toward - mask).abs().mean()


def render_loss(rendered: torch.Tensor, target: torch.Tensor, mask: torch.Tensor,
                weights: RenderLossWeights, extractor: PerceptualExtractor, alphas=DEFAULT_ALPHAS):
    """Returns (total, components) with total = mu_1 * perceptual + mu_2 * mean|toward - mask|."""
    components = {
        "perceptual": perceptual_loss(extractor, rendered, target, alphas),
        "mask": mask_regularizer(mask, weights.toward),
    }
    total = weights.perceptual * components["perceptual"] + weights.mask * components["mask"]
    return total, components


def save_composition_mask(path, mask) -> None:
    """Write a (H, W) or (1, H, W) mask as 8-bit grayscale PNG."""
    m = mask.detach().cpu().numpy() if isinstance(mask, torch.Tensor) else mask
    save_mask(path, m.reshape(m.shape[-2:]))
