"""Stage I: conditional human-parsing synthesis."""
from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F

from .data_model import NUM_KEYPOINTS, NUM_LABELS
from .networks import MultiScaleDiscriminator, ResnetGenerator

MASK_CHANNELS = 3
CLOTHES_CHANNELS = 3
INPUT_CHANNELS = MASK_CHANNELS + CLOTHES_CHANNELS + NUM_KEYPOINTS          # 24
DISC_CHANNELS = NUM_LABELS + INPUT_CHANNELS                                # parsing + M, C, P


def make_parsing_generator(width_factor: int = 1, norm: str = "batch", skips: bool = False,
                           n_blocks: int = 9) -> ResnetGenerator:
    return ResnetGenerator(INPUT_CHANNELS, NUM_LABELS, width_factor, n_down=3, n_blocks=n_blocks,
                           norm=norm, skips=skips)


def make_parsing_discriminator(width_factor: int = 1) -> MultiScaleDiscriminator:
    return MultiScaleDiscriminator(DISC_CHANNELS, width_factor, num_scales=2)


@dataclass
class ParsingBatch:
    masks: torch.Tensor          # (B, 3, H, W) hair, face, body shape
    clothes: torch.Tensor        # (B, 3, H, W)
    pose: torch.Tensor           # (B, 18, H, W)
    labels: torch.Tensor         # (B, H, W) int64 ground-truth parsing

    @property
    def one_hot(self) -> torch.Tensor:
        return F.one_hot(self.labels, NUM_LABELS).permute(0, 3, 1, 2).to(self.clothes.dtype)

    @property
    def condition(self) -> torch.Tensor:
        return torch.cat([self.masks, self.clothes, self.pose], dim=1)


@dataclass(frozen=True)
class ParsingLossWeights:
    adversarial: float = 1.0
    l1: float = 1.0
    cross_entropy: float = 1.0


def generate_parsing(generator: ResnetGenerator, masks: torch.Tensor, clothes: torch.Tensor,
                     pose: torch.Tensor):
    """Returns (logits, per-pixel softmax probabilities), both (B, 20, H, W)."""
    x = torch.cat([masks, clothes, pose], dim=1)
    if x.shape[1] != INPUT_CHANNELS:
        raise ValueError(f"expected {INPUT_CHANNELS} conditioning channels, got {x.shape[1]}")
    logits = generator(x)
    return logits, torch.softmax(logits, dim=1)


def adversarial_terms(disc_out, target_is_real: bool, mode: str = "lsgan") -> torch.Tensor:
    """Average over scales of the least-squares or logistic GAN loss."""
    total = 0.0
    for logits, _ in disc_out:
        target = torch.full_like(logits, 1.0 if target_is_real else 0.0)
        if mode == "lsgan":
            total = total + F.mse_loss(logits, target)
        elif mode == "log":
            total = total + F.binary_cross_entropy_with_logits(logits, target)
        else:
            raise ValueError(f"unknown gan mode {mode!r}")
    return total / len(disc_out)


def pixel_cross_entropy(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    return F.cross_entropy(logits, labels)


def parsing_gan_loss(generator_out, discriminator: MultiScaleDiscriminator, batch: ParsingBatch,
                     weights: ParsingLossWeights = ParsingLossWeights(), mode: str = "lsgan"):
    """Generator and discriminator objectives of the parsing stage.

    Returns (generator_loss, discriminator_loss, components). The
    discriminator sees fakes detached, so ``discriminator_loss`` carries no
    gradient into the generator.
    """
    logits, probs = generator_out
    cond = batch.condition
    real = torch.cat([batch.one_hot, cond], dim=1)
    fake = torch.cat([probs, cond], dim=1)

    adv = adversarial_terms(discriminator(fake), True, mode)
    l1 = (probs - batch.one_hot).abs().mean()
    ce = pixel_cross_entropy(logits, batch.labels)
    g_loss = weights.adversarial * adv + weights.l1 * l1 + weights.cross_entropy * ce

    d_real = adversarial_terms(discriminator(real), True, mode)
    d_fake = adversarial_terms(discriminator(fake.detach()), False, mode)
    d_loss = 0.5 * (d_real + d_fake)
    components = {"adv": adv, "l1": l1, "ce": ce, "d_real": d_real, "d_fake": d_fake}
    return g_loss, d_loss, components


def argmax_parsing(probs: torch.Tensor) -> torch.Tensor:
    return probs.argmax(dim=1)
