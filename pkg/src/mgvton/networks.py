"""Convolutional building blocks shared by the three stages."""
from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

BASE_FILTERS = 64


def _norm(kind: str, channels: int) -> nn.Module:
    if kind == "batch":
        return nn.BatchNorm2d(channels)
    if kind == "instance":
        return nn.InstanceNorm2d(channels, affine=True)
    if kind == "none":
        return nn.Identity()
    raise ValueError(f"unknown norm {kind!r}")


def conv_block(cin: int, cout: int, stride: int = 1, norm: str = "batch", act: bool = True) -> nn.Sequential:
    layers = [nn.Conv2d(cin, cout, 3, stride=stride, padding=1), _norm(norm, cout)]
    if act:
        layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class ResidualBlock(nn.Module):
    """Three 3x3 conv + norm layers with an identity (or 1x1 projected) shortcut."""

    def __init__(self, cin: int, cout: int, norm: str = "batch"):
        super().__init__()
        self.body = nn.Sequential(
            conv_block(cin, cout, norm=norm),
            conv_block(cout, cout, norm=norm),
            conv_block(cout, cout, norm=norm, act=False),
        )
        self.shortcut = nn.Identity() if cin == cout else nn.Conv2d(cin, cout, 1)

    def forward(self, x):
        return F.relu(self.shortcut(x) + self.body(x))


class ResnetGenerator(nn.Module):
    """Encoder / residual trunk / decoder.

    With ``n_down=3, n_blocks=9, width_factor=1`` the filter schedule is
    64, 128, 256 | 512 x 9 | 256, 128, 64. ``width_factor`` divides every
    filter count. Downsampling uses stride-2 convolutions; upsampling is
    nearest-neighbour resize (to the matching encoder size) plus a convolution.
    ``skips`` concatenates encoder activations into the decoder.
    """

    def __init__(self, in_channels: int, out_channels: int, width_factor: int = 1,
                 n_down: int = 3, n_blocks: int = 9, norm: str = "batch", skips: bool = False):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.skips = skips
        down = [max(BASE_FILTERS * 2 ** i // width_factor, 1) for i in range(n_down)]
        trunk = max(BASE_FILTERS * 2 ** n_down // width_factor, 1)
        self.down_filters = down
        self.trunk_filters = trunk

        self.down = nn.ModuleList()
        cin = in_channels
        for c in down:
            self.down.append(conv_block(cin, c, stride=2, norm=norm))
            cin = c
        self.trunk = nn.Sequential(*[ResidualBlock(cin if i == 0 else trunk, trunk, norm)
                                     for i in range(n_blocks)])
        # encoder activations available for skips, finest last: input, down[0], ..., down[-2]
        enc_channels = [in_channels] + down[:-1]
        self.up = nn.ModuleList()
        cin = trunk
        for i, c in enumerate(reversed(down)):
            extra = enc_channels[-(i + 1)] if skips else 0
            self.up.append(conv_block(cin + extra, c, norm=norm))
            cin = c
        self.head = nn.Conv2d(cin, out_channels, 3, padding=1)

    def encode(self, x):
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        feats = [x]
        for layer in self.down:
            x = layer(x)
            feats.append(x)
        return x, feats[:-1]

    def decode(self, x, feats):
        x = self.trunk(x)
        for layer, skip in zip(self.up, reversed(feats)):
            x = F.interpolate(x, size=skip.shape[2:], mode="nearest")
            if self.skips:
                x = torch.cat([x, skip], dim=1)
            x = layer(x)
        return self.head(x)

    def forward(self, x):
        bottleneck, feats = self.encode(x)
        return self.decode(bottleneck, feats)


class PatchDiscriminator(nn.Module):
    """Four 4x4 stride-2 blocks (LeakyReLU 0.2, instance norm after the first) plus a 1-channel head."""

    def __init__(self, in_channels: int, width_factor: int = 1):
        super().__init__()
        filters = [max(BASE_FILTERS * 2 ** i // width_factor, 1) for i in range(4)]
        blocks = []
        cin = in_channels
        for i, c in enumerate(filters):
            layers = [nn.Conv2d(cin, c, 4, stride=2, padding=2)]
            if i > 0:
                layers.append(nn.InstanceNorm2d(c))
            layers.append(nn.LeakyReLU(0.2))
            blocks.append(nn.Sequential(*layers))
            cin = c
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Conv2d(cin, 1, 3, padding=1)

    def forward(self, x):
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return self.head(x), feats


class MultiScaleDiscriminator(nn.Module):
    """``num_scales`` patch discriminators; scale s sees the input average-pooled s times."""

    def __init__(self, in_channels: int, width_factor: int = 1, num_scales: int = 2):
        super().__init__()
        self.in_channels = in_channels
        self.scales = nn.ModuleList([PatchDiscriminator(in_channels, width_factor)
                                     for _ in range(num_scales)])

    def forward(self, x):
        """Returns a list of (patch logits, [4 feature maps]) pairs, finest scale first."""
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} input channels, got {x.shape[1]}")
        out = []
        for i, disc in enumerate(self.scales):
            if i > 0:
                x = F.avg_pool2d(x, 3, stride=2, padding=1, count_include_pad=False)
            out.append(disc(x))
        return out


class PerceptualExtractor(nn.Module):
    """Frozen five-block convolutional tower standing in for a pretrained VGG.

    Weights come from a seeded initialization, or from any module list passed
    as ``blocks`` (e.g. slices of a pretrained VGG19).
    """

    def __init__(self, blocks: nn.ModuleList):
        super().__init__()
        if len(blocks) != 5:
            raise ValueError("perceptual extractor needs exactly 5 blocks")
        self.blocks = blocks
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    @classmethod
    def random(cls, seed: int = 0, width_factor: int = 1) -> "PerceptualExtractor":
        gen = torch.Generator().manual_seed(seed)
        filters = [max(c // width_factor, 1) for c in (64, 128, 256, 512, 512)]
        blocks = nn.ModuleList()
        cin = 3
        for i, c in enumerate(filters):
            conv = nn.Conv2d(cin, c, 3, stride=1 if i == 0 else 2, padding=1)
            with torch.no_grad():
                std = (2.0 / (cin * 9)) ** 0.5
                conv.weight.copy_(torch.randn(conv.weight.shape, generator=gen) * std)
                conv.bias.copy_(torch.randn(conv.bias.shape, generator=gen) * 0.1)
            blocks.append(nn.Sequential(conv, nn.ReLU()))
            cin = c
        return cls(blocks)

    def train(self, mode: bool = True):
        # permanently frozen
        return super().train(False)

    def forward(self, x):
        feats = []
        for block in self.blocks:
            x = block(x)
            feats.append(x)
        return feats
