"""Learned mask-to-mask matcher regressing TPS parameters from a correlation volume."""
from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from . import tps
from .networks import BASE_FILTERS

EPS = 1e-8


def l2_normalize(features: torch.Tensor) -> torch.Tensor:
    """Unit-normalize each cell's channel vector; zero vectors stay zero."""
    norm = features.norm(dim=1, keepdim=True)
    return features / norm.clamp_min(EPS)


def correlate(features_a: torch.Tensor, features_b: torch.Tensor) -> torch.Tensor:
    """Correlation volume (B, h, w, h*w): entry (i, j, k) = <a[i, j], b_flat[k]> after normalization."""
    if features_a.shape != features_b.shape:
        raise ValueError("feature grids must have matching shapes")
    b, c, h, w = features_a.shape
    a = l2_normalize(features_a).reshape(b, c, h * w)
    bb = l2_normalize(features_b).reshape(b, c, h * w)
    corr = torch.bmm(a.transpose(1, 2), bb)           # (B, hw_a, hw_b)
    return corr.reshape(b, h, w, h * w)


class FeatureTower(nn.Module):
    """Four stride-2 conv + batch-norm + ReLU blocks (32, 64, 128, 256 filters before width scaling)."""

    def __init__(self, in_channels: int, width_factor: int = 1):
        super().__init__()
        layers = []
        cin = in_channels
        for c in (32, 64, 128, 256):
            c = max(c // width_factor, 1)
            layers += [nn.Conv2d(cin, c, 3, stride=2, padding=1), nn.BatchNorm2d(c), nn.ReLU()]
            cin = c
        self.net = nn.Sequential(*layers)
        self.out_channels = cin

    def forward(self, x):
        return self.net(x)


def _cells(n: int, steps: int = 4) -> int:
    for _ in range(steps):
        n = (n + 1) // 2
    return n


class MatcherModel(nn.Module):
    """Feature towers -> correlation -> regression head -> TPS parameters.

    ``model(source, target)`` returns parameters whose backward warp carries
    ``source`` onto ``target``. The regression head starts at the identity.
    """

    def __init__(self, height: int, width: int, source_channels: int = 1, target_channels: int = 1,
                 width_factor: int = 1, grid_size: int = tps.DEFAULT_GRID_SIZE):
        super().__init__()
        self.height, self.width = height, width
        self.grid_size = grid_size
        self.source_tower = FeatureTower(source_channels, width_factor)
        self.target_tower = FeatureTower(target_channels, width_factor)
        h, w = _cells(height), _cells(width)
        c1 = max(2 * BASE_FILTERS // width_factor, 1)
        c2 = max(BASE_FILTERS // width_factor, 1)
        self.regressor = nn.Sequential(
            nn.Conv2d(h * w, c1, 3, padding=1), nn.BatchNorm2d(c1), nn.ReLU(),
            nn.Conv2d(c1, c2, 3, padding=1), nn.BatchNorm2d(c2), nn.ReLU(),
        )
        n = grid_size * grid_size
        self.num_params = 6 + 2 * n
        self.fc = nn.Linear(c2 * h * w, self.num_params)
        with torch.no_grad():
            self.fc.weight.zero_()
            self.fc.bias.zero_()
            self.fc.bias[:6] = torch.as_tensor(tps.IDENTITY_AFFINE.ravel())
        self.register_buffer("control_points", torch.as_tensor(tps.canonical_grid(grid_size)), persistent=False)
        self.register_buffer("projector", torch.as_tensor(tps.side_condition_projector(grid_size)), persistent=False)

    def forward(self, source: torch.Tensor, target: torch.Tensor):
        """Returns (affine (B, 2, 3), weights (B, 2, K*K)) satisfying the side conditions."""
        if source.shape[2:] != (self.height, self.width) or target.shape[2:] != (self.height, self.width):
            raise ValueError("matcher inputs must be at the model resolution")
        fa = self.source_tower(source)
        fb = self.target_tower(target)
        # channels index target cells, spatial positions index source cells
        corr = correlate(fb, fa).permute(0, 3, 1, 2).contiguous()
        x = self.regressor(corr).flatten(1)
        theta = self.fc(x)
        affine = theta[:, :6].reshape(-1, 2, 3)
        weights = theta[:, 6:].reshape(-1, 2, self.grid_size ** 2)
        weights = weights @ self.projector.to(weights.dtype)
        return affine, weights

    def grid(self, affine, weights, height: int | None = None, width: int | None = None):
        return tps.torch_sampling_grid(affine, weights, self.control_points,
                                       height or self.height, width or self.width)


def predict_tps(model: MatcherModel, clothes_mask: torch.Tensor, body_shape: torch.Tensor):
    """Differentiable TPS prediction for (B, 1, H, W) mask batches; returns (affine, weights)."""
    return model(clothes_mask, body_shape)


def geometric_matching_loss_torch(model: MatcherModel, affine, weights,
                                  clothes_mask: torch.Tensor, target_mask: torch.Tensor) -> torch.Tensor:
    """Mean |T(clothes_mask) - target_mask| over all pixels and channels."""
    grid = model.grid(affine, weights, *clothes_mask.shape[2:])
    return (tps.torch_warp(clothes_mask, grid) - target_mask).abs().mean()


def geometric_matching_loss(params: tps.TPSParams, clothes_mask: np.ndarray,
                            target_clothes_mask: np.ndarray) -> float:
    """Mean absolute difference between the warped clothes mask and the target mask."""
    warped = tps.warp_image(np.asarray(clothes_mask, dtype=np.float64), params)
    return float(np.abs(warped - np.asarray(target_clothes_mask, dtype=np.float64)).mean())


def to_params(affine: torch.Tensor, weights: torch.Tensor, grid_size: int = tps.DEFAULT_GRID_SIZE):
    return tps.params_from_torch(affine, weights, grid_size)

