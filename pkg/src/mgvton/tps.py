"""Thin-plate-spline transforms: analytic solver, dense sampling grids and warping.

Transforms live in normalized coordinates: x runs -1..1 across the width and
y runs -1..1 down the height, with -1/+1 at the centres of the border pixels.
A transform maps an *output* location to the *input* location it samples
from (backward warping), so ``warp_image(img, params)(p) = img(T(p))``.

T(p) = A @ [x, y, 1] + sum_k w_k U(|p - c_k|),  U(r) = r^2 log r^2,  U(0) = 0.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from . import kernels

DEFAULT_GRID_SIZE = 5
SNAP = 1e-9
_MAGIC = b"TPSP"
_VERSION = 1


class TPSSolveError(ValueError):
    """Raised when the interpolation system is singular (collinear or repeated points)."""


def canonical_grid(grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """(K*K, 2) control points on a uniform grid over [-1, 1]^2, row-major (y outer)."""
    axis = np.linspace(-1.0, 1.0, grid_size)
    ys, xs = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


IDENTITY_AFFINE = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


@dataclass
class TPSParams:
    affine: np.ndarray                 # (2, 3): rows give x' and y' as a*x + b*y + c
    weights: np.ndarray                # (2, N) radial coefficients for x' and y'
    control_points: np.ndarray = field(default_factory=canonical_grid)
    regularization: float = 0.0

    def __post_init__(self):
        self.affine = np.asarray(self.affine, dtype=np.float64).reshape(2, 3)
        self.control_points = np.asarray(self.control_points, dtype=np.float64)
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(2, len(self.control_points))
        if self.regularization < 0:
            raise ValueError("regularization must be non-negative")

    @property
    def grid_size(self) -> int:
        """K when the control points are the canonical K x K grid, else 0."""
        n = len(self.control_points)
        k = int(round(np.sqrt(n)))
        if k * k == n and np.array_equal(self.control_points, canonical_grid(k)):
            return k
        return 0

    @classmethod
    def identity(cls, grid_size: int = DEFAULT_GRID_SIZE) -> "TPSParams":
        return cls(IDENTITY_AFFINE.copy(), np.zeros((2, grid_size * grid_size)), canonical_grid(grid_size))

    @classmethod
    def translation(cls, tx: float, ty: float, grid_size: int = DEFAULT_GRID_SIZE) -> "TPSParams":
        """Sample from (x + tx, y + ty): the content moves by (-tx, -ty)."""
        affine = IDENTITY_AFFINE.copy()
        affine[:, 2] = (tx, ty)
        return cls(affine, np.zeros((2, grid_size * grid_size)), canonical_grid(grid_size))

    def flat(self) -> np.ndarray:
        """6 + 2N parameter vector (affine row-major, then x weights, then y weights)."""
        return np.concatenate([self.affine.ravel(), self.weights.ravel()])

    @classmethod
    def from_flat(cls, vec, grid_size: int = DEFAULT_GRID_SIZE) -> "TPSParams":
        vec = np.asarray(vec, dtype=np.float64)
        n = grid_size * grid_size
        if vec.shape != (6 + 2 * n,):
            raise ValueError(f"expected {6 + 2 * n} parameters, got {vec.shape}")
        return cls(vec[:6].reshape(2, 3), vec[6:].reshape(2, n), canonical_grid(grid_size))

    def side_condition_residual(self) -> float:
        P = _poly_matrix(self.control_points)
        return float(np.abs(self.weights @ P).max())

    def __call__(self, points) -> np.ndarray:
        return evaluate_tps(self, points)


def pixel_to_normalized(u, v, height: int, width: int):
    return (-1.0 + 2.0 * np.asarray(u, dtype=np.float64) / (width - 1),
            -1.0 + 2.0 * np.asarray(v, dtype=np.float64) / (height - 1))


def normalized_to_pixel(x, y, height: int, width: int):
    return ((np.asarray(x) + 1.0) * (width - 1) / 2.0,
            (np.asarray(y) + 1.0) * (height - 1) / 2.0)


def tps_kernel(sq_dist):
    """U as a function of squared distance: r^2 log r^2, with U(0) = 0."""
    sq_dist = np.asarray(sq_dist, dtype=np.float64)
    safe = np.where(sq_dist > 0, sq_dist, 1.0)
    return np.where(sq_dist > 0, sq_dist * np.log(safe), 0.0)


def _poly_matrix(points: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(len(points)), points[:, 0], points[:, 1]])


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return (d ** 2).sum(-1)


def solve_tps(source_points, target_points, regularization: float = 0.0) -> TPSParams:
    """Fit the TPS sending each source point to its target point.

    With ``regularization`` 0 the fit interpolates exactly; positive values
    trade exactness for smoothness (the kernel diagonal is shifted by it).
    """
    src = np.asarray(source_points, dtype=np.float64)
    dst = np.asarray(target_points, dtype=np.float64)
    if src.ndim != 2 or src.shape[1] != 2 or src.shape != dst.shape:
        raise ValueError("source and target must be equal-length lists of 2D points")
    if regularization < 0:
        raise ValueError("regularization must be non-negative")
    n = len(src)
    if n < 3:
        raise TPSSolveError("at least 3 control points are required")
    if len(np.unique(src, axis=0)) < n:
        raise TPSSolveError("duplicate source points")
    P = _poly_matrix(src)
    if np.linalg.matrix_rank(P) < 3:
        raise TPSSolveError("source points are collinear")
    L = np.zeros((n + 3, n + 3))
    L[:n, :n] = tps_kernel(_sq_dists(src, src)) + regularization * np.eye(n)
    L[:n, n:] = P
    L[n:, :n] = P.T
    rhs = np.zeros((n + 3, 2))
    rhs[:n] = dst
    try:
        sol = np.linalg.solve(L, rhs)
    except np.linalg.LinAlgError as exc:
        raise TPSSolveError(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise TPSSolveError("non-finite solution")
    w = sol[:n].T
    c, a, b = sol[n], sol[n + 1], sol[n + 2]
    affine = np.stack([[a[0], b[0], c[0]], [a[1], b[1], c[1]]])
    return TPSParams(affine, w, src.copy(), float(regularization))


def evaluate_tps(params: TPSParams, points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    U = tps_kernel(_sq_dists(pts, params.control_points))
    hom = np.column_stack([pts, np.ones(len(pts))])
    return hom @ params.affine.T + U @ params.weights.T


def sampling_grid(params: TPSParams, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates (sx, sy), each (H, W), that output pixels sample from."""
    v, u = np.mgrid[0:height, 0:width]
    x, y = pixel_to_normalized(u, v, height, width)
    mapped = evaluate_tps(params, np.stack([x.ravel(), y.ravel()], axis=1))
    sx, sy = normalized_to_pixel(mapped[:, 0], mapped[:, 1], height, width)
    return sx.reshape(height, width), sy.reshape(height, width)


def warp_image(image: np.ndarray, params: TPSParams) -> np.ndarray:
    """Backward-warp an (H, W, C) image or (H, W) mask; out-of-bounds samples read 0."""
    arr = np.asarray(image, dtype=np.float64)
    squeeze = arr.ndim == 2
    chw = arr[None] if squeeze else np.moveaxis(arr, -1, 0)
    H, W = chw.shape[1:]
    sx, sy = sampling_grid(params, H, W)
    out = kernels.bilinear_sample(np.ascontiguousarray(chw), sx, sy, SNAP)
    return out[0] if squeeze else np.moveaxis(out, 0, -1)


# ---------------------------------------------------------------------------
# serialization: 16-byte header (magic, version, K, count) + little-endian float32

def to_bytes(params: TPSParams) -> bytes:
    k = params.grid_size
    if k == 0:
        raise ValueError("only canonical-grid parameters can be serialized")
    flat = params.flat().astype("<f4")
    return _MAGIC + struct.pack("<III", _VERSION, k, flat.size) + flat.tobytes()


def from_bytes(blob: bytes) -> TPSParams:
    if len(blob) < 16 or blob[:4] != _MAGIC:
        raise ValueError("not a TPS parameter record")
    version, k, count = struct.unpack("<III", blob[4:16])
    if version != _VERSION:
        raise ValueError(f"unsupported TPS record version {version}")
    if count != 6 + 2 * k * k or len(blob) != 16 + 4 * count:
        raise ValueError("truncated or inconsistent TPS record")
    flat = np.frombuffer(blob[16:], dtype="<f4").astype(np.float64)
    return TPSParams.from_flat(flat, k)


# ---------------------------------------------------------------------------
# differentiable torch path (used by the learned matchers and the Warp-GAN)

def side_condition_projector(grid_size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """(N, N) projector removing the components of w that violate sum(w)=sum(w x)=sum(w y)=0."""
    P = _poly_matrix(canonical_grid(grid_size))
    return np.eye(len(P)) - P @ np.linalg.solve(P.T @ P, P.T)


def torch_sampling_grid(affine: torch.Tensor, weights: torch.Tensor, control_points: torch.Tensor,
                        height: int, width: int) -> torch.Tensor:
    """Normalized sampling grid (B, H, W, 2) for ``F.grid_sample(align_corners=True)``.

    affine: (B, 2, 3); weights: (B, 2, N); control_points: (N, 2).
    """
    dtype, device = affine.dtype, affine.device
    ys = torch.linspace(-1.0, 1.0, height, dtype=dtype, device=device)
    xs = torch.linspace(-1.0, 1.0, width, dtype=dtype, device=device)
    gy, gx = torch.meshgrid(ys, xs, indexing="ij")
    pts = torch.stack([gx.reshape(-1), gy.reshape(-1)], dim=1)            # (HW, 2)
    hom = torch.cat([pts, torch.ones_like(pts[:, :1])], dim=1)             # (HW, 3)
    ctrl = control_points.to(dtype=dtype, device=device)
    d2 = ((pts[:, None, :] - ctrl[None]) ** 2).sum(-1)                     # (HW, N)
    U = torch.where(d2 > 0, d2 * torch.log(torch.where(d2 > 0, d2, torch.ones_like(d2))),
                    torch.zeros_like(d2))
    mapped = torch.einsum("pk,bck->bpc", hom, affine) + torch.einsum("pn,bcn->bpc", U, weights)
    return mapped.reshape(-1, height, width, 2)


def torch_warp(x: torch.Tensor, grid: torch.Tensor) -> torch.Tensor:
    """Bilinear backward warp of (B, C, H, W) with zero padding outside."""
    if grid.shape[1:3] != x.shape[2:]:
        raise ValueError("grid and input spatial sizes differ")
    return F.grid_sample(x, grid, mode="bilinear", padding_mode="zeros", align_corners=True)


def params_to_torch(params: TPSParams, dtype=torch.float64):
    return (torch.as_tensor(params.affine, dtype=dtype)[None],
            torch.as_tensor(params.weights, dtype=dtype)[None],
            torch.as_tensor(params.control_points, dtype=dtype))


def params_from_torch(affine: torch.Tensor, weights: torch.Tensor, grid_size: int = DEFAULT_GRID_SIZE) -> list[TPSParams]:
    a = affine.detach().cpu().double().numpy()
    w = weights.detach().cpu().double().numpy()
    return [TPSParams(a[i], w[i], canonical_grid(grid_size)) for i in range(len(a))]

