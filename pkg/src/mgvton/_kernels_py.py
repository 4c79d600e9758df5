"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Kept operation-for-operation identical to the extension so both backends give
bit-identical rasters and samples.
"""
import numpy as np


def _bbox(lo, hi, size):
    return (int(min(max(np.floor(lo), 0), size - 1)),
            int(min(max(np.ceil(hi), 0), size - 1)))


def paint_capsule(buf, x0, y0, x1, y1, radius, value):
    """Paint every pixel centre within ``radius`` of segment (x0,y0)-(x1,y1)."""
    H, W = buf.shape
    ulo, uhi = _bbox(min(x0, x1) - radius, max(x0, x1) + radius, W)
    vlo, vhi = _bbox(min(y0, y1) - radius, max(y0, y1) + radius, H)
    v, u = np.mgrid[vlo:vhi + 1, ulo:uhi + 1].astype(np.float64)
    dx = x1 - x0
    dy = y1 - y0
    L2 = dx * dx + dy * dy
    if L2 > 0.0:
        t = np.clip(((u - x0) * dx + (v - y0) * dy) / L2, 0.0, 1.0)
    else:
        t = np.zeros_like(u)
    ex = u - (x0 + t * dx)
    ey = v - (y0 + t * dy)
    hit = ex * ex + ey * ey <= radius * radius
    buf[vlo:vhi + 1, ulo:uhi + 1][hit] = value
    return int(hit.sum())


def paint_convex_polygon(buf, pts, value):
    """Paint pixel centres inside a counter-clockwise convex polygon (edges inclusive)."""
    H, W = buf.shape
    pts = np.asarray(pts, dtype=np.float64)
    ulo, uhi = _bbox(pts[:, 0].min(), pts[:, 0].max(), W)
    vlo, vhi = _bbox(pts[:, 1].min(), pts[:, 1].max(), H)
    v, u = np.mgrid[vlo:vhi + 1, ulo:uhi + 1].astype(np.float64)
    inside = np.ones(u.shape, dtype=bool)
    n = len(pts)
    for k in range(n):
        ax, ay = pts[k]
        bx, by = pts[(k + 1) % n]
        cross = (bx - ax) * (v - ay) - (by - ay) * (u - ax)
        inside &= cross >= 0.0
    buf[vlo:vhi + 1, ulo:uhi + 1][inside] = value
    return int(inside.sum())


def disc_stack(keypoints, height, width, radius):
    """(K, 3) rows of (x, y, visible) -> (K, H, W) uint8 disc indicators."""
    out = np.zeros((len(keypoints), height, width), dtype=np.uint8)
    for k, (x, y, vis) in enumerate(keypoints):
        if vis > 0.0:
            paint_capsule(out[k], x, y, x, y, radius, 1)
    return out


def bilinear_sample(img, sx, sy, snap):
    """Sample ``img`` (C, H, W) at pixel coordinates (sx, sy); outside reads as 0.

    Coordinates within ``snap`` of an integer are rounded to it first.
    """
    C, H, W = img.shape
    x = np.array(sx, dtype=np.float64)
    y = np.array(sy, dtype=np.float64)
    rx = np.floor(x + 0.5)
    ry = np.floor(y + 0.5)
    x = np.where(np.abs(x - rx) <= snap, rx, x)
    y = np.where(np.abs(y - ry) <= snap, ry, y)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    weights = ((1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), (1.0 - fx) * fy, fx * fy)
    acc = np.zeros((C,) + x.shape, dtype=np.float64)
    for w, (oy, ox) in zip(weights, ((0, 0), (0, 1), (1, 0), (1, 1))):
        xi = x0 + ox
        yi = y0 + oy
        ok = (xi >= 0) & (xi < W) & (yi >= 0) & (yi < H)
        vals = img[:, np.clip(yi, 0, H - 1), np.clip(xi, 0, W - 1)]
        acc = acc + np.where(ok, w * vals, 0.0)
    return acc
