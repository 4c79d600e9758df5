# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled raster and sampling kernels.

Every routine mirrors :mod:`mgvton._kernels_py` operation for operation so the
two backends agree bit for bit (the extension is built without FMA contraction).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, ceil, fabs

cnp.import_array()


cdef inline Py_ssize_t _clip(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def paint_capsule(cnp.uint8_t[:, ::1] buf, double x0, double y0, double x1, double y1,
                  double radius, int value):
    """Paint every pixel centre within ``radius`` of segment (x0,y0)-(x1,y1)."""
    cdef Py_ssize_t H = buf.shape[0], W = buf.shape[1]
    cdef Py_ssize_t u, v, ulo, uhi, vlo, vhi
    cdef double dx = x1 - x0, dy = y1 - y0
    cdef double L2 = dx * dx + dy * dy
    cdef double r2 = radius * radius
    cdef double t, px, py, ex, ey
    cdef long count = 0
    ulo = _clip(<Py_ssize_t>floor(min(x0, x1) - radius), 0, W - 1)
    uhi = _clip(<Py_ssize_t>ceil(max(x0, x1) + radius), 0, W - 1)
    vlo = _clip(<Py_ssize_t>floor(min(y0, y1) - radius), 0, H - 1)
    vhi = _clip(<Py_ssize_t>ceil(max(y0, y1) + radius), 0, H - 1)
    with nogil:
        for v in range(vlo, vhi + 1):
            for u in range(ulo, uhi + 1):
                if L2 > 0.0:
                    t = ((u - x0) * dx + (v - y0) * dy) / L2
                    if t < 0.0:
                        t = 0.0
                    elif t > 1.0:
                        t = 1.0
                else:
                    t = 0.0
                px = x0 + t * dx
                py = y0 + t * dy
                ex = u - px
                ey = v - py
                if ex * ex + ey * ey <= r2:
                    buf[v, u] = value
                    count += 1
    return count


def paint_convex_polygon(cnp.uint8_t[:, ::1] buf, double[:, ::1] pts, int value):
    """Paint pixel centres inside a counter-clockwise convex polygon (edges inclusive)."""
    cdef Py_ssize_t H = buf.shape[0], W = buf.shape[1]
    cdef Py_ssize_t n = pts.shape[0]
    cdef Py_ssize_t u, v, k, k1, ulo, uhi, vlo, vhi
    cdef double xmin = pts[0, 0], xmax = pts[0, 0], ymin = pts[0, 1], ymax = pts[0, 1]
    cdef double cross
    cdef bint inside
    cdef long count = 0
    for k in range(1, n):
        xmin = min(xmin, pts[k, 0])
        xmax = max(xmax, pts[k, 0])
        ymin = min(ymin, pts[k, 1])
        ymax = max(ymax, pts[k, 1])
    ulo = _clip(<Py_ssize_t>floor(xmin), 0, W - 1)
    uhi = _clip(<Py_ssize_t>ceil(xmax), 0, W - 1)
    vlo = _clip(<Py_ssize_t>floor(ymin), 0, H - 1)
    vhi = _clip(<Py_ssize_t>ceil(ymax), 0, H - 1)
    with nogil:
        for v in range(vlo, vhi + 1):
            for u in range(ulo, uhi + 1):
                inside = True
                for k in range(n):
                    k1 = k + 1
                    if k1 == n:
                        k1 = 0
                    cross = ((pts[k1, 0] - pts[k, 0]) * (v - pts[k, 1])
                             - (pts[k1, 1] - pts[k, 1]) * (u - pts[k, 0]))
                    if cross < 0.0:
                        inside = False
                        break
                if inside:
                    buf[v, u] = value
                    count += 1
    return count


def disc_stack(double[:, ::1] keypoints, Py_ssize_t height, Py_ssize_t width, double radius):
    """(K, 3) rows of (x, y, visible) -> (K, H, W) uint8 disc indicators."""
    cdef Py_ssize_t K = keypoints.shape[0]
    out = np.zeros((K, height, width), dtype=np.uint8)
    cdef cnp.uint8_t[:, :, ::1] o = out
    cdef Py_ssize_t k
    for k in range(K):
        if keypoints[k, 2] > 0.0:
            paint_capsule(o[k], keypoints[k, 0], keypoints[k, 1],
                          keypoints[k, 0], keypoints[k, 1], radius, 1)
    return out


def bilinear_sample(double[:, :, ::1] img, double[:, ::1] sx, double[:, ::1] sy,
                    double snap):
    """Sample ``img`` (C, H, W) at pixel coordinates (sx, sy); outside reads as 0.

    Coordinates within ``snap`` of an integer are rounded to it first.
    """
    cdef Py_ssize_t C = img.shape[0], H = img.shape[1], W = img.shape[2]
    cdef Py_ssize_t Ho = sx.shape[0], Wo = sx.shape[1]
    out = np.zeros((C, Ho, Wo), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef Py_ssize_t i, j, c, x0, y0
    cdef double x, y, fx, fy, rx, ry, w00, w01, w10, w11, acc
    cdef bint in00, in01, in10, in11
    with nogil:
        for i in range(Ho):
            for j in range(Wo):
                x = sx[i, j]
                y = sy[i, j]
                rx = floor(x + 0.5)
                ry = floor(y + 0.5)
                if fabs(x - rx) <= snap:
                    x = rx
                if fabs(y - ry) <= snap:
                    y = ry
                x0 = <Py_ssize_t>floor(x)
                y0 = <Py_ssize_t>floor(y)
                fx = x - x0
                fy = y - y0
                w00 = (1.0 - fx) * (1.0 - fy)
                w01 = fx * (1.0 - fy)
                w10 = (1.0 - fx) * fy
                w11 = fx * fy
                in00 = 0 <= x0 < W and 0 <= y0 < H
                in01 = 0 <= x0 + 1 < W and 0 <= y0 < H
                in10 = 0 <= x0 < W and 0 <= y0 + 1 < H
                in11 = 0 <= x0 + 1 < W and 0 <= y0 + 1 < H
                for c in range(C):
                    acc = 0.0
                    if in00:
                        acc = acc + w00 * img[c, y0, x0]
                    if in01:
                        acc = acc + w01 * img[c, y0, x0 + 1]
                    if in10:
                        acc = acc + w10 * img[c, y0 + 1, x0]
                    if in11:
                        acc = acc + w11 * img[c, y0 + 1, x0 + 1]
                    o[c, i, j] = acc
    return out
