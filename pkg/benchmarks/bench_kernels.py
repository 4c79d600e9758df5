"""Compare the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each workload is timed on both backends (best of N runs) and checked for
bit-identical output before the timings are printed.
"""
import argparse
import timeit

import numpy as np

from mgvton import _kernels_py

try:
    from mgvton import _kernels
except ImportError:  # extension not built
    _kernels = None


def workloads(rng):
    H, W = 256, 192
    caps = rng.uniform([0, 0, 0, 0, 2], [W, H, W, H, 12], size=(200, 5))
    polys = []
    for _ in range(200):
        c = rng.uniform([20, 20], [W - 20, H - 20])
        ang = np.sort(rng.uniform(0, 2 * np.pi, 6))
        polys.append(c + 15 * np.stack([np.cos(ang), np.sin(ang)], axis=1))
    kps = np.column_stack([rng.uniform(0, W, 18), rng.uniform(0, H, 18), np.ones(18)])
    img = rng.random((3, H, W))
    sx = rng.uniform(-2, W + 1, (H, W))
    sy = rng.uniform(-2, H + 1, (H, W))

    def capsules(k):
        buf = np.zeros((H, W), dtype=np.uint8)
        for x0, y0, x1, y1, r in caps:
            k.paint_capsule(buf, x0, y0, x1, y1, r, 1)
        return buf

    def polygons(k):
        buf = np.zeros((H, W), dtype=np.uint8)
        for p in polys:
            k.paint_convex_polygon(buf, p, 2)
        return buf

    return {
        "paint_capsule x200 (256x192)": capsules,
        "paint_convex_polygon x200 (256x192)": polygons,
        "disc_stack 18 keypoints (256x192)": lambda k: k.disc_stack(kps, H, W, 4.0),
        "bilinear_sample 3x256x192": lambda k: k.bilinear_sample(img, sx, sy, 1e-9),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first")
        return 1
    print(f"{'workload':40s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in workloads(np.random.default_rng(0)).items():
        if not np.array_equal(fn(_kernels_py), fn(_kernels)):
            raise SystemExit(f"{name}: backends disagree")
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        t_cy = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:40s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
