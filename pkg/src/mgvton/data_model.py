"""Rasters, parsing maps, keypoints and the conditioning stack shared by all stages.

Conventions
-----------
* Images are ``float64`` arrays of shape (H, W, 3) with values in [0, 1].
* Parsing maps are ``uint8`` arrays of shape (H, W) holding labels 0..19.
* Keypoint sets are ``float64`` arrays of shape (18, 3): ``x, y, visible``.
  Pixel (u, v) has its centre at integer coordinates x=u, y=v.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from . import kernels

NUM_LABELS = 20
NUM_KEYPOINTS = 18
POSE_RADIUS = 4
BODY_SHAPE_GRID = (16, 12)
NEUTRAL_FILL = 0.5
DEFAULT_RESOLUTION = (256, 192)

# label vocabulary; 10..19 are reserved so the channel count stays at 20
BACKGROUND = 0
HAIR = 1
FACE = 2
UPPER_CLOTHES = 3
LOWER_CLOTHES = 4
LEFT_ARM = 5
RIGHT_ARM = 6
LEFT_LEG = 7
RIGHT_LEG = 8
TORSO_SKIN = 9

LABEL_NAMES = [
    "background", "hair", "face", "upper_clothes", "lower_clothes",
    "left_arm", "right_arm", "left_leg", "right_leg", "torso_skin",
] + [f"reserved_{i}" for i in range(10, NUM_LABELS)]

CLOTHES_LABELS = (UPPER_CLOTHES,)
BODY_LABELS = (UPPER_CLOTHES, LOWER_CLOTHES, LEFT_ARM, RIGHT_ARM,
               LEFT_LEG, RIGHT_LEG, TORSO_SKIN)

KEYPOINT_NAMES = [
    "nose", "neck", "right_shoulder", "right_elbow", "right_wrist",
    "left_shoulder", "left_elbow", "left_wrist", "right_hip", "right_knee",
    "right_ankle", "left_hip", "left_knee", "left_ankle", "right_eye",
    "left_eye", "right_ear", "left_ear",
]
INVISIBLE = -1.0


@dataclass(frozen=True)
class BodyMasks:
    hair: np.ndarray        # (H, W) float64 {0, 1}
    face: np.ndarray        # (H, W) float64 {0, 1}
    body_shape: np.ndarray  # (H, W) float64 in [0, 1]

    def stack(self) -> np.ndarray:
        """(3, H, W) conditioning block in hair, face, body order."""
        return np.stack([self.hair, self.face, self.body_shape])


def label_indicator(parsing: np.ndarray, labels) -> np.ndarray:
    return np.isin(parsing, labels).astype(np.float64)


def one_hot(parsing: np.ndarray, num_labels: int = NUM_LABELS) -> np.ndarray:
    """(H, W) labels -> (num_labels, H, W) float64 one-hot."""
    return (np.arange(num_labels)[:, None, None] == parsing[None]).astype(np.float64)


def validate_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {image.shape}")
    if not np.all(np.isfinite(image)) or image.min() < 0.0 or image.max() > 1.0:
        raise ValueError("image values must be finite and within [0, 1]")
    return image


def validate_keypoints(keypoints: np.ndarray, height: int | None = None,
                       width: int | None = None) -> np.ndarray:
    kp = np.asarray(keypoints, dtype=np.float64)
    if kp.shape != (NUM_KEYPOINTS, 3):
        raise ValueError(f"expected ({NUM_KEYPOINTS}, 3) keypoints, got {kp.shape}")
    if not np.all(np.isfinite(kp)):
        raise ValueError("keypoint coordinates must be finite")
    if height is not None and width is not None:
        vis = kp[:, 2] > 0
        xs, ys = kp[vis, 0], kp[vis, 1]
        if np.any(xs < 0) or np.any(xs > width - 1) or np.any(ys < 0) or np.any(ys > height - 1):
            raise ValueError("visible keypoint outside the image bounds")
    return kp


def encode_pose_heatmap(keypoints: np.ndarray, height: int, width: int,
                        radius: float = POSE_RADIUS) -> np.ndarray:
    """Encode 18 keypoints as binary discs, one channel per keypoint.

    A pixel belongs to channel k when its centre is within ``radius``
    (inclusive) of visible keypoint k. Returns (18, H, W) float64.
    """
    if height <= 2 * radius or width <= 2 * radius:
        raise ValueError("heatmap must be larger than the disc diameter")
    kp = validate_keypoints(keypoints)
    discs = kernels.disc_stack(np.ascontiguousarray(kp), int(height), int(width), float(radius))
    return discs.astype(np.float64)


def _area_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) averaging matrix with exact fractional pixel overlaps."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    m = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = edges[i], edges[i + 1]
        for j in range(int(np.floor(lo)), min(int(np.ceil(hi)), n_in)):
            m[i, j] = min(hi, j + 1) - max(lo, j)
        m[i] /= hi - lo
    return m


def _bilinear_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) half-pixel-centred linear interpolation with edge clamping."""
    m = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        src = min(max((i + 0.5) * scale - 0.5, 0.0), n_in - 1)
        j0 = int(np.floor(src))
        j1 = min(j0 + 1, n_in - 1)
        f = src - j0
        m[i, j0] += 1.0 - f
        m[i, j1] += f
    return m


def area_downsample(mask: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    H, W = mask.shape
    return _area_matrix(H, size[0]) @ mask @ _area_matrix(W, size[1]).T


def bilinear_resize(mask: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    h, w = mask.shape
    return _bilinear_matrix(h, size[0]) @ mask @ _bilinear_matrix(w, size[1]).T


def body_shape(parsing: np.ndarray, grid: tuple[int, int] = BODY_SHAPE_GRID) -> np.ndarray:
    """Coarse body silhouette: union of body labels, area-averaged to ``grid`` and resized back."""
    union = label_indicator(parsing, BODY_LABELS)
    coarse = area_downsample(union, grid)
    return np.clip(bilinear_resize(coarse, union.shape), 0.0, 1.0)


def extract_body_masks(parsing: np.ndarray) -> BodyMasks:
    parsing = np.asarray(parsing)
    return BodyMasks(
        hair=label_indicator(parsing, (HAIR,)),
        face=label_indicator(parsing, (FACE,)),
        body_shape=body_shape(parsing),
    )


def clothes_mask_from_parsing(parsing: np.ndarray) -> np.ndarray:
    """Indicator of the upper-clothes labels, float64 {0, 1}."""
    return label_indicator(np.asarray(parsing), CLOTHES_LABELS)


def remove_clothes(person: np.ndarray, parsing: np.ndarray, fill: float = NEUTRAL_FILL) -> np.ndarray:
    """Replace upper-clothes pixels with a neutral gray; all other pixels untouched."""
    out = np.array(person, dtype=np.float64, copy=True)
    out[clothes_mask_from_parsing(parsing) > 0] = fill
    return out


# ---------------------------------------------------------------------------
# file formats

def load_image(path) -> np.ndarray:
    with PILImage.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0


def to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def save_image(path, image: np.ndarray) -> None:
    PILImage.fromarray(to_uint8(image), mode="RGB").save(path, optimize=False)


def save_mask(path, mask: np.ndarray) -> None:
    PILImage.fromarray(to_uint8(mask), mode="L").save(path, optimize=False)


def load_mask(path) -> np.ndarray:
    with PILImage.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.float64) / 255.0


def load_parsing(path) -> np.ndarray:
    with PILImage.open(path) as im:
        parsing = np.asarray(im, dtype=np.uint8)
    if parsing.ndim != 2 or parsing.max(initial=0) >= NUM_LABELS:
        raise ValueError(f"{path}: not a {NUM_LABELS}-label parsing map")
    return parsing


def save_parsing(path, parsing: np.ndarray) -> None:
    PILImage.fromarray(np.asarray(parsing, dtype=np.uint8), mode="L").save(path, optimize=False)


def format_keypoints(keypoints: np.ndarray) -> str:
    lines = []
    for i, (x, y, vis) in enumerate(validate_keypoints(keypoints)):
        if vis > 0:
            lines.append(f"{i} {x:.3f} {y:.3f} 1")
        else:
            lines.append(f"{i} -1 -1 0")
    return "\n".join(lines) + "\n"


def parse_keypoints(text: str) -> np.ndarray:
    kp = np.full((NUM_KEYPOINTS, 3), INVISIBLE)
    kp[:, 2] = 0.0
    seen = set()
    for line in text.splitlines():
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4:
            raise ValueError(f"malformed keypoint line: {line!r}")
        idx, vis = int(fields[0]), int(fields[3])
        if not 0 <= idx < NUM_KEYPOINTS or vis not in (0, 1) or idx in seen:
            raise ValueError(f"malformed keypoint line: {line!r}")
        seen.add(idx)
        kp[idx] = (float(fields[1]), float(fields[2]), float(vis))
    if len(seen) != NUM_KEYPOINTS:
        raise ValueError(f"expected {NUM_KEYPOINTS} keypoint rows, found {len(seen)}")
    return validate_keypoints(kp)


def save_keypoints(path, keypoints: np.ndarray) -> None:
    Path(path).write_text(format_keypoints(keypoints), encoding="utf-8")


def load_keypoints(path) -> np.ndarray:
    return parse_keypoints(Path(path).read_text(encoding="utf-8"))
