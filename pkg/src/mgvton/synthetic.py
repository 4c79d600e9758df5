"""Procedural triplets: articulated 2D figures wearing textured garments.

Geometry is specified at a 256x192 reference canvas and scaled to the render
resolution. Rasterization tests pixel centres only (no anti-aliasing), so every
pixel carries exactly one part and the parsing map is exact.

Skeleton: ten joint angles drive a stick figure (torso lean, head tilt, and
shoulder/elbow/hip/knee for each side; 0 means hanging straight down, positive
swings away from the body). The 18 keypoints follow the OpenPose ordering:
shoulders, elbows, wrists, hips, knees and ankles are joints of the figure;
the neck keypoint is the top of the torso; the nose sits 0.15 head radii below
the head centre, the eyes 0.1 radii above it and 0.35 radii to either side, and
the ears 0.95 radii to either side. The figure faces the viewer, so its right
side is on the image left.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import data_model as dm
from . import kernels

REF_HEIGHT, REF_WIDTH = 256, 192
BACKGROUND_COLOR = (1.0, 1.0, 1.0)
MAX_GARMENT_VALUE = 0.92          # keeps garment pixels distinguishable from the white backdrop
KEYPOINT_MARGIN = dm.POSE_RADIUS  # keeps every pose disc fully on-canvas
MIN_POSE_DISTANCE = 0.6           # L2 distance between the two joint-angle vectors of a triplet
TEST_FRACTION_DENOM = 6           # train:test = 5:1, n_test = floor(count / 6)

PATTERNS = ("solid", "stripes", "dots")
HAIR_STYLES = ("short", "long", "bangs")
SLEEVES = ("none", "short", "long")

SKIN_TONES = np.array([
    [0.96, 0.80, 0.69], [0.89, 0.70, 0.57], [0.78, 0.57, 0.44],
    [0.63, 0.45, 0.33], [0.48, 0.33, 0.23], [0.36, 0.24, 0.17],
])
HAIR_COLORS = np.array([
    [0.10, 0.07, 0.05], [0.30, 0.18, 0.09], [0.55, 0.35, 0.17],
    [0.80, 0.65, 0.35], [0.55, 0.10, 0.05], [0.35, 0.35, 0.38],
])

JOINT_NAMES = ("torso_lean", "head_tilt", "r_shoulder", "r_elbow", "l_shoulder",
               "l_elbow", "r_hip", "r_knee", "l_hip", "l_knee")
JOINT_LIMITS = np.array([
    [-0.12, 0.12], [-0.25, 0.25],
    [0.10, 1.20], [-0.50, 0.90], [0.10, 1.20], [-0.50, 0.90],
    [0.00, 0.45], [-0.30, 0.30], [0.00, 0.45], [-0.30, 0.30],
])


@dataclass(frozen=True)
class PersonSpec:
    seed: int
    skin: tuple
    hair_style: str
    hair_color: tuple
    lower_color: tuple
    # body proportions in reference pixels
    head_radius: float = 14.0
    neck_length: float = 7.0
    torso_length: float = 62.0
    shoulder_half: float = 22.0
    hip_half: float = 13.0
    upper_arm: float = 35.0
    forearm: float = 31.0
    arm_width: float = 6.0
    thigh: float = 42.0
    shin: float = 38.0
    leg_width: float = 8.0

    @classmethod
    def sample(cls, rng: np.random.Generator, seed: int = 0) -> "PersonSpec":
        jitter = lambda base, amount: float(base * (1.0 + rng.uniform(-amount, amount)))  # noqa: E731
        skin = np.clip(SKIN_TONES[rng.integers(len(SKIN_TONES))] + rng.uniform(-0.03, 0.03, 3), 0, 1)
        hair = np.clip(HAIR_COLORS[rng.integers(len(HAIR_COLORS))] + rng.uniform(-0.03, 0.03, 3), 0, 1)
        lower = rng.uniform(0.05, 0.6, 3)
        return cls(
            seed=int(seed), skin=tuple(skin), hair_style=HAIR_STYLES[rng.integers(len(HAIR_STYLES))],
            hair_color=tuple(hair), lower_color=tuple(lower),
            head_radius=jitter(14.0, 0.08), neck_length=jitter(7.0, 0.15),
            torso_length=jitter(62.0, 0.08), shoulder_half=jitter(22.0, 0.1),
            hip_half=jitter(13.0, 0.1), upper_arm=jitter(35.0, 0.06), forearm=jitter(31.0, 0.06),
            arm_width=jitter(6.0, 0.1), thigh=jitter(42.0, 0.06), shin=jitter(38.0, 0.06),
            leg_width=jitter(8.0, 0.1),
        )


@dataclass(frozen=True)
class ClothesSpec:
    color: tuple
    pattern: str = "solid"
    sleeve: str = "short"
    period: float = 16.0  # pattern period, reference pixels

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.sleeve not in SLEEVES:
            raise ValueError(f"unknown sleeve length {self.sleeve!r}")

    @property
    def secondary(self) -> np.ndarray:
        c = np.asarray(self.color)
        return np.clip(0.25 + 0.5 * (1.0 - c), 0.0, MAX_GARMENT_VALUE)

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "ClothesSpec":
        return cls(
            color=tuple(rng.uniform(0.1, MAX_GARMENT_VALUE, 3)),
            pattern=PATTERNS[rng.integers(len(PATTERNS))],
            sleeve=SLEEVES[rng.integers(len(SLEEVES))],
            period=float(rng.uniform(13.0, 20.0)),
        )


@dataclass(frozen=True)
class PoseSpec:
    angles: tuple                        # 10 joint angles in JOINT_NAMES order, radians
    center: tuple = (96.0, 150.0)        # pelvis, reference pixels
    scale: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=np.float64)
        if a.shape != (10,):
            raise ValueError("a pose needs 10 joint angles")
        if np.any(a < JOINT_LIMITS[:, 0] - 1e-12) or np.any(a > JOINT_LIMITS[:, 1] + 1e-12):
            raise ValueError("joint angle outside its limits")

    @classmethod
    def sample(cls, rng: np.random.Generator) -> "PoseSpec":
        angles = rng.uniform(JOINT_LIMITS[:, 0], JOINT_LIMITS[:, 1])
        center = (float(rng.uniform(88.0, 104.0)), float(rng.uniform(143.0, 153.0)))
        return cls(tuple(float(a) for a in angles), center, float(rng.uniform(0.9, 1.03)))

    def distance(self, other: "PoseSpec") -> float:
        return float(np.linalg.norm(np.subtract(self.angles, other.angles)))


# ---------------------------------------------------------------------------
# skeleton

def _down(angle: float, side: float) -> np.ndarray:
    """Unit vector hanging down, rotated by ``angle`` toward image ``side`` (-1 left, +1 right)."""
    return np.array([side * math.sin(angle), math.cos(angle)])


@dataclass
class Skeleton:
    joints: dict = field(default_factory=dict)   # name -> (x, y) in render pixels
    up: np.ndarray = None                        # torso up axis
    perp: np.ndarray = None                      # torso axis toward image right
    head_up: np.ndarray = None
    scale: float = 1.0                           # render pixels per reference pixel (incl. pose scale)


def forward_kinematics(person: PersonSpec, pose: PoseSpec, resolution) -> Skeleton:
    H, W = resolution
    k = H / REF_HEIGHT
    s = k * pose.scale
    (lean, tilt, rs, re, ls, le, rh, rk, lh, lk) = pose.angles
    pelvis = np.array([pose.center[0] * W / REF_WIDTH, pose.center[1] * k])
    up = np.array([math.sin(lean), -math.cos(lean)])
    perp = np.array([math.cos(lean), math.sin(lean)])
    neck = pelvis + person.torso_length * s * up
    shoulder_base = neck - 5.0 * s * up
    head_up = np.array([math.sin(lean + tilt), -math.cos(lean + tilt)])
    head_perp = np.array([math.cos(lean + tilt), math.sin(lean + tilt)])
    head = neck + (person.neck_length + person.head_radius) * s * head_up
    j = {"pelvis": pelvis, "neck": neck, "head": head}
    for name, side, sh, el, hp, kn in (("r", -1.0, rs, re, rh, rk), ("l", 1.0, ls, le, lh, lk)):
        shoulder = shoulder_base + side * person.shoulder_half * s * perp
        elbow = shoulder + person.upper_arm * s * _down(sh - lean * side, side)
        wrist = elbow + person.forearm * s * _down(sh + el - lean * side, side)
        hip = pelvis + side * person.hip_half * s * perp
        knee = hip + person.thigh * s * _down(hp, side)
        ankle = knee + person.shin * s * _down(hp + kn, side)
        j.update({f"{name}_shoulder": shoulder, f"{name}_elbow": elbow, f"{name}_wrist": wrist,
                  f"{name}_hip": hip, f"{name}_knee": knee, f"{name}_ankle": ankle})
    r = person.head_radius * s
    j["nose"] = head - 0.15 * r * head_up
    j["r_eye"] = head + 0.1 * r * head_up - 0.35 * r * head_perp
    j["l_eye"] = head + 0.1 * r * head_up + 0.35 * r * head_perp
    j["r_ear"] = head - 0.95 * r * head_perp
    j["l_ear"] = head + 0.95 * r * head_perp
    return Skeleton(j, up, perp, head_up, s)


KEYPOINT_JOINTS = ("nose", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow",
                   "l_wrist", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
                   "r_eye", "l_eye", "r_ear", "l_ear")


def keypoints_from_skeleton(skel: Skeleton) -> np.ndarray:
    kp = np.ones((dm.NUM_KEYPOINTS, 3))
    for i, name in enumerate(KEYPOINT_JOINTS):
        kp[i, :2] = skel.joints[name]
    return kp


def pose_fits(person: PersonSpec, pose: PoseSpec, resolution, margin: float = KEYPOINT_MARGIN) -> bool:
    H, W = resolution
    kp = keypoints_from_skeleton(forward_kinematics(person, pose, resolution))
    return bool(np.all(kp[:, 0] >= margin) and np.all(kp[:, 0] <= W - 1 - margin)
                and np.all(kp[:, 1] >= margin) and np.all(kp[:, 1] <= H - 1 - margin))


# ---------------------------------------------------------------------------
# primitives

@dataclass(frozen=True)
class Primitive:
    part: str
    label: int
    kind: str        # "capsule" or "polygon"
    geometry: tuple  # capsule: (x0, y0, x1, y1, radius); polygon: ((x, y), ...)


def _ccw(points) -> np.ndarray:
    """Orient a convex polygon so the kernels' inside test (cross >= 0, y down) holds."""
    pts = np.asarray(points, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    area = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return np.ascontiguousarray(pts if area >= 0 else pts[::-1])


def paint(buf: np.ndarray, prim: Primitive, value: int) -> int:
    if prim.kind == "capsule":
        return kernels.paint_capsule(buf, *map(float, prim.geometry), int(value))
    return kernels.paint_convex_polygon(buf, _ccw(prim.geometry), int(value))


def _cap(part, label, a, b, r) -> Primitive:
    return Primitive(part, label, "capsule", (float(a[0]), float(a[1]), float(b[0]), float(b[1]), float(r)))


def _poly(part, label, pts) -> Primitive:
    return Primitive(part, label, "polygon", tuple((float(p[0]), float(p[1])) for p in pts))


def _arc_polygon(center, radius, up, perp, cut: float, n: int = 12):
    """Convex cap of a circle above the chord at ``cut`` radii along ``up``."""
    half = math.acos(max(-1.0, min(1.0, cut)))
    pts = []
    for t in np.linspace(-half, half, n):
        pts.append(center + radius * (math.cos(t) * up + math.sin(t) * perp))
    return pts


def person_primitives(person: PersonSpec, clothes: ClothesSpec, skel: Skeleton) -> list[Primitive]:
    j, s = skel.joints, skel.scale
    up, perp, head_up = skel.up, skel.perp, skel.head_up
    head_perp = np.array([-head_up[1], head_up[0]])
    r_head = person.head_radius * s
    aw, lw = person.arm_width * s, person.leg_width * s
    prims = []
    if person.hair_style == "long":
        prims.append(_cap("hair_back", dm.HAIR, j["head"], j["head"] - 1.7 * r_head * head_up, 1.05 * r_head))
    for side, arm_label, leg_label in (("r", dm.RIGHT_ARM, dm.RIGHT_LEG), ("l", dm.LEFT_ARM, dm.LEFT_LEG)):
        prims.append(_cap(f"{side}_shin", leg_label, j[f"{side}_knee"], j[f"{side}_ankle"], 0.85 * lw))
        prims.append(_cap(f"{side}_thigh", dm.LOWER_CLOTHES, j[f"{side}_hip"], j[f"{side}_knee"], lw))
    prims.append(_cap("pelvis", dm.LOWER_CLOTHES, j["r_hip"], j["l_hip"], 1.2 * lw))
    neck_top = j["neck"] + person.neck_length * s * head_up
    prims.append(_cap("neck", dm.TORSO_SKIN, j["neck"] - 3.0 * s * up, neck_top, 0.42 * r_head))
    sh_half = (person.shoulder_half + 0.6 * person.arm_width) * s
    hip_half = (person.hip_half + 0.6 * person.leg_width) * s
    top = j["neck"] - 2.0 * s * up
    bottom = j["pelvis"] - 1.5 * s * up
    prims.append(_poly("torso", dm.UPPER_CLOTHES, [
        top - sh_half * perp, top + sh_half * perp, bottom + hip_half * perp, bottom - hip_half * perp]))
    for side, arm_label in (("r", dm.RIGHT_ARM), ("l", dm.LEFT_ARM)):
        upper_label = dm.UPPER_CLOTHES if clothes.sleeve in ("short", "long") else arm_label
        lower_label = dm.UPPER_CLOTHES if clothes.sleeve == "long" else arm_label
        prims.append(_cap(f"{side}_upper_arm", upper_label, j[f"{side}_shoulder"], j[f"{side}_elbow"], aw))
        prims.append(_cap(f"{side}_forearm", lower_label, j[f"{side}_elbow"], j[f"{side}_wrist"], 0.9 * aw))
        prims.append(_cap(f"{side}_hand", arm_label, j[f"{side}_wrist"], j[f"{side}_wrist"], 1.1 * aw))
    cap_center = j["head"] + 0.15 * r_head * head_up
    prims.append(_cap("hair_cap", dm.HAIR, cap_center, cap_center, 1.08 * r_head))
    prims.append(_cap("face", dm.FACE, j["head"], j["head"], r_head))
    if person.hair_style == "bangs":
        prims.append(_poly("bangs", dm.HAIR, _arc_polygon(j["head"], r_head, head_up, head_perp, 0.3)))
    return prims


def rasterize(prims: list[Primitive], resolution) -> np.ndarray:
    """Painter's algorithm into a part-index buffer (0 = background, i + 1 = prims[i])."""
    if len(prims) > 254:
        raise ValueError("too many primitives")
    buf = np.zeros(resolution, dtype=np.uint8)
    for i, prim in enumerate(prims):
        paint(buf, prim, i + 1)
    return buf


# ---------------------------------------------------------------------------
# texture

def pattern_color(clothes: ClothesSpec, along: np.ndarray, across: np.ndarray) -> np.ndarray:
    """Garment colour at garment-frame coordinates (reference pixels) -> (N, 3)."""
    base = np.asarray(clothes.color, dtype=np.float64)
    out = np.tile(base, (len(along), 1))
    p = clothes.period
    if clothes.pattern == "stripes":
        odd = np.floor(along / (0.5 * p)).astype(np.int64) % 2 == 1
        out[odd] = clothes.secondary
    elif clothes.pattern == "dots":
        du = along - p * np.round(along / p)
        dv = across - p * np.round(across / p)
        out[du * du + dv * dv <= (0.27 * p) ** 2] = clothes.secondary
    return np.minimum(out, MAX_GARMENT_VALUE)


def _segment_frame(pts, a, b):
    d = b - a
    length = float(np.hypot(*d))
    axis = d / length
    normal = np.array([-axis[1], axis[0]])
    rel = pts - a
    return rel @ axis, rel @ normal, length


@dataclass
class Rendering:
    image: np.ndarray
    parsing: np.ndarray
    keypoints: np.ndarray
    parts: np.ndarray          # part-index buffer (last writer per pixel)
    primitives: list


def render_person_layers(person: PersonSpec, clothes: ClothesSpec, pose: PoseSpec, resolution) -> Rendering:
    resolution = tuple(int(v) for v in resolution)
    H, W = resolution
    skel = forward_kinematics(person, pose, resolution)
    kp = keypoints_from_skeleton(skel)
    if not (np.all(kp[:, 0] >= 0) and np.all(kp[:, 0] <= W - 1) and np.all(kp[:, 1] >= 0)
            and np.all(kp[:, 1] <= H - 1)):
        raise ValueError("pose places keypoints outside the canvas")
    prims = person_primitives(person, clothes, skel)
    parts = rasterize(prims, resolution)
    labels = np.array([dm.BACKGROUND] + [p.label for p in prims], dtype=np.uint8)
    parsing = labels[parts]

    colors = {dm.HAIR: person.hair_color, dm.FACE: person.skin, dm.LOWER_CLOTHES: person.lower_color,
              dm.LEFT_ARM: person.skin, dm.RIGHT_ARM: person.skin, dm.LEFT_LEG: person.skin,
              dm.RIGHT_LEG: person.skin, dm.TORSO_SKIN: person.skin}
    image = np.empty((H, W, 3))
    image[:] = BACKGROUND_COLOR
    for label, color in colors.items():
        image[parsing == label] = color

    # garment texture in garment-frame coordinates, reference pixel units
    s = skel.scale
    j = skel.joints
    for idx, prim in enumerate(prims, start=1):
        if prim.label != dm.UPPER_CLOTHES:
            continue
        vv, uu = np.nonzero(parts == idx)
        if len(vv) == 0:
            continue
        pts = np.stack([uu, vv], axis=1).astype(np.float64)
        if prim.part == "torso":
            origin = j["neck"] - 2.0 * s * skel.up
            rel = pts - origin
            along, across = rel @ (-skel.up) / s, rel @ skel.perp / s
        else:
            side = prim.part[0]
            along, across, upper_len = _segment_frame(pts, j[f"{side}_shoulder"], j[f"{side}_elbow"])
            if prim.part.endswith("forearm"):
                along, across, _ = _segment_frame(pts, j[f"{side}_elbow"], j[f"{side}_wrist"])
                along = along + upper_len
            along, across = along / s, across / s
        image[vv, uu] = pattern_color(clothes, along, across)
    return Rendering(image, parsing, kp, parts, prims)


def render_person(person: PersonSpec, clothes: ClothesSpec, pose: PoseSpec, resolution):
    """Render (image, parsing map, keypoints) of the figure wearing ``clothes`` in ``pose``."""
    r = render_person_layers(person, clothes, pose, resolution)
    return r.image, r.parsing, r.keypoints


def product_primitives(clothes: ClothesSpec, resolution) -> list[Primitive]:
    H, W = resolution
    k = H / REF_HEIGHT
    cx = (REF_WIDTH / 2.0) * W / REF_WIDTH
    top, bottom, half = 60.0 * k, 150.0 * k, 30.0 * k
    prims = [_poly("torso", dm.UPPER_CLOTHES, [(cx - half, top), (cx + half, top),
                                               (cx + half * 0.85, bottom), (cx - half * 0.85, bottom)])]
    length = {"none": 0.0, "short": 24.0, "long": 62.0}[clothes.sleeve] * k
    if length > 0:
        for side in (-1.0, 1.0):
            a = np.array([cx + side * (half - 6.0 * k), top + 7.0 * k])
            b = a + length * _down(0.7, side)
            prims.append(_cap(f"{'r' if side < 0 else 'l'}_sleeve", dm.UPPER_CLOTHES, a, b, 7.0 * k))
    return prims


def render_clothes_product(clothes: ClothesSpec, resolution):
    """Flat front view of the garment on white; returns (image, binary mask)."""
    resolution = tuple(int(v) for v in resolution)
    H, W = resolution
    k = H / REF_HEIGHT
    prims = product_primitives(clothes, resolution)
    parts = rasterize(prims, resolution)
    image = np.empty((H, W, 3))
    image[:] = BACKGROUND_COLOR
    for idx, prim in enumerate(prims, start=1):
        vv, uu = np.nonzero(parts == idx)
        if len(vv) == 0:
            continue
        pts = np.stack([uu, vv], axis=1).astype(np.float64)
        if prim.part == "torso":
            (x0, y0), (x1, _) = prim.geometry[0], prim.geometry[1]
            along, across = (pts[:, 1] - y0) / k, (pts[:, 0] - 0.5 * (x0 + x1)) / k
        else:
            a = np.array(prim.geometry[:2])
            b = np.array(prim.geometry[2:4])
            along, across, _ = _segment_frame(pts, a, b)
            along, across = along / k, across / k
        image[vv, uu] = pattern_color(clothes, along, across)
    return image, (parts > 0).astype(np.float64)


# ---------------------------------------------------------------------------
# triplets and dataset trees

@dataclass
class Triplet:
    triplet_id: str
    source_image: np.ndarray
    source_parsing: np.ndarray
    source_keypoints: np.ndarray
    clothes_image: np.ndarray
    clothes_mask: np.ndarray
    target_image: np.ndarray
    target_parsing: np.ndarray
    target_keypoints: np.ndarray

    @property
    def resolution(self):
        return self.source_parsing.shape


def sample_triplet_specs(seed: int, resolution, max_tries: int = 1000):
    rng = np.random.default_rng(seed)
    person = PersonSpec.sample(rng, seed)
    clothes = ClothesSpec.sample(rng)
    poses = []
    for _ in range(max_tries):
        pose = PoseSpec.sample(rng)
        if not pose_fits(person, pose, resolution):
            continue
        if poses and pose.distance(poses[0]) < MIN_POSE_DISTANCE:
            continue
        poses.append(pose)
        if len(poses) == 2:
            return person, clothes, poses[0], poses[1]
    raise RuntimeError(f"could not sample a valid pose pair for seed {seed}")


def make_triplet(seed: int, resolution, triplet_id: str = "") -> Triplet:
    person, clothes, pose_a, pose_b = sample_triplet_specs(seed, resolution)
    src = render_person(person, clothes, pose_a, resolution)
    tgt = render_person(person, clothes, pose_b, resolution)
    c_img, c_mask = render_clothes_product(clothes, resolution)
    return Triplet(triplet_id, *src, c_img, c_mask, *tgt)


def recombined_triplet(person_seed: int, clothes_seed: int, pose_seed: int, resolution,
                       triplet_id: str = "") -> Triplet:
    """Person of one triplet seed wearing the clothes of another in a third one's target pose.

    The target is rendered exactly, so shuffled try-on requests have a true
    ground truth. Falls back to the pose donor's source pose when its target
    pose does not fit the person.
    """
    person, own_clothes, own_pose, _ = sample_triplet_specs(person_seed, resolution)
    _, clothes, _, _ = sample_triplet_specs(clothes_seed, resolution)
    _, _, donor_a, donor_b = sample_triplet_specs(pose_seed, resolution)
    pose = next((p for p in (donor_b, donor_a) if pose_fits(person, p, resolution)), None)
    if pose is None:
        raise RuntimeError(f"no pose of seed {pose_seed} fits the person of seed {person_seed}")
    src = render_person(person, own_clothes, own_pose, resolution)
    tgt = render_person(person, clothes, pose, resolution)
    c_img, c_mask = render_clothes_product(clothes, resolution)
    return Triplet(triplet_id, *src, c_img, c_mask, *tgt)


def triplet_seeds(count: int, seed: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def split_counts(count: int) -> tuple[int, int]:
    n_test = count // TEST_FRACTION_DENOM
    return count - n_test, n_test


TRIPLET_FILES = ("source.png", "target.png", "clothes.png", "clothes_mask.png",
                 "source_parsing.png", "target_parsing.png", "source_pose.txt", "target_pose.txt")


def write_triplet(directory: Path, t: Triplet) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    dm.save_image(directory / "source.png", t.source_image)
    dm.save_image(directory / "target.png", t.target_image)
    dm.save_image(directory / "clothes.png", t.clothes_image)
    dm.save_mask(directory / "clothes_mask.png", t.clothes_mask)
    dm.save_parsing(directory / "source_parsing.png", t.source_parsing)
    dm.save_parsing(directory / "target_parsing.png", t.target_parsing)
    dm.save_keypoints(directory / "source_pose.txt", t.source_keypoints)
    dm.save_keypoints(directory / "target_pose.txt", t.target_keypoints)


def load_triplet(directory) -> Triplet:
    d = Path(directory)
    return Triplet(
        d.name,
        dm.load_image(d / "source.png"), dm.load_parsing(d / "source_parsing.png"),
        dm.load_keypoints(d / "source_pose.txt"),
        dm.load_image(d / "clothes.png"), (dm.load_mask(d / "clothes_mask.png") > 0.5).astype(np.float64),
        dm.load_image(d / "target.png"), dm.load_parsing(d / "target_parsing.png"),
        dm.load_keypoints(d / "target_pose.txt"),
    )


@dataclass(frozen=True)
class ManifestEntry:
    triplet_id: str
    split: str
    seed: int

    @property
    def path(self) -> str:
        return f"{self.split}/{self.triplet_id}"


def make_dataset(count: int, seed: int, resolution, root) -> list[ManifestEntry]:
    """Write ``count`` triplets under ``root`` and return the manifest entries.

    The last floor(count / 6) triplets form the test split.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    resolution = tuple(int(v) for v in resolution)
    root = Path(root)
    n_train, n_test = split_counts(count)
    entries = []
    for i, s in enumerate(triplet_seeds(count, seed)):
        entry = ManifestEntry(f"{i:05d}", "train" if i < n_train else "test", s)
        write_triplet(root / entry.path, make_triplet(s, resolution, entry.triplet_id))
        entries.append(entry)
    lines = [f"# resolution={resolution[0]}x{resolution[1]} count={count} seed={seed} "
             f"split=train:test=5:1 n_test=floor(count/6)={n_test} n_train={n_train}",
             "triplet_id\tsplit\tseed\tpath"]
    lines += [f"{e.triplet_id}\t{e.split}\t{e.seed}\t{e.path}" for e in entries]
    (root / "manifest.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return entries


def read_manifest(root) -> list[ManifestEntry]:
    path = Path(root) / "manifest.tsv"
    if not path.exists():
        raise FileNotFoundError(f"no manifest at {path}")
    entries = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line or line.startswith("#") or line.startswith("triplet_id\t"):
            continue
        tid, split, seed, _ = line.split("\t")
        entries.append(ManifestEntry(tid, split, int(seed)))
    return entries


def manifest_resolution(root) -> tuple[int, int]:
    first = (Path(root) / "manifest.tsv").read_text(encoding="utf-8").splitlines()[0]
    for token in first.lstrip("# ").split():
        if token.startswith("resolution="):
            h, w = token.split("=")[1].split("x")
            return int(h), int(w)
    raise ValueError("manifest header carries no resolution")


def load_split(root, split: str, limit: int | None = None) -> list[Triplet]:
    entries = [e for e in read_manifest(root) if e.split == split]
    if limit is not None:
        entries = entries[:limit]
    return [load_triplet(Path(root) / e.path) for e in entries]
