"""Quantitative metrics: SSIM against ground truth and a synthetic-domain Inception Score."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
from scipy.signal import correlate2d

from .checkpoint import Checkpoint, load_checkpoint, module_blocks, save_checkpoint
from .synthetic import PATTERNS, JOINT_LIMITS, ClothesSpec, PersonSpec, PoseSpec, pose_fits, render_person

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])   # ITU-R BT.601
DEFAULT_IS_SPLITS = 10


@dataclass(frozen=True)
class SSIMConfig:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def kernel(self) -> np.ndarray:
        r = np.arange(self.window) - (self.window - 1) / 2.0
        g = np.exp(-r ** 2 / (2.0 * self.sigma ** 2))
        k = np.outer(g, g)
        return k / k.sum()

    def describe(self) -> str:
        return (f"ssim=luma(ITU-R 601) window=gaussian{self.window}x{self.window} sigma={self.sigma} "
                f"K1={self.k1} K2={self.k2} L={self.dynamic_range}")


def to_luma(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image
    if image.ndim == 3 and image.shape[-1] == 3:
        return image @ LUMA_WEIGHTS
    raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {image.shape}")


def ssim_map(a: np.ndarray, b: np.ndarray, config: SSIMConfig = SSIMConfig()) -> np.ndarray:
    """Local SSIM at every valid window position."""
    if np.shape(a) != np.shape(b):
        raise ValueError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")
    x, y = to_luma(a), to_luma(b)
    if x.shape[0] < config.window or x.shape[1] < config.window:
        raise ValueError(f"image {x.shape} smaller than the {config.window}x{config.window} window")
    k = config.kernel()
    filt = lambda z: correlate2d(z, k, mode="valid")  # noqa: E731
    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    c1 = (config.k1 * config.dynamic_range) ** 2
    c2 = (config.k2 * config.dynamic_range) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim(a: np.ndarray, b: np.ndarray, config: SSIMConfig = SSIMConfig()) -> float:
    """Mean local structural similarity of two images in [0, 1], compared on luma."""
    return float(ssim_map(a, b, config).mean())


def inception_score_from_posteriors(posteriors: np.ndarray, splits: int = DEFAULT_IS_SPLITS):
    """exp(mean KL(p(y|x) || p(y))) per split; returns (mean, std) over splits."""
    p = np.asarray(posteriors, dtype=np.float64)
    if p.ndim != 2:
        raise ValueError("posteriors must be (N, classes)")
    if splits < 1:
        raise ValueError("splits must be positive")
    if len(p) < 2 * splits:
        raise ValueError(f"need at least {2 * splits} images for {splits} splits, got {len(p)}")
    scores = []
    for part in np.array_split(p, splits):
        # mean as an offset from the first row keeps identical rows exact
        marginal = part[0] + (part - part[0]).mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(part > 0, part * (np.log(part) - np.log(marginal)), 0.0)
        scores.append(math.exp(terms.sum(axis=1).mean()))
    return float(np.mean(scores)), float(np.std(scores))


def inception_score(images, classifier: "ToyClassifier", splits: int = DEFAULT_IS_SPLITS):
    """IS of a list of (H, W, 3) images under the frozen toy classifier."""
    images = list(images)
    if len(images) < 2 * splits:
        raise ValueError(f"need at least {2 * splits} images for {splits} splits, got {len(images)}")
    return inception_score_from_posteriors(classifier.posteriors(images), splits)


# ---------------------------------------------------------------------------
# toy classifier

NUM_POSE_BUCKETS = 3
NUM_CLASSES = len(PATTERNS) * NUM_POSE_BUCKETS
SHOULDER_JOINTS = (2, 4)


def pose_bucket(pose: PoseSpec) -> int:
    """Bucket of the mean shoulder raise, split evenly over its range."""
    lo, hi = JOINT_LIMITS[SHOULDER_JOINTS[0]]
    raise_ = np.mean([pose.angles[j] for j in SHOULDER_JOINTS])
    return int(min(NUM_POSE_BUCKETS - 1, (raise_ - lo) / (hi - lo) * NUM_POSE_BUCKETS))


def class_index(clothes: ClothesSpec, pose: PoseSpec) -> int:
    return PATTERNS.index(clothes.pattern) * NUM_POSE_BUCKETS + pose_bucket(pose)


class ToyClassifier(nn.Module):
    """Small conv net over clothes-pattern x pose-bucket categories."""

    def __init__(self, num_classes: int = NUM_CLASSES, width: int = 16):
        super().__init__()
        layers, cin = [], 3
        for c in (width, 2 * width, 4 * width):
            layers += [nn.Conv2d(cin, c, 3, stride=2, padding=1), nn.ReLU(inplace=True)]
            cin = c
        self.features = nn.Sequential(*layers)
        self.head = nn.Linear(cin, num_classes)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x).mean(dim=(2, 3)))

    @torch.no_grad()
    def posteriors(self, images) -> np.ndarray:
        self.eval()
        x = torch.from_numpy(np.stack([np.moveaxis(np.asarray(i, np.float32), -1, 0) for i in images]))
        return torch.softmax(self(x).double(), dim=1).numpy()


def toy_classifier_data(n: int, resolution, seed: int):
    """Freshly rendered people with their class labels."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    while len(images) < n:
        person = PersonSpec.sample(rng)
        clothes = ClothesSpec.sample(rng)
        pose = PoseSpec.sample(rng)
        if not pose_fits(person, pose, resolution):
            continue
        images.append(render_person(person, clothes, pose, resolution)[0])
        labels.append(class_index(clothes, pose))
    return np.stack(images), np.array(labels)


def train_toy_classifier(resolution, n_images: int = 900, epochs: int = 30, seed: int = 0,
                         batch_size: int = 32) -> ToyClassifier:
    images, labels = toy_classifier_data(n_images, resolution, seed)
    x = torch.from_numpy(np.moveaxis(images, -1, 1).astype(np.float32))
    y = torch.from_numpy(labels)
    torch.manual_seed(seed)
    model = ToyClassifier()
    opt = torch.optim.Adam(model.parameters(), lr=2e-3)
    gen = torch.Generator().manual_seed(seed)
    model.train()
    for _ in range(epochs):
        perm = torch.randperm(len(x), generator=gen)
        for i in range(0, len(x), batch_size):
            idx = perm[i:i + batch_size]
            loss = nn.functional.cross_entropy(model(x[idx]), y[idx])
            opt.zero_grad(set_to_none=True)
            loss.backward()
            opt.step()
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


def save_classifier(path, model: ToyClassifier, resolution) -> None:
    save_checkpoint(path, Checkpoint("classifier", 0, module_blocks("classifier", model),
                                     {"resolution": f"{resolution[0]}x{resolution[1]}"}))


def load_classifier(path) -> ToyClassifier:
    ckpt = load_checkpoint(path)
    model = ToyClassifier()
    model.load_state_dict(ckpt.state_dict("classifier"))
    model.eval()
    for p in model.parameters():
        p.requires_grad_(False)
    return model


# ---------------------------------------------------------------------------
# test-set evaluation

REPORT_COLUMNS = ("model", "ssim_mean", "ssim_std", "is_mean", "is_std", "n")
VARIANTS = ("copy_source", "coarse", "full")


@dataclass
class ReportRow:
    model: str
    ssim_mean: float
    ssim_std: float
    is_mean: float
    is_std: float
    n: int

    def cells(self) -> list[str]:
        return [self.model] + [f"{v:.6f}" for v in (self.ssim_mean, self.ssim_std, self.is_mean, self.is_std)] \
            + [str(self.n)]


def batch_ssim(outputs, targets, config: SSIMConfig = SSIMConfig(), workers: int = 4) -> np.ndarray:
    """SSIM per pair; computed concurrently, returned in input order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return np.array(list(pool.map(lambda ab: ssim(ab[0], ab[1], config), zip(outputs, targets))))


def shuffled_requests(triplets):
    """Each person wears the next triplet's clothes in the pose of the one after."""
    from .training import triplet_request
    n = len(triplets)
    return [triplet_request(t, clothes_from=triplets[(i + 1) % n], pose_from=triplets[(i + 2) % n].target_keypoints)
            for i, t in enumerate(triplets)]


def evaluate_testset(pipeline, triplets, classifier: ToyClassifier, variants=VARIANTS,
                     splits: int = DEFAULT_IS_SPLITS, config: SSIMConfig = SSIMConfig()):
    """SSIM on paired test triplets and IS on shuffled-condition outputs.

    Returns (rows, splits_used); IS splits are capped at n // 2 so every split
    holds at least two images.
    """
    from .training import run_pipeline, triplet_request
    if not triplets:
        raise ValueError("empty test split")
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ValueError(f"unknown model variants: {sorted(unknown)}")
    splits = max(1, min(splits, len(triplets) // 2))
    targets = [t.target_image for t in triplets]
    outputs = {}
    if any(v != "copy_source" for v in variants):
        paired = run_pipeline([triplet_request(t) for t in triplets], pipeline)
        shuffled = run_pipeline(shuffled_requests(triplets), pipeline)
        outputs["full"] = ([r["final"] for r in paired], [r["final"] for r in shuffled])
        outputs["coarse"] = ([r["coarse"] for r in paired], [r["coarse"] for r in shuffled])
    sources = [t.source_image for t in triplets]
    outputs["copy_source"] = (sources, sources)
    rows = []
    for v in variants:
        paired_out, shuffled_out = outputs[v]
        s = batch_ssim(paired_out, targets, config)
        is_mean, is_std = inception_score(shuffled_out, classifier, splits) if len(triplets) >= 2 else (1.0, 0.0)
        rows.append(ReportRow(v, float(s.mean()), float(s.std()), is_mean, is_std, len(triplets)))
    return rows, splits


def write_report(path, rows, splits: int, config: SSIMConfig = SSIMConfig()) -> None:
    lines = [f"# {config.describe()} is_splits={splits} is_classifier=toy({NUM_CLASSES} classes)",
             "\t".join(REPORT_COLUMNS)]
    lines += ["\t".join(r.cells()) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
