"""Stage orchestration: configuration, data preparation, training loops and inference.

Stages train in the fixed order parsing -> geo -> warp -> refine. Each stage
reads only the checkpoints of earlier stages.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from . import data_model as dm
from . import tps
from .checkpoint import (Checkpoint, CheckpointError, load_checkpoint, module_blocks, optimizer_blocks,
                         save_checkpoint)
from .matcher import MatcherModel, geometric_matching_loss_torch
from .networks import PerceptualExtractor
from .parsing_gan import (ParsingBatch, ParsingLossWeights, generate_parsing, make_parsing_discriminator,
                          make_parsing_generator, parsing_gan_loss)
from .render import RenderGenerator, RenderLossWeights, compose, render_loss
from .synthetic import Triplet, load_split
from .warp_gan import WarpGANLossWeights, WarpGenerator, make_warp_discriminator, synthesize_coarse, warp_gan_losses

log = logging.getLogger(__name__)

STAGES = ("parsing", "geo", "warp", "refine")
PREREQUISITES = {"parsing": (), "geo": (), "warp": ("parsing", "geo"), "refine": ("parsing", "geo", "warp")}
SEED_OFFSETS = {"parsing": 1000, "geo": 2000, "warp": 3000, "refine": 4000, "classifier": 5000}

PRESETS = {
    "paper": {"resolution": "256x192", "batch_size": 40, "width_factor": 1, "lr": 2e-4,
              "beta1": 0.5, "beta2": 0.999,
              "epochs": {"parsing": 200, "warp": 15, "refine": 5, "geo": 35}},
    "desk": {"resolution": "64x48", "batch_size": 8, "width_factor": 8, "lr": 2e-4,
             "beta1": 0.5, "beta2": 0.999, "skips": True,
             "epochs": {"parsing": 150, "geo": 50, "warp": 150, "refine": 60}},
}


class PrerequisiteError(RuntimeError):
    pass


class NonFiniteLossError(RuntimeError):
    pass


def parse_resolution(text) -> tuple[int, int]:
    if isinstance(text, (tuple, list)):
        return int(text[0]), int(text[1])
    h, w = str(text).lower().split("x")
    return int(h), int(w)


@dataclass
class TrainConfig:
    stage: str = "parsing"
    preset: str = "desk"
    epochs: int = -1                  # -1: take the preset's value for the stage
    batch_size: int = 8
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    width_factor: int = 8
    resolution: str = "64x48"
    seed: int = 0
    dataset: str = ""
    n_train: int = 0                  # 0: every training triplet
    norm: str = "batch"
    skips: bool = False
    n_blocks: int = 9
    render_down: int = 2
    render_blocks: int = 4
    grid_size: int = 5
    gan_mode: str = "lsgan"
    w_parse_adv: float = 1.0
    w_parse_l1: float = 1.0
    w_parse_ce: float = 1.0
    lambda_adv: float = 1.0
    lambda_perceptual: float = 10.0
    lambda_feature: float = 10.0
    lambda_l1: float = 10.0
    mu_perceptual: float = 1.0
    mu_mask: float = 0.1
    mask_toward: float = 1.0
    extractor_seed: int = 1234
    pixel_prewarp: bool = True
    feature_warp: bool = True
    self_pairs: bool = True

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.preset not in PRESETS:
            raise ValueError(f"unknown preset {self.preset!r}")
        parse_resolution(self.resolution)

    @property
    def shape(self) -> tuple[int, int]:
        return parse_resolution(self.resolution)

    @property
    def stage_epochs(self) -> int:
        return self.epochs if self.epochs >= 0 else PRESETS[self.preset]["epochs"][self.stage]

    @classmethod
    def from_preset(cls, preset: str = "desk", **overrides) -> "TrainConfig":
        p = PRESETS[preset]
        base = {k: v for k, v in p.items() if k != "epochs"}
        base.update(overrides)
        return cls(preset=preset, **base)

    @classmethod
    def from_strings(cls, values: dict) -> "TrainConfig":
        """Build from string key/values (config file or CLI); unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        unknown = set(values) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        preset = values.get("preset", "desk")
        typed = {}
        for k, v in values.items():
            if k == "preset":
                continue
            typed[k] = _coerce(known[k].type, v)
        return cls.from_preset(preset, **typed)

    def snapshot(self) -> dict:
        return dataclasses.asdict(self)

    def sub_seed(self, stage: str | None = None) -> int:
        return self.seed + SEED_OFFSETS[stage or self.stage]


def _coerce(type_name, value):
    if not isinstance(value, str):
        return value
    t = type_name if isinstance(type_name, str) else type_name.__name__
    if t == "bool":
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if t == "int":
        return int(value)
    if t == "float":
        return float(value)
    return value


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for n, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        values[k.replace("-", "_")] = v
    return values


def config_from_checkpoint(ckpt: Checkpoint) -> TrainConfig:
    snap = dict(ckpt.config)
    known = {f.name for f in fields(TrainConfig)}
    return TrainConfig(**{k: v for k, v in snap.items() if k in known})


# ---------------------------------------------------------------------------
# data

def body_shape_torch(one_hot: torch.Tensor, grid=dm.BODY_SHAPE_GRID) -> torch.Tensor:
    """Torch counterpart of ``data_model.body_shape`` for (B, 20, H, W) one-hot maps."""
    union = one_hot[:, list(dm.BODY_LABELS)].sum(1, keepdim=True)
    H, W = union.shape[2:]
    if H % grid[0] == 0 and W % grid[1] == 0:
        coarse = F.avg_pool2d(union, (H // grid[0], W // grid[1]))
    else:
        coarse = F.adaptive_avg_pool2d(union, grid)
    return F.interpolate(coarse, size=(H, W), mode="bilinear", align_corners=False).clamp(0.0, 1.0)


def _chw(image: np.ndarray) -> np.ndarray:
    return np.moveaxis(image, -1, 0)


def pair_sample(src_image, src_parsing, clothes_image, clothes_mask, target_keypoints,
                target_image=None, target_parsing=None) -> dict:
    """Numpy conditioning tensors for one (reference person -> target pose) request."""
    H, W = src_parsing.shape
    sample = {
        "masks": dm.extract_body_masks(src_parsing).stack(),
        "clothes": _chw(clothes_image),
        "clothes_mask": clothes_mask[None],
        "pose": dm.encode_pose_heatmap(target_keypoints, H, W),
        "src_onehot": dm.one_hot(src_parsing),
        "declothed": _chw(dm.remove_clothes(src_image, src_parsing)),
        "src_image": _chw(src_image),
    }
    if target_image is not None:
        sample.update({
            "target": _chw(target_image),
            "labels": target_parsing.astype(np.int64),
            "tgt_onehot": dm.one_hot(target_parsing),
            "tgt_clothes_mask": dm.clothes_mask_from_parsing(target_parsing)[None],
            "tgt_body": dm.body_shape(target_parsing)[None],
        })
    return sample


def triplet_pairs(t: Triplet, self_pairs: bool = True) -> list[dict]:
    views = [(t.source_image, t.source_parsing, t.source_keypoints),
             (t.target_image, t.target_parsing, t.target_keypoints)]
    order = [(0, 1), (1, 0)] + ([(0, 0), (1, 1)] if self_pairs else [])
    return [pair_sample(views[a][0], views[a][1], t.clothes_image, t.clothes_mask, views[b][2],
                        views[b][0], views[b][1]) for a, b in order]


def collate(samples: list[dict], dtype=torch.float32) -> dict:
    out = {}
    for k in samples[0]:
        arr = np.stack([s[k] for s in samples])
        out[k] = torch.from_numpy(arr) if k == "labels" else torch.from_numpy(arr).to(dtype)
    return out


def prepare_pairs(triplets: list[Triplet], self_pairs: bool = True, dtype=torch.float32) -> dict:
    samples = [s for t in triplets for s in triplet_pairs(t, self_pairs)]
    return collate(samples, dtype)


def _index(data: dict, idx) -> dict:
    return {k: v[idx] for k, v in data.items()}


def batches(n: int, batch_size: int, epochs: int, generator: torch.Generator):
    for _ in range(epochs):
        perm = torch.randperm(n, generator=generator)
        for i in range(0, n, batch_size):
            yield perm[i:i + batch_size]


# ---------------------------------------------------------------------------
# models

def build_stage_models(stage: str, cfg: TrainConfig) -> dict:
    """Freshly initialised trainable models of ``stage``, seeded from the config."""
    torch.manual_seed(cfg.sub_seed(stage))
    H, W = cfg.shape
    wf = cfg.width_factor
    if stage == "parsing":
        return {"generator": make_parsing_generator(wf, cfg.norm, cfg.skips, cfg.n_blocks),
                "discriminator": make_parsing_discriminator(wf)}
    if stage == "geo":
        return {"clothes_matcher": MatcherModel(H, W, 1, 1, wf, cfg.grid_size),
                "parsing_matcher": MatcherModel(H, W, dm.NUM_LABELS, dm.NUM_LABELS, wf, cfg.grid_size)}
    if stage == "warp":
        return {"generator": WarpGenerator(wf, cfg.norm, cfg.skips, cfg.n_blocks, cfg.feature_warp),
                "discriminator": make_warp_discriminator(wf)}
    if stage == "refine":
        return {"generator": RenderGenerator(wf, cfg.norm, cfg.skips, cfg.render_down, cfg.render_blocks)}
    raise ValueError(f"unknown stage {stage!r}")


def make_extractor(cfg: TrainConfig) -> PerceptualExtractor:
    return PerceptualExtractor.random(cfg.extractor_seed, cfg.width_factor)


def checkpoint_path(directory, stage: str) -> Path:
    return Path(directory) / f"{stage}.ckpt"


def load_stage(directory, stage: str, resolution=None) -> tuple[dict, TrainConfig, Checkpoint]:
    path = checkpoint_path(directory, stage)
    if not path.exists():
        raise PrerequisiteError(f"missing {stage} checkpoint: {path}")
    ckpt = load_checkpoint(path)
    if ckpt.stage != stage:
        raise CheckpointError(f"{path}: holds stage {ckpt.stage!r}, expected {stage!r}")
    cfg = config_from_checkpoint(ckpt)
    if resolution is not None and cfg.shape != tuple(resolution):
        raise CheckpointError(f"{path}: resolution {cfg.resolution} does not match "
                              f"{resolution[0]}x{resolution[1]}")
    models = build_stage_models(stage, cfg)
    for name, model in models.items():
        try:
            model.load_state_dict(ckpt.state_dict(name))
        except RuntimeError as exc:
            raise CheckpointError(f"{path}: incompatible parameters for {name} ({exc})") from exc
        model.eval()
    return models, cfg, ckpt


class Pipeline:
    """Frozen models of the stages trained so far, chained as at inference time."""

    def __init__(self, models: dict, configs: dict):
        self.models = models        # stage -> {name: module}
        self.configs = configs      # stage -> TrainConfig

    @classmethod
    def load(cls, directory, stages=STAGES, resolution=None) -> "Pipeline":
        missing = [s for s in stages if not checkpoint_path(directory, s).exists()]
        if missing:
            raise PrerequisiteError(f"missing checkpoints in {directory} for stage(s): {', '.join(missing)}")
        models, configs = {}, {}
        for stage in stages:
            m, cfg, _ = load_stage(directory, stage, resolution)
            if resolution is None:
                resolution = cfg.shape
            models[stage], configs[stage] = m, cfg
        return cls(models, configs)

    @property
    def resolution(self):
        return next(iter(self.configs.values())).shape

    @torch.no_grad()
    def run(self, data: dict, upto: str = "refine") -> dict:
        """Forward the chain on collated inputs up to (and including) stage ``upto``."""
        out = {}
        stop = STAGES.index(upto)
        g = self.models["parsing"]["generator"]
        logits, probs = generate_parsing(g, data["masks"], data["clothes"], data["pose"])
        labels = probs.argmax(1)
        onehot = F.one_hot(labels, dm.NUM_LABELS).permute(0, 3, 1, 2).to(probs.dtype)
        out.update(parsing_probs=probs, parsing=labels, parsing_onehot=onehot)
        if stop < STAGES.index("geo"):
            return out
        geo = self.models["geo"]
        cm = geo["clothes_matcher"]
        body = body_shape_torch(onehot)
        affine, weights = cm(data["clothes_mask"], body)
        grid = cm.grid(affine, weights)
        # only the garment travels; the product backdrop would otherwise leak into the composite
        out["warped_clothes"] = tps.torch_warp(data["clothes"] * data["clothes_mask"], grid)
        out["warped_clothes_mask"] = tps.torch_warp(data["clothes_mask"], grid)
        pm = geo["parsing_matcher"]
        pa, pw = pm(data["src_onehot"], onehot)
        out["parsing_transform"] = (pa, pw, pm.control_points.to(pa.dtype))
        out["declothed_warped"] = tps.torch_warp(data["declothed"], pm.grid(pa, pw))
        if stop < STAGES.index("warp"):
            return out
        wcfg = self.configs["warp"]
        declothed = out["declothed_warped"] if wcfg.pixel_prewarp else data["declothed"]
        out["coarse"] = synthesize_coarse(self.models["warp"]["generator"], out["warped_clothes"], declothed,
                                          data["pose"], onehot, data["declothed"], out["parsing_transform"])
        if stop < STAGES.index("refine"):
            return out
        mask = self.models["refine"]["generator"](out["warped_clothes"], out["coarse"], data["pose"])
        out["mask"] = mask
        out["final"] = compose(out["warped_clothes"], out["coarse"], mask)
        return out


# ---------------------------------------------------------------------------
# training

@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: list = field(default_factory=list)   # (step, component, value)


def write_metrics(path, metrics) -> None:
    lines = ["step\tcomponent\tvalue"] + [f"{s}\t{name}\t{value:.9g}" for s, name, value in metrics]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _check_finite(stage, step, components, batch, dump_dir):
    bad = [k for k, v in components.items() if not math.isfinite(float(v))]
    if not bad:
        return
    msg = f"{stage} step {step}: non-finite loss components {bad}"
    if dump_dir is not None:
        path = Path(dump_dir) / f"nonfinite_{stage}_step{step}.npz"
        np.savez(path, **{k: v.detach().cpu().numpy() for k, v in batch.items()})
        msg += f"; offending batch written to {path}"
    raise NonFiniteLossError(msg)


def _adam(params, cfg: TrainConfig):
    return torch.optim.Adam(params, lr=cfg.lr, betas=(cfg.beta1, cfg.beta2))


def train_stage(cfg: TrainConfig, triplets: list[Triplet] | None = None, checkpoint_dir=None,
                dump_dir=None) -> TrainResult:
    """Train one stage and return its checkpoint and per-step metrics.

    ``checkpoint_dir`` must hold the checkpoints of the stage's prerequisites;
    the new checkpoint is written there as ``<stage>.ckpt``.
    """
    stage = cfg.stage
    if triplets is None:
        if not cfg.dataset:
            raise ValueError("no dataset given")
        triplets = load_split(cfg.dataset, "train", cfg.n_train or None)
    elif cfg.n_train:
        triplets = triplets[:cfg.n_train]
    if not triplets:
        raise ValueError("empty training set")
    if tuple(triplets[0].resolution) != cfg.shape:
        raise ValueError(f"dataset resolution {triplets[0].resolution} differs from config {cfg.resolution}")
    for pre in PREREQUISITES[stage]:
        if checkpoint_dir is None or not checkpoint_path(checkpoint_dir, pre).exists():
            raise PrerequisiteError(f"stage {stage!r} needs the {pre!r} checkpoint")

    data = prepare_pairs(triplets, cfg.self_pairs)
    if PREREQUISITES[stage]:
        upstream = Pipeline.load(checkpoint_dir, PREREQUISITES[stage], cfg.shape)
        data.update(upstream.run(data, upto=PREREQUISITES[stage][-1]))
        data.pop("parsing_transform", None)
        if stage == "warp":
            pm = upstream.models["geo"]["parsing_matcher"]
            with torch.no_grad():
                pa, pw = pm(data["src_onehot"], data["parsing_onehot"])
            data["transform_affine"], data["transform_weights"] = pa, pw
            control_points = pm.control_points.float()

    models = build_stage_models(stage, cfg)
    for m in models.values():
        m.train()
    opts = {name: _adam(m.parameters(), cfg) for name, m in models.items()}
    extractor = make_extractor(cfg) if stage in ("warp", "refine") else None
    gen = torch.Generator().manual_seed(cfg.sub_seed())
    metrics = []
    n = len(data["pose"])
    step = 0
    for idx in batches(n, cfg.batch_size, cfg.stage_epochs, gen):
        b = _index(data, idx)
        if stage == "parsing":
            comps = _parsing_step(models, opts, b, cfg)
        elif stage == "geo":
            comps = _geo_step(models, opts, b)
        elif stage == "warp":
            b["transform"] = (b.pop("transform_affine"), b.pop("transform_weights"), control_points)
            comps = _warp_step(models, opts, b, cfg, extractor)
        else:
            comps = _refine_step(models, opts, b, cfg, extractor)
        step += 1
        _check_finite(stage, step, comps, {k: v for k, v in b.items() if isinstance(v, torch.Tensor)}, dump_dir)
        metrics += [(step, k, float(v)) for k, v in comps.items()]

    blocks = {}
    for name, m in models.items():
        m.eval()
        blocks.update(module_blocks(name, m))
        blocks.update(optimizer_blocks(f"optimizer.{name}", opts[name]))
    ckpt = Checkpoint(stage, step, blocks, cfg.snapshot())
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
        save_checkpoint(checkpoint_path(checkpoint_dir, stage), ckpt)
    return TrainResult(ckpt, metrics)


def _gan_update(g_loss, d_loss, g_opt, d_opt):
    g_opt.zero_grad(set_to_none=True)
    d_opt.zero_grad(set_to_none=True)
    g_loss.backward()
    g_opt.step()
    d_opt.zero_grad(set_to_none=True)
    d_loss.backward()
    d_opt.step()


def _parsing_step(models, opts, b, cfg):
    g, d = models["generator"], models["discriminator"]
    batch = ParsingBatch(b["masks"], b["clothes"], b["pose"], b["labels"])
    out = generate_parsing(g, batch.masks, batch.clothes, batch.pose)
    weights = ParsingLossWeights(cfg.w_parse_adv, cfg.w_parse_l1, cfg.w_parse_ce)
    g_loss, d_loss, comps = parsing_gan_loss(out, d, batch, weights, cfg.gan_mode)
    _gan_update(g_loss, d_loss, opts["generator"], opts["discriminator"])
    with torch.no_grad():
        comps["accuracy"] = (out[1].argmax(1) == batch.labels).double().mean()
    return {k: v.detach() for k, v in comps.items()}


def parsing_matching_loss(model: MatcherModel, affine, weights, src_onehot, tgt_onehot):
    """Per-pixel L1 between warped and target one-hot parsings (summed over labels)."""
    return geometric_matching_loss_torch(model, affine, weights, src_onehot, tgt_onehot) * src_onehot.shape[1]


def _geo_step(models, opts, b):
    cm, pm = models["clothes_matcher"], models["parsing_matcher"]
    a, w = cm(b["clothes_mask"], b["tgt_body"])
    loss_c = geometric_matching_loss_torch(cm, a, w, b["clothes_mask"], b["tgt_clothes_mask"])
    opts["clothes_matcher"].zero_grad(set_to_none=True)
    loss_c.backward()
    opts["clothes_matcher"].step()
    a, w = pm(b["src_onehot"], b["tgt_onehot"])
    loss_p = parsing_matching_loss(pm, a, w, b["src_onehot"], b["tgt_onehot"])
    opts["parsing_matcher"].zero_grad(set_to_none=True)
    loss_p.backward()
    opts["parsing_matcher"].step()
    return {"clothes": loss_c.detach(), "parsing": loss_p.detach()}


def warp_condition(b) -> torch.Tensor:
    return torch.cat([b["pose"], b["parsing_onehot"]], dim=1)


def _warp_step(models, opts, b, cfg, extractor):
    g, d = models["generator"], models["discriminator"]
    declothed = b["declothed_warped"] if cfg.pixel_prewarp else b["declothed"]
    coarse = synthesize_coarse(g, b["warped_clothes"], declothed, b["pose"], b["parsing_onehot"],
                               b["declothed"], b["transform"])
    weights = WarpGANLossWeights(cfg.lambda_adv, cfg.lambda_perceptual, cfg.lambda_feature, cfg.lambda_l1)
    g_loss, d_loss, comps = warp_gan_losses(coarse, b["target"], warp_condition(b), d, extractor,
                                            weights, cfg.gan_mode)
    _gan_update(g_loss, d_loss, opts["generator"], opts["discriminator"])
    comps["total"] = g_loss
    return {k: v.detach() for k, v in comps.items()}


def _refine_step(models, opts, b, cfg, extractor):
    g = models["generator"]
    mask = g(b["warped_clothes"], b["coarse"], b["pose"])
    final = compose(b["warped_clothes"], b["coarse"], mask)
    weights = RenderLossWeights(cfg.mu_perceptual, cfg.mu_mask, cfg.mask_toward)
    total, comps = render_loss(final, b["target"], mask, weights, extractor)
    opts["generator"].zero_grad(set_to_none=True)
    total.backward()
    opts["generator"].step()
    comps["total"] = total
    return {k: v.detach() for k, v in comps.items()}


def train_all(cfg: TrainConfig, triplets: list[Triplet], checkpoint_dir, stages=STAGES) -> dict:
    """Train the stages in dependency order; returns stage -> TrainResult."""
    results = {}
    for stage in stages:
        stage_cfg = dataclasses.replace(cfg, stage=stage)
        log.info("training stage %s for %d epochs", stage, stage_cfg.stage_epochs)
        results[stage] = train_stage(stage_cfg, triplets, checkpoint_dir)
        write_metrics(Path(checkpoint_dir) / f"{stage}_metrics.tsv", results[stage].metrics)
    return results


# ---------------------------------------------------------------------------
# inference

def run_pipeline(requests, checkpoints) -> list[dict]:
    """Run the full chain for each request.

    A request is a dict with ``person_image``, ``person_parsing``,
    ``clothes_image``, ``clothes_mask`` and ``target_keypoints`` (numpy).
    ``checkpoints`` is a directory or a loaded :class:`Pipeline`. Results come
    back in request order, each with the final image and the intermediates
    (parsing, warped_clothes, coarse, mask) as numpy arrays.
    """
    single = isinstance(requests, dict)
    requests = [requests] if single else list(requests)
    pipe = checkpoints if isinstance(checkpoints, Pipeline) else Pipeline.load(checkpoints)
    H, W = pipe.resolution
    samples = []
    for r in requests:
        if tuple(r["person_parsing"].shape) != (H, W):
            raise ValueError(f"request resolution {r['person_parsing'].shape} differs from checkpoints {H}x{W}")
        samples.append(pair_sample(r["person_image"], r["person_parsing"], r["clothes_image"],
                                   r["clothes_mask"], r["target_keypoints"]))
    data = collate(samples)
    out = pipe.run(data)
    results = []
    for i in range(len(requests)):
        results.append({
            "final": out["final"][i].permute(1, 2, 0).numpy().astype(np.float64),
            "parsing": out["parsing"][i].numpy().astype(np.uint8),
            "warped_clothes": out["warped_clothes"][i].permute(1, 2, 0).numpy().astype(np.float64),
            "coarse": out["coarse"][i].permute(1, 2, 0).numpy().astype(np.float64),
            "mask": out["mask"][i, 0].numpy().astype(np.float64),
        })
    return results[0] if single else results


def triplet_request(t: Triplet, clothes_from: Triplet | None = None, pose_from=None) -> dict:
    c = clothes_from or t
    return {"person_image": t.source_image, "person_parsing": t.source_parsing,
            "clothes_image": c.clothes_image, "clothes_mask": c.clothes_mask,
            "target_keypoints": t.target_keypoints if pose_from is None else pose_from}
