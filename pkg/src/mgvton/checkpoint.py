"""Versioned binary checkpoint container.

Layout::

    b"MGVTCKPT" | uint32 version | uint32 header length | JSON header | payload

The header lists every named block (dtype, shape, byte offset) together with
the stage id, step count, config snapshot and a CRC-32 of the payload. Blocks
are raw little-endian arrays, so save -> load is bit-exact.
"""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

MAGIC = b"MGVTCKPT"
VERSION = 1


class CheckpointError(RuntimeError):
    pass


@dataclass
class Checkpoint:
    stage: str
    step: int
    blocks: dict                     # name -> np.ndarray
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    version: int = VERSION

    def state_dict(self, prefix: str) -> dict:
        """Tensors for one model, with ``prefix.`` stripped from their names."""
        p = prefix + "."
        return {k[len(p):]: torch.from_numpy(v.copy()) for k, v in self.blocks.items() if k.startswith(p)}


def _le(arr: np.ndarray) -> np.ndarray:
    return arr.astype(arr.dtype.newbyteorder("<"), copy=False)


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    entries, chunks, offset = [], [], 0
    for name in sorted(ckpt.blocks):
        arr = np.ascontiguousarray(_le(np.asarray(ckpt.blocks[name])))
        raw = arr.tobytes()
        entries.append({"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = json.dumps({
        "stage": ckpt.stage, "step": int(ckpt.step), "config": ckpt.config, "extra": ckpt.extra,
        "blocks": entries, "crc32": zlib.crc32(payload),
    }, sort_keys=True).encode("utf-8")
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", ckpt.version, len(header)) + header + payload)
    tmp.replace(path)


def load_checkpoint(path) -> Checkpoint:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint ({exc})") from exc
    if len(blob) < 16 or blob[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    version, hlen = struct.unpack("<II", blob[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupted header") from exc
    payload = blob[16 + hlen:]
    if zlib.crc32(payload) != header.get("crc32"):
        raise CheckpointError(f"{path}: payload checksum mismatch (corrupted checkpoint)")
    blocks = {}
    for e in header["blocks"]:
        raw = payload[e["offset"]:e["offset"] + e["nbytes"]]
        blocks[e["name"]] = np.frombuffer(raw, dtype=np.dtype(e["dtype"])).reshape(e["shape"]).copy()
    return Checkpoint(header["stage"], header["step"], blocks, header["config"], header.get("extra", {}),
                      version)


def module_blocks(prefix: str, module: torch.nn.Module) -> dict:
    return {f"{prefix}.{k}": v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


def optimizer_blocks(prefix: str, optimizer: torch.optim.Optimizer) -> dict:
    blocks = {}
    state = optimizer.state_dict()["state"]
    for idx, st in state.items():
        for key, val in st.items():
            arr = val.detach().cpu().numpy() if isinstance(val, torch.Tensor) else np.asarray(val)
            blocks[f"{prefix}.{idx}.{key}"] = arr.copy()
    return blocks


def restore_optimizer(prefix: str, optimizer: torch.optim.Optimizer, ckpt: Checkpoint) -> None:
    sd = optimizer.state_dict()
    state = {}
    p = prefix + "."
    for name, arr in ckpt.blocks.items():
        if not name.startswith(p):
            continue
        idx, key = name[len(p):].split(".", 1)
        state.setdefault(int(idx), {})[key] = torch.from_numpy(arr.copy())
    sd["state"] = state
    optimizer.load_state_dict(sd)
