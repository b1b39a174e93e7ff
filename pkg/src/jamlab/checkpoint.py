"""Checkpoints as ``manifest.json`` plus one raw little-endian blob file.

The manifest lists every tensor with its name, shape, dtype and byte offset,
the model config, the schedule position and anything else the caller adds.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import torch

from .model import GFNet, ModelConfig
from .nn import AdamState

CHECKPOINT_VERSION = 1
BLOB_NAME = "tensors.bin"
MANIFEST_NAME = "manifest.json"

_DTYPES = {
    torch.float32: "<f4",
    torch.float64: "<f8",
    torch.int64: "<i8",
    torch.int32: "<i4",
}


class CheckpointError(Exception):
    pass


def _pack(tensors: dict[str, torch.Tensor], blob: bytearray) -> list[dict]:
    entries = []
    for name, t in tensors.items():
        if t.dtype not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {t.dtype} for {name}")
        arr = t.detach().cpu().contiguous().numpy().astype(_DTYPES[t.dtype], copy=False)
        entries.append({"name": name, "shape": list(arr.shape), "dtype": _DTYPES[t.dtype],
                        "offset": len(blob), "nbytes": arr.nbytes})
        blob.extend(arr.tobytes())
    return entries


def _unpack(entries: list[dict], blob: bytes) -> dict[str, torch.Tensor]:
    out = {}
    for e in entries:
        end = e["offset"] + e["nbytes"]
        if end > len(blob):
            raise CheckpointError(f"tensor {e['name']} runs past the end of the blob file")
        arr = np.frombuffer(blob, dtype=e["dtype"], count=int(np.prod(e["shape"], dtype=np.int64)),
                            offset=e["offset"]).reshape(e["shape"])
        out[e["name"]] = torch.from_numpy(arr.astype(arr.dtype.newbyteorder("="), copy=True))
    return out


def save_checkpoint(path: str | Path, model: GFNet, optimizer: AdamState | None = None,
                    schedule: dict | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    blob = bytearray()
    manifest = {
        "version": CHECKPOINT_VERSION,
        "model_config": model.cfg.to_dict(),
        "tensors": _pack(model.state_dict(), blob),
        "schedule": schedule or {},
        "stats_mean": model.stats_mean.tolist(),
        "stats_std": model.stats_std.tolist(),
        "extra": extra or {},
    }
    if optimizer is not None:
        manifest["optimizer"] = {
            "lr": optimizer.lr, "betas": list(optimizer.betas), "eps": optimizer.eps,
            "weight_decay": optimizer.weight_decay, "step": optimizer.step,
            "exp_avg": _pack({k: v for k, v in optimizer.exp_avg.items()}, blob),
            "exp_avg_sq": _pack({k: v for k, v in optimizer.exp_avg_sq.items()}, blob),
        }
    (path / BLOB_NAME).write_bytes(bytes(blob))
    (path / MANIFEST_NAME).write_text(json.dumps(manifest, indent=1, sort_keys=True))
    return path


def read_manifest(path: str | Path) -> dict:
    p = Path(path) / MANIFEST_NAME
    if not p.exists():
        raise CheckpointError(f"no checkpoint manifest at {p}")
    manifest = json.loads(p.read_text())
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"checkpoint version {manifest.get('version')} not supported")
    return manifest


def load_checkpoint(path: str | Path, with_optimizer: bool = False):
    """Return ``(model, manifest)`` or ``(model, manifest, optimizer)``."""
    path = Path(path)
    manifest = read_manifest(path)
    blob = (path / BLOB_NAME).read_bytes()
    model = GFNet(ModelConfig.from_dict(manifest["model_config"]))
    state = _unpack(manifest["tensors"], blob)
    missing = set(model.state_dict()) ^ set(state)
    if missing:
        raise CheckpointError(f"checkpoint and model config disagree on tensors: {sorted(missing)[:5]}")
    for name, ref in model.state_dict().items():
        if tuple(ref.shape) != tuple(state[name].shape):
            raise CheckpointError(f"shape mismatch for {name}: {tuple(state[name].shape)} vs {tuple(ref.shape)}")
    model.load_state_dict(state)
    model.eval()
    if not with_optimizer:
        return model, manifest
    o = manifest.get("optimizer")
    if o is None:
        raise CheckpointError("checkpoint has no optimizer state")
    opt = AdamState(lr=o["lr"], betas=tuple(o["betas"]), eps=o["eps"], weight_decay=o["weight_decay"],
                    step=o["step"], exp_avg=_unpack(o["exp_avg"], blob), exp_avg_sq=_unpack(o["exp_avg_sq"], blob))
    return model, manifest, opt


def checkpoint_hash(path: str | Path) -> str:
    """SHA-256 over the tensor blob; equal hashes mean bit-identical weights."""
    return hashlib.sha256((Path(path) / BLOB_NAME).read_bytes()).hexdigest()
