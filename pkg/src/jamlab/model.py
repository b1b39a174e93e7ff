"""Reduced JSR-GFNet: complex IQ encoder, MBConv spectrogram encoder and the dual-gate fusion."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import torch
from torch import nn

from .nn import (
    ComplexBatchNorm1d,
    ComplexConv1d,
    ComplexResBlock,
    ComplexTensor,
    ConvBNAct,
    MBConv,
    crelu,
)

FUSION_DIM = 256
N_STATS = 6


class NonFiniteActivation(FloatingPointError):
    pass


@dataclass
class ModelConfig:
    n_classes: int = 21
    iq_feature_dim: int = 128
    iq_widths: tuple[int, ...] = (16, 32, 64)  # first three stages; the fourth is iq_feature_dim
    iq_blocks: tuple[int, ...] = (1, 1, 1, 1)
    iq_stem_kernel: int = 32
    iq_stem_stride: int = 16
    iq_kernel: int = 3
    stft_feature_dim: int = 160
    stft_stem_channels: int = 16
    stft_stem_kernel: int = 8
    stft_stem_stride: int = 8
    # (expand, out_channels, kernel, stride) per MBConv stage
    stft_stages: tuple[tuple[int, int, int, int], ...] = ((2, 24, 3, 2), (4, 40, 3, 2), (4, 80, 3, 2), (4, 112, 3, 1))
    fusion_dim: int = FUSION_DIM
    gate_hidden: int = 32
    proc_hidden: int = 64
    dropout: float = 0.5

    def __post_init__(self):
        self.iq_widths = tuple(self.iq_widths)
        self.iq_blocks = tuple(self.iq_blocks)
        self.stft_stages = tuple(tuple(s) for s in self.stft_stages)
        if self.fusion_dim != FUSION_DIM:
            raise ValueError(f"fusion_dim is fixed at {FUSION_DIM}")
        if len(self.iq_widths) != 3 or len(self.iq_blocks) != 4:
            raise ValueError("IQ encoder has four stages: give three widths and four block counts")
        if min(self.n_classes, self.iq_feature_dim, self.stft_feature_dim, *self.iq_widths, *self.iq_blocks) <= 0:
            raise ValueError("dimensions must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["iq_widths"] = list(self.iq_widths)
        d["iq_blocks"] = list(self.iq_blocks)
        d["stft_stages"] = [list(s) for s in self.stft_stages]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def full_scale(cls, **kw) -> "ModelConfig":
        return cls(iq_feature_dim=1024, iq_widths=(64, 128, 256), stft_feature_dim=1280, **kw)


class IQEncoder(nn.Module):
    """Four complex residual stages; modulus + global average pool readout."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        widths = (*cfg.iq_widths, cfg.iq_feature_dim)
        self.stem = ComplexConv1d(1, widths[0], cfg.iq_stem_kernel, cfg.iq_stem_stride,
                                  padding=(cfg.iq_stem_kernel - cfg.iq_stem_stride) // 2, bias=False)
        self.stem_bn = ComplexBatchNorm1d(widths[0])
        blocks = []
        prev = widths[0]
        for i, (w, n) in enumerate(zip(widths, cfg.iq_blocks)):
            for b in range(n):
                stride = 2 if (i > 0 and b == 0) else 1
                blocks.append(ComplexResBlock(prev, w, stride, cfg.iq_kernel))
                prev = w
        self.blocks = nn.Sequential(*blocks)

    def forward(self, iq: torch.Tensor) -> torch.Tensor:
        x = ComplexTensor.from_iq(iq)
        x = crelu(self.stem_bn(self.stem(x)))
        x = self.blocks(x)
        return x.abs(eps=1e-12).mean(dim=-1)


class STFTEncoder(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.stem = ConvBNAct(1, cfg.stft_stem_channels, cfg.stft_stem_kernel, cfg.stft_stem_stride)
        stages = []
        prev = cfg.stft_stem_channels
        for expand, out, k, stride in cfg.stft_stages:
            stages.append(MBConv(prev, out, expand, k, stride))
            prev = out
        self.stages = nn.Sequential(*stages)
        self.head = ConvBNAct(prev, cfg.stft_feature_dim, 1)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        if img.dim() == 3:
            img = img[:, None]
        return self.head(self.stages(self.stem(img))).mean(dim=(2, 3))


def _gate_mlp(hidden: int) -> nn.Sequential:
    mlp = nn.Sequential(nn.Linear(N_STATS, hidden), nn.ReLU(), nn.Linear(hidden, 1))
    nn.init.zeros_(mlp[2].weight)
    nn.init.zeros_(mlp[2].bias)
    return mlp


class GFOutput(NamedTuple):
    logits: torch.Tensor
    g: torch.Tensor
    s: torch.Tensor


class GFNet(nn.Module):
    def __init__(self, cfg: ModelConfig | None = None):
        super().__init__()
        self.cfg = cfg = cfg or ModelConfig()
        self.iq_encoder = IQEncoder(cfg)
        self.stft_encoder = STFTEncoder(cfg)
        self.proj_iq = nn.Linear(cfg.iq_feature_dim, cfg.fusion_dim)
        self.proj_stft = nn.Linear(cfg.stft_feature_dim, cfg.fusion_dim)
        self.gate_mlp = _gate_mlp(cfg.gate_hidden)
        self.aux_gate_mlp = _gate_mlp(cfg.gate_hidden)
        self.proc_mlp = nn.Sequential(nn.Linear(N_STATS, cfg.proc_hidden), nn.ReLU(),
                                      nn.Linear(cfg.proc_hidden, cfg.fusion_dim))
        self.classifier = nn.Sequential(nn.Dropout(cfg.dropout), nn.Linear(cfg.fusion_dim, cfg.n_classes))
        self.register_buffer("stats_mean", torch.zeros(N_STATS))
        self.register_buffer("stats_std", torch.ones(N_STATS))

    def set_stats_normalization(self, mean, std) -> None:
        std = torch.as_tensor(std, dtype=self.stats_std.dtype).clone()
        std[std <= 0] = 1.0
        self.stats_mean.copy_(torch.as_tensor(mean, dtype=self.stats_mean.dtype))
        self.stats_std.copy_(std)

    def zscore(self, stats: torch.Tensor) -> torch.Tensor:
        return (stats - self.stats_mean) / self.stats_std

    def gate_primary(self, v: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.gate_mlp(v)).squeeze(-1)

    def fuse(self, z_iq: torch.Tensor | None, z_stft: torch.Tensor | None, g: torch.Tensor) -> torch.Tensor:
        """``g * Proj_stft(z_stft) + (1 - g) * Proj_iq(z_iq)``; a missing stream must carry zero weight."""
        g = g[:, None]
        out = 0.0
        if z_stft is not None:
            out = out + g * self.proj_stft(z_stft)
        elif not torch.all(g == 0):
            raise ValueError("spectrogram features required when g != 0")
        if z_iq is not None:
            out = out + (1.0 - g) * self.proj_iq(z_iq)
        elif not torch.all(g == 1):
            raise ValueError("IQ features required when g != 1")
        return out

    def inject_aux(self, z_fused: torch.Tensor, v: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        s = torch.sigmoid(self.aux_gate_mlp(v)).squeeze(-1)
        return z_fused + s[:, None] * self.proc_mlp(v), s

    def forward(self, iq: torch.Tensor, spec: torch.Tensor, stats: torch.Tensor,
                gate_override: float | None = None) -> GFOutput:
        """Raw (un-normalized) ``stats`` are z-scored with the stored training constants.

        ``gate_override`` pins g (0 = IQ only, 1 = spectrogram only) for ablations;
        the unused encoder is skipped.
        """
        _check_inputs(iq, spec, stats)
        v = self.zscore(stats)
        _finite("stats (z-scored)", v)
        if gate_override is None:
            g = self.gate_primary(v)
        else:
            g = torch.full((v.shape[0],), float(gate_override), dtype=v.dtype, device=v.device)
        _finite("gate g", g)
        z_iq = None if gate_override == 1 else _finite("iq_encoder", self.iq_encoder(iq))
        z_stft = None if gate_override == 0 else _finite("stft_encoder", self.stft_encoder(spec))
        z_fused = _finite("fusion", self.fuse(z_iq, z_stft, g))
        z_final, s = self.inject_aux(z_fused, v)
        _finite("aux injection", z_final)
        logits = _finite("classifier", self.classifier(z_final))
        return GFOutput(logits, g, s)

    def predict_proba(self, iq, spec, stats, gate_override=None) -> torch.Tensor:
        return torch.softmax(self.forward(iq, spec, stats, gate_override).logits, dim=-1)


def _check_inputs(iq: torch.Tensor, spec: torch.Tensor, stats: torch.Tensor) -> None:
    b = stats.shape[0]
    if iq.dim() != 3 or iq.shape[:2] != (b, 2):
        raise ValueError(f"iq must be (batch, 2, samples), got {tuple(iq.shape)}")
    if spec.dim() != 3 or spec.shape[0] != b:
        raise ValueError(f"spectrogram must be (batch, H, W), got {tuple(spec.shape)}")
    if stats.dim() != 2 or stats.shape[1] != N_STATS:
        raise ValueError(f"stats must be (batch, {N_STATS}), got {tuple(stats.shape)}")


def _finite(where: str, t: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(t).all():
        raise NonFiniteActivation(f"non-finite values produced by {where}")
    return t
