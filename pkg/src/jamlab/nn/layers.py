"""Real-valued building blocks for the spectrogram encoder and heads."""

from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


class ConvBNAct(nn.Sequential):
    def __init__(self, in_ch, out_ch, kernel_size=3, stride=1, groups=1, act=True):
        layers = [
            nn.Conv2d(in_ch, out_ch, kernel_size, stride, (kernel_size - 1) // 2, groups=groups, bias=False),
            nn.BatchNorm2d(out_ch),
        ]
        if act:
            layers.append(nn.SiLU())
        super().__init__(*layers)


def depthwise_conv2d(in_ch, kernel_size=3, stride=1):
    return ConvBNAct(in_ch, in_ch, kernel_size, stride, groups=in_ch)


class SqueezeExcite(nn.Module):
    """Global average pool -> bottleneck MLP -> sigmoid channel gates."""

    def __init__(self, channels: int, squeeze: int):
        super().__init__()
        self.fc1 = nn.Linear(channels, squeeze)
        self.fc2 = nn.Linear(squeeze, channels)

    def gates(self, x: torch.Tensor) -> torch.Tensor:
        z = x.mean(dim=(2, 3))
        return torch.sigmoid(self.fc2(F.silu(self.fc1(z))))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x * self.gates(x)[:, :, None, None]


class MBConv(nn.Module):
    """Inverted residual: expand 1x1 -> depthwise -> SE -> project 1x1."""

    def __init__(self, in_ch, out_ch, expand=4, kernel_size=3, stride=1, se_ratio=0.25):
        super().__init__()
        mid = in_ch * expand
        self.expand = ConvBNAct(in_ch, mid, 1) if expand != 1 else nn.Identity()
        self.dw = depthwise_conv2d(mid, kernel_size, stride)
        self.se = SqueezeExcite(mid, max(1, int(in_ch * se_ratio)))
        self.project = ConvBNAct(mid, out_ch, 1, act=False)
        self.residual = stride == 1 and in_ch == out_ch

    def forward(self, x):
        y = self.project(self.se(self.dw(self.expand(x))))
        return x + y if self.residual else y


def softmax_xent(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean categorical cross-entropy from raw logits."""
    return -(torch.log_softmax(logits, dim=-1).gather(-1, labels[:, None])).mean()
