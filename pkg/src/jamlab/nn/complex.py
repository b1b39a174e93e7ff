"""Complex-valued 1-D layers built from pairs of real tensors.

A :class:`ComplexTensor` packs real and imaginary parts along the channel axis,
``data = [re; im]`` with shape ``(B, 2C, L)``, so that the four real
convolutions of a complex convolution run as one block-structured convolution.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


class ComplexTensor:
    __slots__ = ("data",)

    def __init__(self, re: torch.Tensor, im: torch.Tensor):
        if re.shape != im.shape:
            raise ValueError(f"real/imag shape mismatch: {tuple(re.shape)} vs {tuple(im.shape)}")
        self.data = torch.cat([re, im], dim=1)

    @classmethod
    def packed(cls, data: torch.Tensor) -> "ComplexTensor":
        if data.shape[1] % 2:
            raise ValueError("packed complex data needs an even channel count")
        obj = cls.__new__(cls)
        obj.data = data
        return obj

    @classmethod
    def from_iq(cls, x: torch.Tensor) -> "ComplexTensor":
        """A ``(B, 2, L)`` I/Q tensor is already a packed single-channel complex tensor."""
        return cls.packed(x)

    @property
    def channels(self) -> int:
        return self.data.shape[1] // 2

    @property
    def re(self) -> torch.Tensor:
        return self.data[:, : self.channels]

    @property
    def im(self) -> torch.Tensor:
        return self.data[:, self.channels:]

    @property
    def shape(self):
        return self.re.shape

    def __add__(self, other: "ComplexTensor") -> "ComplexTensor":
        return ComplexTensor.packed(self.data + other.data)

    def rotate(self, theta: float) -> "ComplexTensor":
        c, s = math.cos(theta), math.sin(theta)
        return ComplexTensor(c * self.re - s * self.im, s * self.re + c * self.im)

    def abs(self, eps: float = 0.0) -> torch.Tensor:
        return torch.sqrt(self.re**2 + self.im**2 + eps)


def complex_conv1d(h: ComplexTensor, w: "ComplexPair | ComplexTensor", bias: "ComplexPair | None" = None,
                   stride: int = 1, padding: int = 0) -> ComplexTensor:
    """``(Wr*hr - Wi*hi) + j(Wr*hi + Wi*hr)``.

    ``w`` holds ``(out, in, k)`` kernels; ``bias`` if given holds ``(out,)`` parts.
    """
    if h.data.dim() != 3 or w.re.dim() != 3:
        raise ValueError("expected (batch, channels, length) input and (out, in, k) weights")
    if w.re.shape[1] != h.channels:
        raise ValueError(f"kernel expects {w.re.shape[1]} input channels, got {h.channels}")
    wr, wi = w.re, w.im
    block = torch.cat([torch.cat([wr, -wi], dim=1), torch.cat([wi, wr], dim=1)], dim=0)
    b = None if bias is None else torch.cat([bias.re, bias.im])
    return ComplexTensor.packed(F.conv1d(h.data, block, b, stride=stride, padding=padding))


def crelu(x: ComplexTensor) -> ComplexTensor:
    """ReLU on real and imaginary parts independently."""
    return ComplexTensor.packed(F.relu(x.data))


class ComplexPair:
    """Unpacked ``(re, im)`` pair for kernels and biases."""

    __slots__ = ("re", "im")

    def __init__(self, re, im):
        self.re, self.im = re, im


class ComplexConv1d(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, kernel_size: int, stride: int = 1,
                 padding: int | None = None, bias: bool = True):
        super().__init__()
        self.stride = stride
        self.padding = (kernel_size - 1) // 2 if padding is None else padding
        std = 1.0 / math.sqrt(in_ch * kernel_size)
        self.weight_re = nn.Parameter(torch.randn(out_ch, in_ch, kernel_size) * std)
        self.weight_im = nn.Parameter(torch.randn(out_ch, in_ch, kernel_size) * std)
        if bias:
            self.bias_re = nn.Parameter(torch.zeros(out_ch))
            self.bias_im = nn.Parameter(torch.zeros(out_ch))
        else:
            self.register_parameter("bias_re", None)
            self.register_parameter("bias_im", None)

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        b = None if self.bias_re is None else ComplexPair(self.bias_re, self.bias_im)
        return complex_conv1d(x, ComplexPair(self.weight_re, self.weight_im), b, self.stride, self.padding)


class ComplexBatchNorm1d(nn.Module):
    """Independent batch normalization of the real and imaginary parts."""

    def __init__(self, channels: int):
        super().__init__()
        self.bn = nn.BatchNorm1d(2 * channels)

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        return ComplexTensor.packed(self.bn(x.data))


class ComplexResBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int = 1, kernel_size: int = 3):
        super().__init__()
        self.conv1 = ComplexConv1d(in_ch, out_ch, kernel_size, stride, bias=False)
        self.bn1 = ComplexBatchNorm1d(out_ch)
        self.conv2 = ComplexConv1d(out_ch, out_ch, kernel_size, 1, bias=False)
        self.bn2 = ComplexBatchNorm1d(out_ch)
        if stride != 1 or in_ch != out_ch:
            self.skip = nn.Sequential(ComplexConv1d(in_ch, out_ch, 1, stride, padding=0, bias=False),
                                      ComplexBatchNorm1d(out_ch))
        else:
            self.skip = nn.Identity()

    def forward(self, x: ComplexTensor) -> ComplexTensor:
        y = crelu(self.bn1(self.conv1(x)))
        y = self.bn2(self.conv2(y))
        return crelu(y + self.skip(x))
