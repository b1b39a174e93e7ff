from .complex import (
    ComplexBatchNorm1d,
    ComplexPair,
    ComplexConv1d,
    ComplexResBlock,
    ComplexTensor,
    complex_conv1d,
    crelu,
)
from .layers import ConvBNAct, MBConv, SqueezeExcite, depthwise_conv2d, softmax_xent
from .optim import AdamState, NonFiniteGradient, adam_step, lr_at

__all__ = [
    "AdamState",
    "ComplexBatchNorm1d",
    "ComplexPair",
    "ComplexConv1d",
    "ComplexResBlock",
    "ComplexTensor",
    "ConvBNAct",
    "MBConv",
    "NonFiniteGradient",
    "SqueezeExcite",
    "adam_step",
    "complex_conv1d",
    "crelu",
    "depthwise_conv2d",
    "lr_at",
    "softmax_xent",
]
