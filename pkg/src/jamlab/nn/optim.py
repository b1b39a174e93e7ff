"""Adam with decoupled weight decay and the warmup + cosine schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import torch

BASE_LR = 5e-4
WEIGHT_DECAY = 1e-5
WARMUP_START_FRACTION = 0.01


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass
class AdamState:
    lr: float = BASE_LR
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = WEIGHT_DECAY
    step: int = 0
    exp_avg: dict[str, torch.Tensor] = field(default_factory=dict)
    exp_avg_sq: dict[str, torch.Tensor] = field(default_factory=dict)


@torch.no_grad()
def adam_step(state: AdamState, params: dict[str, torch.Tensor], lr: float | None = None) -> None:
    """One bias-corrected Adam update, in place, on every parameter that has a gradient.

    Weight decay is decoupled: ``p -= lr * weight_decay * p`` before the Adam move.
    """
    lr = state.lr if lr is None else lr
    b1, b2 = state.betas
    for name, p in params.items():
        if p.grad is not None and not torch.isfinite(p.grad).all():
            raise NonFiniteGradient(f"non-finite gradient in parameter {name!r} at step {state.step}")
    state.step += 1
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if name not in state.exp_avg:
            state.exp_avg[name] = torch.zeros_like(p)
            state.exp_avg_sq[name] = torch.zeros_like(p)
        m, v = state.exp_avg[name], state.exp_avg_sq[name]
        m.mul_(b1).add_(g, alpha=1.0 - b1)
        v.mul_(b2).addcmul_(g, g, value=1.0 - b2)
        if state.weight_decay:
            p.mul_(1.0 - lr * state.weight_decay)
        denom = (v / bc2).sqrt_().add_(state.eps)
        p.addcdiv_(m, denom, value=-lr / bc1)


def lr_at(step: int, steps_per_epoch: int, total_epochs: int = 30, warmup_epochs: int = 3,
          base_lr: float = BASE_LR) -> float:
    """Linear warmup from 1% of ``base_lr``, then cosine decay to zero."""
    total = total_epochs * steps_per_epoch
    warm = warmup_epochs * steps_per_epoch
    if step < 0 or step > total:
        raise ValueError(f"step {step} outside schedule [0, {total}]")
    if step < warm:
        return base_lr * (WARMUP_START_FRACTION + (1.0 - WARMUP_START_FRACTION) * step / warm)
    if total == warm:
        return base_lr
    t = (step - warm) / (total - warm)
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * t))
