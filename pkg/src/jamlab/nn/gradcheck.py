"""Central finite-difference gradient checks in float64."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
import torch

# cube root of float64 machine epsilon: balances truncation and roundoff in central differences
DEFAULT_EPS = float(np.finfo(np.float64).eps ** (1 / 3))


def numeric_grad(fn: Callable[[], torch.Tensor], x: torch.Tensor, eps: float = DEFAULT_EPS,
                 indices: Sequence[int] | None = None) -> torch.Tensor:
    """d fn / d x by central differences; ``fn`` must return a scalar and read ``x`` in place.

    With ``indices`` only those flat positions are probed; the rest stay zero.
    """
    g = torch.zeros_like(x)
    flat = x.data.view(-1)
    gflat = g.view(-1)
    with torch.no_grad():
        for i in range(flat.numel()) if indices is None else indices:
            orig = flat[i].item()
            flat[i] = orig + eps
            fp = fn().item()
            flat[i] = orig - eps
            fm = fn().item()
            flat[i] = orig
            gflat[i] = (fp - fm) / (2 * eps)
    return g


def max_relative_error(analytic: torch.Tensor, numeric: torch.Tensor, floor: float = 1e-6) -> float:
    if analytic.numel() == 0:
        return 0.0
    denom = torch.clamp(torch.maximum(analytic.abs(), numeric.abs()), min=floor)
    return float(((analytic - numeric).abs() / denom).max())


def check_gradients(fn: Callable[[], torch.Tensor], tensors: Sequence[torch.Tensor],
                    eps: float = DEFAULT_EPS, floor: float = 1e-6, max_probes: int | None = None,
                    seed: int = 0) -> float:
    """Worst relative error between autograd and central differences over ``tensors``.

    ``max_probes`` caps the number of probed elements per tensor (chosen at random).
    """
    for t in tensors:
        if t.dtype != torch.float64:
            raise TypeError("gradient checks run in float64")
        t.grad = None
    fn().backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in tensors:
        analytic = t.grad.detach().clone().view(-1)
        n = t.numel()
        idx = None
        if max_probes is not None and n > max_probes:
            idx = np.sort(rng.choice(n, max_probes, replace=False)).tolist()
        numeric = numeric_grad(fn, t, eps, idx).view(-1)
        if idx is not None:
            analytic, numeric = analytic[idx], numeric[idx]
        worst = max(worst, max_relative_error(analytic, numeric, floor))
    return worst
