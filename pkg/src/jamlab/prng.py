"""Seed derivation and independent random sub-streams.

Every random draw in the generator goes through :func:`substream`, which keys a
Philox-4x64 counter-based generator with ``(seed, domain)``.  Philox is fully
specified (Salmon et al., SC'11) so streams are reproducible bit-for-bit on any
platform with the same key.
"""

from __future__ import annotations

import numpy as np

N_CLASSES = 21
N_JSR_LEVELS = 21
SAMPLE_BITS = 20

# Domain-separation constants: ASCII tags packed into the high 64 bits of the key.
DOMAIN_SYMBOLS = 0x53594D42  # "SYMB"
DOMAIN_PHASES = 0x50484153  # "PHAS"
DOMAIN_ARRIVALS = 0x41525256  # "ARRV"
DOMAIN_NOISE = 0x4E4F4953  # "NOIS"
DOMAIN_GNSS = 0x474E5353  # "GNSS"
DOMAIN_SPLIT = 0x53504C54  # "SPLT"
DOMAIN_TRAIN = 0x5452414E  # "TRAN"


def derive_seed(class_idx: int, jsr_idx: int, sample_idx: int) -> int:
    """Pack ``(class, jsr, sample)`` into one 64-bit seed.

    ``seed = class_idx * 2**40 + jsr_idx * 2**20 + sample_idx``
    """
    for name, v in (("class_idx", class_idx), ("jsr_idx", jsr_idx), ("sample_idx", sample_idx)):
        if int(v) != v or v < 0:
            raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
    if class_idx >= N_CLASSES:
        raise ValueError(f"class_idx {class_idx} out of range [0, {N_CLASSES})")
    if jsr_idx >= N_JSR_LEVELS:
        raise ValueError(f"jsr_idx {jsr_idx} out of range [0, {N_JSR_LEVELS})")
    if sample_idx >= 1 << SAMPLE_BITS:
        raise ValueError(f"sample_idx {sample_idx} out of range [0, 2**{SAMPLE_BITS})")
    return (int(class_idx) << 40) + (int(jsr_idx) << 20) + int(sample_idx)


def split_seed(seed: int) -> tuple[int, int, int]:
    """Inverse of :func:`derive_seed`."""
    mask = (1 << 20) - 1
    return seed >> 40, (seed >> 20) & mask, seed & mask


def substream(seed: int, domain: int) -> np.random.Generator:
    """Independent generator for one ``(seed, domain)`` pair."""
    if not 0 <= seed < 1 << 64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed) | (int(domain) << 64)))
