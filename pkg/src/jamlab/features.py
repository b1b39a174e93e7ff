"""Spectrogram image and statistical descriptors for one snapshot."""

from __future__ import annotations

from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.signal import get_window

from .synthesis import SAMPLE_RATE_HZ

WIN_LEN = 256
HOP = 13  # round(0.05 * 256): nearest integer hop for 95% overlap
IMAGE_SIZE = 224
PSD_FLOOR = 1e-12
STATS_NFFT = 4096
STATS_SMOOTH_BINS = 33
STATS_NAMES = (
    "spectral_centroid_hz",
    "spectral_bandwidth_hz",
    "spectral_kurtosis",
    "spectral_flatness",
    "papr",
    "envelope_std",
)


class NormalizedPSD(NamedTuple):
    values: np.ndarray
    degenerate: bool


def n_frames(n: int, win_len: int = WIN_LEN, hop: int = HOP) -> int:
    return (n - win_len) // hop + 1


def stft(x: np.ndarray, win_len: int = WIN_LEN, hop: int = HOP) -> np.ndarray:
    """Hamming-windowed sliding DFT, shape ``(frames, win_len)``, DC at column ``win_len // 2``."""
    x = np.asarray(x)
    if x.ndim != 1 or len(x) < win_len:
        raise ValueError(f"signal of length {x.shape} is shorter than the {win_len}-sample window")
    w = get_window("hamming", win_len)
    frames = np.lib.stride_tricks.sliding_window_view(x, win_len)[::hop]
    return np.fft.fftshift(np.fft.fft(frames * w, axis=1), axes=1)


def log_psd_normalize(S: np.ndarray) -> NormalizedPSD:
    """Log power with adaptive min-max scaling into [0, 1]."""
    logp = np.log(np.maximum(np.abs(S) ** 2, PSD_FLOOR))
    lo, hi = logp.min(), logp.max()
    if not hi > lo:
        return NormalizedPSD(np.zeros_like(logp), True)
    return NormalizedPSD((logp - lo) / (hi - lo), False)


def resize_bilinear(img: np.ndarray, height: int = IMAGE_SIZE, width: int = IMAGE_SIZE) -> np.ndarray:
    """Corner-aligned bilinear resampling."""
    img = np.asarray(img, dtype=float)
    h, w = img.shape
    if (h, w) == (height, width):
        return img.copy()

    def axis(n_src, n_dst):
        pos = np.zeros(n_dst) if n_dst == 1 else np.arange(n_dst) * (n_src - 1) / (n_dst - 1)
        i0 = np.clip(np.floor(pos).astype(int), 0, n_src - 1)
        i1 = np.minimum(i0 + 1, n_src - 1)
        return i0, i1, pos - i0

    r0, r1, fr = axis(h, height)
    c0, c1, fc = axis(w, width)
    rows = img[r0] * (1 - fr)[:, None] + img[r1] * fr[:, None]
    return rows[:, c0] * (1 - fc)[None, :] + rows[:, c1] * fc[None, :]


def spectrogram_image(x: np.ndarray) -> np.ndarray:
    """Full STFT -> log-PSD -> min-max -> 224x224 pipeline, float32."""
    return resize_bilinear(log_psd_normalize(stft(x)).values).astype(np.float32)


def write_pgm(img: np.ndarray, path: str | Path) -> None:
    """8-bit binary PGM (values * 255, rounded)."""
    img = np.asarray(img)
    data = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(data.tobytes())


def smoothed_periodogram(x: np.ndarray, nfft: int = STATS_NFFT, smooth: int = STATS_SMOOTH_BINS):
    """Frequency axis (ascending, Hz) and Daniell-smoothed zero-padded periodogram."""
    p = np.fft.fftshift(np.abs(np.fft.fft(x, nfft)) ** 2) / len(x)
    f = np.fft.fftshift(np.fft.fftfreq(nfft, 1.0 / SAMPLE_RATE_HZ))
    if smooth > 1:
        k = np.ones(smooth) / smooth
        p = np.convolve(p, k, mode="same")
    return f, p


def compute_stats(x: np.ndarray) -> np.ndarray:
    """Six descriptors of a raw snapshot, in ``STATS_NAMES`` order."""
    x = np.asarray(x)
    env = np.abs(x)
    inst = env**2
    if not np.any(inst > 0):
        raise ValueError("statistics are undefined for an all-zero signal")
    f, p = smoothed_periodogram(x)
    w = p / p.sum()
    centroid = np.sum(f * w)
    var = np.sum((f - centroid) ** 2 * w)
    bandwidth = np.sqrt(var)
    kurt = np.sum((f - centroid) ** 4 * w) / var**2 if var > 0 else 0.0
    pf = np.maximum(p, PSD_FLOOR * p.max())
    flatness = min(float(np.exp(np.mean(np.log(pf))) / np.mean(pf)), 1.0)
    papr = inst.max() / inst.mean()
    env_std = env.std() / env.mean()
    return np.array([centroid, bandwidth, kurt, flatness, papr, env_std])


def normalize_iq(x: np.ndarray) -> np.ndarray:
    """Zero mean, unit average power; returns float32 array of shape (2, n)."""
    x = np.asarray(x)
    x = x - x.mean()
    p = np.mean(np.abs(x) ** 2)
    if p > 0:
        x = x / np.sqrt(p)
    return np.stack([x.real, x.imag]).astype(np.float32)


def fourth_moment_ratio(x: np.ndarray) -> float:
    """E|x|^4 / (E|x|^2)^2: 2 for circular Gaussian, 1 for constant modulus."""
    p = np.abs(np.asarray(x)) ** 2
    return float(np.mean(p**2) / np.mean(p) ** 2)
