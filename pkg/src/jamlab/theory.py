"""Magnitude-spectrogram ambiguity and JSR-dependent modality reliability.

The ambiguity demo uses a spectrally matched pair: 64-QAM with RRC pulses at
zero carrier offset, and band-limited Gaussian noise whose Butterworth
half-power point sits at the RRC half-power point (half the symbol rate).
Reliability curves use the two dataset classes as generated, parameter
draws included.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .features import compute_stats, fourth_moment_ratio, log_psd_normalize, stft
from .prng import derive_seed
from .synthesis import (
    SYMBOL_RATE_HZ,
    LinkBudget,
    awgn,
    get_class,
    compose_snapshot,
    jsr_index,
    synth_blgni,
    synth_dmi,
    synth_gnss_ca,
)

log = logging.getLogger(__name__)

MATCHED_BLGNI_BANDWIDTH_HZ = SYMBOL_RATE_HZ
POOL_BANDS = 16
TOP_K = 2
RIDGE_REL = 1e-9
DEFAULT_PAIR = ("qam64", "blgni")


def matched_qam(seed: int) -> np.ndarray:
    return synth_dmi("64QAM", seed, carrier_hz=0.0)


def matched_noise(seed: int) -> np.ndarray:
    return synth_blgni(MATCHED_BLGNI_BANDWIDTH_HZ, seed, carrier_hz=0.0)


def _snapshots(kind: str, jsr_db: float, n: int, offset: int = 0) -> list[np.ndarray]:
    """``n`` composite snapshots; ``kind`` is ``qam``, ``noise`` or ``awgn`` (no jammer)."""
    budget = LinkBudget(jsr_db)
    cid = get_class("qam64" if kind == "qam" else "blgni").id
    out = []
    for k in range(offset, offset + n):
        seed = derive_seed(cid, jsr_index(jsr_db), k)
        x = synth_gnss_ca(seed, budget.signal_power) + awgn(seed, budget.noise_power)
        if kind == "qam":
            x = x + np.sqrt(budget.jamming_power) * matched_qam(seed)
        elif kind == "noise":
            x = x + np.sqrt(budget.jamming_power) * matched_noise(seed)
        elif kind != "awgn":
            raise ValueError(f"unknown snapshot kind {kind!r}")
        out.append(x)
    return out


def mean_log_psd(signals: Sequence[np.ndarray]) -> np.ndarray:
    return np.mean([log_psd_normalize(stft(x)).values for x in signals], axis=0)


def relative_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / (0.5 * (np.linalg.norm(a) + np.linalg.norm(b))))


@dataclass
class AmbiguityResult:
    jsr_db: float
    n: int
    distance: float
    awgn_self_distance: float
    iq_kurtosis_qam: float
    iq_kurtosis_noise: float
    spectrogram_threshold_accuracy: float
    kurtosis_threshold_accuracy: float

    @property
    def kurtosis_gap(self) -> float:
        return abs(self.iq_kurtosis_noise - self.iq_kurtosis_qam)

    def verdict(self, distance_factor: float = 2.0, min_gap: float = 0.2) -> tuple[bool, str]:
        ok_d = self.distance <= distance_factor * self.awgn_self_distance
        ok_k = self.kurtosis_gap > min_gap
        msg = (f"spectrogram distance {self.distance:.5f} vs {distance_factor:g} x AWGN self-distance "
               f"{self.awgn_self_distance:.5f}: {'ambiguous' if ok_d else 'distinguishable'}; "
               f"kurtosis gap {self.kurtosis_gap:.3f} ({'>' if ok_k else '<='} {min_gap:g}); "
               f"threshold classifiers: spectrogram {self.spectrogram_threshold_accuracy:.3f}, "
               f"kurtosis {self.kurtosis_threshold_accuracy:.3f}")
        return ok_d and ok_k, msg


def threshold_accuracy(a: np.ndarray, b: np.ndarray) -> float:
    """Fit a midpoint threshold on the first half of each sample, score it on the second half."""
    ha, hb = len(a) // 2, len(b) // 2
    ma, mb = a[:ha].mean(), b[:hb].mean()
    t = 0.5 * (ma + mb)
    sign = 1.0 if ma > mb else -1.0
    correct = np.sum(sign * (a[ha:] - t) > 0) + np.sum(sign * (b[hb:] - t) <= 0)
    return float(correct / (len(a) - ha + len(b) - hb))


def _spectrum_projection(qa: list[np.ndarray], qb: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per-snapshot projection of the time-averaged log-PSD onto the mean difference of the first halves."""
    pa = np.array([log_psd_normalize(stft(x)).values.mean(axis=0) for x in qa])
    pb = np.array([log_psd_normalize(stft(x)).values.mean(axis=0) for x in qb])
    w = pa[: len(pa) // 2].mean(axis=0) - pb[: len(pb) // 2].mean(axis=0)
    return pa @ w, pb @ w


def ambiguity_demo(jsr_db: float = 40.0, n: int = 100) -> AmbiguityResult:
    qam = _snapshots("qam", jsr_db, n)
    noise = _snapshots("noise", jsr_db, n)
    awgn_a = _snapshots("awgn", jsr_db, n, offset=n)
    awgn_b = _snapshots("awgn", jsr_db, n, offset=2 * n)
    # AWGN batches sit past the noise batch's sample indices, so all three are independent;
    # their distance is what estimation noise alone produces
    self_dist = relative_distance(mean_log_psd(awgn_a), mean_log_psd(awgn_b))
    dist = relative_distance(mean_log_psd(qam), mean_log_psd(noise))
    kq = np.array([fourth_moment_ratio(x) for x in qam])
    kn = np.array([fourth_moment_ratio(x) for x in noise])
    sa, sb = _spectrum_projection(qam, noise)
    return AmbiguityResult(jsr_db, n, dist, self_dist, float(kq.mean()), float(kn.mean()),
                           threshold_accuracy(sa, sb), threshold_accuracy(kq, kn))


# ---------------------------------------------------------------------------
# discriminability


def iq_summary(x: np.ndarray) -> np.ndarray:
    """(fourth-moment ratio, envelope std / mean)."""
    return np.array([fourth_moment_ratio(x), compute_stats(x)[5]])


def stft_summary(x: np.ndarray, bands: int = POOL_BANDS, k: int = TOP_K) -> np.ndarray:
    """Top-k band-pooled energies of the time-averaged normalized log-PSD, largest first."""
    spectrum = log_psd_normalize(stft(x)).values.mean(axis=0)
    pooled = spectrum.reshape(bands, -1).mean(axis=1)
    return np.sort(pooled)[::-1][:k].copy()


SUMMARIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {"IQ": iq_summary, "STFT": stft_summary}


def gaussian_symmetric_kl(a: np.ndarray, b: np.ndarray, ridge_rel: float = RIDGE_REL) -> float:
    """KL(A||B) + KL(B||A) between Gaussians fitted to the rows of ``a`` and ``b``.

    A ridge of ``ridge_rel`` times the mean variance is added to both covariances.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise ValueError("feature dimensions differ")
    d = a.shape[1]
    if min(len(a), len(b)) < 2:
        raise ValueError("need at least two samples per class")
    ca = np.atleast_2d(np.cov(a, rowvar=False))
    cb = np.atleast_2d(np.cov(b, rowvar=False))
    scale = max(0.5 * (np.trace(ca) + np.trace(cb)) / d, np.finfo(float).tiny)
    eps = ridge_rel * scale
    if min(np.linalg.matrix_rank(ca), np.linalg.matrix_rank(cb)) < d:
        log.warning("singular covariance; ridge epsilon %.3g", eps)
    ca = ca + eps * np.eye(d)
    cb = cb + eps * np.eye(d)
    ia, ib = np.linalg.inv(ca), np.linalg.inv(cb)
    dm = a.mean(axis=0) - b.mean(axis=0)
    r = 0.5 * (np.trace(ib @ ca) + np.trace(ia @ cb)) - d + 0.5 * dm @ (ia + ib) @ dm
    return float(max(r, 0.0))


def class_snapshots(key: str | int, jsr_db: float, n: int, offset: int = 0) -> list[np.ndarray]:
    """Composite snapshots of one dataset class, sample indices ``offset .. offset+n-1``."""
    jc = get_class(key)
    return [compose_snapshot(jc, jsr_db, k).signal for k in range(offset, offset + n)]


def discriminability(feature_set: str, jsr_db: float, n: int = 100,
                     class_pair: tuple[str | int, str | int] = DEFAULT_PAIR,
                     signals: tuple[Sequence[np.ndarray], Sequence[np.ndarray]] | None = None) -> float:
    """R between two classes at ``jsr_db`` (or between two given snapshot lists)."""
    if feature_set not in SUMMARIES:
        raise ValueError(f"feature set must be one of {sorted(SUMMARIES)}")
    if n < 50 and signals is None:
        raise ValueError("need at least 50 snapshots per class")
    if signals is None:
        signals = tuple(class_snapshots(k, jsr_db, n) for k in class_pair)
    f = SUMMARIES[feature_set]
    return gaussian_symmetric_kl(np.array([f(x) for x in signals[0]]), np.array([f(x) for x in signals[1]]))


def optimal_alpha(r_iq: float, r_stft: float) -> float:
    """Weight on the IQ stream, R_I / (R_I + R_S)."""
    if r_iq < 0 or r_stft < 0:
        raise ValueError("discriminabilities must be non-negative")
    if r_iq + r_stft == 0:
        raise ValueError("alpha is undefined when both discriminabilities are zero")
    total = r_iq + r_stft
    # the larger share is taken as a complement so that alpha(a, b) + alpha(b, a) == 1 exactly
    return r_iq / total if r_iq <= r_stft else 1.0 - r_stft / total


@dataclass
class ReliabilityRow:
    jsr_db: float
    r_iq: float
    r_stft: float

    @property
    def alpha_star(self) -> float:
        return optimal_alpha(self.r_iq, self.r_stft)


def reliability_curve(jsr_values: Sequence[float], n: int = 100,
                      class_pair: tuple[str | int, str | int] = DEFAULT_PAIR) -> list[ReliabilityRow]:
    rows = []
    for j in jsr_values:
        pair = tuple(class_snapshots(k, j, n) for k in class_pair)
        rows.append(ReliabilityRow(float(j), discriminability("IQ", j, signals=pair),
                                   discriminability("STFT", j, signals=pair)))
    return rows


def reliability_verdict(rows: Sequence[ReliabilityRow]) -> tuple[bool, str]:
    lo, hi = min(rows, key=lambda r: r.jsr_db), max(rows, key=lambda r: r.jsr_db)
    ok = lo.r_stft > lo.r_iq and hi.r_iq > hi.r_stft
    return ok, (f"{lo.jsr_db:g} dB: R_S={lo.r_stft:.4g} R_I={lo.r_iq:.4g}; "
                f"{hi.jsr_db:g} dB: R_S={hi.r_stft:.4g} R_I={hi.r_iq:.4g}; "
                f"crossing {'present' if ok else 'absent'} (alpha* = R_I/(R_I+R_S), normalized reading)")


def write_reliability_csv(rows: Sequence[ReliabilityRow], path: str | Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["jsr_db", "r_iq", "r_stft", "alpha_star"])
        for r in rows:
            w.writerow([r.jsr_db, r.r_iq, r.r_stft, r.alpha_star])
