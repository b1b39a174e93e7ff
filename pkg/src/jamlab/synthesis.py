"""Interference waveform synthesis and snapshot composition.

All generators return unit-mean-power complex baseband arrays of
``SNAPSHOT_LEN`` samples at ``SAMPLE_RATE_HZ``.  Power is applied only in
:func:`compose_snapshot`, which works in normalized units where the GNSS
signal power is 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np
from scipy import signal as sps

from .prng import (
    DOMAIN_ARRIVALS,
    DOMAIN_GNSS,
    DOMAIN_NOISE,
    DOMAIN_PHASES,
    DOMAIN_SYMBOLS,
    derive_seed,
    substream,
)

SAMPLE_RATE_HZ = 40.0e6
SNAPSHOT_LEN = 4000
SNAPSHOT_S = SNAPSHOT_LEN / SAMPLE_RATE_HZ  # 100 us

JSR_GRID_DB: tuple[float, ...] = tuple(float(v) for v in range(10, 51, 2))

# DMI
SYMBOL_RATE_HZ = 5.0e6
RRC_ROLLOFF = 0.35
RRC_SPAN_SYMBOLS = 8
CARRIER_OFFSET_MAX_HZ = 2.0e6

# DME-style pulses
PULSE_WIDTH_S = 3.5e-6
PULSE_SPACING_S = 12e-6
PULSE_SIGMA_S = PULSE_WIDTH_S / (2.0 * math.sqrt(2.0 * math.log(2.0)))
PULSE_MEAN_PAIRS = 2.0

# TickChirp
TICK_DWELL_S = 10e-6
TICK_TRANSITION_S = 2e-6
TICK_SLOPE_HZ_PER_S = 2.0e12  # 4 MHz across one transition
TICK_HOP_SPAN_HZ = 10e6

CWI_MAX_OFFSET_HZ = 10e6
BLGNI_ORDER = 8
BLGNI_BURN_IN = 2048

NOMINAL_NOISE_TO_SIGNAL_DB = 28.02  # -205 dBW/Hz + 76.02 dB-Hz - (-157 dBW)
CA_CHIP_RATE_HZ = 1.023e6
CA_LENGTH = 1023
GNSS_DOPPLER_MAX_HZ = 5e3


class Family(str, enum.Enum):
    DMI = "DMI"
    LFM = "LFM"
    NLFM = "NLFM"
    PIECEWISE = "Piecewise"
    PULSE = "Pulse"
    HOPPING = "Hopping"
    CW = "CW"
    NOISE_LIKE = "NoiseLike"


@dataclass(frozen=True)
class JammingClass:
    id: int
    key: str
    name: str
    family: Family
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))


def _jc(i, key, name, family, **params):
    return JammingClass(i, key, name, family, params)


CLASSES: tuple[JammingClass, ...] = (
    _jc(0, "bpsk", "BPSK", Family.DMI, constellation="BPSK"),
    _jc(1, "qpsk", "QPSK", Family.DMI, constellation="QPSK"),
    _jc(2, "qam8", "8-QAM", Family.DMI, constellation="8QAM"),
    _jc(3, "qam16", "16-QAM", Family.DMI, constellation="16QAM"),
    _jc(4, "qam32", "32-QAM", Family.DMI, constellation="32QAM"),
    _jc(5, "qam64", "64-QAM", Family.DMI, constellation="64QAM"),
    _jc(6, "lchirp_wide_slow", "LChirp Wide Slow", Family.LFM, bandwidth_hz=16e6, sweep_rate=2, shape="linear_wrap"),
    _jc(7, "lchirp_wide_medium", "LChirp Wide Medium", Family.LFM, bandwidth_hz=16e6, sweep_rate=5, shape="linear_wrap"),
    _jc(8, "lchirp_wide_fast", "LChirp Wide Fast", Family.LFM, bandwidth_hz=16e6, sweep_rate=10, shape="linear_wrap"),
    _jc(9, "lchirp_wide_rapid", "LChirp Wide Rapid", Family.LFM, bandwidth_hz=16e6, sweep_rate=15, shape="linear_wrap"),
    _jc(10, "lchirp_narrow", "LChirp Narrow", Family.LFM, bandwidth_hz=5e6, sweep_rate=10, shape="linear_wrap"),
    _jc(11, "saw_chirp", "SawChirp", Family.LFM, bandwidth_hz=12e6, sweep_rate=11, shape="sawtooth"),
    _jc(12, "sin_chirp", "SinChirp", Family.NLFM, bandwidth_hz=10e6, rate=5),
    _jc(13, "hook_chirp", "HookChirp", Family.PIECEWISE, kind="hook"),
    _jc(14, "triangular", "Triangular", Family.PIECEWISE, kind="triangular"),
    _jc(15, "triangular_wave", "Triangular Wave", Family.PIECEWISE, kind="triangular_wave"),
    _jc(16, "tick_chirp", "TickChirp", Family.PIECEWISE, kind="tick"),
    _jc(17, "pulse", "Pulse Jamming", Family.PULSE),
    _jc(18, "fh", "Frequency Hopping", Family.HOPPING, bandwidth_hz=6e6, dwell_s=5e-6, n_channels=16),
    _jc(19, "cwi", "CWI", Family.CW, n_tones=1),
    _jc(20, "blgni", "BLGNI", Family.NOISE_LIKE, bandwidth_hz=3e6),
)

CLASS_BY_KEY = {c.key: c for c in CLASSES}

# Piecewise chirp shapes: (bandwidth, periods per snapshot)
PIECEWISE_SHAPES = {
    "triangular": (16e6, 1),
    "triangular_wave": (16e6, 10),
    "hook": (8e6, 5),
}
HOOK_RISE_FRACTION = 0.8


def get_class(ref: int | str) -> JammingClass:
    if isinstance(ref, str):
        if ref in CLASS_BY_KEY:
            return CLASS_BY_KEY[ref]
        if ref.isdigit():
            ref = int(ref)
        else:
            raise KeyError(f"unknown jamming class {ref!r}")
    if not 0 <= ref < len(CLASSES):
        raise KeyError(f"class id {ref} out of range")
    return CLASSES[ref]


def jsr_index(jsr_db: float) -> int:
    for i, v in enumerate(JSR_GRID_DB):
        if abs(v - jsr_db) < 1e-9:
            return i
    raise ValueError(f"JSR {jsr_db} dB is not on the 10:2:50 dB grid")


@dataclass(frozen=True)
class LinkBudget:
    jsr_db: float
    gnss_power_dbw: float = -157.0
    noise_density_dbw_hz: float = -205.0
    sample_rate_hz: float = SAMPLE_RATE_HZ

    @property
    def noise_power_dbw(self) -> float:
        return self.noise_density_dbw_hz + 10.0 * math.log10(self.sample_rate_hz)

    @property
    def noise_to_signal_db(self) -> float:
        return self.noise_power_dbw - self.gnss_power_dbw

    # Normalized units: P_S == 1.
    @property
    def signal_power(self) -> float:
        return 1.0

    @property
    def jamming_power(self) -> float:
        return 10.0 ** (self.jsr_db / 10.0)

    @property
    def noise_power(self) -> float:
        return 10.0 ** (self.noise_to_signal_db / 10.0)

    def check(self, tol_db: float = 0.01) -> None:
        """Raise unless the linear powers reproduce the dBW arithmetic and the nominal ratio."""
        measured = 10.0 * math.log10(self.noise_power / self.signal_power)
        if abs(measured - self.noise_to_signal_db) > tol_db or abs(measured - NOMINAL_NOISE_TO_SIGNAL_DB) > tol_db:
            raise ValueError(f"noise-to-signal ratio {measured:.4f} dB, expected {NOMINAL_NOISE_TO_SIGNAL_DB} dB")


@dataclass
class SnapshotRecord:
    signal: np.ndarray  # complex, SNAPSHOT_LEN
    class_id: int
    jsr_db: float
    seed: int
    sample_idx: int


# ---------------------------------------------------------------------------
# helpers


def _time(n: int = SNAPSHOT_LEN, fs: float = SAMPLE_RATE_HZ) -> np.ndarray:
    return np.arange(n) / fs


def unit_power(x: np.ndarray) -> np.ndarray:
    p = np.mean(np.abs(x) ** 2)
    if p <= 0:
        raise ValueError("cannot normalize a zero signal")
    return x / np.sqrt(p)


def phase_from_frequency(freq_hz: np.ndarray, phase0: float = 0.0, fs: float = SAMPLE_RATE_HZ) -> np.ndarray:
    """Unit-modulus signal whose per-sample phase step is ``2*pi*f[n]/fs``."""
    steps = 2.0 * np.pi * np.asarray(freq_hz, dtype=float) / fs
    phase = phase0 + np.concatenate(([0.0], np.cumsum(steps[:-1])))
    return np.exp(1j * phase)


def _center_offset(rng: np.random.Generator, bandwidth_hz: float) -> float:
    limit = min(CARRIER_OFFSET_MAX_HZ, max(0.0, (SAMPLE_RATE_HZ - bandwidth_hz) / 2.0))
    return rng.uniform(-limit, limit)


# ---------------------------------------------------------------------------
# digital modulation


def constellation(name: str) -> np.ndarray:
    """Unit-average-power constellation points."""
    name = name.upper()
    if name == "BPSK":
        pts = np.array([1.0, -1.0], dtype=complex)
    elif name == "QPSK":
        pts = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
    elif name == "8QAM":
        pts = np.array([i + 1j * q for i in (-3, -1, 1, 3) for q in (-1, 1)])
    elif name == "16QAM":
        pts = np.array([i + 1j * q for i in (-3, -1, 1, 3) for q in (-3, -1, 1, 3)])
    elif name == "32QAM":
        lv = (-5, -3, -1, 1, 3, 5)
        pts = np.array([i + 1j * q for i in lv for q in lv if not (abs(i) == 5 and abs(q) == 5)])
    elif name == "64QAM":
        lv = (-7, -5, -3, -1, 1, 3, 5, 7)
        pts = np.array([i + 1j * q for i in lv for q in lv])
    else:
        raise ValueError(f"unknown constellation {name!r}")
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


CONSTELLATIONS = ("BPSK", "QPSK", "8QAM", "16QAM", "32QAM", "64QAM")


def rrc_taps(beta: float = RRC_ROLLOFF, sps: int = 8, span: int = RRC_SPAN_SYMBOLS) -> np.ndarray:
    """Root-raised-cosine impulse response with unit energy."""
    t = np.arange(-span * sps // 2, span * sps // 2 + 1) / sps
    h = np.empty_like(t)
    for k, ti in enumerate(t):
        if abs(ti) < 1e-12:
            h[k] = 1.0 - beta + 4.0 * beta / np.pi
        elif beta > 0 and abs(abs(ti) - 1.0 / (4.0 * beta)) < 1e-12:
            h[k] = (beta / np.sqrt(2.0)) * (
                (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta)) + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
            )
        else:
            num = np.sin(np.pi * ti * (1 - beta)) + 4 * beta * ti * np.cos(np.pi * ti * (1 + beta))
            den = np.pi * ti * (1 - (4 * beta * ti) ** 2)
            h[k] = num / den
    return h / np.sqrt(np.sum(h**2))


def pulse_shape(symbols: np.ndarray, sps: int = 8, beta: float = RRC_ROLLOFF,
                span: int = RRC_SPAN_SYMBOLS, n: int = SNAPSHOT_LEN, offset: int = 0) -> np.ndarray:
    """Upsample and RRC-filter a symbol stream, returning ``n`` steady-state samples."""
    h = rrc_taps(beta, sps, span)
    up = np.zeros(len(symbols) * sps, dtype=complex)
    up[::sps] = symbols
    full = np.convolve(up, h)
    start = span * sps + offset
    if start + n > len(full):
        raise ValueError("not enough symbols for the requested length")
    return full[start:start + n]


def synth_dmi(constellation_name: str, seed: int, carrier_hz: float | None = None) -> np.ndarray:
    pts = constellation(constellation_name)
    sps = int(round(SAMPLE_RATE_HZ / SYMBOL_RATE_HZ))
    sym_rng = substream(seed, DOMAIN_SYMBOLS)
    ph_rng = substream(seed, DOMAIN_PHASES)
    n_sym = SNAPSHOT_LEN // sps + 2 * RRC_SPAN_SYMBOLS + 2
    symbols = pts[sym_rng.integers(0, len(pts), n_sym)]
    timing = int(sym_rng.integers(0, sps))
    f_delta = ph_rng.uniform(-CARRIER_OFFSET_MAX_HZ, CARRIER_OFFSET_MAX_HZ) if carrier_hz is None else carrier_hz
    phi0 = ph_rng.uniform(0.0, 2.0 * np.pi)
    base = pulse_shape(symbols, sps=sps, offset=timing)
    return unit_power(base * np.exp(1j * (2.0 * np.pi * f_delta * _time() + phi0)))


# ---------------------------------------------------------------------------
# chirps


def _check_bandwidth(bandwidth_hz: float):
    if bandwidth_hz < 0:
        raise ValueError("bandwidth must be non-negative")
    if bandwidth_hz > SAMPLE_RATE_HZ:
        raise ValueError(f"bandwidth {bandwidth_hz:g} Hz exceeds the {SAMPLE_RATE_HZ:g} Hz complex Nyquist band")


def lfm_frequency(bandwidth_hz: float, sweep_rate: float, f_start: float = 0.0,
                  t0: float = 0.0, n: int = SNAPSHOT_LEN) -> np.ndarray:
    """Sawtooth instantaneous frequency: ``sweep_rate`` ramps of height B per snapshot."""
    period = SNAPSHOT_S / sweep_rate
    frac = np.mod((_time(n) + t0) / period, 1.0)
    return f_start + bandwidth_hz * frac


def synth_lfm(bandwidth_hz: float, sweep_rate: float, shape: str = "linear_wrap", seed: int = 0) -> np.ndarray:
    """Linear chirp.

    ``linear_wrap`` keeps the phase continuous across the frequency wrap;
    ``sawtooth`` restarts the quadratic phase at every period.
    """
    _check_bandwidth(bandwidth_hz)
    if sweep_rate <= 0:
        raise ValueError("sweep_rate must be positive")
    rng = substream(seed, DOMAIN_PHASES)
    fc = _center_offset(rng, bandwidth_hz)
    period = SNAPSHOT_S / sweep_rate
    t0 = rng.uniform(0.0, period)
    phi0 = rng.uniform(0.0, 2.0 * np.pi)
    f_start = fc - bandwidth_hz / 2.0
    if shape == "linear_wrap":
        return phase_from_frequency(lfm_frequency(bandwidth_hz, sweep_rate, f_start, t0), phi0)
    if shape == "sawtooth":
        tau = np.mod(_time() + t0, period)
        phase = 2.0 * np.pi * (f_start * tau + 0.5 * bandwidth_hz / period * tau**2) + phi0
        return np.exp(1j * phase)
    raise ValueError(f"unknown LFM shape {shape!r}")


def synth_sin_chirp(bandwidth_hz: float, rate: float, seed: int = 0) -> np.ndarray:
    """Sinusoidal FM with peak-to-peak frequency excursion ``bandwidth_hz``."""
    _check_bandwidth(bandwidth_hz)
    rng = substream(seed, DOMAIN_PHASES)
    fc = _center_offset(rng, bandwidth_hz)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    phi0 = rng.uniform(0.0, 2.0 * np.pi)
    fm = rate / SNAPSHOT_S
    beta = bandwidth_hz / (2.0 * fm) if fm > 0 else 0.0
    t = _time()
    return np.exp(1j * (2.0 * np.pi * fc * t + beta * np.sin(2.0 * np.pi * fm * t + theta) + phi0))


def triangular_frequency(bandwidth_hz: float, periods: float, t0: float = 0.0, n: int = SNAPSHOT_LEN) -> np.ndarray:
    period = SNAPSHOT_S / periods
    u = np.mod((_time(n) + t0) / period, 1.0)
    return bandwidth_hz * (1.0 - np.abs(2.0 * u - 1.0)) - bandwidth_hz / 2.0


def hook_frequency(bandwidth_hz: float, periods: float, rise: float = HOOK_RISE_FRACTION,
                   t0: float = 0.0, n: int = SNAPSHOT_LEN) -> np.ndarray:
    period = SNAPSHOT_S / periods
    u = np.mod((_time(n) + t0) / period, 1.0)
    f = np.where(u < rise, u / rise, (1.0 - u) / (1.0 - rise))
    return bandwidth_hz * f - bandwidth_hz / 2.0


def tick_frequency(hops_hz: np.ndarray, slope_hz_per_s: float = TICK_SLOPE_HZ_PER_S,
                   dwell_s: float = TICK_DWELL_S, transition_s: float = TICK_TRANSITION_S,
                   t0: float = 0.0, n: int = SNAPSHOT_LEN) -> np.ndarray:
    """Dwell at ``hops_hz[k]`` then ramp with ``slope`` until the next hop."""
    period = dwell_s + transition_s
    t = _time(n) + t0
    k = np.floor(t / period).astype(int)
    if k.max() >= len(hops_hz):
        raise ValueError("not enough hop frequencies for the snapshot")
    local = t - k * period
    f = np.asarray(hops_hz, dtype=float)[k]
    ramp = local > dwell_s
    return np.where(ramp, f + slope_hz_per_s * (local - dwell_s), f)


def synth_piecewise_chirp(kind: str, seed: int = 0, tick_slope_hz_per_s: float = TICK_SLOPE_HZ_PER_S) -> np.ndarray:
    rng = substream(seed, DOMAIN_PHASES)
    if kind in ("triangular", "triangular_wave", "hook"):
        bw, periods = PIECEWISE_SHAPES[kind]
        fc = _center_offset(rng, bw)
        t0 = rng.uniform(0.0, SNAPSHOT_S / periods)
        phi0 = rng.uniform(0.0, 2.0 * np.pi)
        if kind == "hook":
            f = hook_frequency(bw, periods, t0=t0)
        else:
            f = triangular_frequency(bw, periods, t0=t0)
        return phase_from_frequency(f + fc, phi0)
    if kind == "tick":
        period = TICK_DWELL_S + TICK_TRANSITION_S
        n_hops = int(math.ceil(2 * SNAPSHOT_S / period)) + 1
        span = TICK_HOP_SPAN_HZ
        hops = rng.uniform(-span / 2.0, span / 2.0 - tick_slope_hz_per_s * TICK_TRANSITION_S, n_hops)
        t0 = rng.uniform(0.0, period)
        phi0 = rng.uniform(0.0, 2.0 * np.pi)
        return phase_from_frequency(tick_frequency(hops, tick_slope_hz_per_s, t0=t0), phi0)
    raise ValueError(f"unknown piecewise chirp kind {kind!r}")


# ---------------------------------------------------------------------------
# pulses, hopping, tones, noise


def pulse_pair_envelope(t_first_s: float, n: int = SNAPSHOT_LEN,
                        sigma_s: float = PULSE_SIGMA_S, spacing_s: float = PULSE_SPACING_S) -> np.ndarray:
    t = _time(n)
    return np.exp(-((t - t_first_s) ** 2) / (2 * sigma_s**2)) + np.exp(-((t - t_first_s - spacing_s) ** 2) / (2 * sigma_s**2))


def synth_pulse_jamming(seed: int = 0, mean_pairs: float = PULSE_MEAN_PAIRS) -> np.ndarray:
    """Gaussian pulse pairs with Poisson arrivals; redraws until at least one pair lands."""
    arr = substream(seed, DOMAIN_ARRIVALS)
    ph = substream(seed, DOMAIN_PHASES)
    n_pairs = 0
    while n_pairs == 0:
        n_pairs = int(arr.poisson(mean_pairs))
    starts = arr.uniform(0.0, SNAPSHOT_S - PULSE_SPACING_S, n_pairs)
    fc = ph.uniform(-CARRIER_OFFSET_MAX_HZ, CARRIER_OFFSET_MAX_HZ)
    phases = ph.uniform(0.0, 2.0 * np.pi, n_pairs)
    x = np.zeros(SNAPSHOT_LEN, dtype=complex)
    for t0, phi in zip(starts, phases):
        x += pulse_pair_envelope(t0) * np.exp(1j * phi)
    return unit_power(x * np.exp(2j * np.pi * fc * _time()))


def hop_channels(bandwidth_hz: float, n_channels: int) -> np.ndarray:
    return -bandwidth_hz / 2.0 + (np.arange(n_channels) + 0.5) * bandwidth_hz / n_channels


def synth_freq_hopping(bandwidth_hz: float = 6e6, dwell_s: float = 5e-6, n_channels: int = 16,
                       seed: int = 0) -> np.ndarray:
    dwell = int(round(dwell_s * SAMPLE_RATE_HZ))
    if dwell <= 0 or SNAPSHOT_LEN % dwell:
        raise ValueError(f"dwell of {dwell} samples does not divide the {SNAPSHOT_LEN}-sample snapshot")
    n_hops = SNAPSHOT_LEN // dwell
    rng = substream(seed, DOMAIN_PHASES)
    chans = hop_channels(bandwidth_hz, n_channels)
    picks = rng.integers(0, n_channels, n_hops)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_hops)
    f = np.repeat(chans[picks], dwell)
    phi = np.repeat(phases, dwell)
    return np.exp(1j * (2.0 * np.pi * f * _time() + phi))


def synth_cwi(n_tones: int = 1, seed: int = 0) -> np.ndarray:
    if n_tones < 1:
        raise ValueError("n_tones must be >= 1")
    rng = substream(seed, DOMAIN_PHASES)
    freqs = rng.uniform(-CWI_MAX_OFFSET_HZ, CWI_MAX_OFFSET_HZ, n_tones)
    phases = rng.uniform(0.0, 2.0 * np.pi, n_tones)
    t = _time()
    x = np.exp(1j * (2.0 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])).sum(axis=0)
    return unit_power(x)


def butterworth_sos(bandwidth_hz: float, order: int = BLGNI_ORDER) -> np.ndarray:
    return sps.butter(order, bandwidth_hz / 2.0, btype="low", fs=SAMPLE_RATE_HZ, output="sos")


def synth_blgni(bandwidth_hz: float = 3e6, seed: int = 0, carrier_hz: float | None = None) -> np.ndarray:
    """Complex white Gaussian noise through a causal Butterworth low-pass, then shifted."""
    if not 0 < bandwidth_hz < SAMPLE_RATE_HZ:
        raise ValueError("bandwidth must be inside (0, fs)")
    sym = substream(seed, DOMAIN_SYMBOLS)
    ph = substream(seed, DOMAIN_PHASES)
    m = SNAPSHOT_LEN + BLGNI_BURN_IN
    white = (sym.standard_normal(m) + 1j * sym.standard_normal(m)) / np.sqrt(2.0)
    y = sps.sosfilt(butterworth_sos(bandwidth_hz), white)[BLGNI_BURN_IN:]
    fc = ph.uniform(-CARRIER_OFFSET_MAX_HZ, CARRIER_OFFSET_MAX_HZ) if carrier_hz is None else carrier_hz
    return unit_power(y * np.exp(2j * np.pi * fc * _time()))


# ---------------------------------------------------------------------------
# GNSS


def ca_code(prn_taps: tuple[int, int] = (2, 6)) -> np.ndarray:
    """GPS C/A Gold code as +/-1 chips (default taps give PRN 1)."""
    g1 = [1] * 10
    g2 = [1] * 10
    out = np.empty(CA_LENGTH, dtype=np.int8)
    for i in range(CA_LENGTH):
        bit = g1[9] ^ g2[prn_taps[0] - 1] ^ g2[prn_taps[1] - 1]
        out[i] = 1 - 2 * bit
        f1 = g1[2] ^ g1[9]
        f2 = g2[1] ^ g2[2] ^ g2[5] ^ g2[7] ^ g2[8] ^ g2[9]
        g1 = [f1] + g1[:9]
        g2 = [f2] + g2[:9]
    return out


_CA_PRN1 = ca_code()


def ca_chips_at_samples(code_phase_chips: float = 0.0, n: int = SNAPSHOT_LEN) -> np.ndarray:
    idx = np.floor(_time(n) * CA_CHIP_RATE_HZ + code_phase_chips).astype(int) % CA_LENGTH
    return _CA_PRN1[idx].astype(float)


def synth_gnss_ca(seed: int = 0, power: float = 1.0) -> np.ndarray:
    rng = substream(seed, DOMAIN_GNSS)
    code_phase = rng.uniform(0.0, CA_LENGTH)
    doppler = rng.uniform(-GNSS_DOPPLER_MAX_HZ, GNSS_DOPPLER_MAX_HZ)
    theta = rng.uniform(0.0, 2.0 * np.pi)
    a = math.sqrt(power)
    return a * ca_chips_at_samples(code_phase) * np.exp(1j * (2.0 * np.pi * doppler * _time() + theta))


# ---------------------------------------------------------------------------
# dispatch and composition


def generate_jamming(jclass: JammingClass, seed: int) -> np.ndarray:
    """Unit-power waveform for ``jclass``."""
    p = jclass.params
    fam = jclass.family
    if fam is Family.DMI:
        return synth_dmi(p["constellation"], seed)
    if fam is Family.LFM:
        return synth_lfm(p["bandwidth_hz"], p["sweep_rate"], p["shape"], seed)
    if fam is Family.NLFM:
        return synth_sin_chirp(p["bandwidth_hz"], p["rate"], seed)
    if fam is Family.PIECEWISE:
        return synth_piecewise_chirp(p["kind"], seed)
    if fam is Family.PULSE:
        return synth_pulse_jamming(seed)
    if fam is Family.HOPPING:
        return synth_freq_hopping(p["bandwidth_hz"], p["dwell_s"], p["n_channels"], seed)
    if fam is Family.CW:
        return synth_cwi(p["n_tones"], seed)
    if fam is Family.NOISE_LIKE:
        return synth_blgni(p["bandwidth_hz"], seed)
    raise ValueError(f"no generator for family {fam}")


def awgn(seed: int, power: float, n: int = SNAPSHOT_LEN) -> np.ndarray:
    rng = substream(seed, DOMAIN_NOISE)
    return np.sqrt(power / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def compose_components(jclass: JammingClass, budget: LinkBudget, sample_idx: int,
                       jamming: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
    """Return ``(gnss, scaled_jamming, noise, seed)`` for one snapshot."""
    budget.check()
    seed = derive_seed(jclass.id, jsr_index(budget.jsr_db), sample_idx)
    s = synth_gnss_ca(seed, budget.signal_power)
    j_unit = generate_jamming(jclass, seed) if jamming is None else jamming
    j = np.sqrt(budget.jamming_power) * j_unit
    n = awgn(seed, budget.noise_power)
    return s, j, n, seed


def compose_snapshot(jclass: JammingClass | int | str, budget: LinkBudget | float, sample_idx: int) -> SnapshotRecord:
    jclass = jclass if isinstance(jclass, JammingClass) else get_class(jclass)
    budget = budget if isinstance(budget, LinkBudget) else LinkBudget(float(budget))
    s, j, n, seed = compose_components(jclass, budget, sample_idx)
    # stored snapshots are complex64, matching the on-disk float32 I/Q
    return SnapshotRecord((s + j + n).astype(np.complex64), jclass.id, budget.jsr_db, seed, sample_idx)
