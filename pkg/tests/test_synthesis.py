import math

import numpy as np
import pytest
from scipy import signal as sps

from jamlab import synthesis as syn
from jamlab.features import compute_stats, fourth_moment_ratio
from jamlab.synthesis import (
    CLASSES,
    SAMPLE_RATE_HZ,
    SNAPSHOT_LEN,
    Family,
    LinkBudget,
    compose_components,
    compose_snapshot,
    get_class,
)

FS = SAMPLE_RATE_HZ


def inst_freq(x):
    return np.diff(np.unwrap(np.angle(x))) * FS / (2 * np.pi)


def power_db(x):
    return 10 * np.log10(np.mean(np.abs(x) ** 2))


# -- class table and link budget

def test_class_table():
    assert len(CLASSES) == 21
    assert [c.id for c in CLASSES] == list(range(21))
    assert len({c.key for c in CLASSES}) == 21
    assert {c.family for c in CLASSES} == set(Family)
    assert get_class("cwi").id == get_class(19).id == 19
    with pytest.raises(KeyError):
        get_class("nope")


def test_link_budget_arithmetic():
    b = LinkBudget(30.0)
    assert b.noise_power_dbw == pytest.approx(-205 + 10 * math.log10(4e7), abs=1e-12)
    assert b.noise_power_dbw == pytest.approx(-128.98, abs=0.005)
    assert b.noise_to_signal_db == pytest.approx(28.02, abs=0.01)
    # jamming sits 18.02 dB under the noise at 10 dB JSR
    assert 10 - LinkBudget(10.0).noise_to_signal_db == pytest.approx(-18.02, abs=0.01)


def test_jsr_grid():
    assert list(syn.JSR_GRID_DB) == list(range(10, 51, 2))
    assert syn.jsr_index(10) == 0 and syn.jsr_index(50) == 20
    with pytest.raises(ValueError):
        syn.jsr_index(11)


# -- DMI

def test_constellation_moments():
    for name in syn.CONSTELLATIONS:
        pts = syn.constellation(name)
        assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert fourth_moment_ratio(syn.constellation("QPSK")) == pytest.approx(1.0, abs=1e-12)
    # brute-force enumeration of the 64 points
    lv = np.arange(-7, 8, 2)
    pts = (lv[:, None] + 1j * lv[None, :]).ravel()
    p = np.abs(pts) ** 2
    expected = np.mean(p**2) / np.mean(p) ** 2
    assert fourth_moment_ratio(syn.constellation("64QAM")) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(1.380952, abs=1e-6)
    assert len(syn.constellation("32QAM")) == 32 and len(syn.constellation("8QAM")) == 8


def test_constant_bpsk_stream_is_real_pulse_train():
    sym = np.ones(SNAPSHOT_LEN // 8 + 2 * syn.RRC_SPAN_SYMBOLS + 2, dtype=complex)
    y = syn.pulse_shape(sym, sps=8)
    h = syn.rrc_taps()
    up = np.zeros(len(sym) * 8)
    up[::8] = 1.0
    ref = np.convolve(up, h)[syn.RRC_SPAN_SYMBOLS * 8:][:SNAPSHOT_LEN]
    assert np.max(np.abs(y.imag)) == 0.0
    assert np.allclose(y.real, ref, atol=1e-12)


def test_rrc_unit_energy():
    assert np.sum(syn.rrc_taps() ** 2) == pytest.approx(1.0, abs=1e-12)


def test_dmi_rejects_unknown():
    with pytest.raises(ValueError):
        syn.synth_dmi("128QAM", 0)


# -- chirps

def test_lfm_zero_bandwidth_is_tone():
    x = syn.phase_from_frequency(syn.lfm_frequency(0.0, 5.0, f_start=1e6))
    n = np.arange(SNAPSHOT_LEN)
    ref = np.exp(2j * np.pi * 1e6 * n / FS)
    assert np.allclose(x, ref, atol=1e-9)


@pytest.mark.parametrize("key", ["lchirp_wide_slow", "lchirp_narrow", "saw_chirp", "sin_chirp", "hook_chirp",
                                 "triangular", "triangular_wave", "tick_chirp", "fh", "cwi"])
def test_constant_modulus(key):
    x = syn.generate_jamming(get_class(key), 99)
    assert np.max(np.abs(np.abs(x) - 1.0)) < 1e-9


def test_lfm_sweep_slope():
    bw, rate = 16e6, 2.0
    f = inst_freq(syn.phase_from_frequency(syn.lfm_frequency(bw, rate, f_start=-bw / 2)))
    period = int(SNAPSHOT_LEN / rate)
    seg = f[10:period - 10]
    slope = np.polyfit(np.arange(len(seg)) / FS, seg, 1)[0]
    assert slope == pytest.approx(bw / (syn.SNAPSHOT_S / rate), rel=0.01)


def test_lfm_rejects_bad_parameters():
    with pytest.raises(ValueError):
        syn.synth_lfm(41e6, 5.0)
    with pytest.raises(ValueError):
        syn.synth_lfm(10e6, 0.0)


def test_sin_chirp_excursion():
    bw, rate = 10e6, 5.0
    x = syn.synth_sin_chirp(bw, rate, seed=3)
    f = inst_freq(x)
    cycle = int(SNAPSHOT_LEN / rate)
    f = f[:cycle]
    assert (f.max() - f.min()) == pytest.approx(bw, rel=0.02)


def test_sin_chirp_zero_index_is_tone():
    x = syn.synth_sin_chirp(0.0, 5.0, seed=3)
    f = inst_freq(x)
    assert np.ptp(f) < 1.0


def test_triangular_palindrome():
    periods = 10
    n = int(SNAPSHOT_LEN / periods)
    f = syn.triangular_frequency(16e6, periods, n=SNAPSHOT_LEN)[:n]
    assert np.allclose(f[1:], f[1:][::-1], atol=1e-3)


def test_tick_zero_slope_is_piecewise_constant():
    hops = np.linspace(-4e6, 4e6, 20)
    f = syn.tick_frequency(hops, slope_hz_per_s=0.0)
    steps = np.flatnonzero(np.diff(f))
    period = int((syn.TICK_DWELL_S + syn.TICK_TRANSITION_S) * FS)
    assert len(steps) == len(np.unique(np.arange(SNAPSHOT_LEN) // period)) - 1
    assert set(np.unique(f)) <= set(hops)


def test_tick_dwell_constant_within_one_bin():
    rng = np.random.default_rng(0)
    hops = rng.uniform(-5e6, 1e6, 20)
    x = syn.phase_from_frequency(syn.tick_frequency(hops))
    dwell = int(syn.TICK_DWELL_S * FS)
    period = int((syn.TICK_DWELL_S + syn.TICK_TRANSITION_S) * FS)
    nfft = 64
    res = FS / nfft
    for k in range(SNAPSHOT_LEN // period):
        start = k * period
        win = x[start:start + dwell]
        peaks = []
        for o in range(0, dwell - nfft + 1, 32):
            spec = np.abs(np.fft.fft(win[o:o + nfft]))
            peaks.append(np.fft.fftfreq(nfft, 1 / FS)[np.argmax(spec)])
        assert np.ptp(peaks) <= res + 1e-6
        assert abs(peaks[0] - hops[k]) <= res


# -- pulses

def test_pulse_pair_geometry():
    t0 = 20e-6
    env = syn.pulse_pair_envelope(t0)
    split = int((t0 + 6e-6) * FS)
    first = np.argmax(env[:split])
    second = split + np.argmax(env[split:])
    assert abs((second - first) - syn.PULSE_SPACING_S * FS) <= 1
    # half amplitude at +-1.75 us around the first peak
    d = int(round(1.75e-6 * FS))
    assert env[first] / env[first + d] == pytest.approx(2.0, rel=0.02)
    assert env[first] / env[first - d] == pytest.approx(2.0, rel=0.02)


def test_pulse_papr_dominates_cw():
    cw = compute_stats(syn.synth_cwi(1, 5))[4]
    p = compute_stats(syn.pulse_pair_envelope(40e-6).astype(complex))[4]
    assert cw == pytest.approx(1.0, abs=1e-9)
    assert p / cw > 10


def test_pulse_zero_draw_resamples_deterministically():
    a = syn.synth_pulse_jamming(7, mean_pairs=0.05)
    b = syn.synth_pulse_jamming(7, mean_pairs=0.05)
    assert np.array_equal(a, b)
    assert np.mean(np.abs(a) ** 2) == pytest.approx(1.0)


# -- hopping

def test_hopping_segments_and_channels():
    x = syn.synth_freq_hopping(6e6, 5e-6, 16, seed=11)
    chans = syn.hop_channels(6e6, 16)
    segs = x.reshape(20, 200)
    assert segs.shape == (20, 200)
    nfft = 4096
    freqs = np.fft.fftfreq(nfft, 1 / FS)
    for s in segs:
        f = freqs[np.argmax(np.abs(np.fft.fft(s, nfft)))]
        nearest = chans[np.argmin(np.abs(chans - f))]
        assert abs(f - nearest) < FS / 200 / 2


def test_hopping_single_channel_is_cw_up_to_phase_jumps():
    x = syn.synth_freq_hopping(6e6, 5e-6, 1, seed=2)
    f = inst_freq(x)
    jumps = np.flatnonzero(np.abs(f - syn.hop_channels(6e6, 1)[0]) > 1.0)
    assert set((jumps + 1) % 200) <= {0}


def test_hopping_rejects_bad_dwell():
    with pytest.raises(ValueError):
        syn.synth_freq_hopping(6e6, 7e-6)


# -- CWI

def test_cwi_energy_concentration():
    x = syn.synth_cwi(1, seed=8)
    w = sps.get_window("hann", SNAPSHOT_LEN)
    spec = np.abs(np.fft.fft(x * w)) ** 2
    k = np.argmax(spec)
    top3 = spec[[(k - 1) % SNAPSHOT_LEN, k, (k + 1) % SNAPSHOT_LEN]].sum()
    assert top3 / spec.sum() >= 0.98
    assert compute_stats(x)[4] == pytest.approx(1.0, abs=1e-9)


# -- BLGNI

def test_blgni_out_of_band_suppression():
    bw = 3e6
    ps = []
    for s in range(20):
        x = syn.synth_blgni(bw, seed=s, carrier_hz=0.0)
        ps.append(np.abs(np.fft.fft(x)) ** 2)
    p = np.fft.fftshift(np.mean(ps, axis=0))
    f = np.fft.fftshift(np.fft.fftfreq(SNAPSHOT_LEN, 1 / FS))
    inband = p[np.abs(f) < bw / 2].mean()
    out = p[np.abs(f) >= 2 * bw].max()
    assert 10 * np.log10(inband / out) >= 40


def test_blgni_gaussian_moments():
    xs = [syn.synth_blgni(3e6, seed=s) for s in range(100)]
    k = np.mean([fourth_moment_ratio(x) for x in xs])
    assert k == pytest.approx(2.0, abs=0.1)
    re = np.concatenate([x.real for x in xs])
    excess = np.mean(re**4) / np.mean(re**2) ** 2 - 3.0
    assert abs(excess) < 0.3


# -- GNSS

def test_ca_code_autocorrelation():
    c = syn.ca_code().astype(float)
    corr = np.array([np.dot(c, np.roll(c, k)) for k in range(len(c))])
    assert corr[0] == 1023
    assert set(np.unique(corr[1:])) <= {-65.0, -1.0, 63.0}
    # three-valued Gold correlation bounds the peak ratio at 1023/65
    assert corr[0] / np.max(np.abs(corr[1:])) == pytest.approx(1023 / 65)


def test_gnss_chips_and_power():
    x = syn.synth_gnss_ca(seed=4, power=2.5)
    assert np.allclose(np.abs(x), math.sqrt(2.5))
    chips = syn.ca_chips_at_samples(12.3)
    assert set(np.unique(chips)) == {-1.0, 1.0}
    assert abs(power_db(x) - 10 * np.log10(2.5)) < 0.05


# -- composition

@pytest.mark.parametrize("cls", CLASSES, ids=lambda c: c.key)
def test_unit_power_jamming(cls):
    x = syn.generate_jamming(cls, 123456)
    assert x.shape == (SNAPSHOT_LEN,)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=1e-12)


def test_composer_scales_components():
    b = LinkBudget(24.0)
    s, j, n, seed = compose_components(get_class("cwi"), b, 3)
    assert np.mean(np.abs(j) ** 2) == pytest.approx(b.jamming_power, rel=1e-9)
    assert np.mean(np.abs(s) ** 2) == pytest.approx(1.0, rel=1e-12)
    assert abs(10 * np.log10(np.mean(np.abs(n) ** 2)) - b.noise_to_signal_db) < 0.2
    assert seed == syn.derive_seed(19, syn.jsr_index(24.0), 3)


def test_snapshot_regeneration_bit_identical():
    a = compose_snapshot("qam16", 30.0, 17)
    b = compose_snapshot(3, LinkBudget(30.0), 17)
    assert a.signal.dtype == np.complex64
    assert np.array_equal(a.signal.view(np.uint32), b.signal.view(np.uint32))
    assert a.seed == b.seed


def test_composer_rejects_off_nominal_budget():
    LinkBudget(30.0).check()
    bad = LinkBudget(30.0, gnss_power_dbw=-160.0)
    with pytest.raises(ValueError):
        bad.check()
    with pytest.raises(ValueError):
        syn.compose_components(get_class("cwi"), bad, 0)
