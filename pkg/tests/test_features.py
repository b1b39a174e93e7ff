import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.signal import get_window

from jamlab import features as ft
from jamlab import synthesis as syn


def test_frame_count():
    assert ft.n_frames(4000) == 289
    assert ft.stft(np.ones(4000, dtype=complex)).shape == (289, 256)


def test_short_signal_rejected():
    with pytest.raises(ValueError):
        ft.stft(np.ones(100, dtype=complex))


def test_bin_aligned_tone_single_column():
    k = 37
    n = np.arange(4000)
    x = np.exp(2j * np.pi * k * n / 256)
    mag = np.abs(ft.stft(x))
    cols = np.argmax(mag, axis=1)
    assert np.all(cols == 128 + k)


def test_parseval_per_frame(rng):
    x = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
    S = ft.stft(x)
    w = get_window("hamming", 256)
    for m in range(S.shape[0]):
        seg = x[m * 13:m * 13 + 256] * w
        lhs = np.sum(np.abs(S[m]) ** 2)
        rhs = 256 * np.sum(np.abs(seg) ** 2)
        assert abs(lhs - rhs) / rhs < 1e-6


def test_normalize_exact_bounds(rng):
    x = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
    out = ft.log_psd_normalize(ft.stft(x))
    assert not out.degenerate
    assert out.values.min() == 0.0 and out.values.max() == 1.0


def test_normalize_degenerate():
    out = ft.log_psd_normalize(np.full((5, 4), 3.0 + 4.0j))
    assert out.degenerate
    assert np.array_equal(out.values, np.zeros((5, 4)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 7), elements=st.floats(1e-3, 1e3)))
def test_normalize_preserves_order(mag):
    v = ft.log_psd_normalize(mag).values
    a = mag.ravel() ** 2
    b = v.ravel()
    i, j = np.triu_indices(len(a), 1)
    strict = a[i] < a[j]
    assert np.all(b[i][strict] <= b[j][strict])


def test_resize_constant_and_identity(rng):
    assert np.allclose(ft.resize_bilinear(np.full((289, 256), 0.5)), 0.5)
    img = rng.random((224, 224))
    assert np.array_equal(ft.resize_bilinear(img), img)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 40), st.integers(2, 40)), elements=st.floats(-5, 5)))
def test_resize_within_source_range(img):
    out = ft.resize_bilinear(img, 17, 23)
    assert out.shape == (17, 23)
    assert out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12


def test_resize_corners_aligned(rng):
    img = rng.random((289, 256))
    out = ft.resize_bilinear(img)
    assert out[0, 0] == img[0, 0] and out[-1, -1] == img[-1, -1]


def test_spectrogram_image_contract(rng):
    x = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
    img = ft.spectrogram_image(x)
    assert img.shape == (224, 224) and img.dtype == np.float32
    # extremes of the 289x256 grid need not land on resampled points
    assert 0.0 <= img.min() and img.max() <= 1.0
    norm = ft.log_psd_normalize(ft.stft(x)).values
    assert norm.min() == 0.0 and norm.max() == 1.0


def test_write_pgm(tmp_path):
    img = np.linspace(0, 1, 224 * 224).reshape(224, 224)
    p = tmp_path / "a.pgm"
    ft.write_pgm(img, p)
    raw = p.read_bytes()
    assert raw.startswith(b"P5\n224 224\n255\n")
    data = np.frombuffer(raw[len(b"P5\n224 224\n255\n"):], dtype=np.uint8)
    assert data[0] == 0 and data[-1] == 255 and data.size == 224 * 224


def test_stats_cwi():
    s = ft.compute_stats(syn.synth_cwi(1, 2))
    assert s[4] == pytest.approx(1.0, abs=1e-9)
    assert s[5] == pytest.approx(0.0, abs=1e-9)


def test_stats_white_noise_flatness(rng):
    for _ in range(10):
        x = rng.standard_normal(4000) + 1j * rng.standard_normal(4000)
        assert ft.compute_stats(x)[3] > 0.8


def test_stats_centroid_tracks_tone():
    n = np.arange(4000)
    x = np.exp(2j * np.pi * 5e6 * n / 40e6)
    s = ft.compute_stats(x)
    assert s[0] == pytest.approx(5e6, rel=0.01)
    assert s[1] < 0.5e6


def test_stats_pulse_vs_cw():
    cw = ft.compute_stats(syn.synth_cwi(1, 2))[4]
    t = np.arange(4000) / 40e6
    single = syn.pulse_pair_envelope(37e-6) * np.exp(2j * np.pi * 1.3e6 * t)
    pj = ft.compute_stats(single)[4]
    assert pj > 10 * cw


def test_stats_zero_signal():
    with pytest.raises(ValueError):
        ft.compute_stats(np.zeros(4000, dtype=complex))


def test_normalize_iq(rng):
    x = 3 + 5 * (rng.standard_normal(4000) + 1j * rng.standard_normal(4000))
    iq = ft.normalize_iq(x)
    assert iq.shape == (2, 4000) and iq.dtype == np.float32
    assert abs(iq[0].mean()) < 1e-5 and abs(iq[1].mean()) < 1e-5
    assert np.mean(iq[0] ** 2 + iq[1] ** 2) == pytest.approx(1.0, rel=1e-5)
