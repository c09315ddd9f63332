import numpy as np
import pytest

from gfxlab import SAMPLE_RATE
from gfxlab.features import (
    FRAME_LEN, HOP, N_FRAMES, N_MELS, FeatureCache, _mel_to_hz, _hz_to_mel,
    featurize, filterbank, filterbank_checksum, hann_window, mel_project,
    stft_power,
)


def two_second_sine(freq, amp=0.25):
    t = np.arange(88200) / SAMPLE_RATE
    return amp * np.sin(2 * np.pi * freq * t)


def test_stft_frame_count_for_two_seconds():
    power = stft_power(np.zeros(88200))
    assert power.shape == ((88200 - FRAME_LEN) // HOP + 1, FRAME_LEN // 2 + 1)
    assert power.shape == (171, 513)


def test_featurize_shape_and_dtype():
    feats = featurize(two_second_sine(440))
    assert feats.shape == (N_FRAMES, N_MELS) == (87, 128)
    assert feats.dtype == np.float32
    assert (feats >= 0).all()


def test_zero_input_gives_zero_features():
    assert stft_power(np.zeros(88200)).max() == 0.0
    feats = featurize(np.zeros(88200))
    assert np.array_equal(feats, np.zeros((87, 128), np.float32))


def test_dc_energy_stays_in_lowest_bins():
    power = stft_power(np.ones(88200))
    for frame in power[::40]:
        assert frame.argmax() == 0
        # Hann windowing spreads a constant into bins 0 and 1 only
        assert frame[2:].max() < 1e-12 * frame[0]


def test_windowed_sine_power_matches_window_energy():
    # bin-centered frequency, away from DC and Nyquist
    freq = 32 * SAMPLE_RATE / FRAME_LEN
    amp = 0.5
    power = stft_power(two_second_sine(freq, amp))
    w = hann_window()
    predicted = FRAME_LEN * amp ** 2 * np.sum(w ** 2) / 4.0
    measured = power[80].sum()
    assert abs(measured - predicted) / predicted < 0.05


def test_doubling_amplitude_never_decreases_features():
    x = two_second_sine(300, 0.2) + two_second_sine(2000, 0.05)
    lo = featurize(x)
    hi = featurize(2 * x)
    assert (hi >= lo).all()


def test_too_short_input_rejected():
    with pytest.raises(ValueError):
        stft_power(np.zeros(FRAME_LEN - 1))
    with pytest.raises(ValueError):
        stft_power(np.zeros((2, 88200)))


def test_filterbank_shape_and_coverage():
    fb = filterbank()
    assert fb.shape == (128, 513)
    assert (fb.sum(axis=1) > 0).all()  # every filter carries weight
    assert (fb >= 0).all()


def test_mel_scale_roundtrip():
    f = np.array([0.0, 440.0, 999.0, 1000.0, 8000.0, 22050.0])
    np.testing.assert_allclose(_mel_to_hz(_hz_to_mel(f)), f, rtol=1e-9, atol=1e-6)


def test_sine_peaks_at_nearest_mel_band():
    freq = 440.0
    corners = _mel_to_hz(np.linspace(_hz_to_mel(0.0), _hz_to_mel(22050.0), N_MELS + 2))
    centers = corners[1:-1]
    want = int(np.argmin(np.abs(centers - freq)))
    feats = featurize(two_second_sine(freq))
    got = int(feats.mean(axis=0).argmax())
    assert abs(got - want) <= 1, (got, want, centers[got])


def test_mel_project_validates_bins():
    with pytest.raises(ValueError):
        mel_project(np.zeros((10, 100)))
    out = mel_project(np.zeros((4, 513)))
    assert out.shape == (4, 128)
    assert out.max() == 0.0


def test_pooling_averages_pairs_and_repeats_last():
    mel = np.arange(171, dtype=np.float64)[:, None] * np.ones((1, N_MELS))
    from gfxlab.features import _pool_to_frames
    pooled = _pool_to_frames(mel)
    assert pooled.shape == (87, N_MELS)
    np.testing.assert_allclose(pooled[0], 0.5)         # mean(0, 1)
    np.testing.assert_allclose(pooled[84], 168.5)      # mean(168, 169)
    np.testing.assert_allclose(pooled[85], 170.0)      # odd leftover frame
    np.testing.assert_allclose(pooled[86], 170.0)      # repeated final frame


def test_checksum_stable_and_parameter_sensitive():
    a = filterbank_checksum()
    assert a == filterbank_checksum()
    assert len(a) == 16


def test_feature_cache_roundtrip(tmp_path):
    cache = FeatureCache(tmp_path / "cache")
    feats = featurize(two_second_sine(220))
    cache.store("abc123", feats)
    loaded = cache.load("abc123")
    np.testing.assert_array_equal(loaded, feats)
    assert cache.load("missing") is None
    # corrupted blob is ignored rather than trusted
    (tmp_path / "cache" / "bad.f32").write_bytes(b"\x00" * 12)
    assert cache.load("bad") is None


def test_feature_cache_key_tracks_file_contents(tmp_path):
    f = tmp_path / "a.wav"
    f.write_bytes(b"hello")
    k1 = FeatureCache.key_for(f)
    f.write_bytes(b"world")
    assert FeatureCache.key_for(f) != k1
