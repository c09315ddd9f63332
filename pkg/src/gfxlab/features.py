"""Mel power-spectrogram features: a 2 s clip becomes an 87x128 matrix.

Pipeline: 1024-sample Hann windows (23.2 ms) with hop 512 give 171 frames
for an unpadded 2 s clip at 44.1 kHz; power spectra are projected onto 128
triangular mel filters spanning 0-22050 Hz; adjacent frame pairs are then
mean-pooled (ceil(171/2) = 86) and the final frame repeated once to reach
the 87-frame network input; log(1 + p) compresses the dynamic range.

The filterbank is fixed by (sample rate, bands, range, mel scale); its
checksum travels with every trained model so evaluation can refuse a
silently different feature pipeline.
"""

import hashlib

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import SAMPLE_RATE

FRAME_LEN = 1024
HOP = 512
N_MELS = 128
N_FRAMES = 87
FMIN = 0.0
FMAX = 22050.0


def hann_window(n=FRAME_LEN):
    # periodic Hann, the STFT convention
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft_power(x, sample_rate=SAMPLE_RATE):
    """Hann-windowed magnitude-squared spectra: [frames, 513] for 44.1 kHz."""
    if sample_rate != SAMPLE_RATE:
        raise ValueError(f"expected {SAMPLE_RATE} Hz input, got {sample_rate}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) < FRAME_LEN:
        raise ValueError(f"input shorter than one {FRAME_LEN}-sample window")
    frames = sliding_window_view(x, FRAME_LEN)[::HOP]
    spec = np.fft.rfft(frames * hann_window(), axis=1)
    return np.square(np.abs(spec))


def _hz_to_mel(f):
    # Slaney scale: linear below 1 kHz, logarithmic above
    f = np.asarray(f, dtype=np.float64)
    mel = 3.0 * f / 200.0
    log_region = f >= 1000.0
    mel = np.where(log_region, 15.0 + np.log(np.maximum(f, 1e-12) / 1000.0) * (27.0 / np.log(6.4)), mel)
    return mel


def _mel_to_hz(m):
    m = np.asarray(m, dtype=np.float64)
    f = 200.0 * m / 3.0
    log_region = m >= 15.0
    return np.where(log_region, 1000.0 * np.exp(np.log(6.4) * (m - 15.0) / 27.0), f)


def mel_filterbank(sample_rate=SAMPLE_RATE, n_fft=FRAME_LEN, n_mels=N_MELS,
                   fmin=FMIN, fmax=FMAX):
    """Triangular filters [n_mels, n_fft//2 + 1], peak 1, covering fmin..fmax."""
    bin_hz = np.arange(n_fft // 2 + 1) * sample_rate / n_fft
    corners = _mel_to_hz(np.linspace(_hz_to_mel(fmin), _hz_to_mel(fmax), n_mels + 2))
    fb = np.zeros((n_mels, len(bin_hz)))
    for i in range(n_mels):
        lo, mid, hi = corners[i], corners[i + 1], corners[i + 2]
        rising = (bin_hz - lo) / max(mid - lo, 1e-9)
        falling = (hi - bin_hz) / max(hi - mid, 1e-9)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, 1.0)
    return fb


_FILTERBANK = None


def filterbank():
    global _FILTERBANK
    if _FILTERBANK is None:
        _FILTERBANK = mel_filterbank()
    return _FILTERBANK


def filterbank_checksum():
    """Identifies the full feature recipe, not just the filter weights."""
    h = hashlib.sha256()
    h.update(f"sr={SAMPLE_RATE};frame={FRAME_LEN};hop={HOP};mels={N_MELS};"
             f"range={FMIN}-{FMAX};frames={N_FRAMES};mel=slaney;comp=log1p".encode())
    h.update(filterbank().tobytes())
    return h.hexdigest()[:16]


def mel_project(power):
    """Project [frames, 513] power spectra onto the mel filterbank."""
    fb = filterbank()
    if power.ndim != 2 or power.shape[1] != fb.shape[1]:
        raise ValueError(f"expected [frames, {fb.shape[1]}] power grid, got {power.shape}")
    return power @ fb.T


def _pool_to_frames(mel, n_out=N_FRAMES):
    """Mean-pool adjacent frame pairs, then repeat the last frame to n_out."""
    n = mel.shape[0]
    pairs = n // 2
    pooled = 0.5 * (mel[0:2 * pairs:2] + mel[1:2 * pairs:2])
    if n % 2:
        pooled = np.vstack([pooled, mel[-1:]])
    while pooled.shape[0] < n_out:
        pooled = np.vstack([pooled, pooled[-1:]])
    if pooled.shape[0] != n_out:
        raise ValueError(f"framing produced {pooled.shape[0]} frames, wanted {n_out}")
    return pooled


def featurize(x, sample_rate=SAMPLE_RATE):
    """2 s audio -> float32 [87, 128] log mel power-spectrogram."""
    mel = mel_project(stft_power(x, sample_rate))
    return np.log1p(_pool_to_frames(mel)).astype(np.float32)


class FeatureCache:
    """Per-clip feature blobs keyed by the audio file's checksum.

    Blob format: row-major little-endian float32, 87*128 values.
    """

    def __init__(self, cache_dir):
        from pathlib import Path

        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key_for(path):
        with open(path, "rb") as fh:
            return hashlib.sha256(fh.read()).hexdigest()[:32]

    def _blob(self, key):
        return self.dir / f"{key}.f32"

    def load(self, key):
        blob = self._blob(key)
        if not blob.exists():
            return None
        data = np.fromfile(blob, dtype="<f4")
        if data.size != N_FRAMES * N_MELS:
            return None
        return data.reshape(N_FRAMES, N_MELS)

    def store(self, key, features):
        if features.shape != (N_FRAMES, N_MELS):
            raise ValueError(f"bad feature shape {features.shape}")
        features.astype("<f4").tofile(self._blob(key))
