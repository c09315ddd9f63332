"""First-order digital filters via the bilinear transform.

Coefficients are derived from the analog prototypes with prewarping
(K = tan(pi * fc / fs)) and run through scipy's lfilter with zero initial
state, so every call is independent and deterministic.
"""

import numpy as np
from scipy.signal import lfilter


def lowpass_coeffs(fc, fs):
    k = np.tan(np.pi * fc / fs)
    b = np.array([k, k]) / (k + 1.0)
    a = np.array([1.0, (k - 1.0) / (k + 1.0)])
    return b, a


def highpass_coeffs(fc, fs):
    k = np.tan(np.pi * fc / fs)
    b = np.array([1.0, -1.0]) / (k + 1.0)
    a = np.array([1.0, (k - 1.0) / (k + 1.0)])
    return b, a


def highshelf_coeffs(fc, fs, gain_db):
    """Unity gain below fc, 10^(gain_db/20) above."""
    g = 10.0 ** (gain_db / 20.0)
    k = np.tan(np.pi * fc / fs)
    b = np.array([g + k, k - g]) / (1.0 + k)
    a = np.array([1.0, (k - 1.0) / (1.0 + k)])
    return b, a


def lowpass(x, fc, fs):
    b, a = lowpass_coeffs(fc, fs)
    return lfilter(b, a, x)


def highpass(x, fc, fs):
    b, a = highpass_coeffs(fc, fs)
    return lfilter(b, a, x)


def highshelf(x, fc, fs, gain_db):
    b, a = highshelf_coeffs(fc, fs, gain_db)
    return lfilter(b, a, x)


def onepole_envelope(x, fs, tau_s):
    """Envelope follower: one-pole smoothing of |x| with time constant tau."""
    c = float(np.exp(-1.0 / (tau_s * fs)))
    return lfilter([1.0 - c], [1.0, -c], np.abs(x))
