import numpy as np
import pytest

from gfxlab import SAMPLE_RATE
from gfxlab.errors import NumericalError
from gfxlab.synth import NoteSpec, midi_to_hz, mix_poly, normalize_peak, synth_note


def pitch_hz(x, sr=SAMPLE_RATE, fmin=60.0, fmax=700.0):
    """Fundamental via the autocorrelation peak (computed with an FFT),
    refined by quadratic interpolation. Independent of the synthesis loop
    and robust against the bright harmonics of a bridge-pickup pluck."""
    x = np.asarray(x) - np.mean(x)
    n = len(x)
    spec = np.fft.rfft(x, 2 * n)
    r = np.fft.irfft(spec * np.conj(spec))[:n]
    lag_lo, lag_hi = int(sr / fmax), int(np.ceil(sr / fmin))
    k = int(np.argmax(r[lag_lo:lag_hi + 1]) + lag_lo)
    a, b, c = r[k - 1], r[k], r[k + 1]
    denom = a - 2 * b + c
    delta = 0.5 * (a - c) / denom if denom != 0 else 0.0
    return sr / (k + delta)


@pytest.mark.parametrize("midi,hz", [(69, 440.0), (40, midi_to_hz(40)), (64, midi_to_hz(64)), (76, midi_to_hz(76))])
def test_fundamental_within_one_percent(midi, hz):
    y = synth_note(NoteSpec(midi_pitch=midi), seed=0)
    got = pitch_hz(y)
    assert abs(got - hz) / hz < 0.01, f"midi {midi}: {got:.2f} Hz vs {hz:.2f} Hz"


def test_e2_is_82hz():
    assert abs(midi_to_hz(40) - 82.4069) < 1e-3


def test_deterministic_given_spec_and_seed():
    spec = NoteSpec(midi_pitch=52, pluck_style="soft", pickup="neck", guitar_variant="B")
    a = synth_note(spec, seed=7)
    b = synth_note(spec, seed=7)
    assert np.array_equal(a, b)
    c = synth_note(spec, seed=8)
    assert not np.array_equal(a, c)


def test_note_length_and_range():
    y = synth_note(NoteSpec(midi_pitch=60), seed=1)
    assert len(y) == 88200
    assert np.abs(y).max() <= 0.9 + 1e-9


def test_energy_starts_at_zero_time():
    y = synth_note(NoteSpec(midi_pitch=60), seed=2)
    head = y[: int(0.01 * SAMPLE_RATE)]
    assert np.abs(head).max() > 0.01  # excitation is present immediately


def test_pitch_out_of_range_rejected():
    with pytest.raises(ValueError):
        synth_note(NoteSpec(midi_pitch=39))
    with pytest.raises(ValueError):
        synth_note(NoteSpec(midi_pitch=77))


def test_styles_differ():
    soft = synth_note(NoteSpec(midi_pitch=57, pluck_style="soft"), seed=0)
    hard = synth_note(NoteSpec(midi_pitch=57, pluck_style="hard"), seed=0)
    muted = synth_note(NoteSpec(midi_pitch=57, pluck_style="muted"), seed=0)
    assert not np.array_equal(soft, hard)
    # muted notes decay much faster
    tail = slice(SAMPLE_RATE, None)
    assert np.abs(muted[tail]).max() < 0.1 * np.abs(hard[tail]).max()


def test_mix_with_silence_halves():
    buf = synth_note(NoteSpec(midi_pitch=50), seed=3)
    out = mix_poly([buf, np.zeros_like(buf)])
    np.testing.assert_allclose(out, buf / 2)


def test_three_note_mix_shows_all_fundamentals():
    pitches = [40, 45, 50]  # E2, A2, D3
    notes = [synth_note(NoteSpec(midi_pitch=p), seed=4) for p in pitches]
    mix = mix_poly(notes)
    mag = np.abs(np.fft.rfft(mix * np.hanning(len(mix))))
    df = SAMPLE_RATE / len(mix)
    floor = np.median(mag)
    for p in pitches:
        k = int(round(midi_to_hz(p) / df))
        window = mag[k - 3: k + 4].max()
        assert window > 50 * floor, f"fundamental of midi {p} missing"


def test_mix_arity_and_shape_errors():
    buf = np.zeros(100)
    with pytest.raises(ValueError):
        mix_poly([buf])
    with pytest.raises(ValueError):
        mix_poly([buf] * 5)
    with pytest.raises(ValueError):
        mix_poly([buf, np.zeros(99)])


def test_normalize_peak_closed_form():
    x = np.zeros(100)
    x[3] = 0.25
    out = normalize_peak(x)
    assert abs(np.abs(out).max() - 0.5011872336272722) < 1e-6


def test_normalize_peak_fixed_point():
    x = np.zeros(50)
    x[0] = 10 ** (-6 / 20)
    out = normalize_peak(x)
    np.testing.assert_allclose(out, x, atol=1e-6)


def test_normalize_silence_errors():
    with pytest.raises(NumericalError):
        normalize_peak(np.zeros(10))
