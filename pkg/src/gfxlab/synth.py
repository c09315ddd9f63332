"""Plucked-string synthesis for clean source notes.

Karplus-Strong: a seeded noise burst circulates in a tuned delay line
through a two-tap averaging damping filter (fixed 0.5-sample phase delay,
so the loop length L + 0.5 sets the pitch). Pluck style shapes the
excitation and damping, the pickup position applies the classic comb
filter, and the guitar variant changes body damping and color.
"""

from dataclasses import dataclass

import numpy as np

from . import CLIP_SECONDS, SAMPLE_RATE, filters
from .errors import NumericalError

MIDI_MIN, MIDI_MAX = 40, 76  # E2..E5, the common 6-string range

PLUCK_STYLES = ("soft", "hard", "muted")
PICKUPS = ("bridge", "neck")
VARIANTS = ("A", "B")

_PICKUP_FRAC = {"bridge": 0.12, "neck": 0.35}
# loop damping per (style, variant)
_DAMPING = {
    ("soft", "A"): 0.9970, ("soft", "B"): 0.9940,
    ("hard", "A"): 0.9965, ("hard", "B"): 0.9935,
    ("muted", "A"): 0.9500, ("muted", "B"): 0.9400,
}


@dataclass(frozen=True)
class NoteSpec:
    midi_pitch: int
    pluck_style: str = "hard"
    pickup: str = "bridge"
    guitar_variant: str = "A"

    def key(self):
        return f"m{self.midi_pitch:03d}-{self.pluck_style}-{self.pickup}-{self.guitar_variant}"


def midi_to_hz(midi_pitch):
    return 440.0 * 2.0 ** ((midi_pitch - 69) / 12.0)


def _validate(spec):
    if not MIDI_MIN <= spec.midi_pitch <= MIDI_MAX:
        raise ValueError(
            f"midi pitch {spec.midi_pitch} outside playable range "
            f"[{MIDI_MIN}, {MIDI_MAX}]")
    if spec.pluck_style not in PLUCK_STYLES:
        raise ValueError(f"unknown pluck style {spec.pluck_style!r}")
    if spec.pickup not in PICKUPS:
        raise ValueError(f"unknown pickup {spec.pickup!r}")
    if spec.guitar_variant not in VARIANTS:
        raise ValueError(f"unknown guitar variant {spec.guitar_variant!r}")


def _excitation(spec, length, rng):
    noise = rng.uniform(-1.0, 1.0, size=length)
    if spec.pluck_style == "soft":
        # two moving-average passes darken the attack
        noise = np.convolve(noise, [0.25, 0.5, 0.25], mode="same")
        noise = np.convolve(noise, [0.25, 0.5, 0.25], mode="same")
    elif spec.pluck_style == "muted":
        noise = np.convolve(noise, [0.5, 0.5], mode="same")
    if spec.guitar_variant == "B":
        noise = np.convolve(noise, [0.6, 0.4], mode="same")
    # pick-position comb: cancel harmonics whose node sits under the pickup
    delay = max(1, int(round(_PICKUP_FRAC[spec.pickup] * length)))
    combed = noise.copy()
    combed[delay:] -= noise[:-delay]
    return combed


def synth_note(spec, duration_s=CLIP_SECONDS, sample_rate=SAMPLE_RATE, seed=0):
    """Render one clean note; deterministic given (spec, seed)."""
    _validate(spec)
    f0 = midi_to_hz(spec.midi_pitch)
    # effective pitch is fs / (L + 0.5): the averaging filter adds half a sample
    loop_len = int(round(sample_rate / f0 - 0.5))
    total = int(round(duration_s * sample_rate))
    rng = np.random.default_rng(
        np.random.SeedSequence([seed, spec.midi_pitch,
                                PLUCK_STYLES.index(spec.pluck_style),
                                PICKUPS.index(spec.pickup),
                                VARIANTS.index(spec.guitar_variant)]))
    rho = _DAMPING[(spec.pluck_style, spec.guitar_variant)]

    # w[0] is a leading zero so the recurrence can look back L+1 samples
    w = np.zeros(total + 1)
    w[1:loop_len + 1] = _excitation(spec, loop_len, rng)
    half_rho = 0.5 * rho
    for start in range(loop_len + 1, total + 1, loop_len):
        end = min(start + loop_len, total + 1)
        w[start:end] = half_rho * (w[start - loop_len:end - loop_len]
                                   + w[start - loop_len - 1:end - loop_len - 1])
    y = w[1:]

    if spec.guitar_variant == "B":
        # a touch of body resonance distinguishes the second instrument
        y = y + 0.3 * filters.lowpass(y, 180.0, sample_rate)
    peak = np.abs(y).max()
    if peak > 0:
        y = y * (0.9 / peak)
    return y


def mix_poly(buffers):
    """Mix 2..4 equal-length note buffers: sample-wise mean."""
    if not 2 <= len(buffers) <= 4:
        raise ValueError(f"polyphonic mix needs 2..4 notes, got {len(buffers)}")
    lengths = {len(b) for b in buffers}
    if len(lengths) != 1:
        raise ValueError(f"buffers differ in length: {sorted(lengths)}")
    out = np.zeros(lengths.pop())
    for b in buffers:
        out += np.asarray(b, dtype=np.float64)
    out /= len(buffers)
    if np.abs(out).max() > 1.0:
        raise ValueError("mixed buffer exceeds full scale")
    return out


def normalize_peak(x, target_dbfs=-6.0):
    """Scale so the peak sits at 10^(target_dbfs/20)."""
    x = np.asarray(x, dtype=np.float64)
    peak = np.abs(x).max() if x.size else 0.0
    if peak == 0.0:
        raise NumericalError("cannot normalize an all-zero buffer")
    return x * (10.0 ** (target_dbfs / 20.0) / peak)
