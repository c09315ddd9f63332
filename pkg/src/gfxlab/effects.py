"""Parametric models of 13 overdrive/distortion/fuzz pedals.

The bank mirrors the family relationships of the emulated circuits: 808 and
TS9 are the same circuit (bit-identical outputs), SD1/OD1 share one
asymmetric clipping stage and differ in tone hardware, MGS differs from the
808 only in its drive-emphasis corner, RAT/DPL share the same maximum gain
but DPL clips with a softer knee and has no tone control, and the two big
fuzzes are cascaded soft clippers with mid-scoop tone stacks of different
depths.

Signal path per effect:

    input -> drive emphasis (unity + highpass mix)
          -> pre-gain, linear in dB over the effect's gain range
          -> waveshaper (optionally gated by an input envelope)
          -> tone stage / fixed post filter
          -> level * makeup trim -> clamp to [-1, 1]

Every waveshaper maps 0 to 0, so silence stays silence. Filters reset state
on every call; processing is stateless and deterministic.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from . import SAMPLE_RATE, filters
from .errors import InvalidSettingsError


class EffectId(str, Enum):
    E808 = "808"
    TS9 = "TS9"
    BD2 = "BD2"
    OD1 = "OD1"
    SD1 = "SD1"
    DS1 = "DS1"
    RAT = "RAT"
    DPL = "DPL"
    FFC = "FFC"
    BMF = "BMF"
    MGS = "MGS"
    RBM = "RBM"
    VTB = "VTB"

    def __str__(self):
        return self.value


# Table-row order; also the class index order used by the networks.
EFFECT_ORDER = [
    EffectId.E808, EffectId.TS9, EffectId.BD2, EffectId.OD1, EffectId.SD1,
    EffectId.DS1, EffectId.RAT, EffectId.DPL, EffectId.FFC, EffectId.BMF,
    EffectId.MGS, EffectId.RBM, EffectId.VTB,
]

TONELESS = frozenset({EffectId.OD1, EffectId.DPL, EffectId.FFC, EffectId.VTB})

N_EFFECTS = 13


def class_index(effect):
    return EFFECT_ORDER.index(EffectId(effect))


@dataclass(frozen=True)
class EffectSettings:
    gain: float
    tone: float | None = None
    level: float = 1.0


@dataclass(frozen=True)
class EffectDescriptor:
    id: EffectId
    family: str
    emphasis_hz: float | None   # drive emphasis highpass corner
    emphasis_mix: float
    gain_db: tuple             # (min, max) pre-gain in dB for gain in [0, 1]
    shaper: str
    shaper_params: dict
    tone: str                  # none | lowpass | shelf_lowpass | scoop_tilt
    tone_params: dict
    post_lowpass_hz: float | None
    gate: dict | None          # downward expander on the input envelope
    trim_follows_gain: bool    # output trim tracks pre-gain below unity
    makeup: float


_TS_STYLE = dict(emphasis_hz=720.0, emphasis_mix=1.0, gain_db=(0.0, 40.0),
                 post_lowpass_hz=None, gate=None, trim_follows_gain=False)

_D808 = EffectDescriptor(
    id=EffectId.E808, family="mid-emphasis soft clip", shaper="tanh",
    shaper_params={}, tone="lowpass", tone_params={"lo_hz": 500.0, "hi_hz": 10000.0},
    makeup=0.9, **_TS_STYLE)

DESCRIPTORS = {
    EffectId.E808: _D808,
    # same circuit as the 808; only the id differs
    EffectId.TS9: replace(_D808, id=EffectId.TS9),
    # same circuit as the 808 except the emphasis corner
    EffectId.MGS: replace(_D808, id=EffectId.MGS, emphasis_hz=500.0),
    EffectId.BD2: EffectDescriptor(
        id=EffectId.BD2, family="bright soft clip",
        emphasis_hz=1400.0, emphasis_mix=1.8, gain_db=(0.0, 38.0),
        shaper="tanh", shaper_params={},
        tone="lowpass", tone_params={"lo_hz": 500.0, "hi_hz": 10000.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=0.85),
    EffectId.SD1: EffectDescriptor(
        id=EffectId.SD1, family="asymmetric soft clip",
        emphasis_hz=720.0, emphasis_mix=1.0, gain_db=(0.0, 40.0),
        shaper="tanh_asym", shaper_params={"t_pos": 1.15, "t_neg": 1.0},
        tone="shelf_lowpass",
        tone_params={"shelf_hz": 2000.0, "shelf_max_db": 9.0,
                     "lp_lo_hz": 1500.0, "lp_hi_hz": 8000.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=0.28),
    EffectId.OD1: EffectDescriptor(
        id=EffectId.OD1, family="asymmetric soft clip",
        emphasis_hz=720.0, emphasis_mix=1.0, gain_db=(0.0, 40.0),
        shaper="tanh_asym", shaper_params={"t_pos": 1.15, "t_neg": 1.0},
        tone="none", tone_params={},
        post_lowpass_hz=3000.0, gate=None, trim_follows_gain=False, makeup=0.8),
    EffectId.DS1: EffectDescriptor(
        id=EffectId.DS1, family="hard clip",
        emphasis_hz=280.0, emphasis_mix=1.2, gain_db=(0.0, 44.0),
        shaper="hard", shaper_params={"threshold": 0.7},
        tone="lowpass", tone_params={"lo_hz": 500.0, "hi_hz": 10000.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=1.1),
    EffectId.RAT: EffectDescriptor(
        id=EffectId.RAT, family="hard clip",
        emphasis_hz=1000.0, emphasis_mix=1.5, gain_db=(0.0, 40.0),
        shaper="knee", shaper_params={"threshold": 0.8, "knee": 0.08},
        tone="lowpass", tone_params={"lo_hz": 500.0, "hi_hz": 10000.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=1.0),
    EffectId.DPL: EffectDescriptor(
        id=EffectId.DPL, family="soft-knee clip",
        # same maximum gain as the RAT; germanium-style soft knee, no tone
        emphasis_hz=900.0, emphasis_mix=1.0, gain_db=(0.0, 40.0),
        shaper="knee", shaper_params={"threshold": 0.8, "knee": 0.55},
        tone="none", tone_params={},
        post_lowpass_hz=6000.0, gate=None, trim_follows_gain=False, makeup=1.0),
    EffectId.FFC: EffectDescriptor(
        id=EffectId.FFC, family="biased fuzz",
        emphasis_hz=None, emphasis_mix=0.0, gain_db=(-20.0, 35.0),
        shaper="bias_tanh", shaper_params={"bias": 0.35},
        tone="none", tone_params={},
        post_lowpass_hz=None, gate=None, trim_follows_gain=True, makeup=0.7),
    EffectId.VTB: EffectDescriptor(
        id=EffectId.VTB, family="gated fuzz",
        emphasis_hz=None, emphasis_mix=0.0, gain_db=(-12.0, 38.0),
        shaper="bias_atan", shaper_params={"bias": -0.3, "hardness": 2.5},
        tone="none", tone_params={},
        post_lowpass_hz=5000.0,
        gate={"threshold": 0.02, "tau_s": 0.015}, trim_follows_gain=True,
        makeup=0.65),
    EffectId.BMF: EffectDescriptor(
        id=EffectId.BMF, family="cascade fuzz",
        emphasis_hz=400.0, emphasis_mix=0.8, gain_db=(2.0, 42.0),
        shaper="cascade", shaper_params={"second_gain": 3.0},
        tone="scoop_tilt", tone_params={"lp_hz": 500.0, "hp_hz": 1000.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=0.8),
    EffectId.RBM: EffectDescriptor(
        # notch depth of the mid scoop is -20*log10(1 + hp/lp) at the blend
        # midpoint; 430/1385 sits 3 dB below the BMF's 500/1000
        id=EffectId.RBM, family="cascade fuzz",
        emphasis_hz=400.0, emphasis_mix=0.8, gain_db=(2.0, 42.0),
        shaper="cascade", shaper_params={"second_gain": 3.0},
        tone="scoop_tilt", tone_params={"lp_hz": 430.0, "hp_hz": 1385.0},
        post_lowpass_hz=None, gate=None, trim_follows_gain=False, makeup=0.8),
}


_GAIN_GRID = {
    EffectId.FFC: (0.0, 0.2, 0.5, 0.8, 1.0),
    EffectId.VTB: (0.1, 0.2, 0.5, 0.8, 1.0),
}
_DEFAULT_GAINS = (0.2, 0.5, 0.8, 1.0)
_TONE_GRID = (0.0, 0.2, 0.5, 0.8, 1.0)


def control_inventory(effect):
    """The controls an effect exposes (Level is always present)."""
    effect = EffectId(effect)
    if effect in TONELESS:
        return {"level", "gain"}
    return {"level", "gain", "tone"}


def validate_settings(effect, settings):
    effect = EffectId(effect)
    if effect in TONELESS:
        if settings.tone is not None:
            raise InvalidSettingsError(f"{effect} has no tone control")
    elif settings.tone is None:
        raise InvalidSettingsError(f"{effect} requires a tone value")
    for name in ("level", "gain"):
        v = getattr(settings, name)
        if not 0.0 <= v <= 1.0:
            raise InvalidSettingsError(f"{effect} {name}={v} outside [0, 1]")
    if settings.tone is not None and not 0.0 <= settings.tone <= 1.0:
        raise InvalidSettingsError(f"{effect} tone={settings.tone} outside [0, 1]")


def discrete_grid(effect):
    """The Table-2 settings grid: gain-major, then tone; level fixed at 1.0."""
    effect = EffectId(effect)
    gains = _GAIN_GRID.get(effect, _DEFAULT_GAINS)
    if effect in TONELESS:
        return [EffectSettings(gain=g, tone=None) for g in gains]
    return [EffectSettings(gain=g, tone=t) for g in gains for t in _TONE_GRID]


def continuous_ranges(effect):
    """Sampling extremes for the continuous subsets (min/max of the grid)."""
    effect = EffectId(effect)
    gains = _GAIN_GRID.get(effect, _DEFAULT_GAINS)
    tone = None if effect in TONELESS else (_TONE_GRID[0], _TONE_GRID[-1])
    return {"gain": (gains[0], gains[-1]), "tone": tone}


def _shape(desc, u):
    p = desc.shaper_params
    if desc.shaper == "tanh":
        return np.tanh(u)
    if desc.shaper == "tanh_asym":
        tp, tn = p["t_pos"], p["t_neg"]
        return np.where(u >= 0, tp * np.tanh(u / tp), tn * np.tanh(u / tn))
    if desc.shaper == "hard":
        t = p["threshold"]
        return np.clip(u, -t, t)
    if desc.shaper == "knee":
        return _knee_clip(u, p["threshold"], p["knee"])
    if desc.shaper == "bias_tanh":
        b = p["bias"]
        return np.tanh(u + b) - np.tanh(b)
    if desc.shaper == "bias_atan":
        b, k = p["bias"], p["hardness"]
        return (2.0 / np.pi) * (np.arctan(k * (u + b)) - np.arctan(k * b))
    if desc.shaper == "cascade":
        return np.tanh(p["second_gain"] * np.tanh(u))
    raise ValueError(f"unknown shaper {desc.shaper}")


def _knee_clip(u, threshold, knee):
    """Hard clip at threshold with a quadratic knee of half-width knee."""
    if knee <= 0.0:
        return np.clip(u, -threshold, threshold)
    au = np.abs(u)
    lo, hi = threshold - knee, threshold + knee
    soft = au - (au - lo) ** 2 / (4.0 * knee)
    mag = np.where(au <= lo, au, np.where(au >= hi, threshold, soft))
    return np.sign(u) * mag


def pre_gain(desc, gain):
    lo, hi = desc.gain_db
    return 10.0 ** ((lo + gain * (hi - lo)) / 20.0)


def drive_stage(x, effect, gain, sample_rate=SAMPLE_RATE):
    """Emphasis + pre-gain + waveshaper (+ gate), before any tone filtering."""
    desc = DESCRIPTORS[EffectId(effect)]
    x = np.asarray(x, dtype=np.float64)
    driven = x
    if desc.emphasis_hz is not None and desc.emphasis_mix:
        driven = x + desc.emphasis_mix * filters.highpass(x, desc.emphasis_hz, sample_rate)
    y = _shape(desc, pre_gain(desc, gain) * driven)
    if desc.gate is not None:
        env = filters.onepole_envelope(x, sample_rate, desc.gate["tau_s"])
        y = y * np.clip(env / desc.gate["threshold"], 0.0, 1.0) ** 2
    return y


def _tone_stage(desc, y, tone, sample_rate):
    if desc.tone == "none":
        return y
    p = desc.tone_params
    if desc.tone == "lowpass":
        fc = p["lo_hz"] * (p["hi_hz"] / p["lo_hz"]) ** tone
        return filters.lowpass(y, fc, sample_rate)
    if desc.tone == "shelf_lowpass":
        boosted = filters.highshelf(y, p["shelf_hz"], sample_rate,
                                    tone * p["shelf_max_db"])
        fc = p["lp_lo_hz"] * (p["lp_hi_hz"] / p["lp_lo_hz"]) ** tone
        return filters.lowpass(boosted, fc, sample_rate)
    if desc.tone == "scoop_tilt":
        dark = filters.lowpass(y, p["lp_hz"], sample_rate)
        bright = filters.highpass(y, p["hp_hz"], sample_rate)
        return (1.0 - tone) * dark + tone * bright
    raise ValueError(f"unknown tone topology {desc.tone}")


def process(x, effect, settings, sample_rate=SAMPLE_RATE):
    """Run audio through one effect. Output has the input's length and rate."""
    effect = EffectId(effect)
    validate_settings(effect, settings)
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty input buffer")
    desc = DESCRIPTORS[effect]
    y = drive_stage(x, effect, settings.gain, sample_rate)
    if settings.tone is not None:
        y = _tone_stage(desc, y, settings.tone, sample_rate)
    if desc.post_lowpass_hz is not None:
        y = filters.lowpass(y, desc.post_lowpass_hz, sample_rate)
    trim = settings.level * desc.makeup
    if desc.trim_follows_gain:
        trim *= min(1.0, pre_gain(desc, settings.gain))
    return np.clip(trim * y, -1.0, 1.0)


def bank_config():
    """JSON-able description of every effect model (id, family, parameters)."""
    out = []
    for effect in EFFECT_ORDER:
        d = asdict(DESCRIPTORS[effect])
        d["id"] = str(effect)
        d["gain_db"] = list(d["gain_db"])
        out.append(d)
    return out


def save_bank_config(path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bank_config(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def bank_config_hash():
    blob = json.dumps(bank_config(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
