"""Assembly of the four labeled sub-datasets.

Clean sources (synthesized notes, or 2-4 note mixes for the polyphonic
subsets) are normalized to -6 dBFS, run through the effect bank, normalized
again and written as 16-bit mono wav. Every record lands in a JSON-lines
manifest whose header pins the seed and the effect-bank configuration hash.

Splits are 80/10/10 partitioned by clean source audio, so no source ever
appears in two splits.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from . import CLIP_SAMPLES, SAMPLE_RATE
from .effects import (
    EFFECT_ORDER, EffectId, EffectSettings, bank_config_hash,
    continuous_ranges, discrete_grid, process,
)
from .errors import IOFailure
from .synth import NoteSpec, mix_poly, normalize_peak, synth_note

SUBSETS = ("mono-discrete", "mono-continuous", "poly-discrete", "poly-continuous")
SPLITS = ("train", "valid", "test")

MANIFEST_KIND = "gfxlab-dataset"

SCALES = {
    # minutes-scale defaults; "paper" approximates the source corpus sizes
    "desk": {"mono_pitches": 12, "plucks": ("soft", "hard"), "pickups": ("bridge",),
             "variants": ("A", "B"), "poly_sources": 60, "n_per_effect": 500},
    "paper": {"mono_pitches": 37, "plucks": ("soft", "hard", "muted"),
              "pickups": ("bridge", "neck"), "variants": ("A", "B"),
              "poly_sources": 420, "n_per_effect": 10000},
}


@dataclass(frozen=True)
class SampleRecord:
    audio_path: str
    effect: str
    level: float
    gain: float
    tone: float | None
    subset: str
    split: str
    source: str

    def settings(self):
        return EffectSettings(gain=self.gain, tone=self.tone, level=self.level)

    def class_index(self):
        return EFFECT_ORDER.index(EffectId(self.effect))


def write_wav(path, x):
    x16 = np.clip(np.round(np.asarray(x) * 32767.0), -32768, 32767).astype(np.int16)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, SAMPLE_RATE, x16)


def read_wav(path):
    """Returns (float64 samples scaled to [-1, 1], sample_rate)."""
    try:
        rate, data = wavfile.read(path)
    except (OSError, ValueError) as exc:
        raise IOFailure(f"cannot read wav {path}: {exc}") from exc
    if data.ndim != 1:
        raise IOFailure(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        return data.astype(np.float64) / 32767.0, rate
    if data.dtype in (np.float32, np.float64):
        return data.astype(np.float64), rate
    raise IOFailure(f"{path}: unsupported sample format {data.dtype}")


def mono_note_pool(scale="desk"):
    cfg = SCALES[scale]
    pitches = np.linspace(40, 76, cfg["mono_pitches"]).round().astype(int)
    return [NoteSpec(midi_pitch=int(p), pluck_style=st, pickup=pu, guitar_variant=v)
            for p in pitches for st in cfg["plucks"]
            for pu in cfg["pickups"] for v in cfg["variants"]]


_CHORD_SHAPES = [
    (0, 3), (0, 4), (0, 5), (0, 7), (0, 12),            # intervals
    (0, 4, 7), (0, 3, 7), (0, 5, 7),                    # triads
    (0, 4, 7, 12), (0, 3, 7, 10), (0, 5, 7, 12),        # four-note chords
]


def poly_pool(scale="desk", seed=0):
    """Unique 2-4 note chords/intervals; all notes share pluck and guitar."""
    cfg = SCALES[scale]
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x706F]))
    seen = set()
    pool = []
    while len(pool) < cfg["poly_sources"]:
        root = int(rng.integers(40, 65))
        shape = _CHORD_SHAPES[int(rng.integers(len(_CHORD_SHAPES)))]
        pluck = cfg["plucks"][int(rng.integers(len(cfg["plucks"])))]
        pickup = cfg["pickups"][int(rng.integers(len(cfg["pickups"])))]
        variant = cfg["variants"][int(rng.integers(len(cfg["variants"])))]
        notes = tuple(NoteSpec(midi_pitch=root + off, pluck_style=pluck,
                               pickup=pickup, guitar_variant=variant)
                      for off in shape)
        key = source_key(notes)
        if key in seen:
            continue
        seen.add(key)
        pool.append(notes)
    return pool


def source_key(source):
    if isinstance(source, NoteSpec):
        return source.key()
    return "+".join(n.key() for n in source)


def render_source(source, seed):
    """Synthesize a note or chord and normalize it to -6 dBFS."""
    if isinstance(source, NoteSpec):
        clean = synth_note(source, seed=seed)
    else:
        clean = mix_poly([synth_note(n, seed=seed) for n in source])
    return normalize_peak(clean)


def assign_splits(n_sources, seed):
    """80/10/10 assignment by shuffled source index."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5BD1]))
    order = rng.permutation(n_sources)
    n_valid = max(1, round(0.1 * n_sources)) if n_sources >= 3 else 0
    n_test = max(1, round(0.1 * n_sources)) if n_sources >= 3 else 0
    splits = np.full(n_sources, "train", dtype=object)
    splits[order[:n_valid]] = "valid"
    splits[order[n_valid:n_valid + n_test]] = "test"
    return list(splits)


def draw_continuous_settings(effect, rng):
    """Uniform gain/tone within the Table-2 extremes; level fixed at 1.0."""
    ranges = continuous_ranges(effect)
    lo, hi = ranges["gain"]
    gain = float(rng.uniform(lo, hi))
    tone = None
    if ranges["tone"] is not None:
        tlo, thi = ranges["tone"]
        tone = float(rng.uniform(tlo, thi))
    return EffectSettings(gain=gain, tone=tone)


def _emit(out_dir, rel_path, clean, effect, settings):
    processed = normalize_peak(process(clean, effect, settings))
    write_wav(Path(out_dir) / rel_path, processed)


def build_discrete(effects, sources, out_dir, subset, seed, progress=None):
    """One record per source x effect x grid entry."""
    out_dir = Path(out_dir)
    splits = assign_splits(len(sources), seed)
    records = []
    for si, source in enumerate(sources):
        clean = render_source(source, seed)
        skey = source_key(source)
        for effect in effects:
            grid = discrete_grid(effect)
            for gi, settings in enumerate(grid):
                rel = f"audio/{effect}/{si:04d}_{gi:03d}.wav"
                _emit(out_dir, rel, clean, effect, settings)
                records.append(SampleRecord(
                    audio_path=rel, effect=str(EffectId(effect)),
                    level=settings.level, gain=settings.gain, tone=settings.tone,
                    subset=subset, split=splits[si], source=skey))
        if progress:
            progress(si + 1, len(sources))
    return write_manifest(out_dir / "manifest.jsonl", subset, seed, records)


def build_continuous(effects, sources, n_per_effect, out_dir, subset, seed,
                     progress=None):
    """n_per_effect records per effect; source and settings drawn uniformly."""
    out_dir = Path(out_dir)
    splits = assign_splits(len(sources), seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xC047]))
    rendered = {}
    records = []
    for ei, effect in enumerate(effects):
        for i in range(n_per_effect):
            si = int(rng.integers(len(sources)))
            if si not in rendered:
                rendered[si] = render_source(sources[si], seed)
            settings = draw_continuous_settings(effect, rng)
            rel = f"audio/{effect}/c{i:05d}.wav"
            _emit(out_dir, rel, rendered[si], effect, settings)
            records.append(SampleRecord(
                audio_path=rel, effect=str(EffectId(effect)),
                level=settings.level, gain=settings.gain, tone=settings.tone,
                subset=subset, split=splits[si], source=source_key(sources[si])))
        if progress:
            progress(ei + 1, len(effects))
    return write_manifest(out_dir / "manifest.jsonl", subset, seed, records)


def write_manifest(path, subset, seed, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"kind": MANIFEST_KIND, "version": 1, "subset": subset,
              "seed": seed, "bank_config_hash": bank_config_hash(),
              "sample_rate": SAMPLE_RATE, "count": len(records)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for r in records:
            fh.write(json.dumps({
                "audio_path": r.audio_path, "effect": r.effect,
                "level": r.level, "gain": r.gain, "tone": r.tone,
                "subset": r.subset, "split": r.split, "source": r.source,
            }) + "\n")
    return path


def read_manifest(path):
    """Returns (header dict, list of SampleRecord)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IOFailure(f"cannot read manifest {path}: {exc}") from exc
    if not lines:
        raise IOFailure(f"{path}: empty manifest")
    header = json.loads(lines[0])
    if header.get("kind") != MANIFEST_KIND:
        raise IOFailure(f"{path}: not a {MANIFEST_KIND} manifest")
    records = [SampleRecord(**json.loads(line)) for line in lines[1:] if line.strip()]
    if len(records) != header.get("count"):
        raise IOFailure(f"{path}: record count {len(records)} != header count "
                        f"{header.get('count')}")
    return header, records


def build_subset(subset, out_dir, seed=0, scale="desk", effects=None):
    """Entry point used by the CLI: builds any of the four sub-datasets."""
    if subset not in SUBSETS:
        raise ValueError(f"unknown subset {subset!r}; choose from {SUBSETS}")
    effects = list(effects) if effects else list(EFFECT_ORDER)
    cfg = SCALES[scale]
    if subset.startswith("mono"):
        sources = mono_note_pool(scale)
    else:
        sources = poly_pool(scale, seed)
    if subset.endswith("discrete"):
        return build_discrete(effects, sources, out_dir, subset, seed)
    return build_continuous(effects, sources, cfg["n_per_effect"], out_dir,
                            subset, seed)
