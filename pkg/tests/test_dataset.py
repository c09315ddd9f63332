import numpy as np
import pytest
from scipy.stats import kstest

from gfxlab import SAMPLE_RATE
from gfxlab.dataset import (
    assign_splits, build_discrete, build_continuous, draw_continuous_settings,
    mono_note_pool, poly_pool, read_manifest, read_wav, source_key, write_wav,
)
from gfxlab.effects import EFFECT_ORDER, EffectId, discrete_grid
from gfxlab.errors import IOFailure
from gfxlab.synth import NoteSpec

from conftest import TINY_EFFECTS, TINY_NOTES


def test_one_note_sd1_gives_twenty_records(tmp_path):
    manifest = build_discrete([EffectId.SD1], [NoteSpec(midi_pitch=52)],
                              tmp_path, "mono-discrete", seed=0)
    _, records = read_manifest(manifest)
    assert len(records) == 20


def test_one_note_full_bank_gives_198_records(tmp_path):
    manifest = build_discrete(list(EFFECT_ORDER), [NoteSpec(midi_pitch=57)],
                              tmp_path, "mono-discrete", seed=0)
    _, records = read_manifest(manifest)
    assert len(records) == 198  # 9*20 + 2*4 + 2*5


def test_zero_notes_gives_empty_manifest(tmp_path):
    manifest = build_discrete([EffectId.SD1], [], tmp_path, "mono-discrete", seed=0)
    header, records = read_manifest(manifest)
    assert records == [] and header["count"] == 0


def test_wav_files_are_two_seconds_16bit(tiny_discrete_manifest):
    header, records = read_manifest(tiny_discrete_manifest)
    root = tiny_discrete_manifest.parent
    for rec in records[:5]:
        audio, rate = read_wav(root / rec.audio_path)
        assert rate == SAMPLE_RATE
        assert len(audio) == 88200
        assert np.abs(audio).max() <= 1.0


def test_processed_peak_is_minus_6_dbfs(tiny_discrete_manifest):
    _, records = read_manifest(tiny_discrete_manifest)
    audio, _ = read_wav(tiny_discrete_manifest.parent / records[0].audio_path)
    # int16 quantization costs a hair of precision
    assert abs(np.abs(audio).max() - 10 ** (-6 / 20)) < 1e-4


def test_discrete_settings_lie_exactly_on_grid(tiny_discrete_manifest):
    _, records = read_manifest(tiny_discrete_manifest)
    for rec in records:
        grid = discrete_grid(rec.effect)
        assert any(s.gain == rec.gain and s.tone == rec.tone for s in grid), rec
        assert rec.level == 1.0


def test_splits_disjoint_by_source(tiny_discrete_manifest):
    _, records = read_manifest(tiny_discrete_manifest)
    by_split = {}
    for rec in records:
        by_split.setdefault(rec.split, set()).add(rec.source)
    splits = list(by_split)
    for i, a in enumerate(splits):
        for b in splits[i + 1:]:
            assert not (by_split[a] & by_split[b])


def test_assign_splits_80_10_10():
    splits = assign_splits(48, seed=3)
    assert splits.count("train") == 38
    assert splits.count("valid") == 5
    assert splits.count("test") == 5
    assert splits == assign_splits(48, seed=3)
    assert splits != assign_splits(48, seed=4)


def test_continuous_counts_and_ranges(tiny_continuous_manifest):
    header, records = read_manifest(tiny_continuous_manifest)
    assert len(records) == 2 * 40
    sd1 = [r for r in records if r.effect == "SD1"]
    od1 = [r for r in records if r.effect == "OD1"]
    assert len(sd1) == len(od1) == 40
    for r in sd1:
        assert 0.2 <= r.gain <= 1.0
        assert 0.0 <= r.tone <= 1.0
    for r in od1:
        assert 0.2 <= r.gain <= 1.0
        assert r.tone is None


def test_continuous_settings_uniform_ks():
    rng = np.random.default_rng(0)
    gains = np.array([draw_continuous_settings(EffectId.SD1, rng).gain
                      for _ in range(10000)])
    stat, _ = kstest(gains, "uniform", args=(0.2, 0.8))  # loc 0.2, scale 0.8
    assert stat < 0.05
    tones = np.array([draw_continuous_settings(EffectId.SD1, rng).tone
                      for _ in range(10000)])
    stat, _ = kstest(tones, "uniform", args=(0.0, 1.0))
    assert stat < 0.05


def test_manifest_determinism(tmp_path):
    a = build_discrete(TINY_EFFECTS, TINY_NOTES[:2], tmp_path / "a",
                       "mono-discrete", seed=5)
    b = build_discrete(TINY_EFFECTS, TINY_NOTES[:2], tmp_path / "b",
                       "mono-discrete", seed=5)
    assert a.read_text() == b.read_text()
    # and the audio matches bit for bit
    _, recs = read_manifest(a)
    wav_a = (tmp_path / "a" / recs[0].audio_path).read_bytes()
    wav_b = (tmp_path / "b" / recs[0].audio_path).read_bytes()
    assert wav_a == wav_b


def test_continuous_manifest_determinism(tmp_path):
    a = build_continuous(TINY_EFFECTS, TINY_NOTES[:3], 10, tmp_path / "a",
                         "mono-continuous", seed=6)
    b = build_continuous(TINY_EFFECTS, TINY_NOTES[:3], 10, tmp_path / "b",
                         "mono-continuous", seed=6)
    assert a.read_text() == b.read_text()


def test_manifest_header_contents(tiny_discrete_manifest):
    header, _ = read_manifest(tiny_discrete_manifest)
    assert header["kind"] == "gfxlab-dataset"
    assert header["subset"] == "mono-discrete"
    assert header["seed"] == 11
    assert header["sample_rate"] == SAMPLE_RATE
    assert len(header["bank_config_hash"]) == 16


def test_read_manifest_rejects_bad_files(tmp_path):
    with pytest.raises(IOFailure):
        read_manifest(tmp_path / "missing.jsonl")
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"kind": "other"}\n')
    with pytest.raises(IOFailure):
        read_manifest(bad)


def test_wav_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    x = rng.uniform(-0.9, 0.9, 1000)
    path = tmp_path / "t.wav"
    write_wav(path, x)
    back, rate = read_wav(path)
    assert rate == SAMPLE_RATE
    np.testing.assert_allclose(back, x, atol=1.0 / 32000)


def test_mono_pool_desk_is_48():
    pool = mono_note_pool("desk")
    assert len(pool) == 48
    assert len({source_key(n) for n in pool}) == 48
    assert all(40 <= n.midi_pitch <= 76 for n in pool)


def test_poly_pool_unique_and_sized():
    pool = poly_pool("desk", seed=0)
    assert len(pool) == 60
    keys = {source_key(c) for c in pool}
    assert len(keys) == 60
    for chord in pool:
        assert 2 <= len(chord) <= 4
        assert all(40 <= n.midi_pitch <= 76 for n in chord)
        # all notes of a chord share pluck/pickup/variant
        assert len({(n.pluck_style, n.pickup, n.guitar_variant) for n in chord}) == 1
    assert [source_key(c) for c in poly_pool("desk", seed=0)] == [source_key(c) for c in pool]


def test_poly_build_smoke(tmp_path):
    pool = poly_pool("desk", seed=1)[:3]
    manifest = build_discrete([EffectId.DS1], pool, tmp_path, "poly-discrete", seed=2)
    _, records = read_manifest(manifest)
    assert len(records) == 3 * 20
    assert all("+" in r.source for r in records)
