import numpy as np
import pytest

from gfxlab.dataset import build_continuous, build_discrete, mono_note_pool
from gfxlab.effects import EffectId
from gfxlab.synth import NoteSpec

TINY_EFFECTS = [EffectId.SD1, EffectId.OD1]
TINY_NOTES = [
    NoteSpec(midi_pitch=p, pluck_style=st)
    for p in (45, 52, 57, 64) for st in ("soft", "hard")
]


@pytest.fixture(scope="session")
def tiny_discrete_manifest(tmp_path_factory):
    """8 sources x (SD1 grid 20 + OD1 grid 4) = 192 records."""
    out = tmp_path_factory.mktemp("tiny_md")
    return build_discrete(TINY_EFFECTS, TINY_NOTES, out, "mono-discrete", seed=11)


@pytest.fixture(scope="session")
def tiny_continuous_manifest(tmp_path_factory):
    """2 effects x 40 uniform draws over 8 sources."""
    out = tmp_path_factory.mktemp("tiny_mc")
    return build_continuous(TINY_EFFECTS, TINY_NOTES, 40, out,
                            "mono-continuous", seed=12)


@pytest.fixture(scope="session")
def tiny_loaded(tiny_discrete_manifest):
    from gfxlab.training import load_dataset
    return load_dataset(tiny_discrete_manifest)
