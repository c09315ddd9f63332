"""gfxlab: guitar drive-pedal recognition laboratory.

Generates processed guitar audio through a bank of 13 parametric
overdrive/distortion/fuzz models, extracts mel power-spectrogram features,
and trains small CNNs to classify the effect and estimate its settings.
"""

__version__ = "0.1.0"

SAMPLE_RATE = 44100
CLIP_SECONDS = 2.0
CLIP_SAMPLES = 88200
