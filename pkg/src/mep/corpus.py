"""Synthetic speakers for zero-data evaluation runs.

Each "speaker" is a seeded signal generator: a harmonic source with a
speaker-specific fundamental, spectral tilt, and formant-like bumps,
plus colored noise with a speaker-specific lowpass pole.  Utterances
from the same speaker share those parameters and differ in phases,
noise realization, small pitch jitter, and a slow amplitude envelope,
so same-speaker log-mel statistics match closely while cross-speaker
statistics do not.

The default ``level`` sets the utterance RMS.  It is deliberately low:
the attack budget is an absolute energy offset, so the corpus level
fixes how strong the default budget is relative to the speech content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .audio import REQUIRED_RATE, WaveBuffer


@dataclass(frozen=True)
class CorpusSpec:
    """Layout of a synthetic corpus: speakers x utterances."""

    n_speakers: int = 8
    utterances_per_speaker: int = 10
    duration: float = 1.0
    seed: int = 0
    level: float = 0.0001

    def __post_init__(self):
        if self.n_speakers < 2:
            raise ValueError("need at least two speakers")
        if self.utterances_per_speaker < 1:
            raise ValueError("need at least one utterance per speaker")
        if self.duration * REQUIRED_RATE < 400:
            raise ValueError("utterances must cover at least one analysis window")
        if not 0 < self.level <= 0.5:
            raise ValueError("level must be in (0, 0.5]")


@dataclass(frozen=True)
class SpeakerProfile:
    """Generator parameters shared by all of one speaker's utterances."""

    f0: float
    harmonic_amps: tuple
    noise_pole: float
    noise_mix: float


def speaker_profile(spec: CorpusSpec, speaker: int) -> SpeakerProfile:
    """Deterministic per-speaker generator parameters."""
    rng = np.random.default_rng([spec.seed, speaker])
    f0 = rng.uniform(85.0, 255.0)
    # harmonics fill the band up to just below Nyquist
    n_harm = int((REQUIRED_RATE / 2 - 200) // f0)
    tilt = rng.uniform(0.5, 1.7)
    amps = (np.arange(1, n_harm + 1)) ** (-tilt)
    # formant-like emphasis bumps at speaker-specific frequencies
    centers = rng.uniform(300.0, 5500.0, size=3)
    widths = rng.uniform(150.0, 600.0, size=3)
    gains = rng.uniform(2.0, 4.0, size=3)
    harm_freqs = f0 * np.arange(1, n_harm + 1)
    for c, w, g in zip(centers, widths, gains):
        amps = amps * (1.0 + g * np.exp(-0.5 * ((harm_freqs - c) / w) ** 2))
    amps = amps / np.sqrt(np.sum(amps**2))
    return SpeakerProfile(
        f0=float(f0),
        harmonic_amps=tuple(float(a) for a in amps),
        noise_pole=float(rng.uniform(0.80, 0.98)),
        noise_mix=float(rng.uniform(0.02, 0.08)),
    )


def utterance(spec: CorpusSpec, speaker: int, index: int) -> WaveBuffer:
    """One utterance: seeded by (corpus seed, speaker, index)."""
    prof = speaker_profile(spec, speaker)
    rng = np.random.default_rng([spec.seed, speaker, index])
    n = int(round(spec.duration * REQUIRED_RATE))
    t = np.arange(n) / REQUIRED_RATE

    amps = np.asarray(prof.harmonic_amps)
    harmonics = np.arange(1, amps.size + 1)
    # pitch jitter stays small so harmonics stay inside their mel channels
    f0 = prof.f0 * (1.0 + rng.uniform(-0.003, 0.003))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=amps.size)
    sig = np.sin(2.0 * np.pi * f0 * np.outer(t, harmonics) + phases) @ amps

    # slow amplitude envelope gives frames genuine temporal variance
    mod_rate = rng.uniform(2.0, 6.0)
    envelope = 1.0 + 0.35 * np.sin(2.0 * np.pi * mod_rate * t + rng.uniform(0, 2 * np.pi))
    sig = sig * envelope

    white = rng.standard_normal(n)
    pole = prof.noise_pole  # one-pole lowpass, speaker-specific corner
    colored = lfilter([1.0 - pole], [1.0, -pole], white)
    colored = colored / (np.sqrt(np.mean(colored**2)) + 1e-12)

    sig = sig / (np.sqrt(np.mean(sig**2)) + 1e-12)
    mixed = sig + prof.noise_mix * colored
    mixed = mixed * (spec.level / np.sqrt(np.mean(mixed**2)))
    return WaveBuffer(samples=np.clip(mixed, -0.99, 0.99))


def build_corpus(spec: CorpusSpec) -> list:
    """All utterances as (speaker index, utterance index, WaveBuffer)."""
    return [
        (s, u, utterance(spec, s, u))
        for s in range(spec.n_speakers)
        for u in range(spec.utterances_per_speaker)
    ]
