"""Synthetic corpus generator: determinism, levels, speaker separation."""

import numpy as np
import pytest

from mep.corpus import CorpusSpec, build_corpus, speaker_profile, utterance

SPEC = CorpusSpec(n_speakers=3, utterances_per_speaker=3, duration=0.5)


def test_build_corpus_layout():
    items = build_corpus(SPEC)
    assert len(items) == 9
    assert [(s, u) for s, u, _ in items] == [(s, u) for s in range(3) for u in range(3)]
    for _, _, wave in items:
        assert len(wave) == 8000


def test_corpus_deterministic():
    a = build_corpus(SPEC)
    b = build_corpus(SPEC)
    for (_, _, wa), (_, _, wb) in zip(a, b):
        assert np.array_equal(wa.samples, wb.samples)


def test_rms_matches_level():
    wave = utterance(SPEC, 0, 0)
    rms = float(np.sqrt(np.mean(wave.samples**2)))
    assert rms == pytest.approx(SPEC.level, rel=1e-9)


def test_speakers_differ():
    u0 = utterance(SPEC, 0, 0)
    u1 = utterance(SPEC, 1, 0)
    assert not np.array_equal(u0.samples, u1.samples)


def test_utterances_within_speaker_differ():
    u0 = utterance(SPEC, 0, 0)
    u1 = utterance(SPEC, 0, 1)
    assert not np.array_equal(u0.samples, u1.samples)


def test_profile_deterministic_and_plausible():
    p1 = speaker_profile(SPEC, 2)
    p2 = speaker_profile(SPEC, 2)
    assert p1 == p2
    assert 85.0 <= p1.f0 <= 255.0
    amps = np.asarray(p1.harmonic_amps)
    assert np.linalg.norm(amps) == pytest.approx(1.0, abs=1e-9)
    assert 0.80 <= p1.noise_pole <= 0.98


def test_different_corpus_seeds_differ():
    other = CorpusSpec(n_speakers=3, utterances_per_speaker=3, duration=0.5, seed=1)
    assert not np.array_equal(utterance(SPEC, 0, 0).samples,
                              utterance(other, 0, 0).samples)


def test_samples_bounded():
    for _, _, wave in build_corpus(SPEC):
        assert np.max(np.abs(wave.samples)) <= 0.99


def test_spec_validation():
    with pytest.raises(ValueError):
        CorpusSpec(n_speakers=1)
    with pytest.raises(ValueError):
        CorpusSpec(utterances_per_speaker=0)
    with pytest.raises(ValueError):
        CorpusSpec(duration=0.01)
    with pytest.raises(ValueError):
        CorpusSpec(level=0.0)
    with pytest.raises(ValueError):
        CorpusSpec(level=0.9)
