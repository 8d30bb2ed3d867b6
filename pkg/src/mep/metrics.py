"""Attack quality and effectiveness metrics.

Quality: signal-to-noise ratio between clean and adversarial waveforms,
and log-spectral distortion (LSD) between their power spectra (RMS of
the per-bin dB ratio, averaged over frames).  Effectiveness: cosine
scoring of speaker embeddings and the equal error rate over an
enroll/test/imposter trial layout.

``evaluate_attack`` ties everything together: it attacks every test
utterance of a synthetic corpus, scores adversarial test embeddings
against clean enrollments, and aggregates one report row per method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import attacks, corpus, spectral
from .attacks import AttackConfig, run_attack
from .audio import WaveBuffer
from .corpus import CorpusSpec
from .encoder import SpeakerEncoder
from .errors import EmptyTrialListError, ShapeMismatchError
from .masking import MaskConfig
from .spectral import MelFilterbank
from .validation import check_same_length, check_unit_norm

#: Spectral floor inside the LSD log ratio.
LSD_FLOOR = 1e-10


def snr(clean: WaveBuffer | np.ndarray, adversarial: WaveBuffer | np.ndarray) -> float:
    """10 log10 of signal power over perturbation power, in dB.

    Identical signals have zero noise power; that degenerate case is
    reported as +inf.
    """
    c = clean.samples if isinstance(clean, WaveBuffer) else np.asarray(clean, float)
    a = adversarial.samples if isinstance(adversarial, WaveBuffer) else np.asarray(adversarial, float)
    check_same_length(c, a)
    noise = np.sum((a - c) ** 2)
    if noise == 0.0:
        return np.inf
    return float(10.0 * np.log10(np.sum(c**2) / noise))


def lsd(clean_power, adv_power) -> float:
    """Log-spectral distortion in dB: per-frame RMS of the bin-wise dB
    ratio, averaged over frames."""
    c = clean_power.data if isinstance(clean_power, spectral.PowerSpectrum) \
        else np.asarray(clean_power, float)
    a = adv_power.data if isinstance(adv_power, spectral.PowerSpectrum) \
        else np.asarray(adv_power, float)
    if c.shape != a.shape:
        raise ShapeMismatchError(f"power spectra differ in shape: {c.shape} vs {a.shape}")
    ratio_db = 10.0 * np.log10((a + LSD_FLOOR) / (c + LSD_FLOOR))
    return float(np.mean(np.sqrt(np.mean(ratio_db**2, axis=1))))


def cosine_score(e1: np.ndarray, e2: np.ndarray) -> float:
    """Dot product of two unit-norm embeddings, in [-1, 1]."""
    e1 = check_unit_norm(e1, "embedding 1")
    e2 = check_unit_norm(e2, "embedding 2")
    return float(e1 @ e2)


def eer(genuine_scores, imposter_scores) -> float:
    """Equal error rate in percent, by threshold sweep.

    Accept means score >= threshold.  Candidate thresholds are the
    sorted union of all scores, bracketed by sentinels where the
    false-acceptance rate is 1 (accept everything) and the
    false-rejection rate is 1 (reject everything).  The crossing of
    FAR - FRR is located and resolved by linear interpolation between
    the bracketing thresholds; an exact zero resolves at the lower
    threshold.
    """
    genuine = np.asarray(list(genuine_scores), dtype=float)
    imposter = np.asarray(list(imposter_scores), dtype=float)
    if genuine.size == 0 or imposter.size == 0:
        raise EmptyTrialListError("need at least one genuine and one imposter score")

    thresholds = np.unique(np.concatenate([genuine, imposter]))
    genuine_sorted = np.sort(genuine)
    imposter_sorted = np.sort(imposter)
    # FAR(t) = fraction of imposters >= t, FRR(t) = fraction of genuine < t
    far = 1.0 - np.searchsorted(imposter_sorted, thresholds, side="left") / imposter.size
    frr = np.searchsorted(genuine_sorted, thresholds, side="left") / genuine.size
    # sentinels: below all scores (1, 0) and above all scores (0, 1)
    far = np.concatenate([[1.0], far, [0.0]])
    frr = np.concatenate([[0.0], frr, [1.0]])

    diff = far - frr  # non-increasing along the sweep
    idx = int(np.argmax(diff <= 0.0))
    if diff[idx] == 0.0:
        return float(100.0 * far[idx])
    lam = diff[idx - 1] / (diff[idx - 1] - diff[idx])
    rate = far[idx - 1] + lam * (far[idx] - far[idx - 1])
    return float(100.0 * rate)


# -- evaluation harness -------------------------------------------------------


@dataclass(frozen=True)
class TrialLayout:
    """How many of each speaker's utterances enroll them; the rest are
    test utterances, and every enroll/test cross-speaker pair is an
    imposter trial."""

    enroll_per_speaker: int = 3

    def __post_init__(self):
        if self.enroll_per_speaker < 1:
            raise ValueError("need at least one enrollment utterance per speaker")


@dataclass
class TrialSet:
    """Enrollment embeddings plus genuine/imposter trial pairs."""

    enrollments: dict            # speaker -> unit embedding
    genuine: list                # (speaker, test embedding)
    imposter: list               # (enroll speaker, test embedding)

    def __post_init__(self):
        if not self.genuine or not self.imposter:
            raise EmptyTrialListError("trial set needs genuine and imposter pairs")

    def scores(self):
        g = [cosine_score(self.enrollments[s], e) for s, e in self.genuine]
        i = [cosine_score(self.enrollments[s], e) for s, e in self.imposter]
        return g, i


def build_trials(test_embeddings, enrollments) -> TrialSet:
    """Pair every test embedding with its own speaker's enrollment
    (genuine) and every other speaker's (imposter)."""
    genuine, imposter = [], []
    for spk, emb in test_embeddings:
        for enroll_spk in enrollments:
            (genuine if enroll_spk == spk else imposter).append((enroll_spk, emb))
    return TrialSet(enrollments=enrollments, genuine=genuine, imposter=imposter)


@dataclass
class MethodReport:
    """One table row: quality and effectiveness of a single method."""

    method: str
    epsilon: float
    iterations: int
    eta_th: float
    snr_db_mean: float
    snr_db_per_utterance: list
    lsd_db_mean: float
    eer_percent: float
    baseline_eer_percent: float
    pesq: None = None

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "epsilon": self.epsilon,
            "iterations": self.iterations,
            "eta_th": self.eta_th,
            "snr_db_mean": self.snr_db_mean,
            "snr_db_per_utterance": list(self.snr_db_per_utterance),
            "lsd_db_mean": self.lsd_db_mean,
            "eer_percent": self.eer_percent,
            "baseline_eer_percent": self.baseline_eer_percent,
            "pesq": self.pesq,
        }


@dataclass
class MetricReport:
    """Clean-baseline EER plus one row per attack method."""

    corpus: CorpusSpec
    baseline_eer_percent: float
    rows: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "corpus": {
                "n_speakers": self.corpus.n_speakers,
                "utterances_per_speaker": self.corpus.utterances_per_speaker,
                "duration": self.corpus.duration,
                "seed": self.corpus.seed,
                "level": self.corpus.level,
            },
            "baseline_eer_percent": self.baseline_eer_percent,
            "rows": [r.as_dict() for r in self.rows],
        }


def _mean_enrollment(embeddings) -> np.ndarray:
    mean = np.mean(embeddings, axis=0)
    return mean / np.linalg.norm(mean)


def evaluate_attack(
    spec: CorpusSpec,
    methods,
    enc: SpeakerEncoder,
    fb: MelFilterbank,
    attack_cfg: AttackConfig | None = None,
    mask_cfg: MaskConfig | None = None,
    layout: TrialLayout | None = None,
) -> MetricReport:
    """Run every method over a synthetic corpus and aggregate a report.

    Enrollment embeddings come from clean utterances.  For each method,
    every test utterance is attacked (target: its speaker's enrollment
    embedding, the vector it must stop matching), resynthesized,
    re-analyzed from the adversarial waveform, and scored against the
    clean enrollments.  Utterance order is fixed, so the report is
    deterministic for a given configuration.
    """
    attack_cfg = attack_cfg or AttackConfig()
    mask_cfg = mask_cfg or MaskConfig()
    layout = layout or TrialLayout()
    if spec.utterances_per_speaker <= layout.enroll_per_speaker:
        raise ValueError("corpus needs more utterances per speaker than enrollments")

    utterances = corpus.build_corpus(spec)
    clean_specs = {}
    clean_embeddings = {}
    for spk, utt, wave in utterances:
        cspec = spectral.stft(wave, fb.config)
        clean_specs[(spk, utt)] = (wave, cspec, spectral.power(cspec))
        clean_embeddings[(spk, utt)] = enc.embed_power(clean_specs[(spk, utt)][2], fb)

    enrollments = {
        spk: _mean_enrollment(
            [clean_embeddings[(spk, u)] for u in range(layout.enroll_per_speaker)]
        )
        for spk in range(spec.n_speakers)
    }
    test_keys = [
        (spk, u)
        for spk in range(spec.n_speakers)
        for u in range(layout.enroll_per_speaker, spec.utterances_per_speaker)
    ]

    clean_test = [(spk, clean_embeddings[(spk, u)]) for spk, u in test_keys]
    g, i = build_trials(clean_test, enrollments).scores()
    baseline = eer(g, i)

    report = MetricReport(corpus=spec, baseline_eer_percent=baseline)
    for method in methods:
        cfg = AttackConfig(
            method=method,
            epsilon=attack_cfg.epsilon,
            iterations=attack_cfg.iterations,
            alpha=attack_cfg.alpha,
            momentum_decay=attack_cfg.momentum_decay,
            random_start=attack_cfg.random_start,
            mep_mode=attack_cfg.mep_mode,
            rng_seed=attack_cfg.rng_seed,
        )
        snrs, lsds, adv_test = [], [], []
        for spk, u in test_keys:
            wave, cspec, cpower = clean_specs[(spk, u)]
            result = attacks.run_attack(
                wave, enc, cfg, fb,
                target=enrollments[spk],
                mask_cfg=mask_cfg, stft_cfg=fb.config,
            )
            adv_wave = result.wave
            snrs.append(snr(wave, adv_wave))
            adv_power = spectral.power(spectral.stft(adv_wave, fb.config))
            lsds.append(lsd(cpower, adv_power))
            adv_test.append((spk, enc.embed_power(adv_power, fb)))
        g, i = build_trials(adv_test, enrollments).scores()
        report.rows.append(
            MethodReport(
                method=method,
                epsilon=cfg.epsilon,
                iterations=cfg.iterations,
                eta_th=mask_cfg.eta_th_db,
                snr_db_mean=float(np.mean(snrs)),
                snr_db_per_utterance=[float(s) for s in snrs],
                lsd_db_mean=float(np.mean(lsds)),
                eer_percent=eer(g, i),
                baseline_eer_percent=baseline,
            )
        )
    return report
