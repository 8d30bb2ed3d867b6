"""Energy-masked adversarial perturbations for speaker embeddings.

The package attacks a deterministic toy speaker encoder in the STFT
power-spectrum domain: analysis, small-energy masking, gradient-sign
perturbation (masked or baseline variants), and resynthesis with the
original phase.  An evaluation harness compares methods on a synthetic
corpus by SNR, log-spectral distortion, and verification EER.

Scikit-learn style wrappers (:class:`SmallEnergyMasker`,
:class:`SpeakerEmbedder`, :class:`AdversarialPerturber`) are the
high-level API; the functional core lives in the submodules.
"""

from .attacks import (FEATURE_PRODUCT, GRADIENT_MASK, METHODS, AttackConfig,
                      AttackResult, run_attack)
from .audio import WaveBuffer, read_wav, write_wav
from .corpus import CorpusSpec, build_corpus
from .encoder import SpeakerEncoder
from .errors import MepError
from .estimators import AdversarialPerturber, SmallEnergyMasker, SpeakerEmbedder
from .masking import EnergyMask, MaskConfig, apply_mask, build_mask
from .matrixio import load_matrix, save_matrix
from .metrics import (MethodReport, MetricReport, TrialLayout, eer,
                      evaluate_attack, lsd, snr)
from .spectral import (MelFilterbank, PowerSpectrum, StftConfig, istft,
                       mel_apply, power, resynthesize, stft)

__version__ = "0.1.0"

__all__ = [
    "AdversarialPerturber",
    "AttackConfig",
    "AttackResult",
    "CorpusSpec",
    "EnergyMask",
    "FEATURE_PRODUCT",
    "GRADIENT_MASK",
    "MaskConfig",
    "MelFilterbank",
    "MepError",
    "MethodReport",
    "MetricReport",
    "METHODS",
    "PowerSpectrum",
    "SmallEnergyMasker",
    "SpeakerEmbedder",
    "SpeakerEncoder",
    "StftConfig",
    "TrialLayout",
    "WaveBuffer",
    "apply_mask",
    "build_corpus",
    "build_mask",
    "eer",
    "evaluate_attack",
    "istft",
    "load_matrix",
    "lsd",
    "mel_apply",
    "power",
    "read_wav",
    "resynthesize",
    "run_attack",
    "save_matrix",
    "snr",
    "stft",
    "write_wav",
]
