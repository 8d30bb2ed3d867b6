"""Scikit-learn compatible wrappers around the functional core.

Three transformer-shaped entry points so the pipeline composes with the
wider ecosystem (``Pipeline``, ``clone``, ``get_params``/``set_params``):

- :class:`SmallEnergyMasker` maps power spectra to masked power spectra.
- :class:`SpeakerEmbedder` maps waveforms to unit speaker embeddings.
- :class:`AdversarialPerturber` maps clean waveforms to adversarial
  waveforms.

X is a list of utterances (waveforms or power-spectrum matrices);
utterances have different lengths, so X is a sequence rather than a
rectangular array.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import masking, spectral
from .attacks import AttackConfig, run_attack
from .audio import WaveBuffer
from .encoder import SpeakerEncoder
from .masking import MaskConfig
from .spectral import MelFilterbank, StftConfig


def _as_wave(x) -> WaveBuffer:
    return x if isinstance(x, WaveBuffer) else WaveBuffer(samples=np.asarray(x, float))


class SmallEnergyMasker(BaseEstimator, TransformerMixin):
    """Zero out small-energy time-frequency bins, per utterance.

    Parameters
    ----------
    eta_th_db : threshold in dB below the percentile peak (negative).
    peak_exclusion_fraction : top fraction of entries ignored when
        locating the peak.
    rescale_unmasked : scale kept bins to preserve the total energy sum.
    random_eta : draw the dB offset uniformly from ``eta_range_db``
        (seeded) instead of using ``eta_th_db``.
    """

    def __init__(self, eta_th_db=-20.0, peak_exclusion_fraction=0.05,
                 rescale_unmasked=False, random_eta=False,
                 eta_range_db=(-40.0, -10.0), rng_seed=0):
        self.eta_th_db = eta_th_db
        self.peak_exclusion_fraction = peak_exclusion_fraction
        self.rescale_unmasked = rescale_unmasked
        self.random_eta = random_eta
        self.eta_range_db = eta_range_db
        self.rng_seed = rng_seed

    def _config(self) -> MaskConfig:
        return MaskConfig(
            eta_th_db=self.eta_th_db,
            peak_exclusion_fraction=self.peak_exclusion_fraction,
            rescale_unmasked=self.rescale_unmasked,
            random_eta=self.random_eta,
            eta_range_db=tuple(self.eta_range_db),
            rng_seed=self.rng_seed,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()  # validates parameters
        return self

    def mask(self, power_spec) -> masking.EnergyMask:
        """The binary mask for one utterance's power spectrum."""
        check_is_fitted(self)
        return masking.build_mask(power_spec, self.config_)

    def transform(self, X):
        check_is_fitted(self)
        return [
            masking.apply_mask(p, masking.build_mask(p, self.config_), self.config_)
            for p in X
        ]


class SpeakerEmbedder(BaseEstimator, TransformerMixin):
    """Waveforms to unit-norm speaker embeddings.

    Parameters mirror the encoder construction; ``fit`` draws the
    deterministic weights, ``transform`` returns an (n_utterances,
    embedding_dim) array.
    """

    def __init__(self, seed=0, n_mels=80, hidden=128, embedding_dim=64):
        self.seed = seed
        self.n_mels = n_mels
        self.hidden = hidden
        self.embedding_dim = embedding_dim

    def fit(self, X=None, y=None):
        self.stft_config_ = StftConfig()
        self.filterbank_ = MelFilterbank(n_channels=self.n_mels, config=self.stft_config_)
        self.encoder_ = SpeakerEncoder(
            seed=self.seed, n_mels=self.n_mels, hidden=self.hidden,
            embedding_dim=self.embedding_dim,
        )
        return self

    def transform(self, X):
        check_is_fitted(self)
        rows = [self.encoder_.embed_wave(_as_wave(x), self.filterbank_) for x in X]
        return np.vstack(rows)


class AdversarialPerturber(BaseEstimator, TransformerMixin):
    """Clean waveforms to adversarial waveforms.

    Each utterance is analyzed, perturbed in the power-spectrum domain
    by the chosen method, and resynthesized with its original phase.
    The default target is the utterance's own clean embedding, so the
    output is pushed away from the speaker's voice.

    Parameters
    ----------
    method : one of fgsm, i-fgsm, mi-fgsm, pgd, mep, i-mep.
    epsilon : elementwise perturbation budget on bin energies.
    iterations : step count for the iterative methods.
    alpha : step size; None means epsilon / iterations.
    eta_th_db : masking threshold for the energy-masked methods.
    mep_mode : gradient-mask or feature-product step shaping.
    encoder_seed : seed for the white-box encoder under attack.
    rng_seed : seed for stochastic pieces (PGD random start).
    """

    def __init__(self, method="i-mep", epsilon=0.0002, iterations=20, alpha=None,
                 momentum_decay=1.0, random_start=True, mep_mode="gradient-mask",
                 eta_th_db=-20.0, encoder_seed=0, rng_seed=0):
        self.method = method
        self.epsilon = epsilon
        self.iterations = iterations
        self.alpha = alpha
        self.momentum_decay = momentum_decay
        self.random_start = random_start
        self.mep_mode = mep_mode
        self.eta_th_db = eta_th_db
        self.encoder_seed = encoder_seed
        self.rng_seed = rng_seed

    def _attack_config(self) -> AttackConfig:
        return AttackConfig(
            method=self.method,
            epsilon=self.epsilon,
            iterations=self.iterations,
            alpha=self.alpha,
            momentum_decay=self.momentum_decay,
            random_start=self.random_start,
            mep_mode=self.mep_mode,
            rng_seed=self.rng_seed,
        )

    def fit(self, X=None, y=None):
        self.attack_config_ = self._attack_config()  # validates parameters
        self.mask_config_ = MaskConfig(eta_th_db=self.eta_th_db)
        self.stft_config_ = StftConfig()
        self.filterbank_ = MelFilterbank(config=self.stft_config_)
        self.encoder_ = SpeakerEncoder(seed=self.encoder_seed)
        return self

    def attack(self, wave, target=None):
        """Full attack on one utterance; returns the AttackResult."""
        check_is_fitted(self)
        return run_attack(
            _as_wave(wave), self.encoder_, self.attack_config_, self.filterbank_,
            target=target, mask_cfg=self.mask_config_, stft_cfg=self.stft_config_,
        )

    def transform(self, X):
        check_is_fitted(self)
        return [self.attack(x).wave for x in X]
