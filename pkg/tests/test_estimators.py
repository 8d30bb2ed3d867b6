"""Scikit-learn estimator wrappers: params, cloning, pipeline fit."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import Pipeline

from mep import masking
from mep.attacks import AttackConfig, run_attack
from mep.audio import WaveBuffer
from mep.encoder import SpeakerEncoder
from mep.estimators import AdversarialPerturber, SmallEnergyMasker, SpeakerEmbedder
from mep.masking import MaskConfig
from mep.spectral import MelFilterbank, StftConfig

CFG = StftConfig()
FB = MelFilterbank(config=CFG)


def _spectra(n=3, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.uniform(0, 1, (int(rng.integers(4, 9)), CFG.n_bins)) ** 2
            for _ in range(n)]


def _waves(n=2, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.standard_normal(int(rng.integers(2000, 5000))) * 0.01
            for _ in range(n)]


# -- SmallEnergyMasker -------------------------------------------------------

def test_masker_params_roundtrip():
    est = SmallEnergyMasker(eta_th_db=-25.0, rescale_unmasked=True)
    params = est.get_params()
    assert params["eta_th_db"] == -25.0
    assert params["rescale_unmasked"] is True
    est.set_params(eta_th_db=-30.0)
    assert est.eta_th_db == -30.0


def test_masker_clone_keeps_params():
    est = SmallEnergyMasker(eta_th_db=-15.0, rng_seed=3)
    cloned = clone(est)
    assert cloned.get_params() == est.get_params()


def test_masker_requires_fit():
    with pytest.raises(NotFittedError):
        SmallEnergyMasker().transform(_spectra())


def test_masker_matches_functional_path():
    X = _spectra(seed=1)
    est = SmallEnergyMasker().fit()
    out = est.transform(X)
    cfg = MaskConfig()
    for x, masked in zip(X, out):
        expected = masking.apply_mask(x, masking.build_mask(x, cfg), cfg)
        assert np.array_equal(masked, expected)


def test_masker_invalid_params_fail_at_fit():
    est = SmallEnergyMasker(eta_th_db=5.0)
    with pytest.raises(ValueError):
        est.fit()


def test_masker_mask_accessor():
    est = SmallEnergyMasker().fit()
    x = _spectra(n=1, seed=2)[0]
    m = est.mask(x)
    assert set(np.unique(m.mask)) <= {0.0, 1.0}
    assert m.x_th < m.x_peak


# -- SpeakerEmbedder ---------------------------------------------------------

def test_embedder_output_shape_and_norms():
    X = _waves(seed=3)
    emb = SpeakerEmbedder(seed=1).fit().transform(X)
    assert emb.shape == (2, 64)
    assert np.allclose(np.linalg.norm(emb, axis=1), 1.0, atol=1e-9)


def test_embedder_matches_functional_path():
    X = _waves(seed=4)
    est = SpeakerEmbedder(seed=2).fit()
    enc = SpeakerEncoder(seed=2)
    direct = np.vstack([enc.embed_wave(WaveBuffer(samples=x), FB) for x in X])
    assert np.array_equal(est.transform(X), direct)


def test_embedder_clone_and_refit_deterministic():
    est = SpeakerEmbedder(seed=5).fit()
    other = clone(est).fit()
    X = _waves(n=1, seed=5)
    assert np.array_equal(est.transform(X), other.transform(X))


# -- AdversarialPerturber ----------------------------------------------------

def test_perturber_budget_and_output_type():
    est = AdversarialPerturber(method="i-mep").fit()
    X = _waves(seed=6)
    out = est.transform(X)
    assert len(out) == len(X)
    for x, adv in zip(X, out):
        assert isinstance(adv, WaveBuffer)
        assert len(adv) == len(x)


def test_perturber_attack_matches_run_attack():
    est = AdversarialPerturber(method="pgd", rng_seed=4, encoder_seed=1).fit()
    x = _waves(n=1, seed=7)[0]
    t = np.zeros(64)
    t[0] = 1.0
    res = est.attack(x, target=t)
    direct = run_attack(WaveBuffer(samples=x), SpeakerEncoder(seed=1),
                        AttackConfig(method="pgd", rng_seed=4), FB,
                        target=t, mask_cfg=MaskConfig(), stft_cfg=CFG)
    assert np.array_equal(res.delta, direct.delta)
    assert np.array_equal(res.wave.samples, direct.wave.samples)


def test_perturber_invalid_method_fails_at_fit():
    with pytest.raises(ValueError):
        AdversarialPerturber(method="carlini").fit()


def test_perturber_requires_fit():
    with pytest.raises(NotFittedError):
        AdversarialPerturber().attack(_waves(n=1)[0])


def test_perturber_get_params_includes_attack_knobs():
    params = AdversarialPerturber().get_params()
    for key in ("method", "epsilon", "iterations", "alpha", "eta_th_db",
                "mep_mode", "encoder_seed", "rng_seed"):
        assert key in params


# -- composition -------------------------------------------------------------

def test_pipeline_perturb_then_embed():
    pipe = Pipeline([
        ("attack", AdversarialPerturber(method="fgsm")),
        ("embed", SpeakerEmbedder(seed=0)),
    ])
    X = _waves(seed=8)
    emb = pipe.fit(X).transform(X)
    assert emb.shape == (2, 64)
    assert np.allclose(np.linalg.norm(emb, axis=1), 1.0, atol=1e-9)


def test_pipeline_clone():
    pipe = Pipeline([("mask", SmallEnergyMasker(eta_th_db=-18.0))])
    cloned = clone(pipe)
    assert cloned.get_params()["mask__eta_th_db"] == -18.0
