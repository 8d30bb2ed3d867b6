"""Built-in verification suites and their fault sensitivity."""

import numpy as np

import mep.spectral
from mep.selfcheck import (
    SuiteResult,
    gradient_suite,
    mask_suite,
    roundtrip_suite,
    run_all,
)


def test_pristine_run_all_passes():
    results = run_all(seed=0)
    assert [r.name for r in results] == ["roundtrip", "gradient", "mask"]
    for r in results:
        assert r.ok
        assert r.failed == 0
        assert r.failures == []
    assert results[0].passed == 12
    assert results[1].passed == 4
    assert results[2].passed == 30


def test_suite_result_bookkeeping():
    r = SuiteResult("demo")
    r.record(True, "fine")
    r.record(False, "broke here")
    assert (r.passed, r.failed) == (1, 1)
    assert not r.ok
    assert r.failures == ["broke here"]
    assert r.summary() == "demo: 1 passed, 1 failed [FAIL]"
    ok = SuiteResult("demo2")
    ok.record(True, "fine")
    assert ok.summary() == "demo2: 1 passed, 0 failed [ok]"


def test_gradient_suite_catches_corrupted_backward(monkeypatch):
    """A scaled filterbank backward must fail every gradient check while
    the other suites stay green."""
    real = mep.spectral.mel_backward

    def corrupted(grad_log_mel, power_spec, fb):
        return 1.5 * real(grad_log_mel, power_spec, fb)

    monkeypatch.setattr(mep.spectral, "mel_backward", corrupted)
    bad = gradient_suite(seed=0)
    assert bad.failed == bad.passed + bad.failed == 4
    assert roundtrip_suite(seed=0).ok
    assert mask_suite(seed=0).ok


def test_roundtrip_suite_varied_lengths():
    r = roundtrip_suite(n_waves=5, seed=3)
    assert r.ok
    assert r.passed == 5


def test_mask_suite_is_bitwise():
    r = mask_suite(n_spectra=8, seed=1)
    assert r.ok and r.passed == 8


def test_suites_deterministic():
    a = gradient_suite(seed=2)
    b = gradient_suite(seed=2)
    assert a.passed == b.passed and a.failed == b.failed


def test_roundtrip_suite_detects_distortion(monkeypatch):
    real = mep.spectral.istft

    def lossy(spec):
        buf = real(spec)
        buf.samples = buf.samples + 1e-3
        return buf

    monkeypatch.setattr(mep.spectral, "istft", lossy)
    assert not roundtrip_suite(n_waves=3, seed=0).ok


def test_mask_suite_detects_threshold_shift(monkeypatch):
    import mep.masking

    real = mep.masking.threshold

    def shifted(x_peak, cfg):
        return real(x_peak, cfg) * 1.01

    monkeypatch.setattr(mep.masking, "threshold", shifted)
    result = mask_suite(n_spectra=5, seed=0)
    assert result.failed > 0
