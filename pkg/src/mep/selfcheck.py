"""Built-in verification suites.

Three independent suites guard the numerical core at runtime, without
the test harness:

- round-trip: analysis followed by synthesis reproduces random waves;
- gradient: the hand-written backward pass matches central finite
  differences of the scalar loss;
- mask: the vectorized mask builder agrees bitwise with a naive
  pure-Python recomputation.

Each suite returns a :class:`SuiteResult` with pass/fail counts so a
caller (the ``selfcheck`` subcommand) can enumerate them and pick an
exit code.  The gradient suite computes the analytic side through the
public encoder entry point, so a corrupted filterbank backward is
caught here rather than silently skewing attacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import masking, spectral
from .encoder import SpeakerEncoder
from .masking import MaskConfig
from .spectral import MelFilterbank, StftConfig

#: Relative reconstruction error allowed on a round trip.
ROUNDTRIP_TOL = 1e-6
#: Relative error allowed between analytic and finite-difference gradients.
GRADIENT_TOL = 1e-3
#: Analytic entries smaller than this are skipped in the comparison.
GRADIENT_CUT = 1e-8


@dataclass
class SuiteResult:
    """Outcome of one verification suite."""

    name: str
    passed: int = 0
    failed: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def record(self, ok: bool, detail: str) -> None:
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            self.failures.append(detail)

    def summary(self) -> str:
        status = "ok" if self.ok else "FAIL"
        return f"{self.name}: {self.passed} passed, {self.failed} failed [{status}]"


def roundtrip_suite(n_waves: int = 12, seed: int = 0,
                    config: StftConfig | None = None) -> SuiteResult:
    """Analysis/synthesis identity on random waves of varied length."""
    cfg = config or StftConfig()
    rng = np.random.default_rng(seed)
    result = SuiteResult("roundtrip")
    for i in range(n_waves):
        n = int(rng.integers(cfg.window_length, 16000))
        wave = rng.standard_normal(n)
        spec = spectral.stft(wave, cfg)
        back = spectral.istft(spec).samples
        rel = np.linalg.norm(back - wave) / np.linalg.norm(wave)
        result.record(rel <= ROUNDTRIP_TOL,
                      f"wave {i} (len {n}): relative error {rel:.3e}")
    return result


def gradient_suite(n_models: int = 2, n_inputs: int = 2, probes: int = 48,
                   seed: int = 0) -> SuiteResult:
    """Spot-check the analytic power-spectrum gradient against central
    finite differences at randomly chosen bins.

    Probe spectra are bounded away from zero and the step is 1e-4: with
    entries in [0.1, 2] every mel channel stays far from the log floor,
    so the loss is smooth there and the central difference is trustworthy
    to well under GRADIENT_TOL.  One check per (model, input) pair; a
    pair fails if any probed bin with non-negligible gradient disagrees.
    """
    cfg = StftConfig()
    fb = MelFilterbank(config=cfg)
    rng = np.random.default_rng(seed)
    h = 1e-4
    result = SuiteResult("gradient")
    for model_idx in range(n_models):
        enc = SpeakerEncoder(seed=1000 + model_idx)
        for input_idx in range(n_inputs):
            frames = int(rng.integers(4, 9))
            x = rng.uniform(0.1, 2.0, size=(frames, cfg.n_bins))
            target_raw = rng.standard_normal(enc.embedding_dim)
            target = target_raw / np.linalg.norm(target_raw)
            grad = enc.grad_power(x, target, fb)

            worst = 0.0
            worst_at = None
            for _ in range(probes):
                m = int(rng.integers(0, frames))
                k = int(rng.integers(0, cfg.n_bins))
                g = grad[m, k]
                if abs(g) <= GRADIENT_CUT:
                    continue
                bumped = x.copy()
                bumped[m, k] = x[m, k] + h
                up = enc.loss_from_power(bumped, target, fb)
                bumped[m, k] = x[m, k] - h
                down = enc.loss_from_power(bumped, target, fb)
                fd = (up - down) / (2.0 * h)
                rel = abs(fd - g) / abs(g)
                if rel > worst:
                    worst, worst_at = rel, (m, k)
            result.record(
                worst <= GRADIENT_TOL,
                f"model {model_idx} input {input_idx}: relative error "
                f"{worst:.3e} at bin {worst_at}",
            )
    return result


def _naive_mask(data: np.ndarray, cfg: MaskConfig) -> np.ndarray:
    """Reference mask computed with plain Python sorting and loops."""
    values = sorted((float(v) for v in data.ravel()), reverse=True)
    n_drop = math.floor(cfg.peak_exclusion_fraction * len(values))
    x_peak = values[n_drop]
    x_th = x_peak * 10.0 ** (cfg.resolve_eta() / 10.0)
    out = np.empty(data.shape, dtype=np.float64)
    for idx, v in np.ndenumerate(data):
        out[idx] = 1.0 if v >= x_th else 0.0
    return out


def mask_suite(n_spectra: int = 30, seed: int = 0) -> SuiteResult:
    """Bitwise agreement between build_mask and the naive recomputation."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("mask")
    for i in range(n_spectra):
        frames = int(rng.integers(3, 40))
        data = rng.uniform(0.0, 1.0, size=(frames, 257)) ** 2
        cfg = MaskConfig(eta_th_db=float(rng.uniform(-40.0, -5.0)))
        fast = masking.build_mask(data, cfg).mask
        slow = _naive_mask(data, cfg)
        same = bool(np.array_equal(fast, slow))
        result.record(same, f"spectrum {i}: {int(np.sum(fast != slow))} bins differ")
    return result


def run_all(seed: int = 0) -> list[SuiteResult]:
    """Run every suite; order is fixed so reports are stable."""
    return [
        roundtrip_suite(seed=seed),
        gradient_suite(seed=seed),
        mask_suite(seed=seed),
    ]
