"""Gradient-sign attacks in the power-spectrum domain.

Six methods share one skeleton: compute the gradient of the embedding
loss with respect to the bin energies, step along its sign, keep the
accumulated perturbation inside an elementwise (l-infinity) budget, and
floor the perturbed spectrum at zero.  The energy-masked variants
(single-step and iterative) additionally confine each step to bins kept
by the small-energy mask, so no noise lands in near-silent regions.

Gradients at each iteration are evaluated on the floored spectrum
``max(x + delta, 0)``; bins driven to the floor get zero gradient so the
derivative matches the value actually used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import masking, spectral
from .audio import WaveBuffer
from .encoder import SpeakerEncoder
from .errors import ShapeMismatchError
from .masking import EnergyMask, MaskConfig
from .spectral import ComplexSpectrogram, MelFilterbank, PowerSpectrum
from .validation import check_same_shape

METHODS = ("fgsm", "i-fgsm", "mi-fgsm", "pgd", "mep", "i-mep")

GRADIENT_MASK = "gradient-mask"
FEATURE_PRODUCT = "feature-product"


@dataclass(frozen=True)
class AttackConfig:
    """Attack hyperparameters.

    ``alpha`` defaults to ``epsilon / iterations`` when left as None.
    ``epsilon == 0`` is allowed as a degenerate no-op configuration
    (every method then returns a zero perturbation).
    """

    method: str = "i-mep"
    epsilon: float = 0.0002
    iterations: int = 20
    alpha: float | None = None
    momentum_decay: float = 1.0
    random_start: bool = True
    mep_mode: str = GRADIENT_MASK
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.alpha is not None:
            if self.alpha < 0 or self.alpha > self.epsilon:
                raise ValueError("alpha must satisfy 0 <= alpha <= epsilon")
        if self.mep_mode not in (GRADIENT_MASK, FEATURE_PRODUCT):
            raise ValueError(f"unknown mep_mode {self.mep_mode!r}")
        if self.momentum_decay < 0:
            raise ValueError("momentum_decay must be >= 0")

    @property
    def step_size(self) -> float:
        return self.epsilon / self.iterations if self.alpha is None else self.alpha


@dataclass
class AttackResult:
    """Perturbation, perturbed spectrum, optional resynthesized audio."""

    delta: np.ndarray
    perturbed: PowerSpectrum
    loss_trace: list = field(default_factory=list)
    mask: EnergyMask | None = None
    wave: WaveBuffer | None = None


def _as_power(power_spec) -> PowerSpectrum:
    if isinstance(power_spec, PowerSpectrum):
        return power_spec
    raise ShapeMismatchError("attacks operate on a PowerSpectrum")


def _floored_grad(enc: SpeakerEncoder, x: np.ndarray, delta: np.ndarray,
                  target: np.ndarray, fb: MelFilterbank):
    """Loss and gradient at max(x + delta, 0); floored bins get zero grad."""
    shifted = x + delta
    floored = np.maximum(shifted, 0.0)
    loss, grad = enc.loss_and_grad_power(floored, target, fb)
    grad = np.where(shifted > 0.0, grad, 0.0)
    return loss, grad


def _finish(power_spec: PowerSpectrum, delta: np.ndarray, trace, mask, phase):
    perturbed_data = np.maximum(power_spec.data + delta, 0.0)
    perturbed = PowerSpectrum(perturbed_data, power_spec.config,
                              power_spec.original_length)
    wave = spectral.resynthesize(perturbed, phase) if phase is not None else None
    return AttackResult(delta=delta, perturbed=perturbed, loss_trace=list(trace),
                        mask=mask, wave=wave)


def fgsm(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
         cfg: AttackConfig, fb: MelFilterbank,
         phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Single full-budget step along the gradient sign."""
    p = _as_power(power_spec)
    loss, grad = _floored_grad(enc, p.data, np.zeros_like(p.data), target, fb)
    delta = cfg.epsilon * np.sign(grad)
    return _finish(p, delta, [loss], None, phase)


def i_fgsm(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
           cfg: AttackConfig, fb: MelFilterbank,
           phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Iterated sign steps of size alpha, clipped to the epsilon ball."""
    p = _as_power(power_spec)
    delta = np.zeros_like(p.data)
    trace = []
    for _ in range(cfg.iterations):
        loss, grad = _floored_grad(enc, p.data, delta, target, fb)
        trace.append(loss)
        delta = np.clip(delta + cfg.step_size * np.sign(grad),
                        -cfg.epsilon, cfg.epsilon)
    return _finish(p, delta, trace, None, phase)


def mi_fgsm(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
            cfg: AttackConfig, fb: MelFilterbank,
            phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Momentum-accumulated sign steps; gradients are L1-normalized
    before entering the momentum buffer."""
    p = _as_power(power_spec)
    delta = np.zeros_like(p.data)
    momentum = np.zeros_like(p.data)
    trace = []
    for _ in range(cfg.iterations):
        loss, grad = _floored_grad(enc, p.data, delta, target, fb)
        trace.append(loss)
        l1 = np.abs(grad).sum()
        if l1 > 0:
            momentum = cfg.momentum_decay * momentum + grad / l1
        else:
            momentum = cfg.momentum_decay * momentum
        delta = np.clip(delta + cfg.step_size * np.sign(momentum),
                        -cfg.epsilon, cfg.epsilon)
    return _finish(p, delta, trace, None, phase)


def pgd(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
        cfg: AttackConfig, fb: MelFilterbank,
        phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Projected iterative attack with an optional random start inside
    the epsilon ball."""
    p = _as_power(power_spec)
    if cfg.random_start:
        rng = np.random.default_rng(cfg.rng_seed)
        delta = rng.uniform(-cfg.epsilon, cfg.epsilon, size=p.data.shape)
    else:
        delta = np.zeros_like(p.data)
    trace = []
    for _ in range(cfg.iterations):
        loss, grad = _floored_grad(enc, p.data, delta, target, fb)
        trace.append(loss)
        delta = np.clip(delta + cfg.step_size * np.sign(grad),
                        -cfg.epsilon, cfg.epsilon)
    return _finish(p, delta, trace, None, phase)


def _masked_step(grad: np.ndarray, mask_mu: np.ndarray, masked_energy: np.ndarray,
                 step: float, limit: float, mode: str) -> np.ndarray:
    """One energy-masked sign step, bounded by ``limit`` in l-infinity.

    gradient-mask: step * sign(grad) * mu.
    feature-product: the sign step is weighted by the masked energies
    themselves, then rescaled so its largest entry stays within limit.
    """
    if mode == GRADIENT_MASK:
        return step * np.sign(grad) * mask_mu
    raw = step * np.sign(grad) * masked_energy
    peak = np.abs(raw).max()
    if peak > limit:
        raw = raw * (limit / peak)
    return raw


def mep(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
        cfg: AttackConfig, fb: MelFilterbank, mask: EnergyMask,
        phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Single energy-masked sign step of size alpha (not epsilon)."""
    p = _as_power(power_spec)
    check_same_shape(p.data, mask.mask, "power spectrum and mask")
    loss, grad = _floored_grad(enc, p.data, np.zeros_like(p.data), target, fb)
    masked_energy = mask.mask * p.data
    delta = _masked_step(grad, mask.mask, masked_energy, cfg.step_size,
                         cfg.epsilon, cfg.mep_mode)
    delta = np.clip(delta, -cfg.epsilon, cfg.epsilon)
    return _finish(p, delta, [loss], mask, phase)


def i_mep(power_spec: PowerSpectrum, enc: SpeakerEncoder, target: np.ndarray,
          cfg: AttackConfig, fb: MelFilterbank, mask: EnergyMask,
          phase: ComplexSpectrogram | None = None) -> AttackResult:
    """Iterated energy-masked sign steps, clipped to the epsilon ball.

    Each step is confined to kept bins before clipping, so dropped bins
    carry exactly zero perturbation throughout.
    """
    p = _as_power(power_spec)
    check_same_shape(p.data, mask.mask, "power spectrum and mask")
    masked_energy = mask.mask * p.data
    delta = np.zeros_like(p.data)
    trace = []
    for _ in range(cfg.iterations):
        loss, grad = _floored_grad(enc, p.data, delta, target, fb)
        trace.append(loss)
        step = _masked_step(grad, mask.mask, masked_energy, cfg.step_size,
                            cfg.step_size, cfg.mep_mode)
        delta = np.clip(delta + step, -cfg.epsilon, cfg.epsilon)
    return _finish(p, delta, trace, mask, phase)


def run_attack(wave: WaveBuffer, enc: SpeakerEncoder, cfg: AttackConfig,
               fb: MelFilterbank, target: np.ndarray | None = None,
               mask_cfg: MaskConfig | None = None,
               stft_cfg: spectral.StftConfig | None = None) -> AttackResult:
    """Full pipeline: analyze, attack, resynthesize.

    When ``target`` is None the clean utterance's own embedding is used,
    so the attack pushes the voice away from itself.  The result always
    carries an adversarial waveform (original phase, perturbed
    magnitudes); a zero perturbation returns the input samples bit for
    bit rather than a resynthesized copy.
    """
    stft_cfg = stft_cfg or fb.config
    spec = spectral.stft(wave, stft_cfg)
    p = spectral.power(spec)
    if target is None:
        target = enc.embed_power(p, fb)
    if cfg.method in ("mep", "i-mep"):
        mask = masking.build_mask(p, mask_cfg or MaskConfig())
        fn = mep if cfg.method == "mep" else i_mep
        result = fn(p, enc, target, cfg, fb, mask, phase=spec)
    else:
        fn = {"fgsm": fgsm, "i-fgsm": i_fgsm, "mi-fgsm": mi_fgsm, "pgd": pgd}[cfg.method]
        result = fn(p, enc, target, cfg, fb, phase=spec)
    if not np.any(result.delta):
        samples = wave.samples if isinstance(wave, WaveBuffer) else np.asarray(wave, float)
        result.wave = WaveBuffer(samples=samples.copy())
    return result
