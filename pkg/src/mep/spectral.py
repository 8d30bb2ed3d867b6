"""STFT analysis/synthesis, power spectra, and the mel filterbank.

Analysis uses a periodic Hann window (25 ms) with 50% overlap (12.5 ms
hop) at 16 kHz, which satisfies the constant-overlap-add condition
exactly, so an unmodified spectrogram inverts back to the original
signal.  Synthesis is weighted overlap-add with per-sample window-square
normalization.  The signal is reflect-padded by half a window on both
sides so frame alignment and edge reconstruction are deterministic.

A modified power spectrum is turned back into audio by pairing its
square root with the phase of a reference complex spectrogram.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .audio import WaveBuffer
from .errors import ShapeMismatchError, TooShortError
from .validation import as_matrix, check_same_shape

SAMPLE_RATE = 16000


def periodic_hann(length: int) -> np.ndarray:
    """Periodic Hann window: 0.5 - 0.5*cos(2*pi*n/length)."""
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


def cola_deviation(window: np.ndarray, hop: int) -> float:
    """Relative deviation of the overlapped window sum from constant.

    Zero (up to roundoff) means windows summed at multiples of ``hop``
    tile to a constant, i.e. overlap-add reconstruction is exact.
    """
    length = len(window)
    n_shifts = -(-length // hop)  # enough shifts to wrap a full period
    acc = np.zeros(hop)
    for r in range(n_shifts):
        seg = window[r * hop : r * hop + hop]
        acc[: len(seg)] += seg
    mean = float(np.mean(acc))
    if mean == 0.0:
        return np.inf
    return float((acc.max() - acc.min()) / mean)


@dataclass(frozen=True)
class StftConfig:
    """Window/FFT geometry for analysis and synthesis.

    Defaults: 512-point FFT over a 400-sample (25 ms) periodic Hann
    window with a 200-sample (12.5 ms) hop.
    """

    fft_size: int = 512
    window_length: int = 400
    hop_length: int = 200

    def __post_init__(self):
        if self.window_length > self.fft_size:
            raise ValueError("window_length must not exceed fft_size")
        if not 0 < self.hop_length <= self.window_length:
            raise ValueError("hop_length must be in (0, window_length]")
        dev = cola_deviation(self.window(), self.hop_length)
        if dev > 1e-6:
            raise ValueError(
                f"window/hop violate overlap-add constancy (deviation {dev:.3g})"
            )

    @property
    def n_bins(self) -> int:
        """One-sided bin count for a real signal."""
        return self.fft_size // 2 + 1

    @property
    def bin_freqs(self) -> np.ndarray:
        """Center frequency of each one-sided bin in Hz."""
        return np.arange(self.n_bins) * (SAMPLE_RATE / self.fft_size)

    def window(self) -> np.ndarray:
        return periodic_hann(self.window_length)


@dataclass
class ComplexSpectrogram:
    """One-sided complex STFT coefficients, frames x bins."""

    data: np.ndarray
    config: StftConfig
    original_length: int

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2 or self.data.shape[1] != self.config.n_bins:
            raise ShapeMismatchError(
                f"expected (frames, {self.config.n_bins}) spectrogram, "
                f"got {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise ShapeMismatchError("spectrogram contains non-finite coefficients")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


@dataclass
class PowerSpectrum:
    """Per-bin energies |S|^2, frames x bins, all non-negative."""

    data: np.ndarray
    config: StftConfig
    original_length: int

    def __post_init__(self):
        self.data = as_matrix(self.data, "power spectrum")
        if self.data.shape[1] != self.config.n_bins:
            raise ShapeMismatchError(
                f"expected {self.config.n_bins} bins, got {self.data.shape[1]}"
            )
        if np.any(self.data < 0) or not np.all(np.isfinite(self.data)):
            raise ShapeMismatchError("power spectrum entries must be finite and >= 0")

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]


def _frame(padded: np.ndarray, cfg: StftConfig) -> np.ndarray:
    n_frames = 1 + (len(padded) - cfg.window_length) // cfg.hop_length
    idx = (
        np.arange(cfg.window_length)[None, :]
        + cfg.hop_length * np.arange(n_frames)[:, None]
    )
    return padded[idx]


def stft(wave: WaveBuffer, config: StftConfig | None = None) -> ComplexSpectrogram:
    """Analyze a wave into one-sided complex STFT coefficients.

    Frames are center-aligned: the signal is reflect-padded by half a
    window at both ends, then split into
    ``1 + (padded_length - window_length) // hop_length`` frames.
    """
    cfg = config or StftConfig()
    samples = wave.samples if isinstance(wave, WaveBuffer) else np.asarray(wave, float)
    if len(samples) < cfg.window_length:
        raise TooShortError(
            f"signal of {len(samples)} samples is shorter than the "
            f"{cfg.window_length}-sample analysis window"
        )
    half = cfg.window_length // 2
    padded = np.pad(samples, half, mode="reflect")
    frames = _frame(padded, cfg) * cfg.window()
    coeffs = np.fft.rfft(frames, n=cfg.fft_size, axis=1)
    return ComplexSpectrogram(coeffs, cfg, original_length=len(samples))


def istft(spec: ComplexSpectrogram) -> WaveBuffer:
    """Invert a spectrogram by weighted overlap-add.

    Each frame is inverse-transformed, truncated to the window length,
    windowed again, and accumulated; the result is divided by the
    overlapped window-square sum and trimmed back to the original
    length.  For unmodified spectra this is exact reconstruction.
    """
    cfg = spec.config
    frames = np.fft.irfft(spec.data, n=cfg.fft_size, axis=1)[:, : cfg.window_length]
    win = cfg.window()
    frames = frames * win

    n_frames = spec.n_frames
    half = cfg.window_length // 2
    padded_length = cfg.window_length + (n_frames - 1) * cfg.hop_length
    out = np.zeros(padded_length)
    wsum = np.zeros(padded_length)
    win_sq = win * win
    for m in range(n_frames):
        start = m * cfg.hop_length
        out[start : start + cfg.window_length] += frames[m]
        wsum[start : start + cfg.window_length] += win_sq
    nonzero = wsum > 1e-11
    out[nonzero] /= wsum[nonzero]

    end = half + spec.original_length
    if end > padded_length:
        raise ShapeMismatchError(
            f"spectrogram with {n_frames} frames cannot cover "
            f"{spec.original_length} samples"
        )
    return WaveBuffer(samples=out[half:end])


def power(spec: ComplexSpectrogram) -> PowerSpectrum:
    """Elementwise squared magnitude of the STFT coefficients."""
    energies = spec.data.real**2 + spec.data.imag**2
    return PowerSpectrum(energies, spec.config, spec.original_length)


def resynthesize(
    perturbed: PowerSpectrum | np.ndarray, phase_source: ComplexSpectrogram
) -> WaveBuffer:
    """Rebuild audio from a modified power spectrum and reference phase.

    The output is the inverse STFT of the spectrogram whose magnitude is
    the square root of ``perturbed`` (negatives clamped to zero first)
    and whose phase comes from ``phase_source``.
    """
    data = perturbed.data if isinstance(perturbed, PowerSpectrum) else np.asarray(perturbed, float)
    check_same_shape(data, phase_source.data, "power spectrum and phase source")
    magnitude = np.sqrt(np.maximum(data, 0.0))
    ref_mag = np.abs(phase_source.data)
    safe_mag = np.where(ref_mag > 0, ref_mag, 1.0)
    unit_phase = np.where(ref_mag > 0, phase_source.data / safe_mag, 1.0)
    spec = ComplexSpectrogram(
        magnitude * unit_phase, phase_source.config, phase_source.original_length
    )
    return istft(spec)


# -- mel filterbank -----------------------------------------------------------


def hz_to_mel(freq_hz) -> np.ndarray:
    """HTK mel scale."""
    return 2595.0 * np.log10(1.0 + np.asarray(freq_hz, float) / 700.0)


def mel_to_hz(mel) -> np.ndarray:
    return 700.0 * (10.0 ** (np.asarray(mel, float) / 2595.0) - 1.0)


@dataclass(frozen=True)
class MelFilterbank:
    """Triangular mel filterbank over the one-sided spectrum.

    80 channels spanning 0-8000 Hz on the HTK mel scale, unit-peak
    triangles.  ``log_floor`` guards the log of near-silent channels.
    """

    n_channels: int = 80
    fmin: float = 0.0
    fmax: float = SAMPLE_RATE / 2
    log_floor: float = 1e-10
    config: StftConfig = field(default_factory=StftConfig)
    weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = mel_to_hz(
            np.linspace(hz_to_mel(self.fmin), hz_to_mel(self.fmax), self.n_channels + 2)
        )
        freqs = self.config.bin_freqs
        lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
        rising = (freqs[None, :] - lower) / (center - lower)
        falling = (upper - freqs[None, :]) / (upper - center)
        weights = np.maximum(0.0, np.minimum(rising, falling))
        if np.any(weights.sum(axis=1) == 0):
            raise ValueError(
                "filterbank has an empty channel; increase fft_size or "
                "decrease n_channels"
            )
        object.__setattr__(self, "weights", weights)

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]


@dataclass
class MelFeatures:
    """Linear and log mel energies of one utterance, frames x channels."""

    mel: np.ndarray
    log_mel: np.ndarray
    filterbank: MelFilterbank


def mel_apply(power_spec: PowerSpectrum | np.ndarray, fb: MelFilterbank) -> MelFeatures:
    """Pool bin energies into mel channels and take a floored log."""
    data = power_spec.data if isinstance(power_spec, PowerSpectrum) else as_matrix(power_spec)
    if data.shape[1] != fb.n_bins:
        raise ShapeMismatchError(
            f"power spectrum has {data.shape[1]} bins, filterbank expects {fb.n_bins}"
        )
    mel = data @ fb.weights.T
    log_mel = np.log(np.maximum(mel, fb.log_floor))
    return MelFeatures(mel=mel, log_mel=log_mel, filterbank=fb)


def mel_backward(
    grad_log_mel: np.ndarray, power_spec: PowerSpectrum | np.ndarray, fb: MelFilterbank
) -> np.ndarray:
    """Chain-rule a log-mel gradient back to per-bin energies.

    d(log mel_c)/d(x_k) is weight[c, k] / mel_c where the channel is
    above the log floor, and zero where it was floored.
    """
    data = power_spec.data if isinstance(power_spec, PowerSpectrum) else as_matrix(power_spec)
    grad_log_mel = as_matrix(grad_log_mel, "log-mel gradient")
    if grad_log_mel.shape != (data.shape[0], fb.n_channels):
        raise ShapeMismatchError(
            f"log-mel gradient shape {grad_log_mel.shape} does not match "
            f"({data.shape[0]}, {fb.n_channels})"
        )
    mel = data @ fb.weights.T
    grad_mel = np.where(mel > fb.log_floor, grad_log_mel / np.maximum(mel, fb.log_floor), 0.0)
    return grad_mel @ fb.weights
