"""Mono 16 kHz WAV input/output.

The rest of the pipeline works on :class:`WaveBuffer` objects: mono
float64 samples nominally in [-1, 1] at exactly 16 kHz.  Anything else
(stereo, other rates, other bit depths) is rejected rather than silently
converted, so the downstream DSP contract stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile

from .errors import (
    EmptyAudioError,
    IoFailureError,
    MalformedContainerError,
    UnsupportedFormatError,
)
from .validation import MIN_SAMPLES, as_samples

REQUIRED_RATE = 16000

#: PCM-16 normalization divisor; one quantization step is 2**-15.
PCM_SCALE = 32768.0


@dataclass
class WaveBuffer:
    """Mono audio: float64 samples in [-1, 1] at ``sample_rate`` Hz."""

    samples: np.ndarray
    sample_rate: int = REQUIRED_RATE

    def __post_init__(self):
        self.samples = as_samples(self.samples, min_length=MIN_SAMPLES)
        if self.sample_rate != REQUIRED_RATE:
            raise UnsupportedFormatError(
                f"sample rate must be {REQUIRED_RATE} Hz, got {self.sample_rate}"
            )

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


def read_wav(path) -> WaveBuffer:
    """Read a mono 16 kHz WAV file (PCM-16 or IEEE float-32).

    PCM-16 samples are normalized by 2**15; float-32 samples are taken
    as-is.  Raises :class:`UnsupportedFormatError` for any other layout;
    there is no silent resampling or channel downmix.
    """
    try:
        rate, data = wavfile.read(path)
    except FileNotFoundError as exc:
        raise IoFailureError(str(exc)) from exc
    except ValueError as exc:
        raise MalformedContainerError(f"{path}: {exc}") from exc
    except Exception as exc:  # struct errors on truncated headers, etc.
        raise MalformedContainerError(f"{path}: {exc}") from exc

    if data.ndim != 1:
        raise UnsupportedFormatError(
            f"{path}: expected mono audio, got {data.shape[1]} channels"
        )
    if rate != REQUIRED_RATE:
        raise UnsupportedFormatError(
            f"{path}: sample rate {rate} Hz unsupported, need {REQUIRED_RATE}"
        )
    if data.size == 0:
        raise EmptyAudioError(f"{path}: no audio frames")
    if data.size < MIN_SAMPLES:
        raise EmptyAudioError(
            f"{path}: {data.size} samples is shorter than one analysis window"
        )
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / PCM_SCALE
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise UnsupportedFormatError(
            f"{path}: sample format {data.dtype} unsupported, need PCM-16 or float-32"
        )
    if not np.all(np.isfinite(samples)):
        raise MalformedContainerError(f"{path}: non-finite sample values")
    return WaveBuffer(samples=samples, sample_rate=int(rate))


def write_wav(buffer: WaveBuffer, path, *, float32: bool = False) -> None:
    """Write ``buffer`` as PCM-16 (default) or IEEE float-32.

    Samples are clamped to [-1, 1] before serialization.  The PCM-16
    round trip through :func:`read_wav` is exact to within one
    quantization step (2**-15 per sample).
    """
    if not isinstance(buffer, WaveBuffer):
        buffer = WaveBuffer(samples=buffer)
    clamped = np.clip(buffer.samples, -1.0, 1.0)
    if float32:
        payload = clamped.astype(np.float32)
    else:
        quantized = np.rint(clamped * PCM_SCALE)
        payload = np.clip(quantized, -32768, 32767).astype(np.int16)
    try:
        wavfile.write(path, buffer.sample_rate, payload)
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
