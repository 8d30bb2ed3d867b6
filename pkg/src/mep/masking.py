"""Small-energy binary masking of power spectra.

Per utterance: find the peak energy after discarding the top 5% of
entries, derive an absolute threshold from a dB offset below that peak,
and keep (mask value 1) every time-frequency bin at or above the
threshold.  Perturbations confined to kept bins ride on high-energy
content and stay perceptually buried.

The threshold offset is fixed at -20 dB by default.  A seeded
uniform-random offset mode is available for parity with
randomized-threshold masking schemes; the attack path never uses it
unless asked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroEnergyError,
    NonPositiveEnergyError,
    RescaleUndefinedError,
)
from .spectral import PowerSpectrum
from .validation import as_matrix, check_same_shape


@dataclass(frozen=True)
class MaskConfig:
    """Masking parameters.

    ``eta_th_db``: threshold in dB relative to the percentile peak
    (must be negative).  ``peak_exclusion_fraction``: fraction of
    top-energy entries ignored when locating the peak.
    ``rescale_unmasked``: scale surviving bins so the total energy sum
    is preserved.  ``random_eta``: draw the dB offset uniformly from
    ``eta_range_db`` using ``rng_seed`` instead of using ``eta_th_db``.
    """

    eta_th_db: float = -20.0
    peak_exclusion_fraction: float = 0.05
    rescale_unmasked: bool = False
    random_eta: bool = False
    eta_range_db: tuple = (-40.0, -10.0)
    rng_seed: int = 0

    def __post_init__(self):
        if not self.eta_th_db < 0:
            raise ValueError("eta_th_db must be negative")
        if not 0 <= self.peak_exclusion_fraction < 1:
            raise ValueError("peak_exclusion_fraction must be in [0, 1)")
        lo, hi = self.eta_range_db
        if not (lo < 0 and hi < 0 and lo <= hi):
            raise ValueError("eta_range_db must be negative dB values with lo <= hi")

    def resolve_eta(self) -> float:
        """The dB offset actually used: fixed, or seeded uniform draw."""
        if not self.random_eta:
            return self.eta_th_db
        lo, hi = self.eta_range_db
        return float(np.random.default_rng(self.rng_seed).uniform(lo, hi))


@dataclass
class EnergyMask:
    """Binary keep/drop matrix with the peak and threshold that built it."""

    mask: np.ndarray
    x_peak: float
    x_th: float

    def __post_init__(self):
        self.mask = as_matrix(self.mask, "mask")

    @property
    def kept_fraction(self) -> float:
        return float(self.mask.mean())


def db_ratio(x: float, x_peak: float) -> float:
    """Energy ratio x / x_peak in dB.  Diagnostic only; masking itself
    compares raw energies so zero bins need no special case."""
    if x <= 0 or x_peak <= 0:
        raise NonPositiveEnergyError("dB ratio needs strictly positive energies")
    return 10.0 * np.log10(x / x_peak)


def compute_peak(power_spec: PowerSpectrum | np.ndarray, cfg: MaskConfig) -> float:
    """Largest energy after discarding the top fraction of entries.

    All entries are flattened and sorted descending; the top
    ``floor(fraction * count)`` are dropped and the first survivor is
    returned.  Sorting is deterministic, so ties resolve stably.
    """
    data = power_spec.data if isinstance(power_spec, PowerSpectrum) else as_matrix(power_spec)
    flat = data.ravel()
    if not np.any(flat > 0):
        raise AllZeroEnergyError("power spectrum has no positive entry")
    n_drop = int(np.floor(cfg.peak_exclusion_fraction * flat.size))
    descending = np.sort(flat)[::-1]
    return float(descending[n_drop])


def threshold(x_peak: float, cfg: MaskConfig) -> float:
    """Absolute energy threshold: x_peak * 10**(eta/10)."""
    if x_peak <= 0:
        raise NonPositiveEnergyError("peak energy must be positive")
    return float(x_peak * 10.0 ** (cfg.resolve_eta() / 10.0))


def build_mask(power_spec: PowerSpectrum | np.ndarray, cfg: MaskConfig | None = None) -> EnergyMask:
    """Binary mask: 1 where energy >= threshold, 0 below.

    The boundary case (energy exactly equal to the threshold) is kept.
    """
    cfg = cfg or MaskConfig()
    data = power_spec.data if isinstance(power_spec, PowerSpectrum) else as_matrix(power_spec)
    x_peak = compute_peak(data, cfg)
    x_th = threshold(x_peak, cfg)
    mask = (data >= x_th).astype(np.float64)
    return EnergyMask(mask=mask, x_peak=x_peak, x_th=x_th)


def apply_mask(
    power_spec: PowerSpectrum | np.ndarray,
    mask: EnergyMask | np.ndarray,
    cfg: MaskConfig | None = None,
) -> np.ndarray:
    """Zero out dropped bins; optionally rescale survivors to preserve
    the total energy sum."""
    cfg = cfg or MaskConfig()
    data = power_spec.data if isinstance(power_spec, PowerSpectrum) else as_matrix(power_spec)
    mu = mask.mask if isinstance(mask, EnergyMask) else as_matrix(mask, "mask")
    check_same_shape(data, mu, "power spectrum and mask")
    masked = mu * data
    if cfg.rescale_unmasked:
        total = data.sum()
        surviving = masked.sum()
        if surviving == 0:
            raise RescaleUndefinedError("every bin masked out; rescale undefined")
        masked = masked * (total / surviving)
    return masked
