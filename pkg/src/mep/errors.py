"""Exception hierarchy for the mep package.

Every error raised on a contract violation derives from :class:`MepError`,
so callers (and the CLI) can catch one base class.
"""


class MepError(Exception):
    """Base class for all mep errors."""


class UnsupportedFormatError(MepError):
    """WAV file is not mono 16 kHz PCM-16 / IEEE float-32."""


class MalformedContainerError(MepError):
    """File is not a well-formed RIFF/WAVE container."""


class EmptyAudioError(MepError):
    """Audio payload is empty or shorter than one analysis window."""


class IoFailureError(MepError):
    """Underlying read/write failed."""


class TooShortError(MepError):
    """Signal shorter than the analysis window."""


class ShapeMismatchError(MepError):
    """Matrix operands have incompatible shapes."""


class TooFewFramesError(MepError):
    """Statistics pooling needs at least two frames."""


class NonPositiveEnergyError(MepError):
    """dB ratio requires strictly positive energies."""


class AllZeroEnergyError(MepError):
    """Power spectrum has no positive entry."""


class RescaleUndefinedError(MepError):
    """Sum-preserving rescale undefined when every bin is masked out."""


class ZeroGradientNormError(MepError):
    """Gradient has zero L1 norm where a normalization was required."""


class EmptyTrialListError(MepError):
    """EER needs at least one genuine and one imposter score."""


class LengthMismatchError(MepError):
    """Signals compared sample-by-sample must have equal length."""
