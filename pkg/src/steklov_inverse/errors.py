"""Exception hierarchy.

Every error carries a stable ``code`` so the CLI can emit machine-readable
failures; the class name doubles as the code.
"""

from __future__ import annotations


class SteklovError(Exception):
    """Base class for all errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class InvalidSpec(SteklovError, ValueError):
    pass


class SizeTooLarge(SteklovError, ValueError):
    pass


# spectra
class MultiplicityOverflow(SteklovError):
    pass


class EmptySpectrum(SteklovError, ValueError):
    pass


# reconstruct
class WindowExceeded(SteklovError, ValueError):
    pass


class DivergenceSuspected(SteklovError):
    pass


class ResolutionTooCoarse(SteklovError, ValueError):
    pass


class FrequencyCountNotPow2(SteklovError):
    pass


class ThresholdAmbiguous(SteklovError):
    pass


# geometry
class NotPowerOfTwo(SteklovError):
    pass


class AmbiguousExclusion(SteklovError):
    pass


class NonPositiveLength(SteklovError):
    pass


class FrequencyNotFound(SteklovError):
    pass


class ZeroAmplitude(SteklovError):
    pass


class OddAdjacencyCount(SteklovError):
    pass


class WalkStuck(SteklovError):
    pass


class SignInconsistency(SteklovError):
    pass


class InvalidDiscriminant(SteklovError):
    pass


# graph oracle
class ExceptionalAngle(SteklovError, ValueError):
    pass
