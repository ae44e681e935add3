"""Exception hierarchy shared by all subpackages."""


class WavesError(Exception):
    """Base class; ``kind`` is used as the machine-readable error tag."""

    def __init__(self, message="", **data):
        super().__init__(message)
        self.data = data

    @property
    def kind(self):
        return type(self).__name__

    def to_dict(self):
        out = {"error": self.kind, "message": str(self)}
        for k, v in self.data.items():
            out[k] = v if isinstance(v, (int, float, str, list, dict, type(None))) else repr(v)
        return out


class CharacteristicDegenerate(WavesError):
    pass


class InsufficientSmoothness(WavesError):
    pass


class BlowUp(WavesError):
    pass


class StallNoEquilibrium(WavesError):
    pass


class AssumptionViolated(WavesError):
    def __init__(self, failures, message=None):
        failures = list(failures)
        super().__init__(message or "; ".join(failures), failures=failures)
        self.failures = failures


class OleinikFailed(WavesError):
    pass


class DegenerateJump(WavesError):
    pass


class RootNotBracketed(WavesError):
    pass


class NewtonDiverged(WavesError):
    pass


class OutOfFamilyBall(WavesError):
    pass


class SignViolation(WavesError):
    pass


class InternalInconsistency(WavesError):
    pass


class ZeroClusterUnresolved(WavesError):
    pass


class GridTooCoarse(WavesError):
    pass


class SupportLeak(WavesError):
    pass


class SpectralSide(WavesError):
    pass


class WindowNotConverged(WavesError):
    pass


class DomainExit(WavesError):
    pass


class EventCascadeOverflow(WavesError):
    pass


class BrokenRegion(WavesError):
    pass


class MultipleRoots(WavesError):
    pass


class ShockDies(WavesError):
    pass


class ShockLost(WavesError):
    pass


class ExpressionSyntaxError(WavesError):
    def __init__(self, message, position, expected=()):
        super().__init__(f"{message} at position {position}", position=position,
                         expected=sorted(expected))
        self.position = position
        self.expected = sorted(expected)


class ConfigError(WavesError):
    pass


class ResolutionWarning(UserWarning):
    """Raised through ``warnings`` when sampled data is too sparse for the requested grid."""
