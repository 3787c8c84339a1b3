"""Exception hierarchy.

Everything derives from :class:`NMEError`. Solver failures derive from
:class:`SolverError` and carry the partial continuation trace.
"""


class NMEError(Exception):
    pass


class LevelRangeError(NMEError, IndexError):
    pass


class SpecMismatchError(NMEError, ValueError):
    pass


class LengthMismatchError(NMEError, ValueError):
    pass


class EmptySetError(NMEError, ValueError):
    pass


class ExtractionExhausted(NMEError):
    """Scan limit reached before enough indices were found.

    Inconclusive: the sample is too short or the tolerance too small.
    """


class BoundsViolation(NMEError):
    pass


class GuardViolation(NMEError):
    pass


class SamplerFailure(NMEError):
    pass


class DegenerateSampling(NMEError):
    pass


class NewtonDivergence(NMEError):
    pass


class SolverError(NMEError):
    def __init__(self, message, trace=None, t=None):
        super().__init__(message)
        self.trace = trace
        self.t = t


class StepUnderflow(SolverError):
    pass


class GuardExit(SolverError):
    pass


class MaxSteps(SolverError):
    pass


class TameViolation(SolverError):
    pass
