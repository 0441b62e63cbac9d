"""Exception hierarchy.

Every numerical failure raised by this package derives from :class:`Wh2Error`
so the command line front end can map it onto a single exit code.
"""


class Wh2Error(Exception):
    """Base class for all package errors."""


# numkit
class SingularMatrix(Wh2Error):
    pass


class SingularE(Wh2Error):
    pass


class ConvergenceFailure(Wh2Error):
    pass


class UnstablePencil(Wh2Error):
    pass


class ToleranceNotMet(Wh2Error):
    pass


# lti
class EvalAtPole(Wh2Error):
    pass


class NonSimplePoles(Wh2Error):
    def __init__(self, message, cluster=()):
        super().__init__(message)
        self.cluster = tuple(cluster)


class ConjugationViolation(Wh2Error):
    pass


class IllPosedLoop(Wh2Error):
    pass


class InvalidRange(Wh2Error):
    pass


class StepTooLarge(Wh2Error):
    pass


class NotStrictlyProper(Wh2Error):
    pass


# wh2
class CommonPoles(Wh2Error):
    pass


class NonSimpleWeightPoles(NonSimplePoles):
    pass


class UnsupportedMultiplicity(Wh2Error):
    pass


class NegativeRadicand(Wh2Error):
    pass


# reduce
class ShiftAtPole(Wh2Error):
    pass


class TotalRankCollapse(Wh2Error):
    pass


class BasisMismatch(Wh2Error):
    pass


class SingularReducedE(Wh2Error):
    pass


class NotConverged(Wh2Error):
    """Raised only on request; carries the best iterate and its report."""

    def __init__(self, message, reduced=None, report=None):
        super().__init__(message)
        self.reduced = reduced
        self.report = report


class UnstableReducedPencil(Wh2Error):
    def __init__(self, message, reduced=None, report=None):
        super().__init__(message)
        self.reduced = reduced
        self.report = report


# baselines
class RankDeficientGramian(Wh2Error):
    pass
