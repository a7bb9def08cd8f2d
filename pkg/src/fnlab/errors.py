"""Exception hierarchy.

Two families: :class:`InputError` for invalid arguments or network
descriptions, and :class:`NumericalError` for situations where a quantity
does not exist or cannot be computed at the requested parameters.  The CLI
maps the first to exit code 2 and the second to exit code 3.
"""


class FNLabError(Exception):
    pass


class InputError(FNLabError, ValueError):
    pass


class NumericalError(FNLabError, ArithmeticError):
    pass


# input / domain problems
class InvalidParams(InputError):
    pass


class OutOfDomain(InputError):
    pass


class CycleDetected(InputError):
    pass


class MultipleParents(InputError):
    pass


class Disconnected(InputError):
    pass


class InsufficientData(InputError):
    pass


# numerical non-existence / degeneracy
class DegenerateCubic(NumericalError):
    pass


class NoHopf(NumericalError):
    pass


class NoHopfInB(NoHopf):
    pass


class Unbounded(NumericalError):
    pass


class Degenerate(NumericalError):
    pass


class BoundaryPoint(NumericalError):
    """Point lies within tolerance of a separating curve."""

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class OnFoldCurve(NumericalError):
    pass


class BranchAbsent(NumericalError):
    pass


class NoRoot(NumericalError):
    pass


class Codim2(NumericalError):
    pass


class BlowUp(NumericalError):
    def __init__(self, message, t_fail=None):
        super().__init__(message)
        self.t_fail = t_fail
