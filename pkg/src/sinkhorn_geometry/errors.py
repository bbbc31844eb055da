"""Exception hierarchy.

Every error raised on purpose by the library derives from
:class:`SinkhornGeometryError`. The CLI maps the three families below to
distinct exit codes.
"""


class SinkhornGeometryError(Exception):
    """Base class for library errors."""


class InputError(SinkhornGeometryError, ValueError):
    """Malformed or inconsistent input data."""


class SolverError(SinkhornGeometryError, RuntimeError):
    """A numerical routine could not produce a trustworthy answer."""


class NonSymmetricCost(InputError):
    pass


class NegativeCost(InputError):
    pass


class NonPositiveEpsilon(InputError):
    pass


class InvalidMeasure(InputError):
    """Weights are negative, non finite or do not sum to one."""


class IncompatibleSpaces(InputError):
    """Two objects cannot be related through a common cost."""


class UnbalancedTangent(InputError):
    pass


class SupportViolation(InputError):
    """A tangent charges points where the base measure has no mass."""


class NotInImage(InputError):
    pass


class NotTangent(InputError):
    pass


class DegenerateMass(InputError):
    pass


class MaxIterationsExceeded(SolverError):
    """Raised in strict mode; carries the best iterate as ``result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NotConverged(SolverError):
    pass


class SingularBeyondGauge(SolverError):
    """The self-transport kernel has a second eigenvalue equal to one."""


class QuadratureFailure(SolverError):
    pass
