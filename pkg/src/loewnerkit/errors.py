"""Exception hierarchy.

Numerical failures (stalls, unresolvable orbits) are kept apart from input
errors so the CLI can map them onto distinct exit codes.
"""


class LoewnerError(Exception):
    pass


class InputError(LoewnerError, ValueError):
    """Bad arguments: points outside the domain, invalid radii, weights..."""


class DomainViolationError(InputError):
    def __init__(self, point, message="point is not inside the domain"):
        self.point = point
        super().__init__(f"{message}: {point!r}")


class DegeneratePairError(InputError):
    pass


class InvalidCompactError(InputError):
    pass


class InvalidWeightError(InputError):
    pass


class PreconditionError(InputError):
    pass


class RegularityPointError(InputError):
    pass


class NumericalError(LoewnerError):
    pass


class StepSizeError(NumericalError):
    pass


class SamplingError(NumericalError):
    pass


class IntegratorStallError(NumericalError):
    def __init__(self, message, times=None, points=None):
        self.times = times
        self.points = points
        super().__init__(message)


class BoundaryResolutionError(NumericalError):
    """An orbit of a generator came closer to the boundary than the margin.

    The orbit does not escape (its Kobayashi speed did not grow), but it can
    no longer be followed in floating point.
    """


class InternalInconsistencyError(LoewnerError):
    """A certified generator produced an escaping orbit."""


class IterationEscapeError(LoewnerError):
    def __init__(self, step, point):
        self.step = step
        self.point = point
        super().__init__(f"iterate left the domain at step {step}: {point!r}")


class NonGeneratorPieceError(LoewnerError):
    def __init__(self, piece, start, time, point):
        self.piece = piece
        self.start = start
        self.time = time
        self.point = point
        super().__init__(
            f"trajectory escaped during time piece {piece} (starting at t={start}) "
            f"at t~{time:.10g}; the field is not a generator on that piece"
        )
