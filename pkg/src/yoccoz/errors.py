"""Exception hierarchy.

`PreconditionError` subclasses signal unsupported parameters or inputs (CLI exit
code 2); `NumericalError` subclasses signal a numerical failure (exit code 3).
"""


class PuzzleError(Exception):
    pass


class PreconditionError(PuzzleError, ValueError):
    pass


class NumericalError(PuzzleError, ArithmeticError):
    pass


class DegenerateFixedPoint(PreconditionError):
    pass


class AlphaNotRepelling(PreconditionError):
    pass


class NoLandingCycleFound(PreconditionError):
    pass


class RasterTooCoarse(PreconditionError):
    pass


class DepthExceeded(PreconditionError):
    pass


class CriticalOrbitEscaped(PreconditionError):
    pass


class InsufficientDepth(PreconditionError):
    pass


class UnknownModulus(PreconditionError):
    def __init__(self, vertices):
        self.vertices = list(vertices)
        super().__init__(f"no modulus for {len(self.vertices)} vertices: {self.vertices[:10]}")


class NoReturns(PreconditionError):
    pass


class AnnulusDegenerate(PreconditionError):
    pass


class ValidationFailed(PreconditionError):
    """Raised by the first-return construction; `violation` names the broken invariant."""

    def __init__(self, violation, pieces=(), detail=""):
        self.violation = violation
        self.pieces = list(pieces)
        msg = f"{violation}: pieces {self.pieces}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class PropagationConflict(PreconditionError):
    def __init__(self, cell, first, second):
        self.cell = cell
        self.derivations = (first, second)
        super().__init__(f"cell {cell} derived as {first[0]!r} from {first[1]} and as {second[0]!r} from {second[1]}")


class RayTraceDiverged(NumericalError):
    pass


class SolverDiverged(NumericalError):
    def __init__(self, residual, iterations):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"residual {residual:.3e} after {iterations} iterations")
