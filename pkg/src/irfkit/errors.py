"""Exception hierarchy shared across irfkit.

Two families map onto the CLI exit codes: :class:`ValidationError`
(bad input, exit 2) and :class:`NumericalError` (a computation that could
not be completed, exit 3).
"""


class IrfError(Exception):
    """Base class for all irfkit errors."""


class ValidationError(IrfError, ValueError):
    """Input violates a documented precondition or invariant."""


class InfeasibleSupportError(ValidationError):
    """Too few support points to carry a nonzero allowable measure."""


class OrderError(ValidationError):
    """A measure does not annihilate the polynomials required by a kernel."""


class PathLengthError(ValidationError):
    """A sampled path is too short for the requested operation."""


class AlignmentError(ValidationError):
    """A measure atom does not fall on the sampling grid."""


class RangeError(ValidationError):
    """A tabulated kernel was evaluated outside its table."""


class NumericalError(IrfError, ArithmeticError):
    """A numerical procedure failed."""


class EvaluationError(NumericalError):
    """A function produced a non-finite value at a measure atom."""


class ModelError(NumericalError):
    """A spectral model is not integrable on the chosen frequency grid."""


class QuadratureError(NumericalError):
    """A quadrature left a non-negligible imaginary residual."""


class SingularSystemError(NumericalError):
    """A linear system block could not be factorized.

    ``block`` names the offending block (``"covariance"``, ``"drift"`` or
    ``"augmented"``).
    """

    def __init__(self, block, message=None):
        self.block = block
        super().__init__(f"{block} block: {message}" if message else f"singular {block} block")
