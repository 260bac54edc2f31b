"""Exception hierarchy shared by all modules."""


class GBDTError(Exception):
    """Base class for every error raised by the package."""

    code = "gbdt_error"


class ShapeMismatch(GBDTError, ValueError):
    code = "shape_mismatch"


class SingularMatrix(GBDTError, ArithmeticError):
    """Raised when a solve hits a numerically singular matrix.

    For ``S(x, t)`` this marks a pole of the transformed potential.
    """

    code = "singular_matrix"

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class NotNilpotent(GBDTError, ValueError):
    code = "not_nilpotent"


class SpectralCollision(GBDTError, ArithmeticError):
    """The spectral parameter sits (numerically) on the spectrum of ``A``."""

    code = "spectral_collision"


class StepTooLarge(GBDTError, ArithmeticError):
    code = "step_too_large"


class IdentityViolated(GBDTError, ValueError):
    code = "identity_violated"


class ConventionMismatch(GBDTError, ValueError):
    code = "convention_mismatch"


class OrderingViolated(GBDTError, ValueError):
    code = "ordering_violated"


class SignatureViolated(GBDTError, ValueError):
    code = "signature_violated"


class NotRealReducible(GBDTError, ValueError):
    code = "not_real_reducible"


class GridTooSmall(GBDTError, ValueError):
    code = "grid_too_small"


class SpectrumNotSingleton(GBDTError, ValueError):
    code = "spectrum_not_singleton"


class LambdaNotReal(GBDTError, ValueError):
    code = "lambda_not_real"


class DomainError(GBDTError, ValueError):
    """Negative coordinates requested without opting in."""

    code = "domain_error"


class UnknownDemo(GBDTError, KeyError):
    code = "unknown_demo"


class ConfigError(GBDTError, ValueError):
    code = "config_error"


class ValidationFailed(GBDTError, ValueError):
    code = "validation_failed"
