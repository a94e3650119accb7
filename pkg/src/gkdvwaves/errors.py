"""Exception types shared across the package."""


class GKdVError(Exception):
    """Base class for all package errors."""


class DomainError(GKdVError, ValueError):
    """An expression was evaluated outside its real domain."""


class ExprSyntaxError(GKdVError, ValueError):
    """Malformed nonlinearity expression.

    ``offset`` is the byte offset into the source string where parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset
        self.reason = message


class UnboundParameterError(GKdVError, KeyError):
    def __init__(self, missing):
        self.missing = tuple(sorted(missing))
        super().__init__(f"unbound parameter(s): {', '.join(self.missing)}")

    def __str__(self):
        return self.args[0]


class QuadratureError(GKdVError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class DoubleRootError(GKdVError, ValueError):
    """A non-integrable (double or higher) root of the radicand was hit."""


class ProfileError(GKdVError, RuntimeError):
    pass


class InternalConsistencyError(GKdVError, AssertionError):
    """Two independent computations of the same object disagree."""


class BlowUpError(GKdVError, FloatingPointError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite field detected at t={t:.6g}")


class ConstraintError(GKdVError, ValueError):
    """Parameters fall outside a closed-form family's stated validity range."""
