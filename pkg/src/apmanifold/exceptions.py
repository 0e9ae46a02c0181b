"""Exception types shared across the package."""


class ApManifoldError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(ApManifoldError):
    """A matrix expected to be SPD has an eigenvalue at or below the floor.

    Raised by the eigendecomposition gate; optimizers treat it as the signal
    that an iterate left the manifold.
    """

    def __init__(self, lambda_min, floor=0.0):
        self.lambda_min = float(lambda_min)
        self.floor = float(floor)
        super().__init__(
            f"smallest eigenvalue {self.lambda_min:.6e} <= floor {self.floor:.6e}"
        )


class DomainError(ApManifoldError):
    """A scalar function was evaluated outside its domain on a spectrum."""


class SingularInput(ApManifoldError):
    """An input matrix is numerically singular where invertibility is required."""


class ExpDomainViolation(ApManifoldError):
    """The exponential-map argument leaves the admissible region.

    The caller is expected to shrink the step and retry.
    """

    def __init__(self, lambda_min):
        self.lambda_min = float(lambda_min)
        super().__init__(
            f"I + Y has smallest eigenvalue {self.lambda_min:.6e}; step too long"
        )


class StepFailure(ApManifoldError):
    """No admissible step could be found by a solver.

    Solvers attach the per-iteration records accumulated before the
    failure as the ``trace`` attribute.
    """

    trace = None


class NotCritical(ApManifoldError):
    """A spectrum report was requested at a point that is not a critical point."""

    def __init__(self, grad_norm, tol):
        self.grad_norm = float(grad_norm)
        self.tol = float(tol)
        super().__init__(
            f"gradient norm {self.grad_norm:.6e} exceeds tolerance {self.tol:.6e}"
        )


class ConfigError(ApManifoldError):
    """An experiment configuration failed validation."""
