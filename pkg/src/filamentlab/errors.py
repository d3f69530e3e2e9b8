"""Exception and warning types shared across the package."""


class FilamentError(Exception):
    """Base class for all package errors."""


class NonNormalizable(FilamentError):
    """Signed quadratic form too small (or of the wrong sign) to normalize.

    Signals frame degeneration, e.g. when a hyperbolic run leaves the
    hyperboloid beyond repair.
    """


class ProjectionPole(FilamentError):
    """Tangent at (or numerically at) the projection pole T3 = -1."""


class DiscBoundary(FilamentError):
    """Hyperbolic-mode value reached the unit-disc boundary |z| -> 1."""


class InsufficientDomain(FilamentError):
    """Domain half-width too small for an asymptotic extraction."""


class TooFewNodes(FilamentError):
    """Grid too short for the requested stencil."""


class BadLength(FilamentError):
    """Array length inconsistent with the grid/transform size."""


class SolverSingular(FilamentError):
    """Boundary-augmented spectral system is numerically singular."""


class OutOfDomain(FilamentError):
    """Interpolation target outside the source domain."""


class FrameDegenerate(FilamentError):
    """Frame recovery attempted where |z_s| vanishes (zero curvature)."""


class ParseError(FilamentError):
    """Config text could not be parsed; carries a line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(FilamentError):
    """Config parsed but a key/value is invalid; carries the key name."""

    def __init__(self, message, key=None):
        self.key = key
        if key is not None:
            message = f"{key}: {message}"
        super().__init__(message)


class StabilityViolation(UserWarning):
    """Warning: explicit time step outside the empirical stability region.

    Deliberately a warning (not an error) so the instability experiment
    can be reproduced.
    """
