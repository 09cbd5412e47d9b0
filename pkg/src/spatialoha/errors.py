"""Exception types shared across the library."""


class ParameterError(ValueError):
    """A constructor or operation received an out-of-contract parameter."""


class DegenerateGeometryError(ValueError):
    """A transmitter coincides with a foreign receiver, making a distance zero."""


class QuadratureError(RuntimeError):
    """A quadrature did not reach its requested tolerance.

    Carries the achieved error estimate in ``error_estimate`` when known.
    """

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class NumericalError(RuntimeError):
    """A numerical result landed outside its feasible range beyond tolerance."""
