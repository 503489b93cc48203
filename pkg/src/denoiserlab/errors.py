"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition."""


class NumericalError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class TrainingError(RuntimeError):
    """Iterative training diverged or otherwise failed."""


class SamplingError(RuntimeError):
    """The diffusion sampler produced an invalid state."""
