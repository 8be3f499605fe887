"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Array dimensions do not match what an operation requires."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class StateError(RuntimeError):
    """Operation called in the wrong order, e.g. backward before forward."""


class NumericError(ArithmeticError):
    """A computation produced non-finite values."""


class TrainingDiverged(RuntimeError):
    """Training aborted on a non-finite loss; carries the iteration index."""

    def __init__(self, iteration: int, message: str):
        super().__init__(f"iteration {iteration}: {message}")
        self.iteration = iteration
