"""Exception types shared across the toolkit."""


class NumericalError(RuntimeError):
    """A computation produced non-finite or otherwise unusable numbers."""


class DivergenceError(NumericalError):
    """Training diverged (non-finite loss)."""
