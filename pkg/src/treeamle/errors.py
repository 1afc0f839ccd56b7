"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or out-of-contract input (CLI exit code 2)."""


class UnsupportedOperation(NotImplementedError):
    """The target space does not provide the requested construction."""


class ExtensionInvariantError(RuntimeError):
    """A step of the harmonic extension violated a guaranteed invariant.

    Raised instead of patching the result, since it indicates a defect
    (or input outside the algorithm's contract), never a legitimate outcome.
    """


class StrategyFault(RuntimeError):
    """A Politics strategy produced an illegal move."""

    def __init__(self, player: str, message: str):
        super().__init__(f"player {player}: {message}")
        self.player = player


class InvariantViolation(AssertionError):
    """A runtime-checked game invariant failed."""
