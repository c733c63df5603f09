"""Exception types shared by the folding kernel and the analysis layers."""


class DomainError(ValueError):
    """An input lies outside the open admissible interval of a formula."""


class FiniteSolution(Exception):
    """The folding geometry admits no real continuation.

    Orbits that raise this are terminated, not crashed. ``step`` is the
    zigzag index inside the module where the breakdown happened (``None``
    when raised outside a module composition) and ``state`` is the last
    valid state entering that step.
    """

    def __init__(self, reason, step=None, state=None):
        super().__init__(reason)
        self.reason = reason
        self.step = step
        self.state = state

    def at(self, step, state):
        """Return a copy tagged with a step index and the last valid state."""
        return FiniteSolution(self.reason, step=step, state=state)


class NotSymmetric(ValueError):
    """Closed-form generating function requested for an asymmetric module."""


class ToleranceNotMet(RuntimeError):
    """Numerical refinement stalled above the requested tolerance."""


class TooShort(ValueError):
    """Orbit too short (or terminated) for a converged diagnostic."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
