"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid configuration: dimension mismatch, bad parameter, malformed file."""


class DomainError(ValueError):
    """Input outside an operation's mathematical domain (e.g. negative time)."""


class SingularityError(RuntimeError):
    """Jacobian inversion requested at a near-singular configuration with damping disabled."""

    def __init__(self, min_singular_value: float):
        super().__init__(
            f"Jacobian near-singular (min singular value {min_singular_value:.3e}) "
            "and pseudo-inverse damping is disabled"
        )
        self.min_singular_value = min_singular_value


class SimulationError(RuntimeError):
    """Simulation state became non-finite; carries the index of the last valid record."""

    def __init__(self, message: str, last_valid_index: int):
        super().__init__(f"{message} (last valid record index: {last_valid_index})")
        self.last_valid_index = last_valid_index


class ProtocolError(ValueError):
    """Malformed or unsupported teleop protocol message."""
