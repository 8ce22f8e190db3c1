"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (CLI exit code 2)."""


class NumericalDiagnosticError(RuntimeError):
    """A numerical self-check failed, e.g. quadrature disagreement (CLI exit code 3)."""


class EnumerationCapError(RuntimeError):
    """Error-event search exceeded the configured length cap."""

    def __init__(self, max_steps: int):
        super().__init__(
            f"error-event search exceeded the length cap of {max_steps} trellis steps; "
            f"raise max_event_steps or lower the weight threshold"
        )
        self.max_steps = max_steps
