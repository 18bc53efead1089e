class SimulationError(Exception):
    pass


class ConfigError(SimulationError, ValueError):
    def __init__(self, message: str, *, key: str | None = None) -> None:
        super().__init__(message)
        self.key = key


class NumericError(SimulationError, ArithmeticError):
    def __init__(self, message: str, *, frequency_hz: float | None = None) -> None:
        if frequency_hz is not None:
            message = f"{message} (at {frequency_hz!r} Hz)"
        super().__init__(message)
        self.frequency_hz = frequency_hz


class DegenerateReadoutError(NumericError):
    """The homodyne angle is blind to the signal: H^T Z vanishes."""
